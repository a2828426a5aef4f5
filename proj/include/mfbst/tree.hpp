#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mfbst {

using Key = std::uint64_t;
using NodeId = std::int32_t;
inline constexpr NodeId kNil = -1;

enum class UnitOp : std::uint8_t { MoveParent, MoveLeft, MoveRight, Rotate };

enum class Side : std::uint8_t { Left = 0, Right = 1 };

inline Side flip(Side s) { return s == Side::Left ? Side::Right : Side::Left; }
inline UnitOp move_toward(Side s) { return s == Side::Left ? UnitOp::MoveLeft : UnitOp::MoveRight; }
char op_letter(UnitOp op);
std::optional<UnitOp> op_from_letter(char c);

enum class errc {
    illegal_at_root,
    no_left_child,
    no_right_child,
    budget_exceeded,
    duplicate_keys,
    unsorted_keys,
    malformed_shape,
    window_mismatch,
    empty_structure,
    bad_position,
    capacity_exceeded,
    input_exhausted,
    usage,
};

const char *errc_name(errc c);

class vm_error : public std::runtime_error {
public:
    vm_error(errc c, const std::string &what) : std::runtime_error(what), code_(c) {}
    errc code() const { return code_; }

private:
    errc code_;
};

// Bit string with a hard capacity; the real-world constraint on per-node data.
class AugPayload {
public:
    AugPayload() = default;
    explicit AugPayload(std::size_t capacity_bits) : cap_(capacity_bits) {}

    std::size_t capacity() const { return cap_; }
    std::size_t size() const { return size_; }
    std::uint64_t get(std::size_t off, unsigned width) const;
    void set(std::size_t off, unsigned width, std::uint64_t value);
    void assign(const AugPayload &other);
    bool operator==(const AugPayload &o) const;

private:
    std::size_t cap_ = 0;
    std::size_t size_ = 0;
    std::vector<std::uint64_t> words_;
};

struct CostMeter {
    std::uint64_t unit_ops = 0;
    std::vector<std::uint64_t> per_access;
    std::uint64_t access_start = 0;
    void end_access();
};

struct ShapeNode {
    Key key = 0;
    NodeId left = kNil;
    NodeId right = kNil;
};

// Parsed `key(left,right)` description; node 0..size-1, root index given.
struct TreeShape {
    std::vector<ShapeNode> nodes;
    NodeId root = kNil;

    static TreeShape parse(std::string_view text);
    std::size_t size() const { return nodes.size(); }
    std::vector<Key> inorder_keys() const;
    void relabel(const std::vector<Key> &keys);
};

TreeShape left_path_shape(std::size_t n);
TreeShape right_path_shape(std::size_t n);
TreeShape balanced_shape(std::size_t n);
// Uniform-ish random shape from random split points; keys 1..n.
TreeShape random_shape(std::size_t n, std::uint64_t seed);

struct TreeNode {
    Key key = 0;
    NodeId parent = kNil;
    NodeId left = kNil;
    NodeId right = kNil;
    AugPayload aug;
};

// Parent/child storage shared by the single-finger arena and the reference
// multifinger machine.  Rotation is the only structural mutation.
class TreeStore {
public:
    TreeStore() = default;
    TreeStore(const TreeShape &shape, std::size_t aug_capacity_bits);

    std::size_t size() const { return nodes_.size(); }
    NodeId root() const { return root_; }
    const TreeNode &node(NodeId v) const { return nodes_[static_cast<std::size_t>(v)]; }
    TreeNode &node_mut(NodeId v) { return nodes_[static_cast<std::size_t>(v)]; }
    Key key(NodeId v) const { return node(v).key; }
    NodeId parent(NodeId v) const { return node(v).parent; }
    NodeId left(NodeId v) const { return node(v).left; }
    NodeId right(NodeId v) const { return node(v).right; }
    NodeId child(NodeId v, Side s) const { return s == Side::Left ? left(v) : right(v); }
    bool is_left_child(NodeId v) const;
    Side side_of(NodeId v) const { return is_left_child(v) ? Side::Left : Side::Right; }

    // Rotate v above its parent; v must have a parent.
    void rotate_up(NodeId v);

    std::string snapshot_shape() const;
    std::vector<Key> inorder() const;
    std::vector<NodeId> inorder_nodes() const;
    NodeId find(Key k) const;
    std::size_t depth(NodeId v) const;
    std::size_t height() const;
    bool check_invariants(std::string *why = nullptr) const;
    TreeShape to_shape() const;

private:
    std::vector<TreeNode> nodes_;
    NodeId root_ = kNil;
};

// Bits per word: ceil(log2 n), at least 1.
unsigned word_bits(std::size_t n);
std::size_t aug_capacity(std::size_t n, unsigned words);

// The single-finger BST-model machine.
class TreeArena {
public:
    static constexpr unsigned kDefaultAugWords = 8;

    TreeArena() = default;
    TreeArena(const TreeShape &shape, unsigned aug_words = kDefaultAugWords);

    static TreeArena build(const TreeShape &shape, const std::vector<Key> &keys,
                           unsigned aug_words = kDefaultAugWords);

    NodeId apply(UnitOp op);
    bool legal(UnitOp op) const;

    const AugPayload &read_aug() const { return store_.node(finger_).aug; }
    void write_aug(const AugPayload &payload);
    std::uint64_t aug_get(std::size_t off, unsigned width) const;
    void aug_set(std::size_t off, unsigned width, std::uint64_t value);
    // Setup-time write to any node; not an instruction, so not charged.
    void preset_aug(NodeId v, std::size_t off, unsigned width, std::uint64_t value);

    NodeId finger() const { return finger_; }
    NodeId root() const { return store_.root(); }
    const TreeStore &store() const { return store_; }
    std::size_t size() const { return store_.size(); }
    CostMeter &meter() { return meter_; }
    const CostMeter &meter() const { return meter_; }
    std::size_t peak_aug_bits() const { return peak_bits_; }
    std::size_t aug_capacity_bits() const { return cap_; }
    std::string snapshot_shape() const { return store_.snapshot_shape(); }
    // When set, every applied op appends the touched key.
    void set_touch_log(std::vector<Key> *log) { touch_log_ = log; }

private:
    void note_bits(const AugPayload &p);

    TreeStore store_;
    NodeId finger_ = kNil;
    CostMeter meter_;
    std::size_t cap_ = 0;
    std::size_t peak_bits_ = 0;
    std::vector<Key> *touch_log_ = nullptr;
};

} // namespace mfbst
