#pragma once

#include "mfbst/mf.hpp"
#include "mfbst/tendon.hpp"

#include <memory>
#include <string>
#include <vector>

namespace mfbst {

// Per-node tag stored in the low aug bits: role (3 bits), logical child
// side (1 bit), then one bit per finger.
enum class NodeRole : std::uint8_t { Knuckle = 0, Finger = 1, Prosthetic = 2, TendonNode = 3 };

struct LogicalNeighbors {
    Key key = 0;
    NodeId parent = kNil;
    NodeId left = kNil;
    NodeId right = kNil;
};

struct MfStats {
    std::uint64_t ops = 0;
    std::uint64_t exposes = 0;
    std::uint64_t absorbs = 0;
    // Merges that had to move a whole tendon node by node; expected to stay 0.
    std::uint64_t slow_merges = 0;
    std::size_t peak_pseudofingers = 0;
};

// Multifinger machine on top of a single-finger arena.  The hand (fingers,
// the root and branching nodes) is kept in registers; every hand edge is a
// Tendon compressed to depth at most 3.  Each operation exposes the few
// nodes around the finger, performs the op physically and recompresses.
class MfToBst : public MfMachine {
public:
    MfToBst(const TreeShape &shape, std::size_t fingers,
            unsigned aug_words = TreeArena::kDefaultAugWords);
    MfToBst(const MfToBst &) = delete;
    MfToBst &operator=(const MfToBst &) = delete;

    std::size_t finger_count() const override { return fingers_.size(); }
    std::size_t node_count() const override { return arena_.size(); }
    Key mf_apply(MfOperation op) override;
    NodeView view(FingerId f) const override;
    std::vector<UnitOp> route(FingerId f, Key target) const override;
    std::uint64_t aug_get(FingerId f, std::size_t off, unsigned width) override;
    void aug_set(FingerId f, std::size_t off, unsigned width, std::uint64_t value) override;
    std::size_t aug_base() const override { return 4 + fingers_.size(); }
    std::size_t aug_capacity_bits() const override { return arena_.aug_capacity_bits(); }
    std::uint64_t cost() const override { return arena_.meter().unit_ops; }
    std::size_t peak_aug_bits() const override { return arena_.peak_aug_bits(); }
    std::string logical_shape() const override;
    std::vector<Key> logical_inorder() const override;

    // Walks finger f up to the root with logical parent moves.
    void reset_finger_to_root(FingerId f);

    NodeId finger_node(FingerId f) const { return fingers_[static_cast<std::size_t>(f)]; }
    const TreeArena &arena() const { return arena_; }
    // Logical tree mirror used for routing and views.
    const TreeStore &logical() const { return shadow_; }
    const MfStats &stats() const { return stats_; }
    std::size_t pseudofinger_count() const;

    // Reconstructs the logical tree from the physical layout (no cost).
    TreeShape decode_logical() const;
    LogicalNeighbors logical_view(NodeId v) const;
    // Hand, tendon and deque invariants.
    bool check(std::string *why = nullptr) const;

    // Every physically touched key is appended while set.
    void set_touch_log(std::vector<Key> *log) { arena_.set_touch_log(log); }

private:
    struct Slot {
        NodeId node = kNil;
        int parent = -1;
        int child[2] = {-1, -1};
        Tendon up;
        bool alive = false;
        bool fresh = false;
    };

    class Flags : public SideOracle {
    public:
        explicit Flags(MfToBst &m) : m_(m) {}
        Side side_of(NodeId v) override;

    private:
        MfToBst &m_;
    };

    class PeekFlags : public SideOracle {
    public:
        explicit PeekFlags(const TreeStore &t) : t_(t) {}
        Side side_of(NodeId v) override;

    private:
        const TreeStore &t_;
    };

    static int idx(Side s) { return s == Side::Left ? 0 : 1; }
    Side side_under(NodeId v, NodeId above) const;
    int slot_of(NodeId v) const;
    int new_slot(NodeId v);
    int finger_count_at(NodeId v) const;

    int expose_parent(int s);
    int expose_child(int s, Side d);
    void rotate_at(int s);
    void normalize();
    bool dissolve(int s, bool allow_both_empty, bool allow_slow);
    void absorb_up(int s);
    void absorb_down(int s);
    std::uint64_t tag_of(NodeId v) const;
    // Writes the tags of every node changed by this op, ending at target.
    void flush(NodeId target);

    TreeArena arena_;
    Navigator nav_;
    Flags flags_;
    TreeStore shadow_;
    std::vector<NodeId> fingers_;
    std::vector<Slot> slots_;
    int root_slot_ = -1;
    std::vector<NodeId> dirty_;
    std::vector<std::pair<NodeId, Side>> pending_side_;
    std::vector<NodeId> absorbed_;
    std::vector<NodeId> retired_;
    MfStats stats_;
};

} // namespace mfbst
