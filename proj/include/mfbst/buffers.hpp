#pragma once

#include "mfbst/mf.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mfbst {

using OpSink = std::function<void(MfOperation)>;

// Machine-wide state shared by every buffer layer on one machine: the count
// of essential operations (rotations plus cell moves), which drives epochs,
// and the allocator for per-node aug regions.
class BufferHost {
public:
    explicit BufferHost(MfMachine &m) : m_(&m) {}

    MfMachine &machine() { return *m_; }
    const MfMachine &machine() const { return *m_; }
    // Applies an op to the machine; rotations count as essential.
    Key apply(MfOperation op);
    OpSink sink()
    {
        return [this](MfOperation op) { apply(op); };
    }

    std::uint64_t essential() const { return essential_; }
    void add_essential() { ++essential_; }
    // Reserves bits in every node's aug payload; returns the client offset.
    std::size_t reserve_aug(std::size_t bits);
    std::size_t aug_used() const { return aug_next_; }

private:
    MfMachine *m_;
    std::uint64_t essential_ = 0;
    std::size_t aug_next_ = 0;
};

// Epoch i holds e_i = ceil(2^(i-1)) essential ops while 2^(i-1) <= n, then n.
struct EpochMath {
    explicit EpochMath(std::size_t n) : n(n) {}
    std::uint64_t size(unsigned i) const;
    // Epoch containing the op after `count` essential ops.
    unsigned epoch_of(std::uint64_t count) const;
    // Buffer nodes allocated at the start of epoch i.
    std::size_t allocation(unsigned i) const;
    std::size_t n;
};

struct BufferStats {
    std::uint64_t reallocations = 0;
    std::uint64_t realloc_ops = 0;
    std::uint64_t cell_moves = 0;
    std::uint64_t search_ops = 0;
};

// Logical buffers b_1..b_n stored in the aug payload of buffer nodes: the
// j-th buffer node in in-order holds cell j of every buffer in this space.
// Buffer nodes are reallocated lazily at the first cell move of a new epoch
// by a bounded pre-order traversal; cells are copied between the two
// generations of per-node storage.
class BufferSpace {
public:
    BufferSpace(BufferHost &host, OpSink sink, FingerId aux0, FingerId aux1);

    // Layout is fixed at the first cell operation.
    int add_buffer(unsigned cell_bits);
    int add_cursor(int buffer, FingerId finger);

    // Cell moves; false at the ends (the cursor stays put).
    bool next_cell(int cursor);
    bool prev_cell(int cursor);
    std::uint64_t read_cell(int cursor);
    void write_cell(int cursor, std::uint64_t value);
    std::size_t position(int cursor) const { return cursors_[static_cast<std::size_t>(cursor)].pos; }
    unsigned cell_bits(int buffer) const { return cells_[static_cast<std::size_t>(buffer)].bits; }

    std::size_t allocated() const { return alloc_; }
    const BufferStats &stats() const { return stats_; }
    std::size_t aug_bits() const { return 2 * gen_bits_; }
    // Forget all contents; cursors go back to b_1 lazily.
    void reset();

private:
    struct Cell {
        unsigned bits = 0;
        std::size_t offset = 0;
    };
    struct Cursor {
        int buffer = 0;
        FingerId finger = 0;
        std::size_t pos = 1;
        Key node_key = 0;
        bool placed = false;
        // Register copy of the current cell, written back when the cursor
        // leaves it or before a reallocation.
        std::uint64_t value = 0;
        bool cached = false;
        bool dirty = false;
    };

    void layout();
    void ensure_epoch();
    void reallocate(std::size_t k);
    void move_to_key(FingerId f, Key k);
    void to_root(FingerId f);
    void op(MfOperation o);
    std::size_t gen_off(unsigned gen) const { return base_ + gen * gen_bits_; }
    std::uint64_t get(FingerId f, std::size_t off, unsigned width);
    void set(FingerId f, std::size_t off, unsigned width, std::uint64_t v);
    void place(Cursor &c);
    void write_back(Cursor &c);

    BufferHost &host_;
    OpSink sink_;
    FingerId aux_[2];
    EpochMath epochs_;
    std::vector<Cell> cells_;
    std::vector<Cursor> cursors_;
    unsigned key_bits_ = 1;
    Key min_key_ = 0;
    std::size_t cells_bits_ = 0;
    std::size_t gen_bits_ = 0;
    std::size_t base_ = 0;
    bool laid_out_ = false;
    unsigned gen_ = 0;
    std::size_t alloc_ = 0;
    int epoch_ = -1;
    Key first_key_ = 0;
    bool counting_ = false;
    BufferStats stats_;
};

// The six reversible op encodings plus a no-op marker for steps that apply
// nothing (an access completing without a move).
enum class OpCode : std::uint8_t {
    Empty = 0,
    Left = 1,
    Right = 2,
    ParentFromLeft = 3,
    ParentFromRight = 4,
    RotateLeftChild = 5,
    RotateRightChild = 6,
    Nop = 7
};

// Code of op at the given view of its finger's node.
OpCode encode_op(UnitOp op, const NodeView &at);
UnitOp redo_of(OpCode c);
// Inverse as a short op sequence for the same finger.
std::vector<UnitOp> undo_of(OpCode c);

// Access sequence buffer: one shared record of the input, read by two
// independent cursors, several keys packed per cell.
class AccessSequenceBuffer {
public:
    // Keys are stored as offsets from min_key in key_bits bits.
    AccessSequenceBuffer(BufferSpace &space, Key min_key, unsigned key_bits, unsigned per_cell,
                         FingerId c0, FingerId c1);
    // Next access for structure mu, pulling from the input when mu is first.
    Key next(int mu, const std::function<Key()> &pull);
    // Structure with more accesses consumed, or none.
    std::optional<int> ahead() const;
    std::uint64_t consumed(int mu) const { return count_[mu]; }
    std::uint64_t recorded() const { return recorded_; }
    std::optional<Key> last_recorded() const { return last_; }
    void reset();

private:
    BufferSpace &space_;
    int buffer_;
    int cursor_[2];
    Key min_key_;
    unsigned key_bits_;
    unsigned per_cell_;
    std::uint64_t count_[2] = {0, 0};
    std::uint64_t recorded_ = 0;
    std::optional<Key> last_;
};

// Fixed-width codes packed several per cell of one buffer, addressed by
// index; the cursor walks to the cell holding an index.
class PackedCodes {
public:
    PackedCodes(BufferSpace &space, FingerId cursor, unsigned code_bits, unsigned per_cell);
    std::uint64_t get(std::uint64_t index);
    void put(std::uint64_t index, std::uint64_t code);
    unsigned code_bits() const { return code_bits_; }

private:
    void seek(std::uint64_t index);

    BufferSpace &space_;
    int buffer_;
    int cursor_;
    unsigned code_bits_;
    unsigned per_cell_;
};

// Operation history buffer for one multi-finger client: op codes tagged
// with the client's finger index.  head() is the number of entries applied.
class OperationHistoryBuffer {
public:
    OperationHistoryBuffer(BufferSpace &space, FingerId cursor, unsigned finger_bits,
                           unsigned per_cell);
    // Records the op about to be applied (at is the finger's view before it).
    void record(FingerId local, UnitOp op, const NodeView &at);
    void record_nop();
    // Re-applies the entry at head / inverts the entry before head.
    void redo(FingerId base, const OpSink &apply);
    void undo(FingerId base, const OpSink &apply);
    std::uint64_t head() const { return head_; }
    std::uint64_t length() const { return len_; }
    void reset() { head_ = len_ = 0; }

private:
    PackedCodes codes_;
    std::uint64_t head_ = 0;
    std::uint64_t len_ = 0;
};

// Tree state buffer: a saved shape as the op list of Leftify.
class TreeStateBuffer {
public:
    TreeStateBuffer(BufferSpace &space, FingerId cursor, FingerId worker, unsigned per_cell = 3);

    // Records the current shape; the tree is unchanged afterwards.
    void save(const MfMachine &m, const OpSink &apply);
    // Restores the recorded shape.
    void load(const MfMachine &m, const OpSink &apply);
    bool has_state() const { return saved_; }
    std::uint64_t codes() const { return len_; }
    FingerId worker() const { return worker_; }
    void reset() { len_ = 0; saved_ = false; }

private:
    void undo_all(const OpSink &apply);

    PackedCodes codes_;
    FingerId worker_;
    std::uint64_t len_ = 0;
    Key end_key_ = 0;
    bool saved_ = false;
};

// Moves finger f to the root with parent moves.
void finger_to_root(const MfMachine &m, FingerId f, const OpSink &apply);

// Turns the tree into a left path with the given finger, starting wherever
// the finger is (normally the root).  Emits each op through `apply` and
// returns the list.
std::vector<UnitOp> leftify(const MfMachine &m, FingerId f, const OpSink &apply);

// Step-at-a-time form, for clients that interleave Leftify with other work.
// Stops as soon as the finger has no right child and its left subtree is
// known to be a left path, so the op list is a prefix of the plain loop's.
class LeftifyStepper {
public:
    // Next op at the finger's current view, or nothing when done.
    std::optional<UnitOp> next(const NodeView &at);

private:
    bool started_ = false;
    bool rotate_next_ = false;
    bool moved_left_ = false;
    // The finger's left subtree is a left path.
    bool left_done_ = false;
};

} // namespace mfbst
