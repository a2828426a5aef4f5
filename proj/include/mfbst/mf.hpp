#pragma once

#include "mfbst/tree.hpp"

#include <iosfwd>
#include <vector>

namespace mfbst {

using FingerId = int;

struct MfOperation {
    FingerId finger = 0;
    UnitOp op = UnitOp::MoveParent;
    bool operator==(const MfOperation &) const = default;
};

// What a finger sees at its node.  The child-side bit is stored per node.
struct NodeView {
    Key key = 0;
    bool has_parent = false;
    bool has_left = false;
    bool has_right = false;
    bool is_left = false;
    bool has(UnitOp op) const
    {
        switch (op) {
        case UnitOp::MoveParent:
        case UnitOp::Rotate: return has_parent;
        case UnitOp::MoveLeft: return has_left;
        case UnitOp::MoveRight: return has_right;
        }
        return false;
    }
};

struct TouchRecord {
    std::uint64_t index = 0;
    Key key = 0;
};

struct TouchTrace {
    std::vector<TouchRecord> records;
    void add(std::uint64_t index, Key key) { records.push_back({index, key}); }
};

// The Multifinger-BST instruction set.  Aug accesses are free in the model;
// a simulator may have to walk there first and that walk is charged.
class MfMachine {
public:
    virtual ~MfMachine() = default;

    virtual std::size_t finger_count() const = 0;
    virtual std::size_t node_count() const = 0;
    virtual Key mf_apply(MfOperation op) = 0;
    virtual NodeView view(FingerId f) const = 0;
    // Unit moves along the shortest logical path from finger f to key.
    virtual std::vector<UnitOp> route(FingerId f, Key target) const = 0;
    virtual std::uint64_t aug_get(FingerId f, std::size_t off, unsigned width) = 0;
    virtual void aug_set(FingerId f, std::size_t off, unsigned width, std::uint64_t value) = 0;
    // First aug bit free for clients; bits below it belong to the machine.
    virtual std::size_t aug_base() const = 0;
    virtual std::size_t aug_capacity_bits() const = 0;
    virtual std::uint64_t cost() const = 0;
    // Largest aug payload ever stored in one node, in bits.
    virtual std::size_t peak_aug_bits() const = 0;
    virtual std::string logical_shape() const = 0;
    virtual std::vector<Key> logical_inorder() const = 0;
};

// Shortest path between two nodes of a plain tree, as unit moves from a to b.
std::vector<UnitOp> tree_route(const TreeStore &t, NodeId a, NodeId b);

// Direct execution on a plain tree; the oracle for simulator tests.
class ReferenceMachine : public MfMachine {
public:
    ReferenceMachine(const TreeShape &shape, std::size_t fingers,
                     unsigned aug_words = TreeArena::kDefaultAugWords);

    std::size_t finger_count() const override { return fingers_.size(); }
    std::size_t node_count() const override { return tree_.size(); }
    Key mf_apply(MfOperation op) override;
    NodeView view(FingerId f) const override;
    std::vector<UnitOp> route(FingerId f, Key target) const override;
    std::uint64_t aug_get(FingerId f, std::size_t off, unsigned width) override;
    void aug_set(FingerId f, std::size_t off, unsigned width, std::uint64_t value) override;
    std::size_t aug_base() const override { return 0; }
    std::size_t aug_capacity_bits() const override { return cap_; }
    std::uint64_t cost() const override { return cost_; }
    std::string logical_shape() const override { return tree_.snapshot_shape(); }
    std::vector<Key> logical_inorder() const override { return tree_.inorder(); }

    bool legal(MfOperation op) const;
    NodeId finger_node(FingerId f) const { return fingers_[static_cast<std::size_t>(f)]; }
    const TreeStore &tree() const { return tree_; }
    const TouchTrace &trace() const { return trace_; }
    void set_tracing(bool on) { tracing_ = on; }
    std::size_t peak_aug_bits() const override { return peak_bits_; }

private:
    TreeStore tree_;
    std::vector<NodeId> fingers_;
    std::uint64_t cost_ = 0;
    std::size_t cap_ = 0;
    std::size_t peak_bits_ = 0;
    bool tracing_ = false;
    TouchTrace trace_;
};

struct SimulationVerdict {
    bool ok = true;
    std::size_t failed_index = 0;
    std::string message;
};

// window_ends[i] is the exclusive end of window i in sim.records; windows are
// consecutive and the first starts at 0.
SimulationVerdict check_simulation(const TouchTrace &oracle, const TouchTrace &sim,
                                   const std::vector<std::size_t> &window_ends);

std::vector<MfOperation> parse_trace(std::istream &in);
void write_trace(std::ostream &out, const std::vector<MfOperation> &ops);

} // namespace mfbst
