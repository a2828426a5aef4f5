#pragma once

#include "mfbst/tree.hpp"

#include <functional>
#include <vector>

namespace mfbst {

// Drives the single finger of a TreeArena: walks to a node along the
// shortest path and rotates there.  All cost is charged by the arena.
class Navigator {
public:
    explicit Navigator(TreeArena &arena) : arena_(&arena) {}

    TreeArena &arena() { return *arena_; }
    const TreeStore &tree() const { return arena_->store(); }
    NodeId at() const { return arena_->finger(); }

    void go(NodeId v);
    void rotate(NodeId v);
    void step(UnitOp op);

    // Called after every op with the node under the finger.
    std::function<void(NodeId)> on_touch;

private:
    TreeArena *arena_;
};

enum class Orient : std::uint8_t { Min, Max };

// Child direction from the deque root toward its contents; the other side of
// the root continues the tendon.
inline Side inner_side(Orient o) { return o == Orient::Min ? Side::Left : Side::Right; }
inline Side outer_side(Orient o) { return flip(inner_side(o)); }

// Deque of tendon nodes.  Elements are indexed t_1..t_d from the far end to
// the root end: for Min, t_1 is the smallest and t_d = root the largest; Max
// is the mirror image.  For d >= 2, t_v = child(root, inner) is the split.
struct DequeView {
    Orient orient = Orient::Min;
    NodeId root = kNil;
    int d = 0;
    int v = 0;

    bool empty() const { return d == 0; }
};

struct DequeStats {
    std::uint64_t rotations = 0;
    std::uint64_t balances = 0;
};

class Deque {
public:
    explicit Deque(Orient o) { view.orient = o; }

    // Far end: x is the parent of the root, root = child(x, outer) and
    // K(x) = child(x, inner).
    void push_far(Navigator &nav, NodeId x);
    // Root end: x is the parent of the root, root = child(x, inner),
    // K(x) = child(root, outer) and child(x, outer) continues the tendon.
    void push_root(Navigator &nav, NodeId x);
    // The popped node ends up in the matching entry position.
    NodeId pop_far(Navigator &nav);
    NodeId pop_root(Navigator &nav);

    // Min: front = smallest = far end.  Max: front = smallest = root end.
    void push_front(Navigator &nav, NodeId x);
    void push_back(Navigator &nav, NodeId x);
    NodeId pop_front(Navigator &nav);
    NodeId pop_back(Navigator &nav);

    void balance(Navigator &nav);

    NodeId far_end(const TreeStore &t) const;
    NodeId node_at(const TreeStore &t, int i) const;
    // Elements t_1..t_d read off the layout.
    std::vector<NodeId> decode(const TreeStore &t) const;
    // Where K(t_i) hangs: (parent node, side).
    std::pair<NodeId, Side> knuckle_slot(const TreeStore &t, int i) const;
    bool check(const TreeStore &t, std::string *why = nullptr) const;

    DequeView view;
    DequeStats stats;

private:
    void rot(Navigator &nav, NodeId x);
    void reshape_small(Navigator &nav, int target_v);
};

} // namespace mfbst
