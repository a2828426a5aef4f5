#pragma once

#include "mfbst/deque.hpp"

#include <string>
#include <vector>

namespace mfbst {

// Reads the stored child-side flag of a node (which child of its logical
// parent it is).  The simulator walks to the node to read it.
class SideOracle {
public:
    virtual ~SideOracle() = default;
    virtual Side side_of(NodeId v) = 0;
};

enum class TendonConfig : std::uint8_t { T1, T2, T3, T4 };

// The path strictly between pseudofingers x (top) and y (bottom), kept as a
// MinDeque of the nodes whose right child continues the path and a MaxDeque
// of the nodes whose left child does.  Physically x -> U -> L -> y where the
// upper deque U is the Min one when y is a left child.
class Tendon {
public:
    Tendon() = default;
    Tendon(NodeId top, NodeId bottom, Side y_side) : top(top), bottom(bottom), y_side(y_side) {}

    int size() const { return minq.view.d + maxq.view.d; }
    bool empty() const { return size() == 0; }
    Orient upper() const { return y_side == Side::Left ? Orient::Min : Orient::Max; }
    Deque &deque(Orient o) { return o == Orient::Min ? minq : maxq; }
    const Deque &deque(Orient o) const { return o == Orient::Min ? minq : maxq; }
    // Side of the top node on which the tendon hangs.
    Side dir(const TreeStore &t) const { return t.key(bottom) > t.key(top) ? Side::Right : Side::Left; }
    TendonConfig config(const TreeStore &t) const;
    // Physical child of the top node that starts the compressed tendon.
    NodeId first_below_top(const TreeStore &t) const { return t.child(top, dir(t)); }

    // new_top is the logical (and physical) parent of the current top.
    void add_parent(Navigator &nav, NodeId new_top);
    // new_bottom is the logical child of the current bottom on side s.
    void add_child(Navigator &nav, NodeId new_bottom, Side s);
    // Expose the topmost tendon node; it becomes the new top.
    NodeId remove_parent(Navigator &nav, SideOracle &sides);
    // Expose the bottommost tendon node; it becomes the new bottom.
    NodeId remove_child(Navigator &nav, SideOracle &sides);

    // Logical path strictly between top and bottom, top first.
    std::vector<NodeId> decode(const TreeStore &t, SideOracle &sides) const;
    // Structural invariants: deques, linkage, key partition and depth gap.
    bool check(const TreeStore &t, std::string *why = nullptr) const;

    NodeId top = kNil;
    NodeId bottom = kNil;
    Side y_side = Side::Left;
    Deque minq{Orient::Min};
    Deque maxq{Orient::Max};
    std::uint64_t rotations = 0;

private:
    void rot(Navigator &nav, NodeId x);
};

} // namespace mfbst
