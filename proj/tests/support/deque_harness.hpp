#pragma once

#include "mfbst/deque.hpp"

#include <memory>
#include <string>
#include <vector>

namespace mfbst::testing {

// A deque living inside a path: path positions 1..N run from the top down,
// the deque holds positions lo..hi, nodes above wait to be pushed at the far
// end and nodes below at the root end.  Every path node owns a one-node
// knuckle, so knuckle placement is checked after each operation.
class DequeHarness {
public:
    DequeHarness(Orient o, int n, int start) : dq(o), n_(n), lo_(start), hi_(start - 1)
    {
        TreeShape s;
        for (int i = 1; i <= n; ++i) {
            NodeId id = static_cast<NodeId>(s.nodes.size());
            NodeId kn = id + 1;
            NodeId next = i < n ? id + 2 : kNil;
            ShapeNode node{path_key(i), kNil, kNil};
            if (o == Orient::Min) {
                node.left = kn;
                node.right = next;
            } else {
                node.right = kn;
                node.left = next;
            }
            s.nodes.push_back(node);
            s.nodes.push_back({knuckle_key(i), kNil, kNil});
        }
        s.root = 0;
        arena = std::make_unique<TreeArena>(s);
        nav_ = std::make_unique<Navigator>(*arena);
    }

    Key path_key(int i) const
    {
        return dq.view.orient == Orient::Min ? Key(10 * i) : Key(10 * (n_ + 1 - i));
    }
    Key knuckle_key(int i) const
    {
        return dq.view.orient == Orient::Min ? path_key(i) - 5 : path_key(i) + 5;
    }
    NodeId node(int i) const { return static_cast<NodeId>(2 * (i - 1)); }
    NodeId knuckle(int i) const { return static_cast<NodeId>(2 * (i - 1) + 1); }

    bool can_push_far() const { return lo_ > 1; }
    bool can_push_root() const { return hi_ < n_; }

    void push_far()
    {
        dq.push_far(nav(), node(lo_ - 1));
        --lo_;
        ++ops;
    }
    void push_root()
    {
        NodeId x = node(hi_ + 1);
        if (dq.view.d > 0)
            nav().rotate(x);
        dq.push_root(nav(), x);
        ++hi_;
        ++ops;
    }
    NodeId pop_far()
    {
        NodeId x = dq.pop_far(nav());
        ++lo_;
        ++ops;
        return x;
    }
    NodeId pop_root()
    {
        NodeId x = dq.pop_root(nav());
        --hi_;
        if (dq.view.d > 0)
            nav().rotate(dq.view.root);
        ++ops;
        return x;
    }

    std::vector<Key> decoded_keys() const
    {
        std::vector<Key> out;
        for (NodeId x : dq.decode(arena->store()))
            out.push_back(arena->store().key(x));
        return out;
    }

    bool consistent(std::string *why = nullptr) const
    {
        auto bad = [&](const std::string &m) {
            if (why)
                *why = m;
            return false;
        };
        const TreeStore &t = arena->store();
        std::string reason;
        if (!dq.check(t, &reason))
            return bad(reason);
        std::vector<NodeId> got = dq.decode(t);
        if (static_cast<int>(got.size()) != hi_ - lo_ + 1)
            return bad("size mismatch");
        for (int i = lo_; i <= hi_; ++i)
            if (got[static_cast<std::size_t>(i - lo_)] != node(i))
                return bad("contents differ from the sequence oracle");
        for (int i = lo_; i <= hi_; ++i) {
            auto [p, s] = dq.knuckle_slot(t, i - lo_ + 1);
            NodeId k = t.child(p, s);
            if (k != knuckle(i) || t.left(k) != kNil || t.right(k) != kNil)
                return bad("knuckle moved");
        }
        Side out = outer_side(dq.view.orient);
        if (dq.view.d > 0) {
            if (lo_ > 1 && t.parent(dq.view.root) != node(lo_ - 1))
                return bad("deque detached from the path above");
            if (hi_ < n_ && t.child(dq.view.root, out) != node(hi_ + 1))
                return bad("deque detached from the path below");
        } else if (lo_ > 1 && hi_ < n_ && t.child(node(lo_ - 1), out) != node(hi_ + 1)) {
            return bad("path broken around the empty deque");
        }
        if (!t.check_invariants(&reason))
            return bad(reason);
        return true;
    }

    Navigator &nav() const { return *nav_; }

    std::unique_ptr<TreeArena> arena;
    Deque dq;
    std::uint64_t ops = 0;

private:
    int n_;
    int lo_;
    int hi_;
    std::unique_ptr<Navigator> nav_;
};

} // namespace mfbst::testing
