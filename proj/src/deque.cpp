#include "mfbst/deque.hpp"
#include "mfbst/mf.hpp"

namespace mfbst {

void Navigator::step(UnitOp op)
{
    NodeId v = arena_->apply(op);
    if (on_touch)
        on_touch(v);
}

void Navigator::go(NodeId v)
{
    if (arena_->finger() == v)
        return;
    for (UnitOp op : tree_route(arena_->store(), arena_->finger(), v))
        step(op);
}

void Navigator::rotate(NodeId v)
{
    go(v);
    step(UnitOp::Rotate);
}

void Deque::rot(Navigator &nav, NodeId x)
{
    nav.rotate(x);
    ++stats.rotations;
}

void Deque::push_far(Navigator &nav, NodeId x)
{
    const TreeStore &t = nav.tree();
    if (view.d == 0) {
        view.root = x;
        view.d = 1;
        view.v = 0;
        return;
    }
    if (t.parent(view.root) != x || t.child(x, outer_side(view.orient)) != view.root)
        throw vm_error(errc::bad_position, "push_far: node is not in the entry position");
    if (view.d == 1) {
        rot(nav, view.root);
        view.d = 2;
        view.v = 1;
        return;
    }
    NodeId tv = t.child(view.root, inner_side(view.orient));
    rot(nav, view.root);
    rot(nav, tv);
    ++view.d;
    ++view.v;
}

void Deque::push_root(Navigator &nav, NodeId x)
{
    const TreeStore &t = nav.tree();
    if (view.d == 0) {
        view.root = x;
        view.d = 1;
        view.v = 0;
        return;
    }
    if (t.parent(view.root) != x || t.child(x, inner_side(view.orient)) != view.root)
        throw vm_error(errc::bad_position, "push_root: node is not in the entry position");
    if (view.d >= 2)
        rot(nav, t.child(view.root, inner_side(view.orient)));
    else
        view.v = 1;
    view.root = x;
    ++view.d;
}

NodeId Deque::pop_far(Navigator &nav)
{
    const TreeStore &t = nav.tree();
    Side in = inner_side(view.orient);
    if (view.d == 0)
        throw vm_error(errc::empty_structure, "pop from an empty deque");
    if (view.d == 1) {
        NodeId x = view.root;
        view = DequeView{view.orient};
        return x;
    }
    if (view.d == 2) {
        NodeId x = t.child(view.root, in);
        rot(nav, x);
        view.d = 1;
        view.v = 0;
        return x;
    }
    if (view.v == 1) {
        if (view.d >= 6)
            balance(nav);
        else
            reshape_small(nav, (view.d + 1) / 2);
    }
    NodeId x = t.child(t.child(view.root, in), in);
    rot(nav, x);
    rot(nav, x);
    --view.d;
    --view.v;
    return x;
}

NodeId Deque::pop_root(Navigator &nav)
{
    const TreeStore &t = nav.tree();
    Side in = inner_side(view.orient);
    if (view.d == 0)
        throw vm_error(errc::empty_structure, "pop from an empty deque");
    NodeId x = view.root;
    if (view.d == 1) {
        view = DequeView{view.orient};
        return x;
    }
    if (view.d == 2) {
        view.root = t.child(x, in);
        view.d = 1;
        view.v = 0;
        return x;
    }
    if (view.v == view.d - 1) {
        if (view.d >= 6)
            balance(nav);
        else
            reshape_small(nav, view.d / 2);
    }
    NodeId top = t.child(t.child(x, in), outer_side(view.orient));
    rot(nav, top);
    view.root = top;
    --view.d;
    return x;
}

void Deque::push_front(Navigator &nav, NodeId x)
{
    view.orient == Orient::Min ? push_far(nav, x) : push_root(nav, x);
}

void Deque::push_back(Navigator &nav, NodeId x)
{
    view.orient == Orient::Min ? push_root(nav, x) : push_far(nav, x);
}

NodeId Deque::pop_front(Navigator &nav)
{
    return view.orient == Orient::Min ? pop_far(nav) : pop_root(nav);
}

NodeId Deque::pop_back(Navigator &nav)
{
    return view.orient == Orient::Min ? pop_root(nav) : pop_far(nav);
}

void Deque::balance(Navigator &nav)
{
    const TreeStore &t = nav.tree();
    const int d = view.d;
    const int v = view.v;
    if (d < 6)
        return;
    const Side in = inner_side(view.orient);
    const Side out = outer_side(view.orient);
    auto lc = [&](NodeId x) { return t.child(x, in); };
    auto rc = [&](NodeId x) { return t.child(x, out); };
    const NodeId r = view.root;
    const int fl = d / 2;
    const int cl = (d + 1) / 2;
    bool low = v <= fl - 2;
    bool high = v >= fl + 2;
    if (!low && !high)
        return;
    ++stats.balances;
    for (int i = 0; i < v - 2; ++i)
        rot(nav, rc(lc(lc(r))));
    for (int i = 0; i < d - v - 2; ++i)
        rot(nav, lc(rc(lc(r))));
    if (low) {
        for (int i = 0; i < cl - v; ++i)
            rot(nav, rc(lc(r)));
        for (int i = 0; i < cl - 2; ++i)
            rot(nav, lc(lc(lc(r))));
        for (int i = 0; i < fl - 2; ++i)
            rot(nav, rc(rc(lc(r))));
        view.v = cl;
    } else {
        for (int i = 0; i < v - fl; ++i)
            rot(nav, lc(lc(r)));
        for (int i = 0; i < fl - 2; ++i)
            rot(nav, lc(lc(lc(r))));
        for (int i = 0; i < cl - 2; ++i)
            rot(nav, rc(rc(lc(r))));
        view.v = fl;
    }
}

void Deque::reshape_small(Navigator &nav, int target)
{
    const TreeStore &t = nav.tree();
    std::vector<NodeId> ts = decode(t);
    const int d = view.d;
    auto node = [&](int i) { return ts[static_cast<std::size_t>(i - 1)]; };
    auto bring = [&](NodeId z, NodeId p) {
        while (t.parent(z) != p)
            rot(nav, z);
    };
    bring(node(target), view.root);
    if (target >= 2) {
        bring(node(1), node(target));
        for (int i = 2; i < target; ++i)
            bring(node(i), node(i - 1));
    }
    if (target <= d - 2) {
        bring(node(d - 1), node(target));
        for (int i = d - 2; i > target; --i)
            bring(node(i), node(i + 1));
    }
    view.v = target;
}

NodeId Deque::node_at(const TreeStore &t, int i) const
{
    const Side in = inner_side(view.orient);
    const Side out = outer_side(view.orient);
    if (i == view.d)
        return view.root;
    NodeId tv = t.child(view.root, in);
    if (i == view.v)
        return tv;
    if (i < view.v) {
        NodeId x = t.child(tv, in);
        for (int j = 1; j < i; ++j)
            x = t.child(x, out);
        return x;
    }
    NodeId x = t.child(tv, out);
    for (int j = view.d - 1; j > i; --j)
        x = t.child(x, in);
    return x;
}

NodeId Deque::far_end(const TreeStore &t) const
{
    if (view.d == 0)
        return kNil;
    if (view.d == 1)
        return view.root;
    return node_at(t, 1);
}

std::vector<NodeId> Deque::decode(const TreeStore &t) const
{
    std::vector<NodeId> out;
    if (view.d == 0)
        return out;
    if (view.d == 1)
        return {view.root};
    const Side in = inner_side(view.orient);
    const Side o = outer_side(view.orient);
    NodeId tv = t.child(view.root, in);
    NodeId x = view.v >= 2 ? t.child(tv, in) : kNil;
    for (int i = 1; i < view.v; ++i) {
        out.push_back(x);
        x = x == kNil ? kNil : t.child(x, o);
    }
    out.push_back(tv);
    std::vector<NodeId> upper;
    x = view.v <= view.d - 2 ? t.child(tv, o) : kNil;
    for (int i = view.d - 1; i > view.v; --i) {
        upper.push_back(x);
        x = x == kNil ? kNil : t.child(x, in);
    }
    out.insert(out.end(), upper.rbegin(), upper.rend());
    out.push_back(view.root);
    return out;
}

std::pair<NodeId, Side> Deque::knuckle_slot(const TreeStore &t, int i) const
{
    const Side in = inner_side(view.orient);
    const Side out = outer_side(view.orient);
    if (view.d == 1)
        return {view.root, in};
    const int v = view.v;
    if (i < v)
        return {node_at(t, i), in};
    if (i == v)
        return v == 1 ? std::pair{node_at(t, v), in} : std::pair{node_at(t, v - 1), out};
    if (i == v + 1)
        return i == view.d ? std::pair{node_at(t, v), out} : std::pair{node_at(t, v + 1), in};
    return {node_at(t, i - 1), out};
}

bool Deque::check(const TreeStore &t, std::string *why) const
{
    auto bad = [&](const std::string &m) {
        if (why)
            *why = m;
        return false;
    };
    if (view.d == 0)
        return view.root == kNil ? true : bad("empty deque with a root");
    if (view.root == kNil)
        return bad("nonempty deque without a root");
    if (view.d >= 2 && (view.v < 1 || view.v > view.d - 1))
        return bad("split index out of range");
    std::vector<NodeId> ts = decode(t);
    for (NodeId x : ts)
        if (x == kNil)
            return bad("layout walk fell off the tree");
    const Side in = inner_side(view.orient);
    const Side out = outer_side(view.orient);
    for (std::size_t i = 1; i < ts.size(); ++i) {
        bool inc = t.key(ts[i - 1]) < t.key(ts[i]);
        if (inc != (view.orient == Orient::Min))
            return bad("deque keys out of order");
    }
    if (view.d >= 2) {
        NodeId tv = ts[static_cast<std::size_t>(view.v - 1)];
        if (t.parent(tv) != view.root || t.child(view.root, in) != tv)
            return bad("split is not the inner child of the root");
        if (view.v >= 2 && t.child(tv, in) != ts[0])
            return bad("far end is not below the split");
        if (view.v <= view.d - 2 && t.child(tv, out) != ts[static_cast<std::size_t>(view.d - 2)])
            return bad("upper path does not start below the split");
    }
    // Knuckle slots must not hold deque nodes.
    for (int i = 1; i <= view.d; ++i) {
        auto [p, s] = knuckle_slot(t, i);
        NodeId k = t.child(p, s);
        for (NodeId x : ts)
            if (k == x)
                return bad("knuckle slot holds a deque node");
    }
    return true;
}

} // namespace mfbst
