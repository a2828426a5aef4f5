#include "mfbst/tendon.hpp"

namespace mfbst {

namespace {

Orient other(Orient o) { return o == Orient::Min ? Orient::Max : Orient::Min; }

} // namespace

void Tendon::rot(Navigator &nav, NodeId x)
{
    nav.rotate(x);
    ++rotations;
}

TendonConfig Tendon::config(const TreeStore &t) const
{
    bool below = t.key(bottom) < t.key(top);
    if (y_side == Side::Left)
        return below ? TendonConfig::T1 : TendonConfig::T2;
    return below ? TendonConfig::T3 : TendonConfig::T4;
}

void Tendon::add_parent(Navigator &nav, NodeId new_top)
{
    const TreeStore &t = nav.tree();
    NodeId x = top;
    if (t.parent(x) != new_top)
        throw vm_error(errc::bad_position, "add_parent: new top is not the parent of the top");
    Orient j = t.key(bottom) > t.key(x) ? Orient::Min : Orient::Max;
    Orient u = upper();
    Deque &U = deque(u);
    if (j != u && !U.view.empty())
        rot(nav, U.view.root);
    Deque &J = deque(j);
    std::uint64_t r0 = J.stats.rotations;
    J.push_far(nav, x);
    rotations += J.stats.rotations - r0;
    top = new_top;
}

void Tendon::add_child(Navigator &nav, NodeId new_bottom, Side s)
{
    const TreeStore &t = nav.tree();
    NodeId yp = bottom;
    if (t.child(yp, s) != new_bottom)
        throw vm_error(errc::bad_position, "add_child: node is not a child of the bottom");
    Orient j = s == Side::Right ? Orient::Min : Orient::Max;
    Deque &J = deque(j);
    if (!J.view.empty()) {
        NodeId p = t.parent(yp);
        if (p != J.view.root)
            rot(nav, p);
        rot(nav, yp);
    }
    std::uint64_t r0 = J.stats.rotations;
    J.push_root(nav, yp);
    rotations += J.stats.rotations - r0;
    bottom = new_bottom;
    y_side = s;
}

NodeId Tendon::remove_parent(Navigator &nav, SideOracle &sides)
{
    const TreeStore &t = nav.tree();
    if (empty())
        throw vm_error(errc::empty_structure, "remove_parent on an empty tendon");
    Orient j;
    if (minq.view.empty()) {
        j = Orient::Max;
    } else if (maxq.view.empty()) {
        j = Orient::Min;
    } else if (dir(t) == Side::Left) {
        // The largest T< node is the top exactly when it is a left child.
        j = sides.side_of(maxq.far_end(t)) == Side::Left ? Orient::Max : Orient::Min;
    } else {
        j = sides.side_of(minq.far_end(t)) == Side::Right ? Orient::Min : Orient::Max;
    }
    Deque &J = deque(j);
    std::uint64_t r0 = J.stats.rotations;
    NodeId z = J.pop_far(nav);
    rotations += J.stats.rotations - r0;
    Deque &U = deque(upper());
    if (j != upper() && !U.view.empty())
        rot(nav, z);
    top = z;
    return z;
}

NodeId Tendon::remove_child(Navigator &nav, SideOracle &sides)
{
    Orient j = y_side == Side::Right ? Orient::Min : Orient::Max;
    Deque &J = deque(j);
    if (J.view.empty())
        throw vm_error(errc::empty_structure, "remove_child on an empty tendon");
    std::uint64_t r0 = J.stats.rotations;
    NodeId yp = J.pop_root(nav);
    rotations += J.stats.rotations - r0;
    if (!J.view.empty())
        rot(nav, J.view.root);
    Side s = sides.side_of(yp);
    Orient lower = s == Side::Right ? Orient::Min : Orient::Max;
    Deque &O = deque(other(j));
    if (lower != j && !O.view.empty() && !J.view.empty())
        rot(nav, J.view.root);
    bottom = yp;
    y_side = s;
    return yp;
}

std::vector<NodeId> Tendon::decode(const TreeStore &t, SideOracle &sides) const
{
    std::vector<NodeId> a = minq.decode(t);
    std::vector<NodeId> b = maxq.decode(t);
    std::vector<NodeId> up;
    Side s = y_side;
    while (!a.empty() || !b.empty()) {
        std::vector<NodeId> &src = s == Side::Right ? a : b;
        if (src.empty())
            throw vm_error(errc::bad_position, "tendon decode: side flags disagree with deques");
        NodeId w = src.back();
        src.pop_back();
        up.push_back(w);
        s = sides.side_of(w);
    }
    return {up.rbegin(), up.rend()};
}

bool Tendon::check(const TreeStore &t, std::string *why) const
{
    auto bad = [&](const std::string &m) {
        if (why)
            *why = m;
        return false;
    };
    std::string reason;
    if (!minq.check(t, &reason))
        return bad("min deque: " + reason);
    if (!maxq.check(t, &reason))
        return bad("max deque: " + reason);
    const Deque &U = deque(upper());
    const Deque &L = deque(upper() == Orient::Min ? Orient::Max : Orient::Min);
    std::vector<NodeId> chain;
    if (!U.view.empty())
        chain.push_back(U.view.root);
    if (!L.view.empty())
        chain.push_back(L.view.root);
    chain.push_back(bottom);
    Side d = dir(t);
    if (t.child(top, d) != chain[0])
        return bad("top is not attached to the compressed tendon");
    if (!U.view.empty()) {
        if (t.child(U.view.root, outer_side(U.view.orient)) != chain[1])
            return bad("upper deque does not continue the tendon");
    }
    if (!L.view.empty()) {
        if (t.child(L.view.root, outer_side(L.view.orient)) != bottom)
            return bad("lower deque does not hold the bottom");
    }
    std::size_t gap = t.depth(bottom) - t.depth(top);
    if (gap != chain.size())
        return bad("depth gap " + std::to_string(gap) + " does not match the deques");
    Key kx = t.key(top);
    Key ky = t.key(bottom);
    auto in_range = [&](NodeId v) { return (t.key(v) > kx) == (ky > kx); };
    std::vector<NodeId> a = minq.decode(t), b = maxq.decode(t);
    for (NodeId v : a)
        if (!in_range(v) || t.key(v) > ky)
            return bad("T> node out of range");
    for (NodeId v : b)
        if (!in_range(v) || t.key(v) < ky)
            return bad("T< node out of range");
    if (!a.empty() && !b.empty() && t.key(a.back()) >= t.key(b.back()))
        return bad("T> and T< overlap");
    return true;
}

} // namespace mfbst
