#include "mfbst/multifinger.hpp"

#include <algorithm>
#include <unordered_map>

namespace mfbst {

namespace {

constexpr std::size_t kRoleBits = 3;
constexpr std::size_t kSideBit = 3;
constexpr std::size_t kMaskOffset = 4;

} // namespace

Side MfToBst::Flags::side_of(NodeId v)
{
    m_.nav_.go(v);
    return m_.arena_.aug_get(kSideBit, 1) ? Side::Left : Side::Right;
}

Side MfToBst::PeekFlags::side_of(NodeId v)
{
    return t_.node(v).aug.get(kSideBit, 1) ? Side::Left : Side::Right;
}

MfToBst::MfToBst(const TreeShape &shape, std::size_t fingers, unsigned aug_words)
    : arena_(shape, aug_words), nav_(arena_), flags_(*this), shadow_(shape, 0)
{
    if (fingers == 0)
        throw vm_error(errc::usage, "at least one finger is required");
    if (aug_base() > arena_.aug_capacity_bits())
        throw vm_error(errc::budget_exceeded, "finger tags do not fit the aug budget");
    const TreeStore &t = arena_.store();
    for (std::size_t i = 0; i < t.size(); ++i) {
        NodeId v = static_cast<NodeId>(i);
        if (t.parent(v) != kNil && t.is_left_child(v))
            arena_.preset_aug(v, kSideBit, 1, 1);
    }
    NodeId root = t.root();
    fingers_.assign(fingers, root);
    arena_.preset_aug(root, 0, kRoleBits, static_cast<std::uint64_t>(NodeRole::Finger));
    arena_.preset_aug(root, kMaskOffset, static_cast<unsigned>(fingers),
                      (fingers >= 64 ? ~0ULL : (1ULL << fingers) - 1));
    root_slot_ = new_slot(root);
    slots_[static_cast<std::size_t>(root_slot_)].fresh = false;
    stats_.peak_pseudofingers = 1;
}

Side MfToBst::side_under(NodeId v, NodeId above) const
{
    const TreeStore &t = arena_.store();
    return t.key(v) < t.key(above) ? Side::Left : Side::Right;
}

int MfToBst::slot_of(NodeId v) const
{
    for (std::size_t i = 0; i < slots_.size(); ++i)
        if (slots_[i].alive && slots_[i].node == v)
            return static_cast<int>(i);
    return -1;
}

int MfToBst::new_slot(NodeId v)
{
    std::size_t i = 0;
    while (i < slots_.size() && slots_[i].alive)
        ++i;
    if (i == slots_.size())
        slots_.emplace_back();
    Slot &s = slots_[i];
    s = Slot{};
    s.node = v;
    s.alive = true;
    s.fresh = true;
    dirty_.push_back(v);
    return static_cast<int>(i);
}

int MfToBst::finger_count_at(NodeId v) const
{
    return static_cast<int>(std::count(fingers_.begin(), fingers_.end(), v));
}

std::size_t MfToBst::pseudofinger_count() const
{
    return static_cast<std::size_t>(
        std::count_if(slots_.begin(), slots_.end(), [](const Slot &s) { return s.alive; }));
}

int MfToBst::expose_parent(int s)
{
    int q = slots_[static_cast<std::size_t>(s)].parent;
    if (slots_[static_cast<std::size_t>(s)].up.empty())
        return q;
    ++stats_.exposes;
    NodeId z = slots_[static_cast<std::size_t>(s)].up.remove_child(nav_, flags_);
    int u = new_slot(z);
    Slot &U = slots_[static_cast<std::size_t>(u)];
    Slot &S = slots_[static_cast<std::size_t>(s)];
    U.parent = q;
    U.up = std::move(S.up);
    Side su = side_under(S.node, z);
    U.child[idx(su)] = s;
    S.parent = u;
    S.up = Tendon(z, S.node, su);
    Slot &Q = slots_[static_cast<std::size_t>(q)];
    Q.child[idx(side_under(z, Q.node))] = u;
    return u;
}

int MfToBst::expose_child(int s, Side d)
{
    int c = slots_[static_cast<std::size_t>(s)].child[idx(d)];
    if (c >= 0) {
        if (slots_[static_cast<std::size_t>(c)].up.empty())
            return c;
        ++stats_.exposes;
        NodeId z = slots_[static_cast<std::size_t>(c)].up.remove_parent(nav_, flags_);
        int u = new_slot(z);
        Slot &U = slots_[static_cast<std::size_t>(u)];
        Slot &C = slots_[static_cast<std::size_t>(c)];
        Slot &S = slots_[static_cast<std::size_t>(s)];
        U.parent = s;
        U.up = Tendon(S.node, z, d);
        U.child[idx(side_under(C.node, z))] = c;
        C.parent = u;
        S.child[idx(d)] = u;
        return u;
    }
    NodeId z = arena_.store().child(slots_[static_cast<std::size_t>(s)].node, d);
    if (z == kNil)
        return -1;
    int u = new_slot(z);
    Slot &U = slots_[static_cast<std::size_t>(u)];
    Slot &S = slots_[static_cast<std::size_t>(s)];
    U.parent = s;
    U.up = Tendon(S.node, z, d);
    S.child[idx(d)] = u;
    return u;
}

void MfToBst::rotate_at(int ls)
{
    int xs = expose_parent(ls);
    NodeId l = slots_[static_cast<std::size_t>(ls)].node;
    NodeId x = slots_[static_cast<std::size_t>(xs)].node;
    Side s = side_under(l, x);
    Side in = flip(s);
    int rs = -1;
    if (slots_[static_cast<std::size_t>(ls)].child[idx(in)] >= 0)
        rs = expose_child(ls, in);
    NodeId r = arena_.store().child(l, in);
    int ps = slots_[static_cast<std::size_t>(xs)].parent;
    Side xside = slots_[static_cast<std::size_t>(xs)].up.y_side;

    nav_.rotate(l);

    Slot &L = slots_[static_cast<std::size_t>(ls)];
    Slot &X = slots_[static_cast<std::size_t>(xs)];
    L.parent = ps;
    L.up = std::move(X.up);
    if (ps >= 0) {
        L.up.bottom = l;
        Slot &P = slots_[static_cast<std::size_t>(ps)];
        P.child[idx(side_under(l, P.node))] = ls;
        pending_side_.push_back({l, xside});
    } else {
        root_slot_ = ls;
    }
    X.parent = ls;
    X.up = Tendon(l, x, in);
    L.child[idx(in)] = xs;
    X.child[idx(s)] = rs;
    if (rs >= 0) {
        Slot &R = slots_[static_cast<std::size_t>(rs)];
        R.parent = xs;
        R.up = Tendon(x, r, s);
    }
    pending_side_.push_back({x, in});
    dirty_.push_back(l);
    dirty_.push_back(x);
    if (r != kNil) {
        pending_side_.push_back({r, s});
        dirty_.push_back(r);
    }
    shadow_.rotate_up(l);
}

void MfToBst::absorb_up(int s)
{
    // s has an empty tendon above: it becomes the top element of its only
    // hand child's tendon.
    Slot &S = slots_[static_cast<std::size_t>(s)];
    int c = S.child[0] >= 0 ? S.child[0] : S.child[1];
    int q = S.parent;
    NodeId qn = slots_[static_cast<std::size_t>(q)].node;
    Side sq = side_under(S.node, qn);
    NodeId v = S.node;
    slots_[static_cast<std::size_t>(c)].up.add_parent(nav_, qn);
    slots_[static_cast<std::size_t>(c)].parent = q;
    slots_[static_cast<std::size_t>(q)].child[idx(sq)] = c;
    slots_[static_cast<std::size_t>(s)].alive = false;
    absorbed_.push_back(v);
    dirty_.push_back(v);
    ++stats_.absorbs;
}

void MfToBst::absorb_down(int s)
{
    // s's only hand child hangs directly below it: s becomes the bottom
    // element of the tendon above s.
    Slot &S = slots_[static_cast<std::size_t>(s)];
    int c = S.child[0] >= 0 ? S.child[0] : S.child[1];
    int q = S.parent;
    NodeId cn = slots_[static_cast<std::size_t>(c)].node;
    NodeId v = S.node;
    Side sc = side_under(cn, v);
    Side sq = side_under(v, slots_[static_cast<std::size_t>(q)].node);
    S.up.add_child(nav_, cn, sc);
    Slot &C = slots_[static_cast<std::size_t>(c)];
    C.up = std::move(slots_[static_cast<std::size_t>(s)].up);
    C.parent = q;
    slots_[static_cast<std::size_t>(q)].child[idx(sq)] = c;
    slots_[static_cast<std::size_t>(s)].alive = false;
    absorbed_.push_back(v);
    dirty_.push_back(v);
    ++stats_.absorbs;
}

bool MfToBst::dissolve(int s, bool allow_both_empty, bool allow_slow)
{
    Slot &S = slots_[static_cast<std::size_t>(s)];
    int kids = (S.child[0] >= 0) + (S.child[1] >= 0);
    if (kids == 0) {
        if (!S.up.empty()) {
            if (!allow_slow)
                return false;
            // Shrink the tendon from below until the leaf hangs directly
            // under a node, then retire the leaf.
            ++stats_.slow_merges;
            while (!slots_[static_cast<std::size_t>(s)].up.empty()) {
                NodeId old = slots_[static_cast<std::size_t>(s)].node;
                NodeId z = slots_[static_cast<std::size_t>(s)].up.remove_child(nav_, flags_);
                slots_[static_cast<std::size_t>(s)].node = z;
                retired_.push_back(old);
                dirty_.push_back(old);
            }
            return true;
        }
        int q = S.parent;
        Slot &Q = slots_[static_cast<std::size_t>(q)];
        Q.child[idx(side_under(S.node, Q.node))] = -1;
        S.alive = false;
        retired_.push_back(S.node);
        dirty_.push_back(S.node);
        return true;
    }
    int c = S.child[0] >= 0 ? S.child[0] : S.child[1];
    bool up_empty = S.up.empty();
    bool down_empty = slots_[static_cast<std::size_t>(c)].up.empty();
    if (up_empty && !down_empty) {
        absorb_up(s);
        return true;
    }
    if (!up_empty && down_empty) {
        absorb_down(s);
        return true;
    }
    if (up_empty && down_empty) {
        if (!allow_both_empty)
            return false;
        absorb_down(s);
        return true;
    }
    if (!allow_slow)
        return false;
    // Both tendons are nonempty: walk the node down through the lower one.
    ++stats_.slow_merges;
    while (!slots_[static_cast<std::size_t>(c)].up.empty()) {
        NodeId z = slots_[static_cast<std::size_t>(c)].up.remove_parent(nav_, flags_);
        Slot &T = slots_[static_cast<std::size_t>(s)];
        NodeId v = T.node;
        T.up.add_child(nav_, z, side_under(z, v));
        T.node = z;
        absorbed_.push_back(v);
        dirty_.push_back(v);
    }
    absorb_down(s);
    return true;
}

void MfToBst::normalize()
{
    auto dissolvable = [&](std::size_t i) {
        const Slot &S = slots_[i];
        return S.alive && static_cast<int>(i) != root_slot_ && finger_count_at(S.node) == 0 &&
               (S.child[0] < 0 || S.child[1] < 0);
    };
    for (;;) {
        bool progress = false;
        for (int pass = 0; pass < 3 && !progress; ++pass) {
            for (std::size_t i = 0; i < slots_.size(); ++i) {
                if (!dissolvable(i))
                    continue;
                if (dissolve(static_cast<int>(i), pass >= 1, pass >= 2)) {
                    progress = true;
                    if (pass >= 1)
                        break;
                }
            }
        }
        if (!progress)
            break;
    }
    stats_.peak_pseudofingers = std::max(stats_.peak_pseudofingers, pseudofinger_count());
}

std::uint64_t MfToBst::tag_of(NodeId v) const
{
    std::uint64_t role;
    int s = slot_of(v);
    if (s >= 0) {
        role = finger_count_at(v) > 0 || s == root_slot_ ? std::uint64_t(NodeRole::Finger)
                                                        : std::uint64_t(NodeRole::Prosthetic);
    } else if (std::find(absorbed_.begin(), absorbed_.end(), v) != absorbed_.end() &&
               std::find(retired_.begin(), retired_.end(), v) == retired_.end()) {
        role = std::uint64_t(NodeRole::TendonNode);
    } else {
        role = std::uint64_t(NodeRole::Knuckle);
    }
    std::uint64_t side = arena_.store().node(v).aug.get(kSideBit, 1);
    for (auto it = pending_side_.rbegin(); it != pending_side_.rend(); ++it)
        if (it->first == v) {
            side = it->second == Side::Left ? 1 : 0;
            break;
        }
    std::uint64_t mask = 0;
    for (std::size_t f = 0; f < fingers_.size(); ++f)
        if (fingers_[f] == v)
            mask |= 1ULL << f;
    return role | side << kSideBit | mask << kMaskOffset;
}

void MfToBst::flush(NodeId target)
{
    std::vector<NodeId> order;
    for (NodeId v : dirty_)
        if (v != target && std::find(order.begin(), order.end(), v) == order.end())
            order.push_back(v);
    order.push_back(target);
    unsigned width = static_cast<unsigned>(kMaskOffset + fingers_.size());
    for (NodeId v : order) {
        std::uint64_t tag = tag_of(v);
        nav_.go(v);
        if (arena_.aug_get(0, width) != tag)
            arena_.aug_set(0, width, tag);
    }
    if (arena_.finger() != target)
        nav_.go(target);
    dirty_.clear();
    pending_side_.clear();
    absorbed_.clear();
    retired_.clear();
    for (Slot &s : slots_)
        s.fresh = false;
}

Key MfToBst::mf_apply(MfOperation op)
{
    if (op.finger < 0 || static_cast<std::size_t>(op.finger) >= fingers_.size())
        throw vm_error(errc::bad_position, "no such finger");
    NodeId v = fingers_[static_cast<std::size_t>(op.finger)];
    switch (op.op) {
    case UnitOp::MoveParent:
        if (shadow_.parent(v) == kNil)
            throw vm_error(errc::illegal_at_root, "move to parent at the root");
        break;
    case UnitOp::MoveLeft:
        if (shadow_.left(v) == kNil)
            throw vm_error(errc::no_left_child, "no left child");
        break;
    case UnitOp::MoveRight:
        if (shadow_.right(v) == kNil)
            throw vm_error(errc::no_right_child, "no right child");
        break;
    case UnitOp::Rotate:
        if (shadow_.parent(v) == kNil)
            throw vm_error(errc::illegal_at_root, "rotation at the root");
        break;
    }
    ++stats_.ops;
    int s = slot_of(v);
    NodeId target = v;
    switch (op.op) {
    case UnitOp::MoveParent:
        target = slots_[static_cast<std::size_t>(expose_parent(s))].node;
        break;
    case UnitOp::MoveLeft:
        target = slots_[static_cast<std::size_t>(expose_child(s, Side::Left))].node;
        break;
    case UnitOp::MoveRight:
        target = slots_[static_cast<std::size_t>(expose_child(s, Side::Right))].node;
        break;
    case UnitOp::Rotate:
        rotate_at(s);
        break;
    }
    fingers_[static_cast<std::size_t>(op.finger)] = target;
    dirty_.push_back(v);
    normalize();
    flush(target);
    return arena_.store().key(target);
}

void MfToBst::reset_finger_to_root(FingerId f)
{
    while (shadow_.parent(finger_node(f)) != kNil)
        mf_apply({f, UnitOp::MoveParent});
}

NodeView MfToBst::view(FingerId f) const
{
    NodeId v = finger_node(f);
    return {shadow_.key(v), shadow_.parent(v) != kNil, shadow_.left(v) != kNil,
            shadow_.right(v) != kNil, shadow_.parent(v) != kNil && shadow_.is_left_child(v)};
}

std::vector<UnitOp> MfToBst::route(FingerId f, Key target) const
{
    NodeId dst = shadow_.find(target);
    if (dst == kNil)
        throw vm_error(errc::bad_position, "key not in tree");
    return tree_route(shadow_, finger_node(f), dst);
}

std::uint64_t MfToBst::aug_get(FingerId f, std::size_t off, unsigned width)
{
    nav_.go(finger_node(f));
    if (aug_base() + off + width > aug_capacity_bits())
        throw vm_error(errc::budget_exceeded, "aug read beyond capacity");
    return arena_.aug_get(aug_base() + off, width);
}

void MfToBst::aug_set(FingerId f, std::size_t off, unsigned width, std::uint64_t value)
{
    nav_.go(finger_node(f));
    arena_.aug_set(aug_base() + off, width, value);
}

TreeShape MfToBst::decode_logical() const
{
    const TreeStore &t = arena_.store();
    std::size_t n = t.size();
    std::vector<NodeId> lp(n), ll(n), lr(n);
    for (std::size_t i = 0; i < n; ++i) {
        NodeId v = static_cast<NodeId>(i);
        lp[i] = t.parent(v);
        ll[i] = t.left(v);
        lr[i] = t.right(v);
    }
    auto link = [&](NodeId a, NodeId b, Side s) {
        (s == Side::Left ? ll : lr)[static_cast<std::size_t>(a)] = b;
        if (b != kNil)
            lp[static_cast<std::size_t>(b)] = a;
    };
    PeekFlags peek(t);
    for (const Slot &c : slots_) {
        if (!c.alive || c.parent < 0)
            continue;
        std::unordered_map<NodeId, NodeId> knuckle;
        for (const Deque *dq : {&c.up.minq, &c.up.maxq}) {
            std::vector<NodeId> elems = dq->decode(t);
            for (std::size_t i = 0; i < elems.size(); ++i) {
                auto [p, side] = dq->knuckle_slot(t, static_cast<int>(i + 1));
                knuckle[elems[i]] = t.child(p, side);
            }
        }
        std::vector<NodeId> chain{c.up.top};
        for (NodeId z : c.up.decode(t, peek))
            chain.push_back(z);
        chain.push_back(c.node);
        for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
            Side s = side_under(chain[i + 1], chain[i]);
            link(chain[i], chain[i + 1], s);
            if (i > 0)
                link(chain[i], knuckle[chain[i]], flip(s));
        }
    }
    TreeShape shape;
    shape.root = t.root();
    shape.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        shape.nodes[i] = {t.key(static_cast<NodeId>(i)), ll[i], lr[i]};
    return shape;
}

LogicalNeighbors MfToBst::logical_view(NodeId v) const
{
    TreeShape s = decode_logical();
    LogicalNeighbors out;
    out.key = arena_.store().key(v);
    out.left = s.nodes[static_cast<std::size_t>(v)].left;
    out.right = s.nodes[static_cast<std::size_t>(v)].right;
    for (std::size_t i = 0; i < s.nodes.size(); ++i)
        if (s.nodes[i].left == v || s.nodes[i].right == v)
            out.parent = static_cast<NodeId>(i);
    return out;
}

std::string MfToBst::logical_shape() const
{
    return TreeStore(decode_logical(), 0).snapshot_shape();
}

std::vector<Key> MfToBst::logical_inorder() const
{
    return decode_logical().inorder_keys();
}

bool MfToBst::check(std::string *why) const
{
    auto bad = [&](const std::string &m) {
        if (why)
            *why = m;
        return false;
    };
    const TreeStore &t = arena_.store();
    if (root_slot_ < 0 || slots_[static_cast<std::size_t>(root_slot_)].node != t.root())
        return bad("hand root is not the physical root");
    for (NodeId f : fingers_)
        if (slot_of(f) < 0)
            return bad("finger node is not a pseudofinger");
    std::size_t count = pseudofinger_count();
    if (count > 2 * fingers_.size())
        return bad("too many pseudofingers: " + std::to_string(count));
    std::string reason;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        const Slot &s = slots_[i];
        if (!s.alive)
            continue;
        int kids = 0;
        for (int side = 0; side < 2; ++side) {
            int c = s.child[side];
            if (c < 0)
                continue;
            ++kids;
            const Slot &cs = slots_[static_cast<std::size_t>(c)];
            if (!cs.alive || cs.parent != static_cast<int>(i))
                return bad("hand child link broken");
            Side want = side == 0 ? Side::Left : Side::Right;
            if (side_under(cs.node, s.node) != want)
                return bad("hand child on the wrong side");
        }
        if (static_cast<int>(i) == root_slot_)
            continue;
        if (finger_count_at(s.node) == 0 && kids < 2)
            return bad("stale pseudofinger");
        if (s.parent < 0)
            return bad("non-root pseudofinger without a hand parent");
        if (s.up.top != slots_[static_cast<std::size_t>(s.parent)].node || s.up.bottom != s.node)
            return bad("tendon endpoints disagree with the hand");
        if (!s.up.check(t, &reason))
            return bad("tendon below key " + std::to_string(t.key(s.node)) + ": " + reason);
    }
    return true;
}

} // namespace mfbst
