#include "mfbst/tree.hpp"

#include <algorithm>
#include <cctype>
#include <random>

namespace mfbst {

char op_letter(UnitOp op)
{
    switch (op) {
    case UnitOp::MoveParent: return 'P';
    case UnitOp::MoveLeft: return 'L';
    case UnitOp::MoveRight: return 'R';
    case UnitOp::Rotate: return 'T';
    }
    return '?';
}

std::optional<UnitOp> op_from_letter(char c)
{
    switch (c) {
    case 'P': return UnitOp::MoveParent;
    case 'L': return UnitOp::MoveLeft;
    case 'R': return UnitOp::MoveRight;
    case 'T': return UnitOp::Rotate;
    default: return std::nullopt;
    }
}

const char *errc_name(errc c)
{
    switch (c) {
    case errc::illegal_at_root: return "IllegalAtRoot";
    case errc::no_left_child: return "NoLeftChild";
    case errc::no_right_child: return "NoRightChild";
    case errc::budget_exceeded: return "BudgetExceeded";
    case errc::duplicate_keys: return "DuplicateKeys";
    case errc::unsorted_keys: return "UnsortedKeys";
    case errc::malformed_shape: return "MalformedShape";
    case errc::window_mismatch: return "WindowMismatch";
    case errc::empty_structure: return "EmptyStructure";
    case errc::bad_position: return "BadPosition";
    case errc::capacity_exceeded: return "CapacityExceeded";
    case errc::input_exhausted: return "InputExhausted";
    case errc::usage: return "Usage";
    }
    return "Unknown";
}

// ---- AugPayload ----

std::uint64_t AugPayload::get(std::size_t off, unsigned width) const
{
    std::uint64_t v = 0;
    for (unsigned i = 0; i < width; ++i) {
        std::size_t b = off + i;
        std::size_t w = b / 64;
        if (w < words_.size() && ((words_[w] >> (b % 64)) & 1U))
            v |= std::uint64_t{1} << i;
    }
    return v;
}

void AugPayload::set(std::size_t off, unsigned width, std::uint64_t value)
{
    if (width < 64 && (value >> width) != 0)
        throw vm_error(errc::budget_exceeded, "value does not fit its field");
    if (off + width > cap_)
        throw vm_error(errc::budget_exceeded, "augmented payload over capacity: need " +
                                                  std::to_string(off + width) + " bits, have " +
                                                  std::to_string(cap_));
    std::size_t need = (off + width + 63) / 64;
    if (words_.size() < need)
        words_.resize(need, 0);
    for (unsigned i = 0; i < width; ++i) {
        std::size_t b = off + i;
        std::uint64_t mask = std::uint64_t{1} << (b % 64);
        if ((value >> i) & 1U)
            words_[b / 64] |= mask;
        else
            words_[b / 64] &= ~mask;
    }
    size_ = std::max(size_, off + width);
}

void AugPayload::assign(const AugPayload &other)
{
    if (other.size_ > cap_)
        throw vm_error(errc::budget_exceeded, "augmented payload over capacity: need " +
                                                  std::to_string(other.size_) + " bits, have " +
                                                  std::to_string(cap_));
    words_ = other.words_;
    size_ = other.size_;
    words_.resize((size_ + 63) / 64);
}

bool AugPayload::operator==(const AugPayload &o) const
{
    std::size_t n = std::max(size_, o.size_);
    for (std::size_t b = 0; b < n; b += 32) {
        unsigned w = static_cast<unsigned>(std::min<std::size_t>(32, n - b));
        if (get(b, w) != o.get(b, w))
            return false;
    }
    return size_ == o.size_;
}

void CostMeter::end_access()
{
    per_access.push_back(unit_ops - access_start);
    access_start = unit_ops;
}

// ---- TreeShape ----

namespace {

struct ShapeParser {
    std::string_view s;
    std::size_t i = 0;
    TreeShape out;

    void skip()
    {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i])))
            ++i;
    }
    [[noreturn]] void fail(const std::string &msg)
    {
        throw vm_error(errc::malformed_shape, "shape: " + msg + " at offset " + std::to_string(i));
    }
    NodeId child()
    {
        skip();
        if (i < s.size() && s[i] == '-') {
            ++i;
            return kNil;
        }
        return node();
    }
    NodeId node()
    {
        skip();
        if (i >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i])))
            fail("expected key");
        Key k = 0;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])))
            k = k * 10 + static_cast<Key>(s[i++] - '0');
        NodeId id = static_cast<NodeId>(out.nodes.size());
        out.nodes.push_back({k, kNil, kNil});
        skip();
        if (i < s.size() && s[i] == '(') {
            ++i;
            NodeId l = child();
            skip();
            if (i >= s.size() || s[i] != ',')
                fail("expected ','");
            ++i;
            NodeId r = child();
            skip();
            if (i >= s.size() || s[i] != ')')
                fail("expected ')'");
            ++i;
            out.nodes[static_cast<std::size_t>(id)].left = l;
            out.nodes[static_cast<std::size_t>(id)].right = r;
        }
        return id;
    }
};

} // namespace

TreeShape TreeShape::parse(std::string_view text)
{
    ShapeParser p{text, 0, {}};
    p.out.root = p.node();
    p.skip();
    if (p.i != text.size())
        p.fail("trailing input");
    return std::move(p.out);
}

std::vector<Key> TreeShape::inorder_keys() const
{
    std::vector<Key> keys;
    std::vector<NodeId> stack;
    NodeId cur = root;
    while (cur != kNil || !stack.empty()) {
        while (cur != kNil) {
            stack.push_back(cur);
            cur = nodes[static_cast<std::size_t>(cur)].left;
        }
        cur = stack.back();
        stack.pop_back();
        keys.push_back(nodes[static_cast<std::size_t>(cur)].key);
        cur = nodes[static_cast<std::size_t>(cur)].right;
    }
    return keys;
}

void TreeShape::relabel(const std::vector<Key> &keys)
{
    if (keys.size() != nodes.size())
        throw vm_error(errc::malformed_shape, "shape has " + std::to_string(nodes.size()) +
                                                  " positions but " + std::to_string(keys.size()) +
                                                  " keys were given");
    for (std::size_t i = 1; i < keys.size(); ++i) {
        if (keys[i] == keys[i - 1])
            throw vm_error(errc::duplicate_keys, "duplicate key " + std::to_string(keys[i]));
        if (keys[i] < keys[i - 1])
            throw vm_error(errc::unsorted_keys, "keys not increasing");
    }
    std::vector<NodeId> stack;
    NodeId cur = root;
    std::size_t j = 0;
    while (cur != kNil || !stack.empty()) {
        while (cur != kNil) {
            stack.push_back(cur);
            cur = nodes[static_cast<std::size_t>(cur)].left;
        }
        cur = stack.back();
        stack.pop_back();
        nodes[static_cast<std::size_t>(cur)].key = keys[j++];
        cur = nodes[static_cast<std::size_t>(cur)].right;
    }
}

TreeShape left_path_shape(std::size_t n)
{
    TreeShape t;
    for (std::size_t i = 0; i < n; ++i)
        t.nodes.push_back({n - i, i + 1 < n ? static_cast<NodeId>(i + 1) : kNil, kNil});
    t.root = n ? 0 : kNil;
    return t;
}

TreeShape right_path_shape(std::size_t n)
{
    TreeShape t;
    for (std::size_t i = 0; i < n; ++i)
        t.nodes.push_back({i + 1, kNil, i + 1 < n ? static_cast<NodeId>(i + 1) : kNil});
    t.root = n ? 0 : kNil;
    return t;
}

namespace {

template <class Pick>
TreeShape split_shape(std::size_t n, Pick pick)
{
    TreeShape t;
    t.nodes.reserve(n);
    struct Frame {
        Key lo, hi;
        NodeId parent;
        bool left;
    };
    std::vector<Frame> work{{1, static_cast<Key>(n), kNil, false}};
    while (!work.empty()) {
        Frame f = work.back();
        work.pop_back();
        if (f.lo > f.hi)
            continue;
        Key k = pick(f.lo, f.hi);
        NodeId id = static_cast<NodeId>(t.nodes.size());
        t.nodes.push_back({k, kNil, kNil});
        if (f.parent == kNil)
            t.root = id;
        else if (f.left)
            t.nodes[static_cast<std::size_t>(f.parent)].left = id;
        else
            t.nodes[static_cast<std::size_t>(f.parent)].right = id;
        work.push_back({k + 1, f.hi, id, false});
        if (k > f.lo)
            work.push_back({f.lo, k - 1, id, true});
    }
    return t;
}

} // namespace

TreeShape balanced_shape(std::size_t n)
{
    return split_shape(n, [](Key lo, Key hi) { return lo + (hi - lo + 1) / 2; });
}

TreeShape random_shape(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    return split_shape(n, [&](Key lo, Key hi) {
        return std::uniform_int_distribution<Key>(lo, hi)(rng);
    });
}

// ---- TreeStore ----

TreeStore::TreeStore(const TreeShape &shape, std::size_t aug_capacity_bits)
{
    nodes_.resize(shape.size());
    std::vector<char> seen(shape.size(), 0);
    for (std::size_t i = 0; i < shape.size(); ++i) {
        const ShapeNode &s = shape.nodes[i];
        nodes_[i].key = s.key;
        nodes_[i].aug = AugPayload(aug_capacity_bits);
        for (NodeId c : {s.left, s.right}) {
            if (c == kNil)
                continue;
            if (c < 0 || static_cast<std::size_t>(c) >= shape.size() || seen[static_cast<std::size_t>(c)] ||
                static_cast<std::size_t>(c) == i)
                throw vm_error(errc::malformed_shape, "shape is not a tree");
            seen[static_cast<std::size_t>(c)] = 1;
            nodes_[static_cast<std::size_t>(c)].parent = static_cast<NodeId>(i);
        }
        nodes_[i].left = s.left;
        nodes_[i].right = s.right;
    }
    root_ = shape.root;
    if (root_ == kNil || seen[static_cast<std::size_t>(root_)])
        throw vm_error(errc::malformed_shape, "shape has no unique root");
    if (inorder_nodes().size() != nodes_.size())
        throw vm_error(errc::malformed_shape, "shape is disconnected");
    std::vector<Key> keys = inorder();
    for (std::size_t i = 1; i < keys.size(); ++i) {
        if (keys[i] == keys[i - 1])
            throw vm_error(errc::duplicate_keys, "duplicate key " + std::to_string(keys[i]));
        if (keys[i] < keys[i - 1])
            throw vm_error(errc::unsorted_keys, "keys violate symmetric order");
    }
}

bool TreeStore::is_left_child(NodeId v) const
{
    NodeId p = parent(v);
    return p != kNil && left(p) == v;
}

void TreeStore::rotate_up(NodeId v)
{
    NodeId p = parent(v);
    NodeId g = parent(p);
    TreeNode &nv = node_mut(v);
    TreeNode &np = node_mut(p);
    if (np.left == v) {
        np.left = nv.right;
        if (nv.right != kNil)
            node_mut(nv.right).parent = p;
        nv.right = p;
    } else {
        np.right = nv.left;
        if (nv.left != kNil)
            node_mut(nv.left).parent = p;
        nv.left = p;
    }
    np.parent = v;
    nv.parent = g;
    if (g == kNil)
        root_ = v;
    else if (node(g).left == p)
        node_mut(g).left = v;
    else
        node_mut(g).right = v;
}

std::string TreeStore::snapshot_shape() const
{
    // A leaf below the root prints as its bare key; a lone root as k(-,-).
    std::string out;
    struct Item {
        NodeId v;
        int stage;
    };
    std::vector<Item> stack{{root_, 0}};
    while (!stack.empty()) {
        Item &it = stack.back();
        NodeId v = it.v;
        if (v == kNil) {
            out += '-';
            stack.pop_back();
            continue;
        }
        const TreeNode &nd = node(v);
        bool leaf = nd.left == kNil && nd.right == kNil;
        if (it.stage == 0) {
            out += std::to_string(nd.key);
            if (leaf && v != root_) {
                stack.pop_back();
                continue;
            }
            out += '(';
            it.stage = 1;
            stack.push_back({nd.left, 0});
        } else if (it.stage == 1) {
            out += ',';
            it.stage = 2;
            stack.push_back({nd.right, 0});
        } else {
            out += ')';
            stack.pop_back();
        }
    }
    return out;
}

std::vector<NodeId> TreeStore::inorder_nodes() const
{
    std::vector<NodeId> out;
    out.reserve(nodes_.size());
    NodeId cur = root_;
    std::vector<NodeId> stack;
    while (cur != kNil || !stack.empty()) {
        while (cur != kNil) {
            stack.push_back(cur);
            cur = left(cur);
            if (stack.size() > nodes_.size())
                return out;
        }
        cur = stack.back();
        stack.pop_back();
        out.push_back(cur);
        if (out.size() > nodes_.size())
            return out;
        cur = right(cur);
    }
    return out;
}

std::vector<Key> TreeStore::inorder() const
{
    std::vector<Key> keys;
    for (NodeId v : inorder_nodes())
        keys.push_back(key(v));
    return keys;
}

NodeId TreeStore::find(Key k) const
{
    NodeId cur = root_;
    while (cur != kNil && key(cur) != k)
        cur = k < key(cur) ? left(cur) : right(cur);
    return cur;
}

std::size_t TreeStore::depth(NodeId v) const
{
    std::size_t d = 0;
    while (parent(v) != kNil) {
        v = parent(v);
        ++d;
    }
    return d;
}

std::size_t TreeStore::height() const
{
    std::size_t h = 0;
    std::vector<std::pair<NodeId, std::size_t>> stack{{root_, 0}};
    while (!stack.empty()) {
        auto [v, d] = stack.back();
        stack.pop_back();
        h = std::max(h, d);
        if (left(v) != kNil)
            stack.push_back({left(v), d + 1});
        if (right(v) != kNil)
            stack.push_back({right(v), d + 1});
    }
    return h;
}

bool TreeStore::check_invariants(std::string *why) const
{
    auto bad = [&](const std::string &m) {
        if (why)
            *why = m;
        return false;
    };
    if (root_ == kNil || parent(root_) != kNil)
        return bad("root has a parent");
    std::size_t parentless = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const TreeNode &nd = nodes_[i];
        if (nd.parent == kNil)
            ++parentless;
        NodeId v = static_cast<NodeId>(i);
        if (nd.left != kNil && node(nd.left).parent != v)
            return bad("left child parent link broken at key " + std::to_string(nd.key));
        if (nd.right != kNil && node(nd.right).parent != v)
            return bad("right child parent link broken at key " + std::to_string(nd.key));
        if (nd.parent != kNil && left(nd.parent) != v && right(nd.parent) != v)
            return bad("parent does not point back at key " + std::to_string(nd.key));
    }
    if (parentless != 1)
        return bad("more than one parentless node");
    std::vector<NodeId> order = inorder_nodes();
    if (order.size() != nodes_.size())
        return bad("tree is not connected");
    for (std::size_t i = 1; i < order.size(); ++i)
        if (key(order[i - 1]) >= key(order[i]))
            return bad("symmetric order violated");
    return true;
}

TreeShape TreeStore::to_shape() const
{
    TreeShape t;
    t.nodes.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        t.nodes[i] = {nodes_[i].key, nodes_[i].left, nodes_[i].right};
    t.root = root_;
    return t;
}

// ---- TreeArena ----

unsigned word_bits(std::size_t n)
{
    unsigned b = 0;
    while ((std::size_t{1} << b) < n)
        ++b;
    return std::max(1U, b);
}

std::size_t aug_capacity(std::size_t n, unsigned words)
{
    return static_cast<std::size_t>(words) * word_bits(n);
}

TreeArena::TreeArena(const TreeShape &shape, unsigned aug_words)
    : store_(shape, aug_capacity(shape.size(), aug_words)),
      finger_(store_.root()),
      cap_(aug_capacity(shape.size(), aug_words))
{
}

TreeArena TreeArena::build(const TreeShape &shape, const std::vector<Key> &keys, unsigned aug_words)
{
    TreeShape s = shape;
    s.relabel(keys);
    return TreeArena(s, aug_words);
}

bool TreeArena::legal(UnitOp op) const
{
    switch (op) {
    case UnitOp::MoveParent:
    case UnitOp::Rotate: return store_.parent(finger_) != kNil;
    case UnitOp::MoveLeft: return store_.left(finger_) != kNil;
    case UnitOp::MoveRight: return store_.right(finger_) != kNil;
    }
    return false;
}

NodeId TreeArena::apply(UnitOp op)
{
    switch (op) {
    case UnitOp::MoveParent:
        if (store_.parent(finger_) == kNil)
            throw vm_error(errc::illegal_at_root, "move to parent at the root");
        finger_ = store_.parent(finger_);
        break;
    case UnitOp::MoveLeft:
        if (store_.left(finger_) == kNil)
            throw vm_error(errc::no_left_child, "no left child");
        finger_ = store_.left(finger_);
        break;
    case UnitOp::MoveRight:
        if (store_.right(finger_) == kNil)
            throw vm_error(errc::no_right_child, "no right child");
        finger_ = store_.right(finger_);
        break;
    case UnitOp::Rotate:
        if (store_.parent(finger_) == kNil)
            throw vm_error(errc::illegal_at_root, "rotation at the root");
        store_.rotate_up(finger_);
        break;
    }
    ++meter_.unit_ops;
    if (touch_log_)
        touch_log_->push_back(store_.key(finger_));
    return finger_;
}

void TreeArena::note_bits(const AugPayload &p)
{
    peak_bits_ = std::max(peak_bits_, p.size());
}

void TreeArena::write_aug(const AugPayload &payload)
{
    AugPayload &dst = store_.node_mut(finger_).aug;
    dst.assign(payload);
    note_bits(dst);
}

std::uint64_t TreeArena::aug_get(std::size_t off, unsigned width) const
{
    return store_.node(finger_).aug.get(off, width);
}

void TreeArena::aug_set(std::size_t off, unsigned width, std::uint64_t value)
{
    AugPayload &dst = store_.node_mut(finger_).aug;
    dst.set(off, width, value);
    note_bits(dst);
}

void TreeArena::preset_aug(NodeId v, std::size_t off, unsigned width, std::uint64_t value)
{
    AugPayload &dst = store_.node_mut(v).aug;
    dst.set(off, width, value);
    note_bits(dst);
}

} // namespace mfbst
