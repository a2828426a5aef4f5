#pragma once

#include "mfbst/tendon.hpp"

#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace mfbst::testing {

// A logical zigzag path p_0..p_L where every node owns a one-node knuckle on
// the side away from the path.  The tendon compresses p_{a+1}..p_{b-1}
// between top p_a and bottom p_b; everything else stays uncompressed.
class TendonHarness : public SideOracle {
public:
    TendonHarness(int len, int start, std::uint64_t seed) : len_(len), a_(start), b_(start + 1)
    {
        std::mt19937_64 rng(seed);
        dirs_.resize(static_cast<std::size_t>(len_));
        for (auto &d : dirs_)
            d = rng() % 2 ? Side::Right : Side::Left;
        TreeShape s;
        for (int i = 0; i <= len_; ++i) {
            NodeId id = static_cast<NodeId>(s.nodes.size());
            NodeId kn = id + 1;
            ShapeNode node{0, kNil, kNil};
            if (i < len_) {
                NodeId next = id + 2;
                if (dirs_[static_cast<std::size_t>(i)] == Side::Right) {
                    node.right = next;
                    node.left = kn;
                } else {
                    node.left = next;
                    node.right = kn;
                }
            } else {
                node.left = kn;
            }
            s.nodes.push_back(node);
            s.nodes.push_back({0, kNil, kNil});
        }
        s.root = 0;
        std::vector<Key> keys(s.nodes.size());
        std::iota(keys.begin(), keys.end(), Key(1));
        s.relabel(keys);
        arena = std::make_unique<TreeArena>(s);
        nav_ = std::make_unique<Navigator>(*arena);
        tendon = Tendon(p(a_), p(b_), dir(a_));
    }

    NodeId p(int i) const { return static_cast<NodeId>(2 * i); }
    NodeId knuckle(int i) const { return static_cast<NodeId>(2 * i + 1); }
    Side dir(int i) const { return dirs_[static_cast<std::size_t>(i)]; }
    int index_of(NodeId v) const { return v / 2; }

    Side side_of(NodeId v) override
    {
        ++side_reads;
        return dir(index_of(v) - 1);
    }

    bool can_add_parent() const { return a_ > 0; }
    bool can_add_child() const { return b_ < len_; }
    int size() const { return b_ - a_ - 1; }

    void add_parent()
    {
        tendon.add_parent(*nav_, p(a_ - 1));
        --a_;
        ++ops;
    }
    void add_child()
    {
        tendon.add_child(*nav_, p(b_ + 1), dir(b_));
        ++b_;
        ++ops;
    }
    NodeId remove_parent()
    {
        NodeId z = tendon.remove_parent(*nav_, *this);
        ++a_;
        ++ops;
        return z;
    }
    NodeId remove_child()
    {
        NodeId z = tendon.remove_child(*nav_, *this);
        --b_;
        ++ops;
        return z;
    }
    NodeId expected_top() const { return p(a_); }
    NodeId expected_bottom() const { return p(b_); }

    bool consistent(std::string *why = nullptr)
    {
        auto bad = [&](const std::string &m) {
            if (why)
                *why = m;
            return false;
        };
        const TreeStore &t = arena->store();
        std::string reason;
        if (tendon.top != p(a_) || tendon.bottom != p(b_))
            return bad("pseudofingers drifted");
        if (!tendon.check(t, &reason))
            return bad(reason);
        std::vector<NodeId> got = tendon.decode(t, *this);
        if (static_cast<int>(got.size()) != size())
            return bad("tendon size differs from the oracle");
        for (int i = a_ + 1; i < b_; ++i)
            if (got[static_cast<std::size_t>(i - a_ - 1)] != p(i))
                return bad("decoded path differs from the oracle");
        for (int i = 0; i < len_; ++i) {
            if (i > a_ && i < b_)
                continue;
            if (t.child(p(i), dir(i)) != (i == a_ ? tendon.first_below_top(t) : p(i + 1)))
                return bad("uncompressed path broken at " + std::to_string(i));
            if (t.child(p(i), flip(dir(i))) != knuckle(i))
                return bad("uncompressed knuckle moved");
        }
        for (int i = 0; i <= len_; ++i) {
            NodeId k = knuckle(i);
            if (t.left(k) != kNil || t.right(k) != kNil)
                return bad("knuckle is no longer a leaf");
        }
        if (!t.check_invariants(&reason))
            return bad(reason);
        return true;
    }

    Navigator &nav() { return *nav_; }

    std::unique_ptr<TreeArena> arena;
    Tendon tendon;
    std::uint64_t ops = 0;
    std::uint64_t side_reads = 0;

private:
    int len_;
    int a_;
    int b_;
    std::vector<Side> dirs_;
    std::unique_ptr<Navigator> nav_;
};

} // namespace mfbst::testing
