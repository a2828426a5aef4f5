#include "doctest.h"
#include "mfbst/algorithms.hpp"

#include <cmath>
#include <map>
#include <random>

using namespace mfbst;

namespace {

// Textbook pointer tree, independent of TreeStore, for shape oracles.
struct PlainTree {
    explicit PlainTree(const TreeStore &t)
    {
        for (std::size_t i = 0; i < t.size(); ++i) {
            NodeId v = static_cast<NodeId>(i);
            Key k = t.key(v);
            parent[k] = t.parent(v) == kNil ? 0 : t.key(t.parent(v));
            left[k] = t.left(v) == kNil ? 0 : t.key(t.left(v));
            right[k] = t.right(v) == kNil ? 0 : t.key(t.right(v));
        }
    }

    void rotate(Key x)
    {
        Key p = parent[x], g = parent[p];
        if (left[p] == x) {
            left[p] = right[x];
            if (right[x])
                parent[right[x]] = p;
            right[x] = p;
        } else {
            right[p] = left[x];
            if (left[x])
                parent[left[x]] = p;
            left[x] = p;
        }
        parent[p] = x;
        parent[x] = g;
        if (g)
            (left[g] == p ? left[g] : right[g]) = x;
    }

    bool is_left(Key x) const { return left.at(parent.at(x)) == x; }

    void splay(Key x)
    {
        while (parent[x]) {
            Key p = parent[x];
            if (!parent[p])
                rotate(x);
            else if (is_left(x) == is_left(p)) {
                rotate(p);
                rotate(x);
            } else {
                rotate(x);
                rotate(x);
            }
        }
    }

    void to_root(Key x)
    {
        while (parent[x])
            rotate(x);
    }

    std::map<Key, Key> parent, left, right;
};

std::map<Key, Key> parents_of(const TreeStore &t) { return PlainTree(t).parent; }

std::vector<Key> uniform(std::size_t n, std::size_t m, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<Key> a(m);
    for (Key &k : a)
        k = 1 + rng() % n;
    return a;
}

RunReport standalone(SteppableAlgorithm &alg, const TreeShape &shape, const std::vector<Key> &a,
                     ReferenceMachine **out = nullptr)
{
    static std::unique_ptr<ReferenceMachine> keep;
    keep = std::make_unique<ReferenceMachine>(shape, 1);
    BufferHost host(*keep);
    RunReport r = drive(alg, host, a, true);
    if (out)
        *out = keep.get();
    return r;
}

} // namespace

TEST_CASE("splay: shapes match the textbook splay")
{
    for (std::uint64_t seed : {1, 2, 3, 4}) {
        TreeShape shape = random_shape(100, seed);
        std::vector<Key> a = uniform(100, 300, seed);
        SplayAlgorithm alg;
        ReferenceMachine *m = nullptr;
        RunReport r = standalone(alg, shape, a, &m);
        PlainTree oracle(TreeStore(shape, 0));
        for (Key k : a)
            oracle.splay(k);
        CHECK(r.accesses == a.size());
        CHECK(parents_of(m->tree()) == oracle.parent);
        CHECK(m->view(0).key == a.back());
    }
}

TEST_CASE("splay: deepest node of a right path")
{
    TreeShape shape = right_path_shape(9);
    SplayAlgorithm alg;
    ReferenceMachine *m = nullptr;
    standalone(alg, shape, {9}, &m);
    PlainTree oracle(TreeStore(shape, 0));
    oracle.splay(9);
    CHECK(parents_of(m->tree()) == oracle.parent);
    CHECK(m->logical_shape() == "9(2(1,4(3,6(5,8(7,-)))),-)");
}

TEST_CASE("splay: root access costs nothing")
{
    SplayAlgorithm alg;
    RunReport r = standalone(alg, balanced_shape(15), {8, 8});
    CHECK(r.total_ops == 0);
}

TEST_CASE("splay: sequential pass is linear")
{
    double per[2];
    int i = 0;
    for (std::size_t n : {256, 1024}) {
        std::vector<Key> a(n);
        for (std::size_t k = 0; k < n; ++k)
            a[k] = k + 1;
        SplayAlgorithm alg;
        RunReport r = standalone(alg, left_path_shape(n), a);
        per[i++] = double(r.total_ops) / double(n);
    }
    MESSAGE("sequential splay ops/access " << per[0] << " " << per[1]);
    CHECK(per[1] / per[0] <= 1.5);
}

TEST_CASE("mtr: shapes match repeated rotation to the root")
{
    for (std::uint64_t seed : {5, 6}) {
        TreeShape shape = random_shape(80, seed);
        std::vector<Key> a = uniform(80, 200, seed);
        MoveToRootAlgorithm alg;
        ReferenceMachine *m = nullptr;
        standalone(alg, shape, a, &m);
        PlainTree oracle(TreeStore(shape, 0));
        for (Key k : a)
            oracle.to_root(k);
        CHECK(parents_of(m->tree()) == oracle.parent);
    }
}

TEST_CASE("mtr: alternating extremes on a path")
{
    // After the first two accesses the extremes sit at the root and its
    // child, so later accesses are constant cost.
    const std::size_t n = 200;
    std::vector<Key> a;
    for (int i = 0; i < 20; ++i) {
        a.push_back(1);
        a.push_back(n);
    }
    MoveToRootAlgorithm alg;
    RunReport r = standalone(alg, left_path_shape(n), a);
    CHECK(r.per_access[0] == 2 * (n - 1));
    for (std::size_t i = 2; i < r.per_access.size(); ++i)
        CHECK(r.per_access[i] == 2);
}

TEST_CASE("balanced: rebuild gives a perfectly balanced tree")
{
    for (std::size_t n : {1, 2, 7, 100, 255, 256, 1000}) {
        StaticBalancedAlgorithm alg;
        ReferenceMachine *m = nullptr;
        RunReport r = standalone(alg, random_shape(n, n), {1}, &m);
        std::size_t h = static_cast<std::size_t>(std::ceil(std::log2(double(n) + 1)));
        CHECK(m->tree().height() + 1 == h);
        CHECK(m->tree().check_invariants());
        CHECK(r.total_ops <= 12 * n);
    }
}

TEST_CASE("balanced: access cost after the rebuild")
{
    {
        StaticBalancedAlgorithm alg;
        RunReport r = standalone(alg, balanced_shape(7), {4, 1, 7, 3});
        for (std::size_t i = 1; i < r.per_access.size(); ++i)
            CHECK(r.per_access[i] <= 2 * 3);
    }
    const std::size_t n = 1024;
    std::vector<Key> a = uniform(n, 10 * n, 8);
    StaticBalancedAlgorithm alg;
    RunReport r = standalone(alg, random_shape(n, 8), a);
    double mean = 0;
    for (std::size_t i = 1; i < r.per_access.size(); ++i)
        mean += double(r.per_access[i]);
    mean /= double(r.per_access.size() - 1);
    MESSAGE("balanced uniform mean " << mean);
    CHECK(mean <= 2 * 10 + 2);
}

TEST_CASE("algorithms: resuming after save, scramble and load")
{
    std::mt19937_64 rng(77);
    for (const char *name : {"splay", "mtr", "balanced"}) {
        for (int trial = 0; trial < 5; ++trial) {
            const std::size_t n = 60;
            TreeShape shape = random_shape(n, rng());
            std::vector<Key> a = uniform(n, 40, rng());
            std::size_t cut = 1 + rng() % 150;

            auto run = [&](bool interrupt) {
                ReferenceMachine m(shape, 6, 24);
                BufferHost host(m);
                BufferSpace space(host, host.sink(), 1, 2);
                TreeStateBuffer tsb(space, 3, 4);
                auto alg = make_basic_algorithm(name);
                alg->bind(host, 0);
                VectorSource src(a);
                std::vector<Step> out;
                std::mt19937_64 scramble(5);
                try {
                    for (std::size_t i = 0;; ++i) {
                        if (interrupt && i == cut) {
                            tsb.save(m, host.sink());
                            for (int j = 0; j < 300; ++j) {
                                NodeView v = m.view(5);
                                auto u = static_cast<UnitOp>(scramble() % 4);
                                if (v.has(u))
                                    host.apply({5, u});
                            }
                            tsb.load(m, host.sink());
                        }
                        Step s = alg->step(src);
                        if (i >= cut)
                            out.push_back(s);
                        if (s.kind == Step::Kind::Op)
                            host.apply(s.op);
                    }
                } catch (const vm_error &e) {
                    REQUIRE(e.code() == errc::input_exhausted);
                }
                return out;
            };
            std::vector<Step> plain = run(false), resumed = run(true);
            REQUIRE(plain.size() == resumed.size());
            for (std::size_t i = 0; i < plain.size(); ++i) {
                CHECK(plain[i].kind == resumed[i].kind);
                CHECK(plain[i].op == resumed[i].op);
                CHECK(plain[i].key == resumed[i].key);
            }
        }
    }
}
