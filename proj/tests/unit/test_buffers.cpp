#include "doctest.h"
#include "mfbst/buffers.hpp"
#include "mfbst/multifinger.hpp"

#include <random>

using namespace mfbst;

namespace {

// Legal random op for finger f.
MfOperation random_op(const MfMachine &m, FingerId f, std::mt19937_64 &rng)
{
    NodeView v = m.view(f);
    for (;;) {
        auto u = static_cast<UnitOp>(rng() % 4);
        if (v.has(u))
            return {f, u};
    }
}

bool is_left_path(const std::string &shape, std::size_t n)
{
    return shape == TreeStore(left_path_shape(n), 0).snapshot_shape();
}

std::uint64_t cell_value(std::size_t j) { return (j * 2654435761u) & 0xfff; }

} // namespace

TEST_CASE("leftify: path costs and the 3n-3 bound")
{
    for (std::size_t n : {1, 2, 5, 64}) {
        ReferenceMachine l(left_path_shape(n), 1);
        CHECK(leftify(l, 0, [&](MfOperation o) { l.mf_apply(o); }).size() == n - 1);
        ReferenceMachine r(right_path_shape(n), 1);
        CHECK(leftify(r, 0, [&](MfOperation o) { r.mf_apply(o); }).size() == 2 * (n - 1));
        CHECK(is_left_path(r.logical_shape(), n));
    }
    std::mt19937_64 rng(11);
    for (int t = 0; t < 200; ++t) {
        std::size_t n = 2 + rng() % 300;
        ReferenceMachine m(random_shape(n, rng()), 1);
        auto ops = leftify(m, 0, [&](MfOperation o) { m.mf_apply(o); });
        CHECK(ops.size() <= 3 * n - 3);
        CHECK(m.cost() == ops.size());
        CHECK(is_left_path(m.logical_shape(), n));
    }
}

TEST_CASE("epochs: sizes, boundaries and allocation")
{
    EpochMath e(16);
    CHECK(e.size(0) == 1);
    CHECK(e.size(1) == 1);
    CHECK(e.size(2) == 2);
    CHECK(e.size(4) == 8);
    CHECK(e.size(5) == 16);
    CHECK(e.size(9) == 16);
    CHECK(e.epoch_of(0) == 0);
    CHECK(e.epoch_of(1) == 1);
    CHECK(e.epoch_of(2) == 2);
    CHECK(e.epoch_of(3) == 2);
    CHECK(e.epoch_of(4) == 3);
    CHECK(e.epoch_of(15) == 4);
    CHECK(e.epoch_of(16) == 5);
    CHECK(e.epoch_of(31) == 5);
    CHECK(e.epoch_of(32) == 6);
    CHECK(e.allocation(0) == 2);
    CHECK(e.allocation(3) == 9);
    CHECK(e.allocation(4) == 16);
}

TEST_CASE("buffer space: cells survive rotations and reallocation")
{
    for (std::uint64_t seed : {1, 2, 3}) {
        std::mt19937_64 rng(seed);
        const std::size_t n = 150;
        ReferenceMachine m(random_shape(n, seed), 4, 16);
        BufferHost host(m);
        BufferSpace space(host, host.sink(), 0, 1);
        int buf = space.add_buffer(12);
        int cur = space.add_cursor(buf, 2);
        auto churn = [&] {
            int r = static_cast<int>(rng() % 4);
            for (int i = 0; i < r; ++i)
                host.apply(random_op(m, 3, rng));
        };
        std::size_t j = 1;
        for (;;) {
            space.write_cell(cur, cell_value(j));
            churn();
            if (!space.next_cell(cur))
                break;
            ++j;
        }
        CHECK(j == n);
        CHECK(space.allocated() == n);
        CHECK(space.stats().reallocations >= 5);
        for (std::size_t k = n; k >= 1; --k) {
            REQUIRE(space.position(cur) == k);
            CHECK(space.read_cell(cur) == cell_value(k));
            churn();
            space.prev_cell(cur);
        }
    }
}

TEST_CASE("buffer space: works through the multifinger simulator")
{
    std::mt19937_64 rng(5);
    const std::size_t n = 100;
    MfToBst m(random_shape(n, 5), 4, 24);
    BufferHost host(m);
    BufferSpace space(host, host.sink(), 0, 1);
    int buf = space.add_buffer(12);
    int cur = space.add_cursor(buf, 2);
    for (std::size_t j = 1; j <= 60; ++j) {
        space.write_cell(cur, cell_value(j));
        for (int i = 0; i < 3; ++i)
            host.apply(random_op(m, 3, rng));
        REQUIRE(space.next_cell(cur));
    }
    while (space.position(cur) > 1) {
        space.prev_cell(cur);
        CHECK(space.read_cell(cur) == cell_value(space.position(cur)));
    }
    std::string why;
    CHECK_MESSAGE(m.check(&why), why);
}

TEST_CASE("op codes: undo inverts every op")
{
    std::mt19937_64 rng(9);
    for (int t = 0; t < 300; ++t) {
        ReferenceMachine m(random_shape(20, rng()), 1);
        for (int i = 0; i < 5; ++i)
            m.mf_apply(random_op(m, 0, rng));
        std::string shape = m.logical_shape();
        Key at = m.view(0).key;
        MfOperation op = random_op(m, 0, rng);
        OpCode c = encode_op(op.op, m.view(0));
        m.mf_apply(op);
        for (UnitOp u : undo_of(c))
            m.mf_apply({0, u});
        CHECK(m.logical_shape() == shape);
        CHECK(m.view(0).key == at);
        CHECK(redo_of(c) == op.op);
    }
}

TEST_CASE("history buffer: undo and redo restore snapshots")
{
    std::mt19937_64 rng(21);
    const std::size_t n = 64;
    ReferenceMachine m(random_shape(n, 21), 6, 24);
    BufferHost host(m);
    BufferSpace space(host, host.sink(), 0, 1);
    OperationHistoryBuffer ohb(space, 2, 2, 4);
    const FingerId base = 3;
    auto apply = host.sink();
    std::string start = m.logical_shape();
    std::vector<std::string> shapes{start};
    const int steps = 200;
    for (int i = 0; i < steps; ++i) {
        if (rng() % 10 == 0) {
            ohb.record_nop();
        } else {
            MfOperation op = random_op(m, base + static_cast<FingerId>(rng() % 3), rng);
            ohb.record(op.finger - base, op.op, m.view(op.finger));
            host.apply(op);
        }
        shapes.push_back(m.logical_shape());
    }
    std::string end = m.logical_shape();
    for (int i = steps; i > 0; --i) {
        ohb.undo(base, apply);
        REQUIRE(m.logical_shape() == shapes[static_cast<std::size_t>(i - 1)]);
    }
    for (FingerId f = base; f < base + 3; ++f)
        CHECK(!m.view(f).has_parent);
    for (int i = 0; i < steps; ++i)
        ohb.redo(base, apply);
    CHECK(m.logical_shape() == end);
    CHECK(ohb.head() == static_cast<std::uint64_t>(steps));
}

TEST_CASE("tree state buffer: save keeps the tree, load restores it")
{
    std::mt19937_64 rng(33);
    const std::size_t n = 128;
    ReferenceMachine m(random_shape(n, 33), 5, 16);
    BufferHost host(m);
    BufferSpace space(host, host.sink(), 0, 1);
    TreeStateBuffer tsb(space, 2, 3);
    for (int cycle = 0; cycle < 20; ++cycle) {
        std::string saved = m.logical_shape();
        tsb.save(m, host.sink());
        CHECK(m.logical_shape() == saved);
        CHECK(tsb.codes() <= 3 * n - 3);
        for (int i = 0; i < 500; ++i)
            host.apply(random_op(m, 4, rng));
        tsb.load(m, host.sink());
        CHECK(m.logical_shape() == saved);
    }
}

TEST_CASE("buffer space: full scan cost without rotations")
{
    for (std::size_t n : {128, 512}) {
        ReferenceMachine m(random_shape(n, n), 3, 16);
        BufferHost host(m);
        BufferSpace space(host, host.sink(), 0, 1);
        int cur = space.add_cursor(space.add_buffer(4), 2);
        while (space.next_cell(cur)) {
        }
        MESSAGE("n=" << n << " scan cost " << m.cost() << " = " << double(m.cost()) / n << "n");
        CHECK(m.cost() <= 16 * n);
    }
}
