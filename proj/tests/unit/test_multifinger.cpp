#include "doctest.h"
#include "mfbst/multifinger.hpp"

#include <random>

using namespace mfbst;

namespace {

// Random legal op for finger f on the reference machine.
MfOperation random_op(const ReferenceMachine &ref, std::mt19937_64 &rng)
{
    for (;;) {
        MfOperation op{static_cast<FingerId>(rng() % ref.finger_count()),
                       static_cast<UnitOp>(rng() % 4)};
        if (ref.legal(op))
            return op;
    }
}

struct Pair {
    Pair(const TreeShape &shape, std::size_t fingers) : ref(shape, fingers), sim(shape, fingers)
    {
        ref.set_tracing(true);
        sim.set_touch_log(&log);
    }

    void apply(MfOperation op)
    {
        Key a = ref.mf_apply(op);
        Key b = sim.mf_apply(op);
        REQUIRE(a == b);
        ends.push_back(log.size());
    }

    SimulationVerdict verdict() const
    {
        TouchTrace t;
        for (std::size_t i = 0; i < log.size(); ++i)
            t.add(i, log[i]);
        return check_simulation(ref.trace(), t, ends);
    }

    ReferenceMachine ref;
    MfToBst sim;
    std::vector<Key> log;
    std::vector<std::size_t> ends;
};

} // namespace

TEST_CASE("multifinger: single finger, single move")
{
    MfToBst m(TreeShape::parse("2(1,3)"), 1);
    CHECK(m.mf_apply({0, UnitOp::MoveLeft}) == 1);
    CHECK(m.cost() <= 4);
    CHECK(m.check());
    CHECK(m.logical_shape() == "2(1,3)");
}

TEST_CASE("multifinger: illegal ops are rejected without change")
{
    MfToBst m(TreeShape::parse("2(1,3)"), 2);
    try {
        m.mf_apply({0, UnitOp::MoveParent});
        FAIL("move to parent at the root accepted");
    } catch (const vm_error &e) {
        CHECK(e.code() == errc::illegal_at_root);
    }
    m.mf_apply({1, UnitOp::MoveLeft});
    CHECK_THROWS_AS(m.mf_apply({1, UnitOp::MoveLeft}), vm_error);
    CHECK_THROWS_AS(m.mf_apply({5, UnitOp::MoveLeft}), vm_error);
    CHECK(m.check());
}

TEST_CASE("multifinger: two fingers walk to the extremes of a balanced tree")
{
    Pair p(balanced_shape(127), 2);
    while (p.ref.view(0).has_left)
        p.apply({0, UnitOp::MoveLeft});
    while (p.ref.view(1).has_right)
        p.apply({1, UnitOp::MoveRight});
    CHECK(p.verdict().ok);
    CHECK(p.sim.check());
    CHECK(p.sim.logical_shape() == p.ref.logical_shape());
}

TEST_CASE("multifinger: random operations match the reference machine")
{
    std::mt19937_64 rng(42);
    for (std::size_t fingers : {1, 2, 3, 4}) {
        for (std::size_t n : {16, 128}) {
            Pair p(random_shape(n, rng()), fingers);
            for (int step = 0; step < 4000; ++step) {
                p.apply(random_op(p.ref, rng));
                std::string why;
                INFO("fingers " << fingers << " n " << n << " step " << step);
                REQUIRE_MESSAGE(p.sim.check(&why), why);
                for (std::size_t f = 0; f < fingers; ++f)
                    REQUIRE(p.sim.finger_node(static_cast<FingerId>(f)) ==
                            p.ref.finger_node(static_cast<FingerId>(f)));
                if (step % 97 == 0)
                    REQUIRE(p.sim.logical_shape() == p.ref.logical_shape());
            }
            SimulationVerdict v = p.verdict();
            CHECK_MESSAGE(v.ok, v.message);
            CHECK(p.sim.logical_shape() == p.ref.logical_shape());
            CHECK(p.sim.stats().slow_merges == 0);
            MESSAGE("fingers " << fingers << " n " << n << " cost/op "
                               << double(p.sim.cost()) / double(p.ref.cost()));
        }
    }
}
