#include "doctest.h"
#include "deque_harness.hpp"

#include <random>

using namespace mfbst;
using mfbst::testing::DequeHarness;

TEST_CASE("deque: empty push and pop")
{
    for (Orient o : {Orient::Min, Orient::Max}) {
        DequeHarness h(o, 20, 10);
        h.push_far();
        CHECK(h.dq.view.d == 1);
        CHECK(h.consistent());
        NodeId x = h.dq.view.root;
        CHECK(h.pop_far() == x);
        CHECK(h.dq.view.d == 0);
        CHECK(h.consistent());
        CHECK_THROWS_AS(h.dq.pop_far(h.nav()), vm_error);
    }
}

TEST_CASE("deque: push_back of 80 onto 10..70")
{
    DequeHarness h(Orient::Min, 8, 1);
    for (int i = 0; i < 7; ++i)
        h.push_root();
    h.push_root();
    std::vector<Key> want{10, 20, 30, 40, 50, 60, 70, 80};
    CHECK(h.decoded_keys() == want);
    CHECK(h.consistent());
}

TEST_CASE("deque: push then matching pop restores contents")
{
    for (Orient o : {Orient::Min, Orient::Max}) {
        DequeHarness h(o, 40, 20);
        std::mt19937_64 rng(3);
        for (int i = 0; i < 12; ++i)
            rng() % 2 ? h.push_far() : h.push_root();
        std::vector<Key> before = h.decoded_keys();
        h.push_far();
        h.pop_far();
        CHECK(h.decoded_keys() == before);
        h.push_root();
        h.pop_root();
        CHECK(h.decoded_keys() == before);
        CHECK(h.consistent());
    }
}

TEST_CASE("deque: balance examples")
{
    DequeHarness a(Orient::Min, 20, 5);
    for (int i = 0; i < 8; ++i)
        a.push_root();
    CHECK(a.dq.view.d == 8);
    CHECK(a.dq.view.v == 1);
    std::vector<Key> before = a.decoded_keys();
    a.dq.balance(a.nav());
    CHECK(a.dq.view.v == 4);
    CHECK(a.decoded_keys() == before);
    CHECK(a.consistent());

    DequeHarness b(Orient::Min, 20, 20);
    for (int i = 0; i < 9; ++i)
        b.push_far();
    CHECK(b.dq.view.d == 9);
    CHECK(b.dq.view.v == 8);
    before = b.decoded_keys();
    b.dq.balance(b.nav());
    CHECK(b.dq.view.v == 4);
    CHECK(b.decoded_keys() == before);
    CHECK(b.consistent());

    std::uint64_t rot = b.dq.stats.rotations;
    b.dq.balance(b.nav());
    CHECK(b.dq.stats.rotations == rot);

    // d = 7, v = 1: popping the far end balances first.
    DequeHarness c(Orient::Max, 20, 5);
    for (int i = 0; i < 7; ++i)
        c.push_root();
    CHECK(c.dq.view.v == 1);
    std::uint64_t balances = c.dq.stats.balances;
    c.pop_far();
    CHECK(c.dq.stats.balances == balances + 1);
    CHECK(c.consistent());
}

TEST_CASE("deque: random interleavings match the sequence oracle")
{
    for (Orient o : {Orient::Min, Orient::Max}) {
        DequeHarness h(o, 400, 200);
        std::mt19937_64 rng(o == Orient::Min ? 11 : 12);
        for (int step = 0; step < 10000; ++step) {
            int r = static_cast<int>(rng() % 4);
            if (r == 0 && h.can_push_far())
                h.push_far();
            else if (r == 1 && h.can_push_root())
                h.push_root();
            else if (r == 2 && h.dq.view.d > 0)
                h.pop_far();
            else if (r == 3 && h.dq.view.d > 0)
                h.pop_root();
            REQUIRE(h.consistent());
        }
        CHECK(h.ops > 0);
        CHECK(h.nav().arena().meter().unit_ops <= 12 * h.ops);
    }
}
