#include "doctest.h"
#include "tendon_harness.hpp"

#include <random>

using namespace mfbst;
using mfbst::testing::TendonHarness;

TEST_CASE("tendon: grow from both ends then shrink back")
{
    TendonHarness h(60, 30, 5);
    for (int i = 0; i < 10; ++i) {
        h.add_child();
        REQUIRE(h.consistent());
        h.add_parent();
        REQUIRE(h.consistent());
    }
    CHECK(h.tendon.size() == 20);
    while (h.size() > 0) {
        NodeId want = h.expected_top();
        NodeId z = h.remove_parent();
        CHECK(z != want);
        CHECK(z == h.expected_top());
        REQUIRE(h.consistent());
        if (h.size() == 0)
            break;
        z = h.remove_child();
        CHECK(z == h.expected_bottom());
        REQUIRE(h.consistent());
    }
    CHECK(h.tendon.empty());
    CHECK_THROWS_AS(h.remove_parent(), vm_error);
}

TEST_CASE("tendon: configuration follows the bottom side and direction")
{
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        TendonHarness h(20, 10, seed);
        h.add_child();
        h.add_child();
        const TreeStore &t = h.arena->store();
        bool below = t.key(h.tendon.bottom) < t.key(h.tendon.top);
        TendonConfig c = h.tendon.config(t);
        if (h.tendon.y_side == Side::Left)
            CHECK(c == (below ? TendonConfig::T1 : TendonConfig::T2));
        else
            CHECK(c == (below ? TendonConfig::T3 : TendonConfig::T4));
        CHECK(h.consistent());
    }
}

TEST_CASE("tendon: random operations match the path oracle")
{
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        TendonHarness h(600, 300, seed);
        std::mt19937_64 rng(seed * 101);
        for (int step = 0; step < 5000; ++step) {
            int r = static_cast<int>(rng() % 4);
            if (r == 0 && h.can_add_parent())
                h.add_parent();
            else if (r == 1 && h.can_add_child())
                h.add_child();
            else if (r == 2 && h.size() > 0)
                h.remove_parent();
            else if (r == 3 && h.size() > 0)
                h.remove_child();
            std::string why;
            INFO(why);
            REQUIRE(h.consistent(&why));
        }
        CHECK(h.nav().arena().meter().unit_ops <= 20 * h.ops);
    }
}
