#include "doctest.h"
#include "mfbst/workload.hpp"

#include <cstdio>
#include <fstream>
#include <map>

using namespace mfbst;

TEST_CASE("workload: fixed patterns")
{
    CHECK(generate(parse_workload("sequential", 4, 8, 1)) == std::vector<Key>{1, 2, 3, 4, 1, 2, 3, 4});
    CHECK(generate(parse_workload("alternating_extremes", 4, 4, 1)) == std::vector<Key>{1, 4, 1, 4});
}

TEST_CASE("workload: random kinds stay in range and repeat per seed")
{
    for (const char *w : {"uniform", "zipf(0.8)", "zipf", "working_set(8)", "working_set"}) {
        auto a = generate(parse_workload(w, 100, 2000, 7));
        CHECK(a == generate(parse_workload(w, 100, 2000, 7)));
        CHECK(a != generate(parse_workload(w, 100, 2000, 8)));
        CHECK(a.size() == 2000);
        for (Key k : a) {
            REQUIRE(k >= 1);
            REQUIRE(k <= 100);
        }
    }
}

TEST_CASE("workload: zipf with exponent 0 is uniform")
{
    const std::size_t n = 10, m = 100000;
    std::map<Key, std::size_t> count;
    for (Key k : generate(parse_workload("zipf(0)", n, m, 3)))
        ++count[k];
    CHECK(count.size() == n);
    for (auto [k, c] : count)
        CHECK(std::abs(double(c) - double(m) / n) < 0.05 * double(m) / n);
}

TEST_CASE("workload: zipf favours small ranks")
{
    std::map<Key, std::size_t> count;
    for (Key k : generate(parse_workload("zipf(1.2)", 1000, 50000, 3)))
        ++count[k];
    CHECK(count[1] > count[2]);
    CHECK(count[2] > count[50]);
}

TEST_CASE("workload: working set touches few distinct keys per window")
{
    auto a = generate(parse_workload("working_set(4)", 1000, 400, 5));
    std::map<Key, int> seen;
    for (std::size_t i = 0; i < 40; ++i)
        ++seen[a[i]];
    CHECK(seen.size() <= 4 + 10);
}

TEST_CASE("workload: file input and bad specs")
{
    std::string path = "workload_test_keys.txt";
    {
        std::ofstream out(path);
        out << "3\n1\n\n2\n";
    }
    WorkloadSpec s = parse_workload("file", 3, 0, 1);
    s.path = path;
    CHECK(generate(s) == std::vector<Key>{3, 1, 2});
    s.n = 2;
    CHECK_THROWS_AS(generate(s), vm_error);
    std::remove(path.c_str());
    CHECK_THROWS_AS(parse_workload("pareto", 4, 4, 1), vm_error);
    CHECK_THROWS_AS(parse_workload("zipf(x)", 4, 4, 1), vm_error);
    CHECK_THROWS_AS(parse_workload("working_set(0)", 4, 4, 1), vm_error);
    CHECK_THROWS_AS(parse_workload("uniform(3)", 4, 4, 1), vm_error);
}
