#include "doctest.h"
#include "mfbst/runner.hpp"
#include "mfbst/workload.hpp"

using namespace mfbst;

TEST_CASE("runner: single algorithms cost plain BST ops")
{
    std::vector<Key> a = generate(parse_workload("uniform", 100, 500, 3));
    RunOptions opt;
    opt.algo = "splay";
    opt.initial = balanced_shape(100);
    opt.check = CheckMode::EveryOp;
    RunResult r = run(opt, a);
    CHECK(!r.combined);
    CHECK(r.fingers == 1);
    CHECK(r.aug_words == kSingleAugWords);
    CHECK(r.accesses == a.size());
    CHECK(r.violations == 0);

    ReferenceMachine m(balanced_shape(100), 1);
    BufferHost host(m);
    auto alg = make_basic_algorithm("splay");
    CHECK(drive(*alg, host, a).total_ops == r.total_ops);
}

TEST_CASE("runner: combinations run through the simulator within budget")
{
    std::vector<Key> a = generate(parse_workload("alternating_extremes", 64, 640, 1));
    RunOptions opt;
    opt.algo = "combine:splay+mtr";
    opt.initial = random_shape(64, 2);
    opt.check = CheckMode::Final;
    opt.per_access = true;
    CombinerTrace trace;
    opt.trace = &trace;
    RunResult r = run(opt, a);
    CHECK(r.combined);
    CHECK(r.aug_words == kCombinedAugWords);
    CHECK(r.accesses == a.size());
    CHECK(r.per_access.size() == a.size());
    CHECK(r.violations == 0);
    CHECK(r.peak_aug_bits <= r.aug_words * word_bits(64));
    CHECK(r.combiner.total() > 0);
    CHECK(r.buffer_aug_bits > 0);
    CHECK(!trace.phase1.empty());
}

TEST_CASE("runner: unknown algorithm is a usage error")
{
    RunOptions opt;
    opt.algo = "combine:splay+nope";
    opt.initial = balanced_shape(8);
    try {
        run(opt, {1});
        FAIL("accepted");
    } catch (const vm_error &e) {
        CHECK(e.code() == errc::usage);
    }
}
