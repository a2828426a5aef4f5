#pragma once

#include "mfbst/algorithms.hpp"

#include <boost/context/fiber.hpp>

#include <exception>
#include <functional>
#include <memory>

namespace mfbst {

struct CombinerConfig {
    // Phase I runs ceil(log2(d1 n)) + 2 rounds.
    double d1 = 1.0;
    // Phase II rounds are C * max(n, f(n)) steps of the running structure.
    std::uint64_t C = 64;
    std::function<std::uint64_t(std::size_t)> f;
    // Cell width in words; bounds the TSB packing.
    unsigned W = 4;
};

// Phase II access hand-off between the two structures.  The leader pulls
// fresh accesses; a structure that is behind gets the leader's current one
// and is restarted from the initial tree by the caller.
class AccessArbiter {
public:
    struct Served {
        Key key;
        std::uint64_t index;
    };

    void set(std::optional<int> ahead, Key last, std::uint64_t last_index)
    {
        ahead_ = ahead;
        last_ = last;
        last_index_ = last_index;
    }
    // pull returns the next input key and its 1-based index.
    Served next(int mu, const std::function<Served()> &pull);
    std::optional<int> ahead() const { return ahead_; }
    Key last() const { return last_; }

private:
    std::optional<int> ahead_;
    Key last_ = 0;
    std::uint64_t last_index_ = 0;
};

// What a OneTree did, for tests and the acceptance checks.
struct CombinerTrace {
    struct Phase1Round {
        int i;
        int mu;
        std::uint64_t redone;
        std::uint64_t performed;
        std::string shape_after;
    };
    struct Phase2Round {
        int mu;
        bool restarted;
        std::uint64_t steps;
    };
    struct Completion {
        int mu;
        std::uint64_t round;
        std::uint64_t access;
    };
    std::string initial_shape;
    int last_phase1_round = 0;
    std::vector<Phase1Round> phase1;
    std::vector<Phase2Round> phase2;
    // Accesses completed by each structure during Phase II, by input index.
    std::vector<Completion> completions;
};

// Ops a OneTree emitted, by purpose; buffer traffic is charged to the
// buffer being used.
struct CombinerStats {
    std::uint64_t child = 0;
    std::uint64_t access_buffer = 0;
    std::uint64_t history = 0;
    std::uint64_t tree_state = 0;
    std::uint64_t routing = 0;
    std::uint64_t restarts = 0;
    std::uint64_t phase1_ops = 0;
    std::uint64_t total() const { return child + access_buffer + history + tree_state + routing; }
};

// Interleaves two steppable algorithms on one tree.  Phase I runs doubling
// rounds that redo, extend and undo each structure's history so the tree
// is back at its initial shape between rounds.  Phase II alternates fixed
// length rounds, each resuming one structure from its saved tree state.
//
// Fingers, local to the OneTree: 0-1 buffer aux, 2-3 ASB cursors, 4-5 OHB
// cursors, 6-8 TSB_0, TSB_1, TSB_* cursors, 9 TSB worker, then A_0's
// fingers, then A_1's.
class OneTree : public SteppableAlgorithm {
public:
    static constexpr FingerId kOwnFingers = 10;

    OneTree(std::unique_ptr<SteppableAlgorithm> a0, std::unique_ptr<SteppableAlgorithm> a1,
            CombinerConfig cfg = {});
    ~OneTree() override;

    std::string name() const override;
    std::size_t fingers() const override;
    void bind(BufferHost &host, FingerId base) override;
    Step step(AccessSource &src) override;
    void restart() override;

    void set_trace(CombinerTrace *t) { trace_ = t; }
    const BufferSpace *space() const { return space_.get(); }
    const CombinerStats &stats() const { return stats_; }

private:
    class ChildSource;

    void run();
    void body();
    void phase1();
    void phase2();
    void child_step(int mu);
    void yield(Step s);
    void apply(MfOperation op);
    FingerId child_base(int mu) const;
    AccessArbiter::Served pull();
    Key serve(int mu);
    void save_fingers(int mu);
    void restore_fingers(int mu);

    std::unique_ptr<SteppableAlgorithm> a_[2];
    CombinerConfig cfg_;
    BufferHost *host_ = nullptr;
    const MfMachine *m_ = nullptr;
    FingerId base_ = 0;
    OpSink sink_;

    std::unique_ptr<BufferSpace> space_;
    std::unique_ptr<AccessSequenceBuffer> asb_;
    std::unique_ptr<OperationHistoryBuffer> ohb_[2];
    std::unique_ptr<TreeStateBuffer> tsb_[2];
    std::unique_ptr<TreeStateBuffer> tsb_star_;
    std::unique_ptr<ChildSource> child_src_[2];
    std::vector<Key> saved_fingers_[2];

    AccessArbiter arbiter_;
    int last_round_ = 0;
    int phase_ = 1;
    std::uint64_t round_ = 0;
    AccessSource *src_ = nullptr;
    std::uint64_t pulls_ = 0;
    Key current_ = 0;
    Key completed_ = 0;
    bool completion_ = false;
    bool exhausted_ = false;
    std::uint64_t serving_[2] = {0, 0};

    CombinerTrace *trace_ = nullptr;
    CombinerStats stats_;
    std::uint64_t *charge_ = nullptr;

    boost::context::fiber caller_;
    boost::context::fiber fiber_;
    bool started_ = false;
    bool finished_ = false;
    std::exception_ptr error_;
    Step out_;
};

// Combines k >= 2 algorithms pairwise in a balanced tree of OneTrees; k = 3
// gives OneTree(OneTree(A1, A2), A3).
std::unique_ptr<SteppableAlgorithm> multi_tree(std::vector<std::unique_ptr<SteppableAlgorithm>> algs,
                                               const CombinerConfig &cfg = {});

// Builds a basic algorithm by name, or a combination from "combine:A+B[+C..]".
std::unique_ptr<SteppableAlgorithm> make_algorithm(const std::string &name,
                                                   const CombinerConfig &cfg = {});

} // namespace mfbst
