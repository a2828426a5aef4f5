#pragma once

#include "mfbst/combiner.hpp"

#include <string>
#include <vector>

namespace mfbst {

enum class CheckMode { Off, Final, EveryOp };

// Aug words per node.  Combinations keep buffer cells for every level in
// each node's payload, so they get a larger (still n-independent) budget.
inline constexpr unsigned kSingleAugWords = TreeArena::kDefaultAugWords;
inline constexpr unsigned kCombinedAugWords = 128;

struct RunOptions {
    std::string algo;
    TreeShape initial;
    CombinerConfig cfg;
    // 0 picks kSingleAugWords or kCombinedAugWords.
    unsigned aug_words = 0;
    CheckMode check = CheckMode::Off;
    bool per_access = false;
    // Attached to the outermost combiner, if any.
    CombinerTrace *trace = nullptr;
};

struct RunResult {
    std::string algo;
    bool combined = false;
    unsigned aug_words = 0;
    std::size_t fingers = 0;
    std::uint64_t total_ops = 0;
    std::uint64_t accesses = 0;
    std::size_t peak_aug_bits = 0;
    std::vector<std::uint64_t> per_access;
    std::size_t violations = 0;
    std::string first_violation;
    // Outermost combiner only.
    CombinerStats combiner;
    BufferStats buffers;
    std::size_t buffer_aug_bits = 0;
};

bool is_combined(const std::string &algo);

// Single algorithms run on a one-finger reference machine, whose cost is
// exactly the BST cost.  Combinations run through MfToBst, so their cost is
// also plain BST unit ops.  Exceeding the aug budget counts as a violation.
RunResult run(const RunOptions &opt, const std::vector<Key> &accesses);

} // namespace mfbst
