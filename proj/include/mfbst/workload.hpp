#pragma once

#include "mfbst/tree.hpp"

#include <string>
#include <vector>

namespace mfbst {

enum class WorkloadKind { Sequential, Uniform, Zipf, WorkingSet, AlternatingExtremes, File };

struct WorkloadSpec {
    WorkloadKind kind = WorkloadKind::Uniform;
    std::size_t n = 0;
    std::size_t m = 0;
    std::uint64_t seed = 1;
    double theta = 1.0;   // zipf exponent
    std::size_t w = 16;   // working-set size
    std::string path;     // file workload
};

// Accepts "sequential", "uniform", "zipf", "zipf(0.8)", "working_set",
// "working_set(32)", "alternating_extremes" and "file".
WorkloadSpec parse_workload(const std::string &text, std::size_t n, std::size_t m, std::uint64_t seed);
std::string workload_name(const WorkloadSpec &spec);

// m keys in [1, n], deterministic for a given spec.  A file workload reads
// one decimal key per line and ignores m.
std::vector<Key> generate(const WorkloadSpec &spec);

} // namespace mfbst
