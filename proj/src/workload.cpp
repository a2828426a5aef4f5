#include "mfbst/workload.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace mfbst {

namespace {

double parse_param(const std::string &text, std::size_t open)
{
    std::size_t close = text.find(')', open);
    if (close == std::string::npos || close + 1 != text.size())
        throw vm_error(errc::usage, "bad workload: " + text);
    std::string arg = text.substr(open + 1, close - open - 1);
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(arg, &used);
    } catch (const std::exception &) {
        used = 0;
    }
    if (used == 0 || used != arg.size())
        throw vm_error(errc::usage, "bad workload parameter: " + text);
    return v;
}

} // namespace

WorkloadSpec parse_workload(const std::string &text, std::size_t n, std::size_t m, std::uint64_t seed)
{
    WorkloadSpec s;
    s.n = n;
    s.m = m;
    s.seed = seed;
    std::size_t open = text.find('(');
    std::string head = text.substr(0, open);
    if (head == "sequential")
        s.kind = WorkloadKind::Sequential;
    else if (head == "uniform")
        s.kind = WorkloadKind::Uniform;
    else if (head == "zipf")
        s.kind = WorkloadKind::Zipf;
    else if (head == "working_set")
        s.kind = WorkloadKind::WorkingSet;
    else if (head == "alternating_extremes")
        s.kind = WorkloadKind::AlternatingExtremes;
    else if (head == "file")
        s.kind = WorkloadKind::File;
    else
        throw vm_error(errc::usage, "unknown workload: " + text);
    if (open != std::string::npos) {
        double v = parse_param(text, open);
        if (s.kind == WorkloadKind::Zipf) {
            if (v < 0)
                throw vm_error(errc::usage, "zipf exponent must be >= 0");
            s.theta = v;
        } else if (s.kind == WorkloadKind::WorkingSet) {
            if (v < 1 || v != std::floor(v))
                throw vm_error(errc::usage, "working set size must be a positive integer");
            s.w = static_cast<std::size_t>(v);
        } else {
            throw vm_error(errc::usage, "workload takes no parameter: " + text);
        }
    }
    return s;
}

std::string workload_name(const WorkloadSpec &spec)
{
    std::ostringstream o;
    switch (spec.kind) {
    case WorkloadKind::Sequential: return "sequential";
    case WorkloadKind::Uniform: return "uniform";
    case WorkloadKind::Zipf: o << "zipf(" << spec.theta << ")"; return o.str();
    case WorkloadKind::WorkingSet: o << "working_set(" << spec.w << ")"; return o.str();
    case WorkloadKind::AlternatingExtremes: return "alternating_extremes";
    case WorkloadKind::File: return "file";
    }
    return "?";
}

std::vector<Key> generate(const WorkloadSpec &spec)
{
    std::vector<Key> a;
    if (spec.kind == WorkloadKind::File) {
        std::ifstream in(spec.path);
        if (!in)
            throw vm_error(errc::usage, "cannot read workload file: " + spec.path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos)
                continue;
            std::size_t used = 0;
            unsigned long long k = 0;
            try {
                k = std::stoull(line, &used);
            } catch (const std::exception &) {
                used = 0;
            }
            if (used == 0 || line.find_first_not_of(" \t\r", used) != std::string::npos)
                throw vm_error(errc::usage, "bad key in workload file: " + line);
            if (k < 1 || k > spec.n)
                throw vm_error(errc::usage, "workload key out of range: " + line);
            a.push_back(k);
        }
        return a;
    }
    if (spec.n == 0)
        throw vm_error(errc::usage, "workload needs n >= 1");
    a.reserve(spec.m);
    std::mt19937_64 rng(spec.seed);
    const Key n = spec.n;
    switch (spec.kind) {
    case WorkloadKind::Sequential:
        for (std::size_t i = 0; i < spec.m; ++i)
            a.push_back(1 + i % n);
        break;
    case WorkloadKind::AlternatingExtremes:
        for (std::size_t i = 0; i < spec.m; ++i)
            a.push_back(i % 2 == 0 ? 1 : n);
        break;
    case WorkloadKind::Uniform: {
        std::uniform_int_distribution<Key> d(1, n);
        for (std::size_t i = 0; i < spec.m; ++i)
            a.push_back(d(rng));
        break;
    }
    case WorkloadKind::Zipf: {
        // Rank r has weight r^-theta; key r is rank r.
        std::vector<double> weights(n);
        for (Key r = 1; r <= n; ++r)
            weights[r - 1] = std::pow(double(r), -spec.theta);
        std::discrete_distribution<Key> d(weights.begin(), weights.end());
        for (std::size_t i = 0; i < spec.m; ++i)
            a.push_back(1 + d(rng));
        break;
    }
    case WorkloadKind::WorkingSet: {
        // Draws from a set of w keys; with probability 1/w a fresh uniform
        // key replaces a random member first.
        std::uniform_int_distribution<Key> key(1, n);
        std::size_t w = std::min<std::size_t>(spec.w, spec.n);
        std::vector<Key> set;
        for (std::size_t i = 0; i < w; ++i)
            set.push_back(key(rng));
        std::uniform_int_distribution<std::size_t> pick(0, w - 1);
        for (std::size_t i = 0; i < spec.m; ++i) {
            if (rng() % w == 0)
                set[pick(rng)] = key(rng);
            a.push_back(set[pick(rng)]);
        }
        break;
    }
    case WorkloadKind::File: break;
    }
    return a;
}

} // namespace mfbst
