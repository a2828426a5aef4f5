#include "mfbst/multifinger.hpp"
#include "mfbst/runner.hpp"
#include "mfbst/workload.hpp"

#include "CLI11.hpp"
#include "deque_harness.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

using namespace mfbst;

namespace {

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kUsage = 2;

std::vector<std::string> split_list(const std::string &s)
{
    // Commas inside parentheses belong to the item.
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    for (char c : s) {
        if (c == ',' && depth == 0) {
            out.push_back(cur);
            cur.clear();
            continue;
        }
        depth += c == '(' ? 1 : c == ')' ? -1 : 0;
        cur += c;
    }
    out.push_back(cur);
    for (const auto &x : out)
        if (x.empty())
            throw vm_error(errc::usage, "empty item in list: " + s);
    return out;
}

std::uint64_t parse_u64(const std::string &s, const std::string &what)
{
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(s, &used);
    } catch (const std::exception &) {
        used = 0;
    }
    if (used == 0 || used != s.size() || s[0] == '-')
        throw vm_error(errc::usage, "bad " + what + ": " + s);
    return v;
}

struct Config {
    CombinerConfig cfg;
    unsigned aug_words = 0;
};

Config parse_config(const std::vector<std::string> &kvs)
{
    Config c;
    for (const auto &kv : kvs) {
        std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw vm_error(errc::usage, "config wants key=value: " + kv);
        std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
        if (k == "d1") {
            std::size_t used = 0;
            double d = 0;
            try {
                d = std::stod(v, &used);
            } catch (const std::exception &) {
                used = 0;
            }
            if (used == 0 || used != v.size() || !(d > 0))
                throw vm_error(errc::usage, "bad d1: " + v);
            c.cfg.d1 = d;
        } else if (k == "C") {
            c.cfg.C = parse_u64(v, "C");
            if (c.cfg.C == 0)
                throw vm_error(errc::usage, "C must be positive");
        } else if (k == "B") {
            std::uint64_t b = parse_u64(v, "B");
            if (b == 0 || b > 4096)
                throw vm_error(errc::usage, "B must be in 1..4096");
            c.aug_words = static_cast<unsigned>(b);
        } else if (k == "W") {
            std::uint64_t w = parse_u64(v, "W");
            if (w == 0 || w > 64)
                throw vm_error(errc::usage, "W must be in 1..64");
            c.cfg.W = static_cast<unsigned>(w);
        } else {
            throw vm_error(errc::usage, "unknown config key: " + k);
        }
    }
    return c;
}

CheckMode parse_check(const std::string &s)
{
    if (s == "off")
        return CheckMode::Off;
    if (s == "final")
        return CheckMode::Final;
    if (s == "every-op")
        return CheckMode::EveryOp;
    throw vm_error(errc::usage, "bad --check-invariants: " + s);
}

TreeShape read_shape(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw vm_error(errc::usage, "cannot read initial tree: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
        text.pop_back();
    return TreeShape::parse(text);
}

struct RunArgs {
    std::string algo = "splay";
    std::string workload = "uniform";
    std::string n;
    std::string m;
    std::string seed = "1";
    std::string initial_tree;
    std::string workload_file;
    std::string csv;
    std::string check = "off";
    std::vector<std::string> config;
    bool dump_buffers = false;
    unsigned jobs = 1;
};

struct Job {
    std::string algo;
    WorkloadSpec spec;
    RunResult result;
    std::string error;
};

void dump(std::ostream &o, const Job &j)
{
    const RunResult &r = j.result;
    o << "# " << r.algo << " " << workload_name(j.spec) << " n=" << j.spec.n << "\n";
    o << "#   fingers " << r.fingers << ", aug budget " << r.aug_words << " words ("
      << r.aug_words * word_bits(j.spec.n) << " bits), peak " << r.peak_aug_bits << " bits\n";
    if (!r.combined)
        return;
    const CombinerStats &c = r.combiner;
    o << "#   ops: child " << c.child << ", access buffer " << c.access_buffer << ", history "
      << c.history << ", tree state " << c.tree_state << ", routing " << c.routing << ", phase I "
      << c.phase1_ops << ", restarts " << c.restarts << "\n";
    const BufferStats &b = r.buffers;
    o << "#   buffers: " << r.buffer_aug_bits << " bits per node, reallocations " << b.reallocations
      << " (" << b.realloc_ops << " ops), cell moves " << b.cell_moves << ", search ops "
      << b.search_ops << "\n";
}

int cmd_run(const RunArgs &a)
{
    Config conf = parse_config(a.config);
    CheckMode check = parse_check(a.check);
    std::optional<TreeShape> shape;
    if (!a.initial_tree.empty()) {
        shape = read_shape(a.initial_tree);
        std::vector<Key> keys = shape->inorder_keys();
        for (std::size_t i = 0; i < keys.size(); ++i)
            if (keys[i] != i + 1)
                throw vm_error(errc::usage, "initial tree keys must be 1..n");
    }

    std::vector<std::size_t> ns;
    if (a.n.empty())
        ns.push_back(shape ? shape->size() : 1024);
    else
        for (const auto &s : split_list(a.n))
            ns.push_back(static_cast<std::size_t>(parse_u64(s, "n")));
    std::vector<std::uint64_t> seeds;
    for (const auto &s : split_list(a.seed))
        seeds.push_back(parse_u64(s, "seed"));

    std::vector<Job> jobs;
    for (const auto &algo : split_list(a.algo)) {
        make_algorithm(algo, conf.cfg);
        for (const auto &w : split_list(a.workload))
            for (std::size_t n : ns) {
                if (n == 0)
                    throw vm_error(errc::usage, "n must be positive");
                if (shape && shape->size() != n)
                    throw vm_error(errc::usage, "--n does not match the initial tree");
                std::size_t m = a.m.empty() ? 10 * n : static_cast<std::size_t>(parse_u64(a.m, "m"));
                for (std::uint64_t seed : seeds) {
                    Job j;
                    j.algo = algo;
                    j.spec = parse_workload(w, n, m, seed);
                    if (j.spec.kind == WorkloadKind::File) {
                        if (a.workload_file.empty())
                            throw vm_error(errc::usage, "file workload needs --workload-file");
                        j.spec.path = a.workload_file;
                    }
                    jobs.push_back(std::move(j));
                }
            }
    }

    auto work = [&](Job &j) {
        try {
            std::vector<Key> keys = generate(j.spec);
            if (j.spec.kind == WorkloadKind::File)
                j.spec.m = keys.size();
            RunOptions opt;
            opt.algo = j.algo;
            opt.initial = shape ? *shape : balanced_shape(j.spec.n);
            opt.cfg = conf.cfg;
            opt.aug_words = conf.aug_words;
            opt.check = check;
            j.result = run(opt, keys);
        } catch (const std::exception &e) {
            j.error = e.what();
        }
    };
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < jobs.size();)
            work(jobs[i]);
    };
    unsigned threads = std::max(1u, std::min<unsigned>(a.jobs, static_cast<unsigned>(jobs.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto &t : pool)
        t.join();

    std::ofstream file;
    if (!a.csv.empty()) {
        file.open(a.csv);
        if (!file)
            throw vm_error(errc::usage, "cannot write " + a.csv);
    }
    std::ostream &csv = a.csv.empty() ? std::cout : file;
    csv << "algo,workload,n,m,seed,total_ops,ops_per_access,peak_aug_bits\n";
    int status = kOk;
    for (const Job &j : jobs) {
        if (!j.error.empty()) {
            std::cerr << "error: " << j.algo << " " << workload_name(j.spec) << ": " << j.error << "\n";
            status = kViolation;
            continue;
        }
        const RunResult &r = j.result;
        double per = j.spec.m ? double(r.total_ops) / double(j.spec.m) : 0.0;
        std::ostringstream row;
        row.setf(std::ios::fixed);
        row.precision(4);
        row << r.algo << "," << workload_name(j.spec) << "," << j.spec.n << "," << j.spec.m << ","
            << j.spec.seed << "," << r.total_ops << "," << per << "," << r.peak_aug_bits << "\n";
        csv << row.str();
        if (!a.csv.empty())
            std::cout << r.algo << " " << workload_name(j.spec) << " n=" << j.spec.n << " m=" << j.spec.m
                      << " seed=" << j.spec.seed << ": " << r.total_ops << " ops, " << per << " per access, peak aug " << r.peak_aug_bits << " bits\n";
        if (a.dump_buffers)
            dump(std::cout, j);
        if (r.violations) {
            std::cerr << "invariant violation: " << r.algo << " " << workload_name(j.spec) << " n=" << j.spec.n
                      << ": " << r.first_violation << " (" << r.violations << " total)\n";
            status = kViolation;
        }
    }
    return status;
}

struct VerifyArgs {
    std::string suite = "all";
    std::string n = "64,256";
    std::uint64_t seed = 1;
};

bool verify_deque(std::size_t n, std::mt19937_64 &rng, std::ostream &log)
{
    for (Orient o : {Orient::Min, Orient::Max}) {
        int len = static_cast<int>(std::max<std::size_t>(n, 8));
        testing::DequeHarness h(o, len, len / 2);
        for (std::size_t step = 0; step < 20 * n; ++step) {
            int r = static_cast<int>(rng() % 4);
            if (r == 0 && h.can_push_far())
                h.push_far();
            else if (r == 1 && h.can_push_root())
                h.push_root();
            else if (r == 2 && h.dq.view.d > 0)
                h.pop_far();
            else if (r == 3 && h.dq.view.d > 0)
                h.pop_root();
            std::string why;
            if (!h.consistent(&why)) {
                log << "  deque step " << step << ": " << why << "\n";
                return false;
            }
        }
        if (h.nav().arena().meter().unit_ops > 12 * h.ops) {
            log << "  deque cost " << h.nav().arena().meter().unit_ops << " over 12 per op\n";
            return false;
        }
    }
    return true;
}

bool verify_mf(std::size_t n, std::mt19937_64 &rng, std::ostream &log)
{
    for (std::size_t fingers = 1; fingers <= 4; ++fingers) {
        TreeShape shape = random_shape(n, rng());
        ReferenceMachine ref(shape, fingers);
        MfToBst sim(shape, fingers);
        ref.set_tracing(true);
        std::vector<Key> touched;
        std::vector<std::size_t> ends;
        sim.set_touch_log(&touched);
        for (std::size_t step = 0; step < 20 * n; ++step) {
            MfOperation op;
            do
                op = {static_cast<FingerId>(rng() % fingers), static_cast<UnitOp>(rng() % 4)};
            while (!ref.legal(op));
            if (ref.mf_apply(op) != sim.mf_apply(op)) {
                log << "  mf step " << step << ": touched keys differ\n";
                return false;
            }
            ends.push_back(touched.size());
            std::string why;
            if (!sim.check(&why)) {
                log << "  mf step " << step << ": " << why << "\n";
                return false;
            }
        }
        TouchTrace t;
        for (std::size_t i = 0; i < touched.size(); ++i)
            t.add(i, touched[i]);
        SimulationVerdict v = check_simulation(ref.trace(), t, ends);
        if (!v.ok || sim.logical_shape() != ref.logical_shape()) {
            log << "  mf fingers " << fingers << ": " << (v.ok ? "final shape differs" : v.message) << "\n";
            return false;
        }
    }
    return true;
}

bool verify_leftify(std::size_t n, std::mt19937_64 &rng, std::ostream &log)
{
    for (int trial = 0; trial < 20; ++trial) {
        ReferenceMachine m(random_shape(n, rng()), 1);
        std::size_t ops = leftify(m, 0, [&](MfOperation o) { m.mf_apply(o); }).size();
        if (n > 0 && ops > 3 * n - 3) {
            log << "  leftify took " << ops << " ops on " << n << " nodes\n";
            return false;
        }
        if (m.logical_shape() != TreeStore(left_path_shape(n), 0).snapshot_shape()) {
            log << "  leftify did not leave a left path\n";
            return false;
        }
    }
    return true;
}

int cmd_verify(const VerifyArgs &a)
{
    using Suite = bool (*)(std::size_t, std::mt19937_64 &, std::ostream &);
    std::vector<std::pair<std::string, Suite>> suites = {
        {"deque", verify_deque}, {"mf", verify_mf}, {"leftify", verify_leftify}};
    if (a.suite != "all" && std::none_of(suites.begin(), suites.end(), [&](auto &s) { return s.first == a.suite; }))
        throw vm_error(errc::usage, "unknown suite: " + a.suite);
    std::vector<std::size_t> ns;
    for (const auto &s : split_list(a.n)) {
        ns.push_back(static_cast<std::size_t>(parse_u64(s, "n")));
        if (ns.back() < 2)
            throw vm_error(errc::usage, "verify needs n >= 2");
    }
    bool all = true;
    for (const auto &[name, fn] : suites) {
        if (a.suite != "all" && a.suite != name)
            continue;
        for (std::size_t n : ns) {
            std::mt19937_64 rng(a.seed * 1000003 + n);
            std::ostringstream log;
            bool ok = fn(n, rng, log);
            std::cout << (ok ? "pass " : "FAIL ") << name << " n=" << n << "\n" << log.str();
            all &= ok;
        }
    }
    return all ? kOk : kViolation;
}

struct ReplayArgs {
    std::string trace;
    std::size_t n = 0;
    std::size_t fingers = 0;
    std::string initial_tree;
    std::string check = "final";
};

int cmd_replay(const ReplayArgs &a)
{
    CheckMode check = parse_check(a.check);
    std::ifstream in(a.trace);
    if (!in)
        throw vm_error(errc::usage, "cannot read trace: " + a.trace);
    std::vector<MfOperation> ops = parse_trace(in);
    TreeShape shape;
    if (!a.initial_tree.empty()) {
        shape = read_shape(a.initial_tree);
        if (a.n && a.n != shape.size())
            throw vm_error(errc::usage, "--n does not match the initial tree");
    } else {
        if (a.n == 0)
            throw vm_error(errc::usage, "replay needs --n or --initial-tree");
        shape = balanced_shape(a.n);
    }
    std::size_t fingers = a.fingers;
    for (const MfOperation &op : ops)
        fingers = std::max(fingers, static_cast<std::size_t>(op.finger) + 1);
    if (fingers == 0)
        fingers = 1;
    ReferenceMachine ref(shape, fingers);
    MfToBst sim(shape, fingers);
    for (std::size_t i = 0; i < ops.size(); ++i) {
        if (!ref.legal(ops[i]))
            throw vm_error(errc::usage, "trace op " + std::to_string(i + 1) + " is illegal");
        ref.mf_apply(ops[i]);
        sim.mf_apply(ops[i]);
        std::string why;
        if (check == CheckMode::EveryOp && !sim.check(&why)) {
            std::cerr << "invariant violation after op " << i + 1 << ": " << why << "\n";
            return kViolation;
        }
    }
    std::string why;
    bool ok = sim.logical_shape() == ref.logical_shape();
    if (!ok)
        why = "simulated tree differs from the reference";
    if (ok && check != CheckMode::Off && !sim.check(&why))
        ok = false;
    std::cout << "ops " << ops.size() << ", fingers " << fingers << ", simulated unit ops " << sim.cost();
    if (!ops.empty())
        std::cout << " (" << double(sim.cost()) / double(ops.size()) << " per op)";
    std::cout << "\n";
    if (!ok) {
        std::cerr << "invariant violation: " << why << "\n";
        return kViolation;
    }
    return kOk;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Multifinger BST simulator and algorithm combiner"};
    app.require_subcommand(1);

    RunArgs ra;
    auto *run = app.add_subcommand("run", "run algorithms on generated workloads and report costs");
    run->add_option("algo,--algo", ra.algo, "splay, mtr, balanced or combine:A+B[+C..]; comma list")
        ->capture_default_str();
    run->add_option("workload,--workload", ra.workload,
                    "sequential, uniform, zipf(theta), working_set(w), alternating_extremes, file; comma list")
        ->capture_default_str();
    run->add_option("--n", ra.n, "key count; comma list (default 1024, or the initial tree's size)");
    run->add_option("--m", ra.m, "access count (default 10n)");
    run->add_option("--seed", ra.seed, "seed; comma list")->capture_default_str();
    run->add_option("--initial-tree", ra.initial_tree, "file with the initial tree as key(left,right) text");
    run->add_option("--workload-file", ra.workload_file, "keys for the file workload, one per line");
    run->add_option("--csv", ra.csv, "write CSV rows here instead of stdout");
    run->add_option("--check-invariants", ra.check, "off, final or every-op")->capture_default_str();
    run->add_option("--config", ra.config, "d1=, C=, B= (aug words per node), W= (cell words)");
    run->add_flag("--dump-buffers", ra.dump_buffers, "print combiner and buffer statistics");
    run->add_option("--jobs", ra.jobs, "worker threads")->capture_default_str();

    VerifyArgs va;
    auto *verify = app.add_subcommand("verify", "differential and invariant suites");
    verify->add_option("--suite", va.suite, "all, deque, mf or leftify")->capture_default_str();
    verify->add_option("--n", va.n, "sizes; comma list")->capture_default_str();
    verify->add_option("--seed", va.seed)->capture_default_str();

    ReplayArgs pa;
    auto *replay = app.add_subcommand("replay", "replay an MfOperation trace through the simulator");
    replay->add_option("trace", pa.trace, "trace file: one `finger op` pair per line, op in P L R T")->required();
    replay->add_option("--n", pa.n, "key count of a balanced initial tree");
    replay->add_option("--fingers", pa.fingers, "finger count (default: from the trace)");
    replay->add_option("--initial-tree", pa.initial_tree, "file with the initial tree");
    replay->add_option("--check-invariants", pa.check, "off, final or every-op")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kUsage;
    }
    try {
        if (run->parsed())
            return cmd_run(ra);
        if (verify->parsed())
            return cmd_verify(va);
        return cmd_replay(pa);
    } catch (const vm_error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == errc::usage || e.code() == errc::malformed_shape || e.code() == errc::duplicate_keys ||
                       e.code() == errc::unsorted_keys
                   ? kUsage
                   : kViolation;
    }
}
