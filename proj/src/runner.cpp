#include "mfbst/runner.hpp"

#include "mfbst/multifinger.hpp"

#include <algorithm>

namespace mfbst {

bool is_combined(const std::string &algo) { return algo.rfind("combine:", 0) == 0; }

namespace {

bool sorted_keys(const MfMachine &m, std::size_t n)
{
    std::vector<Key> keys = m.logical_inorder();
    return keys.size() == n && std::is_sorted(keys.begin(), keys.end()) &&
           std::adjacent_find(keys.begin(), keys.end()) == keys.end();
}

} // namespace

RunResult run(const RunOptions &opt, const std::vector<Key> &accesses)
{
    RunResult r;
    r.algo = opt.algo;
    r.combined = is_combined(opt.algo);
    r.aug_words = opt.aug_words ? opt.aug_words : r.combined ? kCombinedAugWords : kSingleAugWords;
    auto alg = make_algorithm(opt.algo, opt.cfg);
    r.fingers = alg->fingers();
    OneTree *top = dynamic_cast<OneTree *>(alg.get());
    if (top && opt.trace)
        top->set_trace(opt.trace);

    const std::size_t n = opt.initial.size();
    std::unique_ptr<MfMachine> machine;
    MfToBst *sim = nullptr;
    ReferenceMachine *ref = nullptr;
    if (r.combined) {
        auto m = std::make_unique<MfToBst>(opt.initial, r.fingers, r.aug_words);
        sim = m.get();
        machine = std::move(m);
    } else {
        auto m = std::make_unique<ReferenceMachine>(opt.initial, r.fingers, r.aug_words);
        ref = m.get();
        machine = std::move(m);
    }

    auto check = [&] {
        std::string why;
        bool ok = sim ? sim->check(&why) : ref->tree().check_invariants(&why);
        if (ok && !sorted_keys(*machine, n)) {
            ok = false;
            why = "symmetric order broken";
        }
        if (!ok) {
            if (r.violations++ == 0)
                r.first_violation = why;
        }
    };

    BufferHost host(*machine);
    std::function<void()> after;
    if (opt.check == CheckMode::EveryOp)
        after = check;
    try {
        RunReport rep = drive(*alg, host, accesses, opt.per_access, after);
        r.accesses = rep.accesses;
        r.per_access = std::move(rep.per_access);
    } catch (const vm_error &e) {
        if (e.code() != errc::budget_exceeded)
            throw;
        ++r.violations;
        if (r.first_violation.empty())
            r.first_violation = std::string("aug budget exceeded: ") + e.what();
    }
    if (opt.check != CheckMode::Off)
        check();
    r.total_ops = machine->cost();
    r.peak_aug_bits = machine->peak_aug_bits();
    if (top) {
        r.combiner = top->stats();
        if (top->space()) {
            r.buffers = top->space()->stats();
            r.buffer_aug_bits = top->space()->aug_bits();
        }
    }
    return r;
}

} // namespace mfbst
