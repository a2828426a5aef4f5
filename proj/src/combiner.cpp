#include "mfbst/combiner.hpp"

#include <boost/context/fixedsize_stack.hpp>

#include <algorithm>
#include <bit>
#include <cmath>

namespace mfbst {

namespace ctx = boost::context;

namespace {

constexpr std::size_t kFiberStack = 1 << 20;

unsigned bits_for(std::uint64_t v) { return std::max(1u, static_cast<unsigned>(std::bit_width(v))); }

unsigned per_cell_for(std::uint64_t entries, std::size_t n)
{
    return static_cast<unsigned>(std::max<std::uint64_t>(1, (entries + n - 1) / n));
}

} // namespace

AccessArbiter::Served AccessArbiter::next(int mu, const std::function<Served()> &pull)
{
    if (!ahead_ || *ahead_ == mu) {
        Served s = pull();
        ahead_ = mu;
        last_ = s.key;
        last_index_ = s.index;
        return s;
    }
    ahead_.reset();
    return {last_, last_index_};
}

class OneTree::ChildSource : public AccessSource {
public:
    ChildSource(OneTree &owner, int mu) : owner_(owner), mu_(mu) {}
    Key next() override { return owner_.serve(mu_); }

private:
    OneTree &owner_;
    int mu_;
};

OneTree::OneTree(std::unique_ptr<SteppableAlgorithm> a0, std::unique_ptr<SteppableAlgorithm> a1,
                 CombinerConfig cfg)
    : a_{std::move(a0), std::move(a1)}, cfg_(std::move(cfg))
{
    if (!a_[0] || !a_[1])
        throw vm_error(errc::usage, "combiner needs two algorithms");
    if (cfg_.C == 0 || cfg_.d1 <= 0)
        throw vm_error(errc::usage, "combiner constants must be positive");
    child_src_[0] = std::make_unique<ChildSource>(*this, 0);
    child_src_[1] = std::make_unique<ChildSource>(*this, 1);
}

OneTree::~OneTree() { fiber_ = {}; }

std::string OneTree::name() const
{
    auto part = [](const SteppableAlgorithm &a) {
        std::string s = a.name();
        return s.find('+') == std::string::npos ? s : "(" + s + ")";
    };
    return part(*a_[0]) + "+" + part(*a_[1]);
}

std::size_t OneTree::fingers() const { return kOwnFingers + a_[0]->fingers() + a_[1]->fingers(); }

FingerId OneTree::child_base(int mu) const
{
    return base_ + kOwnFingers + (mu == 0 ? 0 : static_cast<FingerId>(a_[0]->fingers()));
}

void OneTree::bind(BufferHost &host, FingerId base)
{
    host_ = &host;
    m_ = &host.machine();
    base_ = base;
    sink_ = [this](MfOperation o) { apply(o); };

    const std::size_t n = m_->node_count();
    std::vector<Key> keys = m_->logical_inorder();
    Key lo = keys.empty() ? 0 : keys.front();
    unsigned kb = bits_for(keys.empty() ? 0 : keys.back() - lo);
    double dn = std::max(1.0, cfg_.d1 * static_cast<double>(n));
    last_round_ = static_cast<int>(std::ceil(std::log2(dn))) + 1;
    std::uint64_t steps = std::uint64_t{1} << last_round_;

    // Phase I records at most 2^s steps per structure and 2^s + 1 accesses.
    // Cells are W words wide, capped at one machine word; each buffer packs
    // as many entries as fit, and never fewer than it needs.
    const unsigned cell = std::min(64u, cfg_.W * word_bits(n));
    auto packing = [&](unsigned entry_bits, std::uint64_t entries) {
        unsigned per = std::max(per_cell_for(entries, n), cell / entry_bits);
        if (entry_bits * per > 64)
            throw vm_error(errc::capacity_exceeded, "buffer cell wider than 64 bits");
        return per;
    };

    space_ = std::make_unique<BufferSpace>(host, sink_, base + 0, base + 1);
    asb_ = std::make_unique<AccessSequenceBuffer>(*space_, lo, kb, packing(kb, steps + 2), base + 2,
                                                  base + 3);
    for (int mu = 0; mu < 2; ++mu) {
        unsigned fb = a_[mu]->fingers() == 1 ? 0 : bits_for(a_[mu]->fingers() - 1);
        ohb_[mu] = std::make_unique<OperationHistoryBuffer>(*space_, base + 4 + mu, fb,
                                                            packing(3 + fb, steps));
    }
    unsigned tsb_cell = packing(3, 3 * n);
    tsb_[0] = std::make_unique<TreeStateBuffer>(*space_, base + 6, base + 9, tsb_cell);
    tsb_[1] = std::make_unique<TreeStateBuffer>(*space_, base + 7, base + 9, tsb_cell);
    tsb_star_ = std::make_unique<TreeStateBuffer>(*space_, base + 8, base + 9, tsb_cell);

    a_[0]->bind(host, child_base(0));
    a_[1]->bind(host, child_base(1));
}

void OneTree::restart()
{
    fiber_ = {};
    started_ = finished_ = false;
    error_ = nullptr;
    space_->reset();
    asb_->reset();
    for (int mu = 0; mu < 2; ++mu) {
        ohb_[mu]->reset();
        tsb_[mu]->reset();
        saved_fingers_[mu].clear();
        serving_[mu] = 0;
        a_[mu]->restart();
    }
    tsb_star_->reset();
    arbiter_ = {};
    phase_ = 1;
    round_ = 0;
    pulls_ = 0;
    current_ = completed_ = 0;
    completion_ = exhausted_ = false;
}

Step OneTree::step(AccessSource &src)
{
    if (finished_)
        throw vm_error(errc::input_exhausted, "access sequence exhausted");
    src_ = &src;
    if (!started_) {
        started_ = true;
        fiber_ = ctx::fiber(std::allocator_arg, ctx::fixedsize_stack(kFiberStack),
                            [this](ctx::fiber &&caller) {
                                caller_ = std::move(caller);
                                run();
                                finished_ = true;
                                return std::move(caller_);
                            });
    }
    fiber_ = std::move(fiber_).resume();
    if (error_) {
        finished_ = true;
        std::rethrow_exception(std::exchange(error_, nullptr));
    }
    if (finished_)
        throw vm_error(errc::input_exhausted, "access sequence exhausted");
    return out_;
}

void OneTree::run()
{
    bool ended = false;
    try {
        body();
    } catch (const ctx::detail::forced_unwind &) {
        throw;
    } catch (const vm_error &e) {
        if (e.code() != errc::input_exhausted)
            error_ = std::current_exception();
        ended = true;
    } catch (...) {
        error_ = std::current_exception();
    }
    // Input ran out inside a child's first request: still report the
    // access that completed.
    if (ended && !error_ && completion_) {
        completion_ = false;
        yield(Step::done(completed_));
    }
}

void OneTree::yield(Step s)
{
    out_ = s;
    caller_ = std::move(caller_).resume();
}

void OneTree::apply(MfOperation op)
{
    ++*charge_;
    yield(Step::make_op(op.finger - base_, op.op));
}

AccessArbiter::Served OneTree::pull()
{
    Key k;
    try {
        k = src_->next();
    } catch (const vm_error &e) {
        if (e.code() == errc::input_exhausted) {
            exhausted_ = true;
            if (pulls_ > 0) {
                completion_ = true;
                completed_ = current_;
            }
        }
        throw;
    }
    if (pulls_ > 0) {
        completion_ = true;
        completed_ = current_;
    }
    current_ = k;
    ++pulls_;
    return {k, pulls_};
}

Key OneTree::serve(int mu)
{
    if (phase_ == 1) {
        std::uint64_t *was = std::exchange(charge_, &stats_.access_buffer);
        Key k = asb_->next(mu, [this] { return pull().key; });
        charge_ = was;
        serving_[mu] = asb_->consumed(mu);
        return k;
    }
    if (serving_[mu] != 0 && trace_)
        trace_->completions.push_back({mu, round_, serving_[mu]});
    serving_[mu] = 0;
    AccessArbiter::Served s = arbiter_.next(mu, [this] { return pull(); });
    serving_[mu] = s.index;
    return s.key;
}

void OneTree::child_step(int mu)
{
    charge_ = &stats_.child;
    Step st = a_[mu]->step(*child_src_[mu]);
    charge_ = &stats_.history;
    if (st.kind == Step::Kind::Op) {
        FingerId g = child_base(mu) + st.op.finger;
        if (phase_ == 1)
            ohb_[mu]->record(st.op.finger, st.op.op, m_->view(g));
        charge_ = &stats_.child;
        apply({g, st.op.op});
    } else if (phase_ == 1) {
        ohb_[mu]->record_nop();
    }
    if (completion_) {
        completion_ = false;
        yield(Step::done(completed_));
    }
}

void OneTree::save_fingers(int mu)
{
    std::vector<Key> &keys = saved_fingers_[mu];
    keys.clear();
    for (std::size_t i = 0; i < a_[mu]->fingers(); ++i)
        keys.push_back(m_->view(child_base(mu) + static_cast<FingerId>(i)).key);
}

void OneTree::restore_fingers(int mu)
{
    charge_ = &stats_.routing;
    const std::vector<Key> &keys = saved_fingers_[mu];
    for (std::size_t i = 0; i < keys.size(); ++i) {
        FingerId g = child_base(mu) + static_cast<FingerId>(i);
        if (m_->view(g).key != keys[i])
            for (UnitOp u : m_->route(g, keys[i]))
                apply({g, u});
    }
}

void OneTree::body()
{
    charge_ = &stats_.child;
    if (trace_)
        trace_->initial_shape = m_->logical_shape();
    phase1();
    if (!exhausted_)
        phase2();
}

void OneTree::phase1()
{
    phase_ = 1;
    for (int i = 0; i <= last_round_; ++i) {
        int mu = i & 1;
        std::uint64_t total = std::uint64_t{1} << i;
        std::uint64_t redo = i >= 2 ? std::uint64_t{1} << (i - 2) : 0;
        charge_ = &stats_.history;
        for (std::uint64_t j = 0; j < redo; ++j)
            ohb_[mu]->redo(child_base(mu), sink_);
        for (std::uint64_t j = redo; j < total; ++j) {
            child_step(mu);
            if (exhausted_)
                return;
        }
        if (i >= last_round_ - 1) {
            charge_ = &stats_.tree_state;
            tsb_[mu]->save(*m_, sink_);
            save_fingers(mu);
        }
        charge_ = &stats_.history;
        for (std::uint64_t j = 0; j < total; ++j)
            ohb_[mu]->undo(child_base(mu), sink_);
        if (trace_) {
            trace_->phase1.push_back({i, mu, redo, total - redo, m_->logical_shape()});
            trace_->last_phase1_round = last_round_;
        }
    }
    arbiter_.set(asb_->ahead(), asb_->last_recorded().value_or(0), asb_->recorded());
    charge_ = &stats_.tree_state;
    tsb_star_->save(*m_, sink_);
    stats_.phase1_ops = stats_.total();
}

void OneTree::phase2()
{
    phase_ = 2;
    const std::size_t n = m_->node_count();
    std::uint64_t fn = cfg_.f ? cfg_.f(n) : n;
    const std::uint64_t budget = cfg_.C * std::max<std::uint64_t>(n, fn);
    int mu = last_round_ & 1;
    for (round_ = 0;; ++round_) {
        mu = 1 - mu;
        bool restarted = arbiter_.ahead() == 1 - mu;
        charge_ = &stats_.tree_state;
        if (restarted) {
            ++stats_.restarts;
            tsb_star_->load(*m_, sink_);
            charge_ = &stats_.routing;
            for (std::size_t i = 0; i < a_[mu]->fingers(); ++i)
                finger_to_root(*m_, child_base(mu) + static_cast<FingerId>(i), sink_);
            a_[mu]->restart();
            serving_[mu] = 0;
        } else {
            tsb_[mu]->load(*m_, sink_);
            restore_fingers(mu);
        }
        for (std::uint64_t j = 0; j < budget; ++j) {
            child_step(mu);
            if (exhausted_)
                return;
        }
        charge_ = &stats_.tree_state;
        tsb_[mu]->save(*m_, sink_);
        save_fingers(mu);
        if (trace_)
            trace_->phase2.push_back({mu, restarted, budget});
    }
}

namespace {

std::unique_ptr<SteppableAlgorithm> build(std::vector<std::unique_ptr<SteppableAlgorithm>> &algs,
                                          std::size_t lo, std::size_t hi, const CombinerConfig &cfg)
{
    if (hi - lo == 1)
        return std::move(algs[lo]);
    std::size_t mid = lo + (hi - lo + 1) / 2;
    auto left = build(algs, lo, mid, cfg);
    auto right = build(algs, mid, hi, cfg);
    return std::make_unique<OneTree>(std::move(left), std::move(right), cfg);
}

} // namespace

std::unique_ptr<SteppableAlgorithm> multi_tree(std::vector<std::unique_ptr<SteppableAlgorithm>> algs,
                                               const CombinerConfig &cfg)
{
    if (algs.size() < 2)
        throw vm_error(errc::usage, "need at least two algorithms to combine");
    return build(algs, 0, algs.size(), cfg);
}

std::unique_ptr<SteppableAlgorithm> make_algorithm(const std::string &name, const CombinerConfig &cfg)
{
    const std::string prefix = "combine:";
    if (name.rfind(prefix, 0) != 0)
        return make_basic_algorithm(name);
    std::vector<std::unique_ptr<SteppableAlgorithm>> algs;
    std::size_t at = prefix.size();
    for (;;) {
        std::size_t plus = name.find('+', at);
        algs.push_back(make_basic_algorithm(name.substr(at, plus - at)));
        if (plus == std::string::npos)
            break;
        at = plus + 1;
    }
    return multi_tree(std::move(algs), cfg);
}

} // namespace mfbst
