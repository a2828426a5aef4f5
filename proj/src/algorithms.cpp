#include "mfbst/algorithms.hpp"

#include <bit>

namespace mfbst {

Key VectorSource::next()
{
    if (pos_ >= keys_.size())
        throw vm_error(errc::input_exhausted, "access sequence exhausted");
    return keys_[pos_++];
}

void SingleFingerAlgorithm::bind(BufferHost &host, FingerId base)
{
    m_ = &host.machine();
    f_ = base;
}

Step SingleFingerAlgorithm::step(AccessSource &src)
{
    if (exhausted_)
        throw vm_error(errc::input_exhausted, "access sequence exhausted");
    if (!have_target_) {
        target_ = src.next();
        have_target_ = true;
        walk_ = Walk::Up;
        begin_access();
    }
    return advance(src);
}

void SingleFingerAlgorithm::restart()
{
    have_target_ = false;
    exhausted_ = false;
    walk_ = Walk::Up;
    reset_state();
}

std::optional<Step> SingleFingerAlgorithm::walk()
{
    NodeView v = here();
    if (walk_ == Walk::Up) {
        if (v.has_parent)
            return op(UnitOp::MoveParent);
        walk_ = Walk::Down;
    }
    if (walk_ == Walk::Down) {
        if (v.key == target_) {
            walk_ = Walk::Arrived;
            return std::nullopt;
        }
        return op(target_ < v.key ? UnitOp::MoveLeft : UnitOp::MoveRight);
    }
    return std::nullopt;
}

Step SingleFingerAlgorithm::finish(AccessSource &src)
{
    Key k = target_;
    try {
        target_ = src.next();
        walk_ = Walk::Up;
        begin_access();
    } catch (const vm_error &e) {
        if (e.code() != errc::input_exhausted)
            throw;
        have_target_ = false;
        exhausted_ = true;
    }
    return Step::done(k);
}

void SplayAlgorithm::begin_access() { s_ = S::AtX; }

Step SplayAlgorithm::advance(AccessSource &src)
{
    if (auto s = walk())
        return *s;
    NodeView v = here();
    Side xs = x_left_ ? Side::Left : Side::Right;
    switch (s_) {
    case S::AtX:
        if (!v.has_parent)
            return finish(src);
        x_left_ = v.is_left;
        s_ = S::AtParent;
        return op(UnitOp::MoveParent);
    case S::AtParent:
        if (!v.has_parent) {
            s_ = S::ZigRotate;
            return op(move_toward(xs));
        }
        if (v.is_left == x_left_) {
            s_ = S::ZigZigDown;
            return op(UnitOp::Rotate);
        }
        s_ = S::ZigZagFirst;
        return op(move_toward(xs));
    case S::ZigRotate:
        s_ = S::AtX;
        return op(UnitOp::Rotate);
    case S::ZigZigDown:
        s_ = S::ZigRotate;
        return op(move_toward(xs));
    case S::ZigZagFirst:
        s_ = S::ZigRotate;
        return op(UnitOp::Rotate);
    }
    return op(UnitOp::Rotate);
}

Step MoveToRootAlgorithm::advance(AccessSource &src)
{
    if (auto s = walk())
        return *s;
    if (here().has_parent)
        return op(UnitOp::Rotate);
    return finish(src);
}

void StaticBalancedAlgorithm::reset_state()
{
    b_ = B::Start;
    leftify_ = {};
    first_pass_ = true;
}

void StaticBalancedAlgorithm::next_pass()
{
    remaining_ = 0;
    if (first_pass_) {
        first_pass_ = false;
        std::uint64_t leaves = size_ + 1 - std::bit_floor(size_ + 1);
        size_ -= leaves;
        if (leaves > 0) {
            remaining_ = leaves;
            return;
        }
    }
    if (size_ > 1) {
        size_ /= 2;
        remaining_ = size_;
    }
}

std::optional<Step> StaticBalancedAlgorithm::build_step()
{
    switch (b_) {
    case B::Start:
        b_ = B::ToRoot;
        [[fallthrough]];
    case B::ToRoot:
        if (here().has_parent)
            return op(UnitOp::MoveParent);
        b_ = B::Leftify;
        leftify_ = {};
        [[fallthrough]];
    case B::Leftify:
        if (auto u = leftify_.next(here()))
            return op(*u);
        b_ = B::SpineTop;
        size_ = m_->node_count();
        first_pass_ = true;
        [[fallthrough]];
    case B::SpineTop:
        if (here().has_parent)
            return op(UnitOp::MoveParent);
        next_pass();
        if (remaining_ == 0) {
            b_ = B::Built;
            return std::nullopt;
        }
        [[fallthrough]];
    case B::Compress:
        b_ = B::Rotate;
        return op(UnitOp::MoveLeft);
    case B::Rotate:
        --remaining_;
        b_ = remaining_ > 0 ? B::NextSpine : B::SpineTop;
        return op(UnitOp::Rotate);
    case B::NextSpine:
        b_ = B::Compress;
        return op(UnitOp::MoveLeft);
    case B::Built:
        break;
    }
    return std::nullopt;
}

Step StaticBalancedAlgorithm::advance(AccessSource &src)
{
    if (b_ != B::Built)
        if (auto s = build_step())
            return *s;
    if (auto s = walk())
        return *s;
    return finish(src);
}

std::unique_ptr<SteppableAlgorithm> make_basic_algorithm(const std::string &name)
{
    if (name == "splay")
        return std::make_unique<SplayAlgorithm>();
    if (name == "mtr")
        return std::make_unique<MoveToRootAlgorithm>();
    if (name == "balanced")
        return std::make_unique<StaticBalancedAlgorithm>();
    throw vm_error(errc::usage, "unknown algorithm: " + name);
}

namespace {

class CountingSource : public AccessSource {
public:
    CountingSource(const std::vector<Key> &keys, const MfMachine &m, std::vector<std::uint64_t> *costs)
        : keys_(keys), m_(m), costs_(costs)
    {
    }

    Key next() override
    {
        if (pos_ >= keys_.size())
            throw vm_error(errc::input_exhausted, "access sequence exhausted");
        mark();
        return keys_[pos_++];
    }

    void mark()
    {
        if (costs_ && pos_ > 0)
            costs_->push_back(m_.cost() - last_);
        last_ = m_.cost();
    }

    std::size_t pos() const { return pos_; }

private:
    const std::vector<Key> &keys_;
    const MfMachine &m_;
    std::vector<std::uint64_t> *costs_;
    std::size_t pos_ = 0;
    std::uint64_t last_ = 0;
};

} // namespace

RunReport drive(SteppableAlgorithm &alg, BufferHost &host, const std::vector<Key> &accesses,
                bool per_access, const std::function<void()> &after_op)
{
    RunReport r;
    const MfMachine &m = host.machine();
    std::uint64_t start = m.cost();
    CountingSource src(accesses, m, per_access ? &r.per_access : nullptr);
    alg.bind(host, 0);
    try {
        for (;;) {
            Step s = alg.step(src);
            ++r.steps;
            if (s.kind == Step::Kind::Op) {
                host.apply(s.op);
                if (after_op)
                    after_op();
            }
        }
    } catch (const vm_error &e) {
        if (e.code() != errc::input_exhausted)
            throw;
    }
    if (src.pos() > 0)
        src.mark();
    r.accesses = src.pos();
    r.total_ops = m.cost() - start;
    r.peak_aug_bits = m.peak_aug_bits();
    return r;
}

} // namespace mfbst
