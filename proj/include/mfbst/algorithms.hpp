#pragma once

#include "mfbst/buffers.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace mfbst {

// Where an algorithm gets its next access.  next() throws input_exhausted
// once the sequence is used up.
class AccessSource {
public:
    virtual ~AccessSource() = default;
    virtual Key next() = 0;
};

class VectorSource : public AccessSource {
public:
    explicit VectorSource(std::vector<Key> keys) : keys_(std::move(keys)) {}
    Key next() override;
    std::size_t consumed() const { return pos_; }

private:
    std::vector<Key> keys_;
    std::size_t pos_ = 0;
};

// One step of an algorithm: an op on one of its fingers (indices local to
// the algorithm), or the completion of an access.
struct Step {
    enum class Kind : std::uint8_t { Op, Done };
    Kind kind = Kind::Op;
    MfOperation op;
    Key key = 0;

    static Step make_op(FingerId f, UnitOp u) { return {Kind::Op, {f, u}, 0}; }
    static Step done(Key k) { return {Kind::Done, {}, k}; }
};

// An online BST algorithm as a generator of ops.  The caller applies every
// returned op before asking for the next step.  On completing an access the
// algorithm immediately pulls its next one, so a source sees each request at
// the moment of completion.
class SteppableAlgorithm {
public:
    virtual ~SteppableAlgorithm() = default;
    virtual std::string name() const = 0;
    virtual std::size_t fingers() const = 0;
    // The algorithm's fingers are base .. base + fingers() - 1.
    virtual void bind(BufferHost &host, FingerId base) = 0;
    virtual Step step(AccessSource &src) = 0;
    // Drop all progress; fingers are at the root of whatever tree is there.
    virtual void restart() = 0;
};

// Shared scaffolding for one-finger algorithms: target register, pull on
// completion, and the root-then-search walk.
class SingleFingerAlgorithm : public SteppableAlgorithm {
public:
    std::size_t fingers() const override { return 1; }
    void bind(BufferHost &host, FingerId base) override;
    Step step(AccessSource &src) override;
    void restart() override;

protected:
    enum class Walk : std::uint8_t { Up, Down, Arrived };

    NodeView here() const { return m_->view(f_); }
    Step op(UnitOp u) const { return Step::make_op(0, u); }
    // One op of the root-then-search walk, or nothing once at the target.
    std::optional<Step> walk();
    // Completes the current access and pulls the next.
    Step finish(AccessSource &src);
    virtual void begin_access() = 0;
    virtual Step advance(AccessSource &src) = 0;
    virtual void reset_state() {}

    const MfMachine *m_ = nullptr;
    FingerId f_ = 0;
    Key target_ = 0;
    Walk walk_ = Walk::Up;

private:
    bool have_target_ = false;
    bool exhausted_ = false;
};

// Bottom-up splaying after a search from the root.
class SplayAlgorithm : public SingleFingerAlgorithm {
public:
    std::string name() const override { return "splay"; }

protected:
    void begin_access() override;
    Step advance(AccessSource &src) override;

private:
    enum class S : std::uint8_t { AtX, AtParent, ZigRotate, ZigZigDown, ZigZagFirst };
    S s_ = S::AtX;
    bool x_left_ = false;
};

// Rotate the accessed node all the way to the root.
class MoveToRootAlgorithm : public SingleFingerAlgorithm {
public:
    std::string name() const override { return "mtr"; }

protected:
    void begin_access() override {}
    Step advance(AccessSource &src) override;
};

// Rebuilds the tree perfectly balanced on its first access (Leftify, then
// vine compression passes), then only searches from the root.
class StaticBalancedAlgorithm : public SingleFingerAlgorithm {
public:
    std::string name() const override { return "balanced"; }

protected:
    void begin_access() override {}
    Step advance(AccessSource &src) override;
    void reset_state() override;

private:
    enum class B : std::uint8_t { Start, ToRoot, Leftify, SpineTop, Compress, Rotate, NextSpine, Built };
    std::optional<Step> build_step();
    void next_pass();

    B b_ = B::Start;
    LeftifyStepper leftify_;
    std::uint64_t size_ = 0;
    std::uint64_t remaining_ = 0;
    bool first_pass_ = true;
};

std::unique_ptr<SteppableAlgorithm> make_basic_algorithm(const std::string &name);

struct RunReport {
    std::uint64_t total_ops = 0;
    std::uint64_t accesses = 0;
    std::uint64_t steps = 0;
    std::size_t peak_aug_bits = 0;
    std::vector<std::uint64_t> per_access;
};

// Runs alg on the host's machine from finger 0 until the input is used up.
// Accesses are counted at each pull after the first.  after_op, if set,
// runs after every applied op.
RunReport drive(SteppableAlgorithm &alg, BufferHost &host, const std::vector<Key> &accesses,
                bool per_access = false, const std::function<void()> &after_op = {});

} // namespace mfbst
