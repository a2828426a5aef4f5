#include "mfbst/mf.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace mfbst {

std::vector<UnitOp> tree_route(const TreeStore &t, NodeId a, NodeId b)
{
    // Climb from both ends in lockstep so the work is proportional to the
    // distance, not the depth.
    std::vector<NodeId> up_a{a}, up_b{b};
    std::unordered_set<NodeId> seen_a{a}, seen_b{b};
    NodeId meet = kNil;
    if (a == b)
        meet = a;
    while (meet == kNil) {
        NodeId ta = t.parent(up_a.back());
        if (ta != kNil) {
            up_a.push_back(ta);
            seen_a.insert(ta);
            if (seen_b.count(ta)) {
                meet = ta;
                break;
            }
        }
        NodeId tb = t.parent(up_b.back());
        if (tb != kNil) {
            up_b.push_back(tb);
            seen_b.insert(tb);
            if (seen_a.count(tb)) {
                meet = tb;
                break;
            }
        }
    }
    std::vector<UnitOp> path;
    for (NodeId v : up_a) {
        if (v == meet)
            break;
        path.push_back(UnitOp::MoveParent);
    }
    std::vector<NodeId> down;
    for (NodeId v : up_b) {
        if (v == meet)
            break;
        down.push_back(v);
    }
    for (auto it = down.rbegin(); it != down.rend(); ++it)
        path.push_back(t.is_left_child(*it) ? UnitOp::MoveLeft : UnitOp::MoveRight);
    return path;
}

ReferenceMachine::ReferenceMachine(const TreeShape &shape, std::size_t fingers, unsigned aug_words)
    : tree_(shape, aug_capacity(shape.size(), aug_words)),
      fingers_(fingers, tree_.root()),
      cap_(aug_capacity(shape.size(), aug_words))
{
}

bool ReferenceMachine::legal(MfOperation op) const
{
    if (op.finger < 0 || static_cast<std::size_t>(op.finger) >= fingers_.size())
        return false;
    NodeId v = finger_node(op.finger);
    switch (op.op) {
    case UnitOp::MoveParent:
    case UnitOp::Rotate: return tree_.parent(v) != kNil;
    case UnitOp::MoveLeft: return tree_.left(v) != kNil;
    case UnitOp::MoveRight: return tree_.right(v) != kNil;
    }
    return false;
}

Key ReferenceMachine::mf_apply(MfOperation op)
{
    if (op.finger < 0 || static_cast<std::size_t>(op.finger) >= fingers_.size())
        throw vm_error(errc::bad_position, "no such finger");
    NodeId &v = fingers_[static_cast<std::size_t>(op.finger)];
    switch (op.op) {
    case UnitOp::MoveParent:
        if (tree_.parent(v) == kNil)
            throw vm_error(errc::illegal_at_root, "move to parent at the root");
        v = tree_.parent(v);
        break;
    case UnitOp::MoveLeft:
        if (tree_.left(v) == kNil)
            throw vm_error(errc::no_left_child, "no left child");
        v = tree_.left(v);
        break;
    case UnitOp::MoveRight:
        if (tree_.right(v) == kNil)
            throw vm_error(errc::no_right_child, "no right child");
        v = tree_.right(v);
        break;
    case UnitOp::Rotate:
        if (tree_.parent(v) == kNil)
            throw vm_error(errc::illegal_at_root, "rotation at the root");
        tree_.rotate_up(v);
        break;
    }
    if (tracing_)
        trace_.add(cost_, tree_.key(v));
    ++cost_;
    return tree_.key(v);
}

NodeView ReferenceMachine::view(FingerId f) const
{
    NodeId v = finger_node(f);
    return {tree_.key(v), tree_.parent(v) != kNil, tree_.left(v) != kNil, tree_.right(v) != kNil,
            tree_.is_left_child(v)};
}

std::vector<UnitOp> ReferenceMachine::route(FingerId f, Key target) const
{
    NodeId t = tree_.find(target);
    if (t == kNil)
        throw vm_error(errc::bad_position, "route target absent");
    return tree_route(tree_, finger_node(f), t);
}

std::uint64_t ReferenceMachine::aug_get(FingerId f, std::size_t off, unsigned width)
{
    return tree_.node(finger_node(f)).aug.get(off, width);
}

void ReferenceMachine::aug_set(FingerId f, std::size_t off, unsigned width, std::uint64_t value)
{
    AugPayload &p = tree_.node_mut(finger_node(f)).aug;
    p.set(off, width, value);
    peak_bits_ = std::max(peak_bits_, p.size());
}

SimulationVerdict check_simulation(const TouchTrace &oracle, const TouchTrace &sim,
                                   const std::vector<std::size_t> &window_ends)
{
    if (window_ends.size() != oracle.records.size())
        throw vm_error(errc::window_mismatch, "expected " + std::to_string(oracle.records.size()) +
                                                  " windows, got " +
                                                  std::to_string(window_ends.size()));
    std::size_t begin = 0;
    for (std::size_t i = 0; i < window_ends.size(); ++i) {
        std::size_t end = window_ends[i];
        if (end < begin || end > sim.records.size())
            throw vm_error(errc::window_mismatch, "windows are not consecutive");
        Key want = oracle.records[i].key;
        bool found = false;
        for (std::size_t j = begin; j < end && !found; ++j)
            found = sim.records[j].key == want;
        if (!found) {
            std::ostringstream msg;
            msg << "operation " << i << ": key " << want << " not touched in window [" << begin
                << ", " << end << ")";
            return {false, i, msg.str()};
        }
        begin = end;
    }
    return {};
}

std::vector<MfOperation> parse_trace(std::istream &in)
{
    std::vector<MfOperation> ops;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        int finger;
        std::string kind;
        if (!(ls >> finger)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos)
                continue;
            throw vm_error(errc::usage, "trace line " + std::to_string(lineno) + ": bad finger");
        }
        if (!(ls >> kind) || kind.size() != 1 || !op_from_letter(kind[0]) || finger < 0)
            throw vm_error(errc::usage, "trace line " + std::to_string(lineno) + ": bad op kind");
        ops.push_back({finger, *op_from_letter(kind[0])});
    }
    return ops;
}

void write_trace(std::ostream &out, const std::vector<MfOperation> &ops)
{
    for (const MfOperation &op : ops)
        out << op.finger << ' ' << op_letter(op.op) << '\n';
}

} // namespace mfbst
