#include "mfbst/buffers.hpp"

#include <algorithm>
#include <bit>

namespace mfbst {

namespace {

unsigned bits_for(std::uint64_t v) { return std::max(1u, static_cast<unsigned>(std::bit_width(v))); }

std::uint64_t field(std::uint64_t word, unsigned at, unsigned width)
{
    std::uint64_t mask = width >= 64 ? ~0ull : (1ull << width) - 1;
    return (word >> at) & mask;
}

std::uint64_t with_field(std::uint64_t word, unsigned at, unsigned width, std::uint64_t v)
{
    std::uint64_t mask = width >= 64 ? ~0ull : (1ull << width) - 1;
    return (word & ~(mask << at)) | ((v & mask) << at);
}

} // namespace

Key BufferHost::apply(MfOperation op)
{
    if (op.op == UnitOp::Rotate)
        ++essential_;
    return m_->mf_apply(op);
}

std::size_t BufferHost::reserve_aug(std::size_t bits)
{
    std::size_t off = aug_next_;
    if (m_->aug_base() + off + bits > m_->aug_capacity_bits())
        throw vm_error(errc::capacity_exceeded,
                       "aug budget too small: need " + std::to_string(m_->aug_base() + off + bits) +
                           " bits per node, have " + std::to_string(m_->aug_capacity_bits()));
    aug_next_ += bits;
    return off;
}

std::uint64_t EpochMath::size(unsigned i) const
{
    if (i == 0)
        return 1;
    if (i < 64 && (1ull << i) <= n)
        return 1ull << (i - 1);
    return n;
}

unsigned EpochMath::epoch_of(std::uint64_t count) const
{
    std::uint64_t end = 0;
    unsigned i = 0;
    for (;; ++i) {
        std::uint64_t e = size(i);
        if (e == n && i > 0)
            break;
        end += e;
        if (count < end)
            return i;
    }
    return i + static_cast<unsigned>((count - end) / n);
}

std::size_t EpochMath::allocation(unsigned i) const
{
    return static_cast<std::size_t>(std::min<std::uint64_t>(n, size(i + 1) + 1));
}

BufferSpace::BufferSpace(BufferHost &host, OpSink sink, FingerId aux0, FingerId aux1)
    : host_(host), sink_(std::move(sink)), aux_{aux0, aux1}, epochs_(host.machine().node_count())
{
}

int BufferSpace::add_buffer(unsigned cell_bits)
{
    if (laid_out_)
        throw vm_error(errc::usage, "buffers must be added before first use");
    if (cell_bits == 0 || cell_bits > 64)
        throw vm_error(errc::usage, "cell width must be 1..64 bits");
    cells_.push_back({cell_bits, cells_bits_});
    cells_bits_ += cell_bits;
    return static_cast<int>(cells_.size() - 1);
}

int BufferSpace::add_cursor(int buffer, FingerId finger)
{
    cursors_.push_back({buffer, finger, 1, 0, false});
    return static_cast<int>(cursors_.size() - 1);
}

void BufferSpace::layout()
{
    std::vector<Key> keys = host_.machine().logical_inorder();
    min_key_ = keys.empty() ? 0 : keys.front();
    key_bits_ = bits_for(keys.empty() ? 0 : keys.back() - min_key_);
    gen_bits_ = 2 * key_bits_ + cells_bits_;
    base_ = host_.reserve_aug(2 * gen_bits_);
    laid_out_ = true;
}

void BufferSpace::op(MfOperation o)
{
    sink_(o);
    if (counting_)
        ++stats_.realloc_ops;
}

void BufferSpace::move_to_key(FingerId f, Key k)
{
    for (UnitOp u : host_.machine().route(f, k)) {
        op({f, u});
        ++stats_.search_ops;
    }
}

void BufferSpace::to_root(FingerId f)
{
    while (host_.machine().view(f).has_parent)
        op({f, UnitOp::MoveParent});
}

std::uint64_t BufferSpace::get(FingerId f, std::size_t off, unsigned width)
{
    return host_.machine().aug_get(f, off, width);
}

void BufferSpace::set(FingerId f, std::size_t off, unsigned width, std::uint64_t v)
{
    host_.machine().aug_set(f, off, width, v);
}

void BufferSpace::ensure_epoch()
{
    if (!laid_out_)
        layout();
    int e = static_cast<int>(epochs_.epoch_of(host_.essential()));
    if (e == epoch_)
        return;
    std::size_t k = epochs_.allocation(static_cast<unsigned>(e));
    // Once every node is a buffer node the in-order assignment can no longer
    // change, so a new epoch needs no work.
    if (!(alloc_ == epochs_.n && k == epochs_.n))
        reallocate(k);
    epoch_ = e;
}

void BufferSpace::reallocate(std::size_t k)
{
    const MfMachine &m = host_.machine();
    for (Cursor &c : cursors_)
        write_back(c);
    counting_ = true;
    const unsigned kb = key_bits_;
    const unsigned ng = gen_ ^ 1u;
    const std::size_t old_alloc = alloc_;
    const FingerId a = aux_[0], b = aux_[1];

    // b walks the old buffer nodes in order to copy their cells.
    std::size_t copied = 0;
    if (old_alloc > 0)
        move_to_key(b, first_key_);
    std::vector<std::uint64_t> regs(cells_.size());

    std::vector<std::optional<Key>> cursor_keys(cursors_.size());
    std::size_t touched = 0, rank = 0;
    Key prev = 0, first = 0;

    auto assign = [&](Key key) {
        ++rank;
        if (copied < old_alloc) {
            for (std::size_t i = 0; i < cells_.size(); ++i)
                regs[i] = get(b, gen_off(gen_) + 2 * kb + cells_[i].offset, cells_[i].bits);
            ++copied;
            if (copied < old_alloc)
                move_to_key(b, get(b, gen_off(gen_) + kb, kb) + min_key_);
        } else {
            std::fill(regs.begin(), regs.end(), 0);
        }
        set(a, gen_off(ng), kb, rank > 1 ? prev - min_key_ : 0);
        for (std::size_t i = 0; i < cells_.size(); ++i)
            set(a, gen_off(ng) + 2 * kb + cells_[i].offset, cells_[i].bits, regs[i]);
        prev = key;
        if (rank == 1)
            first = key;
        for (std::size_t c = 0; c < cursors_.size(); ++c)
            if (cursors_[c].placed && cursors_[c].pos == rank)
                cursor_keys[c] = key;
    };

    // Pre-order over the first k nodes, numbering each once its left part is done.
    to_root(a);
    enum class Came { Down, FromLeft, FromRight } st = Came::Down;
    for (;;) {
        NodeView v = m.view(a);
        if (st == Came::Down) {
            ++touched;
            if (v.has_left && touched < k) {
                op({a, UnitOp::MoveLeft});
                continue;
            }
            st = Came::FromLeft;
        }
        if (st == Came::FromLeft) {
            assign(v.key);
            if (v.has_right && touched < k) {
                op({a, UnitOp::MoveRight});
                st = Came::Down;
                continue;
            }
            st = Came::FromRight;
        }
        if (!v.has_parent)
            break;
        st = v.is_left ? Came::FromLeft : Came::FromRight;
        op({a, UnitOp::MoveParent});
    }

    // Walk back from the last node filling in successor keys.
    move_to_key(a, prev);
    for (std::size_t r = rank; r > 1; --r) {
        Key here = m.view(a).key;
        move_to_key(a, get(a, gen_off(ng), kb) + min_key_);
        set(a, gen_off(ng) + kb, kb, here - min_key_);
    }

    gen_ = ng;
    alloc_ = rank;
    first_key_ = first;
    for (std::size_t c = 0; c < cursors_.size(); ++c) {
        Cursor &cur = cursors_[c];
        if (!cur.placed)
            continue;
        if (!cursor_keys[c])
            throw vm_error(errc::capacity_exceeded, "cursor beyond the reallocated buffer");
        move_to_key(cur.finger, *cursor_keys[c]);
        cur.node_key = *cursor_keys[c];
    }
    ++stats_.reallocations;
    counting_ = false;
}

void BufferSpace::place(Cursor &c)
{
    if (c.placed)
        return;
    move_to_key(c.finger, first_key_);
    c.node_key = first_key_;
    c.pos = 1;
    c.placed = true;
}

bool BufferSpace::next_cell(int cursor)
{
    ensure_epoch();
    Cursor &c = cursors_[static_cast<std::size_t>(cursor)];
    place(c);
    write_back(c);
    if (c.pos >= alloc_) {
        if (alloc_ == epochs_.n)
            return false;
        throw vm_error(errc::capacity_exceeded, "cursor ran past the allocated buffer nodes");
    }
    Key nk = get(c.finger, gen_off(gen_) + key_bits_, key_bits_) + min_key_;
    move_to_key(c.finger, nk);
    c.node_key = nk;
    ++c.pos;
    c.cached = false;
    ++stats_.cell_moves;
    host_.add_essential();
    return true;
}

bool BufferSpace::prev_cell(int cursor)
{
    ensure_epoch();
    Cursor &c = cursors_[static_cast<std::size_t>(cursor)];
    place(c);
    write_back(c);
    if (c.pos == 1)
        return false;
    Key pk = get(c.finger, gen_off(gen_), key_bits_) + min_key_;
    move_to_key(c.finger, pk);
    c.node_key = pk;
    --c.pos;
    c.cached = false;
    ++stats_.cell_moves;
    host_.add_essential();
    return true;
}

void BufferSpace::write_back(Cursor &c)
{
    if (!c.dirty)
        return;
    const Cell &cell = cells_[static_cast<std::size_t>(c.buffer)];
    set(c.finger, gen_off(gen_) + 2 * key_bits_ + cell.offset, cell.bits, c.value);
    c.dirty = false;
}

std::uint64_t BufferSpace::read_cell(int cursor)
{
    Cursor &c = cursors_[static_cast<std::size_t>(cursor)];
    if (!c.placed) {
        ensure_epoch();
        place(c);
    }
    if (c.cached)
        return c.value;
    for (Cursor &o : cursors_)
        if (&o != &c && o.dirty && o.buffer == c.buffer && o.pos == c.pos)
            write_back(o);
    const Cell &cell = cells_[static_cast<std::size_t>(c.buffer)];
    c.value = get(c.finger, gen_off(gen_) + 2 * key_bits_ + cell.offset, cell.bits);
    c.cached = true;
    return c.value;
}

void BufferSpace::write_cell(int cursor, std::uint64_t value)
{
    Cursor &c = cursors_[static_cast<std::size_t>(cursor)];
    if (!c.placed) {
        ensure_epoch();
        place(c);
    }
    for (Cursor &o : cursors_)
        if (&o != &c && o.buffer == c.buffer && o.pos == c.pos)
            o.cached = false;
    c.value = value;
    c.cached = true;
    c.dirty = true;
}

void BufferSpace::reset()
{
    for (Cursor &c : cursors_) {
        c.pos = 1;
        c.placed = false;
        c.cached = false;
        c.dirty = false;
    }
}

OpCode encode_op(UnitOp op, const NodeView &at)
{
    switch (op) {
    case UnitOp::MoveLeft: return OpCode::Left;
    case UnitOp::MoveRight: return OpCode::Right;
    case UnitOp::MoveParent: return at.is_left ? OpCode::ParentFromLeft : OpCode::ParentFromRight;
    case UnitOp::Rotate: return at.is_left ? OpCode::RotateLeftChild : OpCode::RotateRightChild;
    }
    return OpCode::Empty;
}

UnitOp redo_of(OpCode c)
{
    switch (c) {
    case OpCode::Left: return UnitOp::MoveLeft;
    case OpCode::Right: return UnitOp::MoveRight;
    case OpCode::ParentFromLeft:
    case OpCode::ParentFromRight: return UnitOp::MoveParent;
    case OpCode::RotateLeftChild:
    case OpCode::RotateRightChild: return UnitOp::Rotate;
    default: break;
    }
    throw vm_error(errc::usage, "no op for this code");
}

std::vector<UnitOp> undo_of(OpCode c)
{
    switch (c) {
    case OpCode::Left:
    case OpCode::Right: return {UnitOp::MoveParent};
    case OpCode::ParentFromLeft: return {UnitOp::MoveLeft};
    case OpCode::ParentFromRight: return {UnitOp::MoveRight};
    // The old parent is now the child on the far side; rotate it back up.
    case OpCode::RotateLeftChild: return {UnitOp::MoveRight, UnitOp::Rotate, UnitOp::MoveLeft};
    case OpCode::RotateRightChild: return {UnitOp::MoveLeft, UnitOp::Rotate, UnitOp::MoveRight};
    case OpCode::Nop: return {};
    default: break;
    }
    throw vm_error(errc::usage, "no inverse for an empty code");
}

AccessSequenceBuffer::AccessSequenceBuffer(BufferSpace &space, Key min_key, unsigned key_bits,
                                           unsigned per_cell, FingerId c0, FingerId c1)
    : space_(space), min_key_(min_key), key_bits_(key_bits), per_cell_(per_cell)
{
    buffer_ = space_.add_buffer(key_bits * per_cell);
    cursor_[0] = space_.add_cursor(buffer_, c0);
    cursor_[1] = space_.add_cursor(buffer_, c1);
}

Key AccessSequenceBuffer::next(int mu, const std::function<Key()> &pull)
{
    std::uint64_t idx = count_[mu];
    std::size_t cell = static_cast<std::size_t>(idx / per_cell_) + 1;
    unsigned at = static_cast<unsigned>(idx % per_cell_) * key_bits_;
    while (space_.position(cursor_[mu]) < cell)
        if (!space_.next_cell(cursor_[mu]))
            throw vm_error(errc::capacity_exceeded, "access sequence buffer full");
    Key k;
    if (idx == recorded_) {
        k = pull();
        std::uint64_t w = space_.read_cell(cursor_[mu]);
        space_.write_cell(cursor_[mu], with_field(w, at, key_bits_, k - min_key_));
        ++recorded_;
        last_ = k;
    } else {
        k = field(space_.read_cell(cursor_[mu]), at, key_bits_) + min_key_;
    }
    ++count_[mu];
    return k;
}

void AccessSequenceBuffer::reset()
{
    count_[0] = count_[1] = 0;
    recorded_ = 0;
    last_.reset();
}

std::optional<int> AccessSequenceBuffer::ahead() const
{
    if (count_[0] == count_[1])
        return std::nullopt;
    return count_[0] > count_[1] ? 0 : 1;
}

PackedCodes::PackedCodes(BufferSpace &space, FingerId cursor, unsigned code_bits, unsigned per_cell)
    : space_(space), code_bits_(code_bits), per_cell_(per_cell)
{
    buffer_ = space_.add_buffer(code_bits * per_cell);
    cursor_ = space_.add_cursor(buffer_, cursor);
}

void PackedCodes::seek(std::uint64_t index)
{
    std::size_t cell = static_cast<std::size_t>(index / per_cell_) + 1;
    while (space_.position(cursor_) < cell)
        if (!space_.next_cell(cursor_))
            throw vm_error(errc::capacity_exceeded, "code buffer full");
    while (space_.position(cursor_) > cell)
        space_.prev_cell(cursor_);
}

std::uint64_t PackedCodes::get(std::uint64_t index)
{
    seek(index);
    unsigned at = static_cast<unsigned>(index % per_cell_) * code_bits_;
    return field(space_.read_cell(cursor_), at, code_bits_);
}

void PackedCodes::put(std::uint64_t index, std::uint64_t code)
{
    seek(index);
    unsigned at = static_cast<unsigned>(index % per_cell_) * code_bits_;
    space_.write_cell(cursor_, with_field(space_.read_cell(cursor_), at, code_bits_, code));
}

OperationHistoryBuffer::OperationHistoryBuffer(BufferSpace &space, FingerId cursor,
                                               unsigned finger_bits, unsigned per_cell)
    : codes_(space, cursor, 3 + finger_bits, per_cell)
{
}

void OperationHistoryBuffer::record(FingerId local, UnitOp op, const NodeView &at)
{
    std::uint64_t code = static_cast<std::uint64_t>(encode_op(op, at)) |
                         (static_cast<std::uint64_t>(local) << 3);
    codes_.put(head_++, code);
    len_ = head_;
}

void OperationHistoryBuffer::record_nop()
{
    codes_.put(head_++, static_cast<std::uint64_t>(OpCode::Nop));
    len_ = head_;
}

void OperationHistoryBuffer::redo(FingerId base, const OpSink &apply)
{
    if (head_ >= len_)
        throw vm_error(errc::empty_structure, "nothing to redo");
    std::uint64_t code = codes_.get(head_++);
    auto c = static_cast<OpCode>(code & 7);
    if (c != OpCode::Nop)
        apply({base + static_cast<FingerId>(code >> 3), redo_of(c)});
}

void OperationHistoryBuffer::undo(FingerId base, const OpSink &apply)
{
    if (head_ == 0)
        throw vm_error(errc::empty_structure, "nothing to undo");
    std::uint64_t code = codes_.get(--head_);
    FingerId f = base + static_cast<FingerId>(code >> 3);
    for (UnitOp u : undo_of(static_cast<OpCode>(code & 7)))
        apply({f, u});
}

TreeStateBuffer::TreeStateBuffer(BufferSpace &space, FingerId cursor, FingerId worker,
                                 unsigned per_cell)
    : codes_(space, cursor, 3, per_cell), worker_(worker)
{
}

void finger_to_root(const MfMachine &m, FingerId f, const OpSink &apply)
{
    while (m.view(f).has_parent)
        apply({f, UnitOp::MoveParent});
}

void TreeStateBuffer::undo_all(const OpSink &apply)
{
    for (std::uint64_t i = len_; i-- > 0;) {
        auto c = static_cast<OpCode>(codes_.get(i));
        // A right move followed by its rotation is undone in one go: after
        // rotating the old node back up the finger is already where it was.
        if (c == OpCode::RotateRightChild && i > 0 &&
            static_cast<OpCode>(codes_.get(i - 1)) == OpCode::Right) {
            apply({worker_, UnitOp::MoveLeft});
            apply({worker_, UnitOp::Rotate});
            --i;
            continue;
        }
        for (UnitOp u : undo_of(c))
            apply({worker_, u});
    }
}

void TreeStateBuffer::save(const MfMachine &m, const OpSink &apply)
{
    finger_to_root(m, worker_, apply);
    len_ = 0;
    LeftifyStepper st;
    for (;;) {
        NodeView v = m.view(worker_);
        auto u = st.next(v);
        if (!u)
            break;
        codes_.put(len_++, static_cast<std::uint64_t>(encode_op(*u, v)));
        apply({worker_, *u});
    }
    saved_ = true;
    end_key_ = m.view(worker_).key;
    undo_all(apply);
}

void TreeStateBuffer::load(const MfMachine &m, const OpSink &apply)
{
    if (!saved_)
        throw vm_error(errc::empty_structure, "no saved tree state");
    finger_to_root(m, worker_, apply);
    leftify(m, worker_, apply);
    // Leftify may stop at a different spine node than it did when saving.
    for (UnitOp u : m.route(worker_, end_key_))
        apply({worker_, u});
    undo_all(apply);
}

std::optional<UnitOp> LeftifyStepper::next(const NodeView &at)
{
    if (!started_ || moved_left_) {
        started_ = true;
        moved_left_ = false;
        left_done_ = !at.has_left;
    }
    if (rotate_next_) {
        // After the rotation the old finger node, with its left path, hangs
        // to the left of this node together with this node's left subtree.
        rotate_next_ = false;
        left_done_ = left_done_ && !at.has_left;
        return UnitOp::Rotate;
    }
    if (at.has_right) {
        rotate_next_ = true;
        return UnitOp::MoveRight;
    }
    if (at.has_left && !left_done_) {
        moved_left_ = true;
        return UnitOp::MoveLeft;
    }
    return std::nullopt;
}

std::vector<UnitOp> leftify(const MfMachine &m, FingerId f, const OpSink &apply)
{
    std::vector<UnitOp> ops;
    LeftifyStepper st;
    while (auto u = st.next(m.view(f))) {
        ops.push_back(*u);
        apply({f, *u});
    }
    return ops;
}

} // namespace mfbst
