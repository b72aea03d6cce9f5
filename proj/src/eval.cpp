#include "gadgex/eval.hpp"

#include "gadgex/errors.hpp"

namespace gadgex {

uint64_t MachineState::get_reg(const std::string &r) const {
    auto it = regs.find(r);
    if (it == regs.end())
        return 0;
    return it->second;
}

void MachineState::set_reg(const std::string &r, uint64_t v) {
    regs[r] = mask_width(arch->reg_width(r), v);
}

uint64_t MachineState::load(uint64_t addr, unsigned width) const {
    unsigned n = width / 8;
    uint64_t v = 0;
    for (unsigned i = 0; i < n; i++) {
        auto it = mem.find(addr + i);
        uint64_t byte = it == mem.end() ? 0 : it->second;
        if (arch->endianness == Endian::Little)
            v |= byte << (8 * i);
        else
            v = (v << 8) | byte;
    }
    return v;
}

void MachineState::store(uint64_t addr, unsigned width, uint64_t v) {
    unsigned n = width / 8;
    for (unsigned i = 0; i < n; i++) {
        uint8_t byte;
        if (arch->endianness == Endian::Little)
            byte = uint8_t((v >> (8 * i)) & 0xff);
        else
            byte = uint8_t((v >> (8 * (n - 1 - i))) & 0xff);
        mem[addr + i] = byte;
    }
}

namespace {

uint64_t eval_bin(BinKind op, unsigned w, uint64_t a, uint64_t b) {
    switch (op) {
    case BinKind::Add: return mask_width(w, a + b);
    case BinKind::Sub: return mask_width(w, a - b);
    case BinKind::Mul: return mask_width(w, a * b);
    case BinKind::And: return a & b;
    case BinKind::Or: return a | b;
    case BinKind::Xor: return a ^ b;
    case BinKind::Shl:
        return b >= w ? 0 : mask_width(w, a << b);
    case BinKind::Lshr:
        return b >= w ? 0 : a >> b;
    case BinKind::Ashr: {
        int64_t sa = sign_extend(w, a);
        if (b >= w)
            return mask_width(w, uint64_t(sa < 0 ? -1 : 0));
        return mask_width(w, uint64_t(sa >> b));
    }
    case BinKind::Eq: return a == b ? 1 : 0;
    case BinKind::Ne: return a != b ? 1 : 0;
    case BinKind::Ult: return a < b ? 1 : 0;
    case BinKind::Slt: return sign_extend(w, a) < sign_extend(w, b) ? 1 : 0;
    case BinKind::Uge: return a >= b ? 1 : 0;
    case BinKind::Sge: return sign_extend(w, a) >= sign_extend(w, b) ? 1 : 0;
    }
    return 0;
}

// Materializes a memory expression into a concrete byte map, starting from
// the state's memory for MemInit and applying stores innermost-first.
std::map<uint64_t, uint8_t> eval_mem(const MachineState &state, const ExprRef &e,
                                     const SymEnv *syms);

uint64_t read_bytes(const Arch &arch, const std::map<uint64_t, uint8_t> &mem,
                    uint64_t addr, unsigned width) {
    unsigned n = width / 8;
    uint64_t v = 0;
    for (unsigned i = 0; i < n; i++) {
        auto it = mem.find(addr + i);
        uint64_t byte = it == mem.end() ? 0 : it->second;
        if (arch.endianness == Endian::Little)
            v |= byte << (8 * i);
        else
            v = (v << 8) | byte;
    }
    return v;
}

void write_bytes(const Arch &arch, std::map<uint64_t, uint8_t> &mem, uint64_t addr,
                 unsigned width, uint64_t v) {
    unsigned n = width / 8;
    for (unsigned i = 0; i < n; i++) {
        uint8_t byte;
        if (arch.endianness == Endian::Little)
            byte = uint8_t((v >> (8 * i)) & 0xff);
        else
            byte = uint8_t((v >> (8 * (n - 1 - i))) & 0xff);
        mem[addr + i] = byte;
    }
}

std::map<uint64_t, uint8_t> eval_mem(const MachineState &state, const ExprRef &e,
                                     const SymEnv *syms) {
    if (e->kind == ExprKind::MemInit)
        return state.mem;
    if (e->kind == ExprKind::MemStore) {
        auto m = eval_mem(state, e->a, syms);
        uint64_t addr = eval_expr(state, e->b, syms);
        // stores inside a materialized chain read registers/memory from the
        // same initial state; chains built by the symbolic engine only ever
        // reference initial values, so this is exact
        uint64_t val = [&] {
            MachineState tmp = state;
            tmp.mem = m;
            return eval_expr(tmp, e->c, syms);
        }();
        write_bytes(*state.arch, m, addr, e->hi, val);
        return m;
    }
    throw WidthError("expected a memory expression");
}

} // namespace

uint64_t eval_expr(const MachineState &state, const ExprRef &e, const SymEnv *syms) {
    switch (e->kind) {
    case ExprKind::Const:
        return e->value;
    case ExprKind::Reg:
    case ExprKind::Init:
        return mask_width(e->width, state.get_reg(e->name));
    case ExprKind::Sym: {
        if (syms) {
            auto it = syms->find(e->name);
            if (it != syms->end())
                return mask_width(e->width, it->second);
        }
        return 0;
    }
    case ExprKind::MemInit:
    case ExprKind::MemStore:
        throw WidthError("memory expression has no value");
    case ExprKind::Load:
        return state.load(eval_expr(state, e->a, syms), e->width);
    case ExprKind::MemSelect: {
        auto m = eval_mem(state, e->a, syms);
        uint64_t addr = eval_expr(state, e->b, syms);
        return read_bytes(*state.arch, m, addr, e->width);
    }
    case ExprKind::Bin:
        return eval_bin(e->bin, e->a->width, eval_expr(state, e->a, syms),
                        eval_expr(state, e->b, syms));
    case ExprKind::Un: {
        uint64_t a = eval_expr(state, e->a, syms);
        switch (e->un) {
        case UnKind::Not: return mask_width(e->width, ~a);
        case UnKind::Neg: return mask_width(e->width, ~a + 1);
        case UnKind::Zext: return a;
        case UnKind::Sext:
            return mask_width(e->width, uint64_t(sign_extend(e->a->width, a)));
        case UnKind::Extract:
            return mask_width(e->width, a >> e->lo);
        }
        return 0;
    }
    case ExprKind::Ite:
        return eval_expr(state, e->a, syms) ? eval_expr(state, e->b, syms)
                                            : eval_expr(state, e->c, syms);
    }
    return 0;
}

MachineState exec_path(MachineState state, const std::vector<Stmt> &stmts,
                       const SymEnv *syms, std::vector<StoreEvent> *trace) {
    for (const Stmt &s : stmts) {
        if (s.kind == Stmt::Kind::Assign) {
            state.set_reg(s.reg, eval_expr(state, s.value, syms));
        } else {
            uint64_t addr = eval_expr(state, s.addr, syms);
            uint64_t val = mask_width(s.width, eval_expr(state, s.value, syms));
            state.store(addr, s.width, val);
            if (trace)
                trace->push_back({addr, val, s.width});
        }
    }
    return state;
}

} // namespace gadgex
