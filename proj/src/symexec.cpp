#include "gadgex/symexec.hpp"

#include "gadgex/errors.hpp"
#include "gadgex/simplify.hpp"

namespace gadgex {

std::vector<std::string> havoc_registers(const Arch &arch) {
    if (arch.name == "x86-64" || arch.name == "amd64")
        return {"RAX", "RCX", "RDX", "RSI", "RDI", "R8", "R9", "R10", "R11",
                "ZF", "NF", "CF"};
    if (arch.name == "arm" || arch.name == "arm-a32")
        return {"R0", "R1", "R2", "R3", "R12", "LR", "ZF", "NF", "CF"};
    // unknown convention: clobber only a return value guess
    for (const std::string &r : arch.classifiable)
        if (r != arch.ip && r != arch.sp)
            return {r};
    return {};
}

namespace {

struct SymState {
    const Program &p;
    std::map<std::string, ExprRef> regs;
    ExprRef mem;
    SymbolicSummary out;

    explicit SymState(const Program &prog) : p(prog) {
        for (const auto &[name, w] : p.arch.registers)
            regs[name] = make_init(name, w);
        mem = make_meminit();
        out.mem_out = mem;
    }

    ExprRef reg(const std::string &name) {
        auto it = regs.find(name);
        if (it == regs.end())
            throw WidthError("symbolic state has no register " + name);
        return it->second;
    }

    // substitutes current register values and turns loads into selects over
    // the current memory expression
    ExprRef subst(const ExprRef &e) {
        switch (e->kind) {
        case ExprKind::Const:
        case ExprKind::Init:
        case ExprKind::Sym:
            return e;
        case ExprKind::Reg:
            return reg(e->name);
        case ExprKind::Load: {
            ExprRef addr = simplify(subst(e->a));
            out.n_mem_reads++;
            return make_select(mem, addr, e->width);
        }
        case ExprKind::Bin:
            return make_bin(e->bin, subst(e->a), subst(e->b));
        case ExprKind::Un:
            switch (e->un) {
            case UnKind::Not: return make_not(subst(e->a));
            case UnKind::Neg: return make_neg(subst(e->a));
            case UnKind::Zext: return make_zext(subst(e->a), e->width);
            case UnKind::Sext: return make_sext(subst(e->a), e->width);
            case UnKind::Extract: return make_extract(subst(e->a), e->hi, e->lo);
            }
            return e;
        case ExprKind::Ite:
            return make_ite(subst(e->a), subst(e->b), subst(e->c));
        case ExprKind::MemInit:
        case ExprKind::MemSelect:
        case ExprKind::MemStore:
            throw WidthError("memory expressions cannot appear in instruction IR");
        }
        return e;
    }

    void exec(const Stmt &s) {
        if (s.kind == Stmt::Kind::Assign) {
            regs[s.reg] = simplify(subst(s.value));
        } else {
            ExprRef addr = simplify(subst(s.addr));
            ExprRef value = simplify(subst(s.value));
            mem = make_store(mem, addr, value, s.width);
            out.writes.push_back({addr, value, s.width});
        }
    }
};

} // namespace

SymbolicSummary execute_symbolic(const Program &p, const GadgetPath &g) {
    const Function *fn = find_function(p, g.function_entry);
    if (!fn)
        throw ValidationError("gadget references unknown function entry");

    SymState st(p);
    std::vector<std::string> havoc = havoc_registers(p.arch);
    unsigned n_fixed = 0;

    for (size_t si = 0; si < g.path.size(); si++) {
        const PathSeg &seg = g.path[si];
        const BasicBlock &bb = fn->blocks.at(seg.block);
        for (uint32_t i = seg.first; i <= seg.last; i++) {
            const Instruction &in = bb.instrs[i];
            if (p.is_fixed_call(in)) {
                // opaque call: clobber caller-saved state with fresh symbols,
                // leave memory intact
                std::string tag = "fcall" + std::to_string(n_fixed++);
                for (const std::string &r : havoc)
                    st.regs[r] = make_sym(tag + "_" + r, p.arch.reg_width(r));
                continue;
            }
            if (in.cls == InstrClass::CALL)
                throw ValidationError("plain call in gadget interior");
            for (const Stmt &s : in.ir)
                st.exec(s);
        }
        // edge to the next segment contributes a path constraint
        if (si + 1 < g.path.size()) {
            const Instruction &term = bb.instrs[seg.last];
            uint64_t next_addr = g.path[si + 1].block;
            if (term.cls == InstrClass::COND) {
                EdgeKind kind = EdgeKind::Unconditional;
                bool found = false;
                for (const Succ &s : bb.succs)
                    if (s.addr == next_addr) {
                        kind = s.kind;
                        found = true;
                        break;
                    }
                if (!found)
                    throw ValidationError("path edge missing in CFG");
                ExprRef cond = simplify(st.subst(term.branch_cond));
                if (kind == EdgeKind::Fallthrough)
                    cond = simplify(make_not(cond));
                st.out.constraints.push_back(cond);
            } else if (term.cls == InstrClass::IJUMP) {
                // crossing a static indirect-jump edge pins its target
                ExprRef target = st.reg(p.arch.ip);
                st.out.constraints.push_back(simplify(make_bin(
                    BinKind::Eq, target, make_const(target->width, next_addr))));
            }
        }
    }

    SymbolicSummary out = std::move(st.out);
    for (const std::string &r : p.arch.classifiable)
        out.reg_out[r] = simplify(st.regs.at(r));
    out.mem_out = st.mem;
    out.suffix_target = simplify(st.regs.at(p.arch.ip));
    return out;
}

} // namespace gadgex
