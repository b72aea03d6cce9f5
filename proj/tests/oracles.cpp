#include "oracles.hpp"

#include "gadgex/errors.hpp"

#include <algorithm>
#include <sstream>

namespace gadgex::testing {

namespace {

uint64_t nmask(unsigned w, uint64_t v) {
    if (w >= 64)
        return v;
    return v & ((uint64_t(1) << w) - 1);
}

int64_t nsigned(unsigned w, uint64_t v) {
    v = nmask(w, v);
    if (w < 64 && (v & (uint64_t(1) << (w - 1))))
        return int64_t(v | ~nmask(w, ~uint64_t(0)));
    return int64_t(v);
}

uint64_t naive_load(const MachineState &st, const std::map<uint64_t, uint8_t> &mem,
                    uint64_t addr, unsigned w) {
    uint64_t v = 0;
    unsigned n = w / 8;
    if (st.arch->endianness == Endian::Little) {
        for (unsigned i = n; i > 0; i--) {
            auto it = mem.find(addr + i - 1);
            v = (v << 8) | (it == mem.end() ? 0 : it->second);
        }
    } else {
        for (unsigned i = 0; i < n; i++) {
            auto it = mem.find(addr + i);
            v = (v << 8) | (it == mem.end() ? 0 : it->second);
        }
    }
    return v;
}

void naive_store(const MachineState &st, std::map<uint64_t, uint8_t> &mem,
                 uint64_t addr, unsigned w, uint64_t v) {
    unsigned n = w / 8;
    for (unsigned i = 0; i < n; i++) {
        unsigned shift = st.arch->endianness == Endian::Little ? 8 * i
                                                               : 8 * (n - 1 - i);
        mem[addr + i] = uint8_t((v >> shift) & 0xff);
    }
}

uint64_t naive_eval_in(const MachineState &st, const std::map<uint64_t, uint8_t> &mem,
                       const ExprRef &e);

std::map<uint64_t, uint8_t> naive_mem(const MachineState &st, const ExprRef &m) {
    if (m->kind == ExprKind::MemInit)
        return st.mem;
    if (m->kind != ExprKind::MemStore)
        throw WidthError("oracle: not a memory expression");
    auto base = naive_mem(st, m->a);
    uint64_t addr = naive_eval_in(st, base, m->b);
    uint64_t val = naive_eval_in(st, base, m->c);
    naive_store(st, base, addr, m->hi, val);
    return base;
}

uint64_t naive_eval_in(const MachineState &st, const std::map<uint64_t, uint8_t> &mem,
                       const ExprRef &e) {
    switch (e->kind) {
    case ExprKind::Const:
        return e->value;
    case ExprKind::Reg:
    case ExprKind::Init: {
        auto it = st.regs.find(e->name);
        return nmask(e->width, it == st.regs.end() ? 0 : it->second);
    }
    case ExprKind::Sym:
        return 0;
    case ExprKind::Load:
        return naive_load(st, mem, naive_eval_in(st, mem, e->a), e->width);
    case ExprKind::MemSelect: {
        auto m = naive_mem(st, e->a);
        return naive_load(st, m, naive_eval_in(st, m, e->b), e->width);
    }
    case ExprKind::MemInit:
    case ExprKind::MemStore:
        throw WidthError("oracle: memory expression in value position");
    case ExprKind::Bin: {
        uint64_t a = naive_eval_in(st, mem, e->a);
        uint64_t b = naive_eval_in(st, mem, e->b);
        unsigned w = e->a->width;
        switch (e->bin) {
        case BinKind::Add: return nmask(w, a + b);
        case BinKind::Sub: return nmask(w, a - b);
        case BinKind::Mul: return nmask(w, a * b);
        case BinKind::And: return a & b;
        case BinKind::Or: return a | b;
        case BinKind::Xor: return a ^ b;
        case BinKind::Shl: return b >= w ? 0 : nmask(w, a << b);
        case BinKind::Lshr: return b >= w ? 0 : a >> b;
        case BinKind::Ashr:
            if (b >= w)
                return nsigned(w, a) < 0 ? nmask(w, ~uint64_t(0)) : 0;
            return nmask(w, uint64_t(nsigned(w, a) >> b));
        case BinKind::Eq: return a == b;
        case BinKind::Ne: return a != b;
        case BinKind::Ult: return a < b;
        case BinKind::Slt: return nsigned(w, a) < nsigned(w, b);
        case BinKind::Uge: return a >= b;
        case BinKind::Sge: return nsigned(w, a) >= nsigned(w, b);
        }
        return 0;
    }
    case ExprKind::Un: {
        uint64_t a = naive_eval_in(st, mem, e->a);
        switch (e->un) {
        case UnKind::Not: return nmask(e->width, ~a);
        case UnKind::Neg: return nmask(e->width, ~a + 1);
        case UnKind::Zext: return a;
        case UnKind::Sext: return nmask(e->width, uint64_t(nsigned(e->a->width, a)));
        case UnKind::Extract: return nmask(e->width, a >> e->lo);
        }
        return 0;
    }
    case ExprKind::Ite:
        return naive_eval_in(st, mem, e->a) == 1 ? naive_eval_in(st, mem, e->b)
                                                 : naive_eval_in(st, mem, e->c);
    }
    return 0;
}

} // namespace

uint64_t naive_eval(const MachineState &state, const ExprRef &e) {
    return naive_eval_in(state, state.mem, e);
}

MachineState naive_exec(MachineState state, const std::vector<Stmt> &stmts) {
    for (const Stmt &s : stmts) {
        if (s.kind == Stmt::Kind::Assign) {
            uint64_t v = naive_eval_in(state, state.mem, s.value);
            state.regs[s.reg] = nmask(state.arch->reg_width(s.reg), v);
        } else {
            uint64_t addr = naive_eval_in(state, state.mem, s.addr);
            uint64_t v = naive_eval_in(state, state.mem, s.value);
            naive_store(state, state.mem, addr, s.width, v);
        }
    }
    return state;
}

namespace {

struct OracleCtx {
    const Program &p;
    const Function &fn;
    uint32_t max_len;
    std::vector<GadgetPath> out;

    struct Pos {
        uint64_t block;
        uint32_t index;
        uint64_t bounding_call_block; // 0 if none (entry or mid-block start)
        bool is_ep;
    };

    const BasicBlock &bb(uint64_t a) const { return fn.blocks.at(a); }

    bool is_plain_call(const Instruction &in) const {
        return (in.cls == InstrClass::CALL && !p.is_fixed_call(in)) ||
               in.cls == InstrClass::ICALL;
    }

    // checks coverage validity and computes content over the covered
    // instructions, excluding the endpoint itself
    bool path_ok(const std::vector<PathSeg> &segs, std::string &fixed_sym,
                 uint32_t &count) const {
        count = 0;
        fixed_sym.clear();
        for (size_t s = 0; s < segs.size(); s++) {
            const BasicBlock &blk = bb(segs[s].block);
            for (uint32_t i = segs[s].first; i <= segs[s].last; i++) {
                count++;
                bool is_endpoint =
                    s + 1 == segs.size() && i == segs.back().last;
                if (is_endpoint)
                    continue;
                const Instruction &in = blk.instrs[i];
                if (is_plain_call(in))
                    return false;
                if (p.is_fixed_call(in))
                    fixed_sym = *in.call_target; // latest in execution order
            }
        }
        return count <= max_len;
    }

    void emit(PrefixKind prefix, ContentKind content, const std::string &sym,
              SuffixKind suffix, std::vector<PathSeg> segs) {
        GadgetPath g;
        g.prefix = prefix;
        g.suffix = suffix;
        g.content = content;
        g.fixed_symbol = content == ContentKind::Fixed ? sym : "";
        g.module = p.module_name;
        g.function = fn.name;
        g.function_entry = fn.entry;
        g.start_addr = bb(segs.front().block).instrs[segs.front().first].addr;
        g.end_addr = bb(segs.back().block).instrs[segs.back().last].addr;
        std::string fixed_sym;
        uint32_t count = 0;
        path_ok(segs, fixed_sym, count); // count only; validity pre-checked
        g.instr_count = count;
        g.opcode_hash = opcode_hash_of(p, fn, segs);
        g.path = std::move(segs);
        out.push_back(std::move(g));
    }

    // all simple block chains from `from` to `to` (inclusive), forward over
    // succ edges
    void chains(uint64_t from, uint64_t to, std::vector<uint64_t> &chain,
                std::vector<std::vector<uint64_t>> &result) const {
        chain.push_back(from);
        if (from == to) {
            result.push_back(chain);
        } else {
            for (const Succ &s : bb(from).succs) {
                if (std::find(chain.begin(), chain.end(), s.addr) != chain.end())
                    continue;
                chains(s.addr, to, chain, result);
            }
        }
        chain.pop_back();
    }

    void run() {
        // endpoints
        struct Endpoint {
            uint64_t block;
            uint32_t index;
            SuffixKind suffix;
            bool is_terminator;
        };
        std::vector<Endpoint> endpoints;
        for (const auto &[a, blk] : fn.blocks)
            for (uint32_t i = 0; i < blk.instrs.size(); i++) {
                InstrClass c = blk.instrs[i].cls;
                if (c == InstrClass::ICALL)
                    endpoints.push_back(
                        {a, i, SuffixKind::IC, i + 1 == blk.instrs.size()});
                else if (c == InstrClass::IJUMP)
                    endpoints.push_back(
                        {a, i, SuffixKind::IJ, i + 1 == blk.instrs.size()});
                else if (c == InstrClass::RET)
                    endpoints.push_back(
                        {a, i, SuffixKind::RET, i + 1 == blk.instrs.size()});
            }

        // start positions
        std::vector<Pos> starts;
        starts.push_back({fn.entry, 0, 0, true});
        for (const auto &[a, blk] : fn.blocks)
            for (uint32_t i = 0; i < blk.instrs.size(); i++) {
                const Instruction &in = blk.instrs[i];
                if (in.cls != InstrClass::CALL && in.cls != InstrClass::ICALL)
                    continue;
                if (i + 1 < blk.instrs.size())
                    starts.push_back({a, i + 1, 0, false});
                else if (!blk.succs.empty())
                    starts.push_back({blk.succs[0].addr, 0, a, false});
            }

        for (const Endpoint &e : endpoints) {
            for (const Pos &s : starts) {
                if (s.block == e.block) {
                    if (s.index > e.index)
                        continue;
                    std::vector<PathSeg> segs{{s.block, s.index, e.index}};
                    std::string sym;
                    uint32_t count;
                    if (!path_ok(segs, sym, count))
                        continue;
                    emit(s.is_ep ? PrefixKind::EP : PrefixKind::CS,
                         sym.empty() ? ContentKind::Arb : ContentKind::Fixed, sym,
                         e.suffix, segs);
                    continue;
                }
                std::vector<uint64_t> chain;
                std::vector<std::vector<uint64_t>> found;
                chains(s.block, e.block, chain, found);
                for (const auto &blocks : found) {
                    // a start bounded by a call block is only a gadget when
                    // that call block is not itself traversed
                    if (s.bounding_call_block &&
                        std::find(blocks.begin(), blocks.end(),
                                  s.bounding_call_block) != blocks.end())
                        continue;
                    std::vector<PathSeg> segs;
                    for (size_t i = 0; i < blocks.size(); i++) {
                        uint32_t first = i == 0 ? s.index : 0;
                        uint32_t last = i + 1 == blocks.size()
                                            ? e.index
                                            : uint32_t(bb(blocks[i]).instrs.size() - 1);
                        segs.push_back({blocks[i], first, last});
                    }
                    std::string sym;
                    uint32_t count;
                    if (!path_ok(segs, sym, count))
                        continue;
                    emit(s.is_ep ? PrefixKind::EP : PrefixKind::CS,
                         sym.empty() ? ContentKind::Arb : ContentKind::Fixed, sym,
                         e.suffix, segs);
                }
            }

            // loop gadgets: the closed walk from the endpoint's return site
            // back to the indirect call
            if (e.suffix == SuffixKind::IC && e.is_terminator) {
                const BasicBlock &eb = bb(e.block);
                if (eb.succs.size() == 1) {
                    uint64_t ret_site = eb.succs[0].addr;
                    if (ret_site != e.block) {
                        std::vector<uint64_t> chain;
                        std::vector<std::vector<uint64_t>> found;
                        chains(ret_site, e.block, chain, found);
                        for (const auto &blocks : found) {
                            std::vector<PathSeg> segs;
                            for (size_t i = 0; i < blocks.size(); i++) {
                                uint32_t last =
                                    i + 1 == blocks.size()
                                        ? e.index
                                        : uint32_t(bb(blocks[i]).instrs.size() - 1);
                                segs.push_back({blocks[i], 0, last});
                            }
                            std::string sym;
                            uint32_t count;
                            if (!path_ok(segs, sym, count))
                                continue;
                            emit(PrefixKind::CS, ContentKind::Loop, "", e.suffix,
                                 segs);
                        }
                    }
                }
            }
        }
    }
};

} // namespace

std::vector<GadgetPath> enumerate_gadgets_oracle(const Program &p, uint32_t max_len) {
    std::vector<GadgetPath> all;
    for (const Function &fn : p.functions) {
        OracleCtx cx{p, fn, max_len, {}};
        cx.run();
        for (auto &g : cx.out)
            all.push_back(std::move(g));
    }
    return all;
}

std::string gadget_signature(const GadgetPath &g) {
    std::ostringstream os;
    os << g.function << "|" << prefix_name(g.prefix) << "|" << content_name(g.content)
       << "|" << g.fixed_symbol << "|" << suffix_name(g.suffix) << "|" << std::hex;
    for (const PathSeg &s : g.path)
        os << s.block << ":" << std::dec << s.first << "-" << s.last << std::hex
           << ";";
    return os.str();
}

std::vector<std::string> signatures(const std::vector<GadgetPath> &gs) {
    std::vector<std::string> out;
    for (const auto &g : gs)
        out.push_back(gadget_signature(g));
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace gadgex::testing
