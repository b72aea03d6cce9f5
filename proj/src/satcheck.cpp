#include "gadgex/satcheck.hpp"

#include "gadgex/errors.hpp"
#include "gadgex/ir.hpp"
#include "gadgex/simplify.hpp"

#include <algorithm>
#include <random>
#include <sstream>

namespace gadgex {

const char *sat_result_name(SatResult r) {
    switch (r) {
    case SatResult::Sat: return "SAT";
    case SatResult::Unsat: return "UNSAT";
    case SatResult::Unknown: return "UNKNOWN";
    }
    return "?";
}

std::string Witness::to_text() const {
    std::ostringstream os;
    for (const auto &[term, value] : terms)
        os << expr_to_text(term) << "=0x" << std::hex << value << std::dec << "\n";
    return os.str();
}

namespace {

// free terms: initial registers, fresh call symbols, and reads from initial
// memory (selects directly over meminit)
void collect_terms(const ExprRef &e, std::vector<ExprRef> &terms) {
    if (!e)
        return;
    switch (e->kind) {
    case ExprKind::Init:
    case ExprKind::Sym: {
        for (const auto &t : terms)
            if (expr_equal(t, e))
                return;
        terms.push_back(e);
        return;
    }
    case ExprKind::MemSelect:
        collect_terms(e->b, terms);
        if (e->a->kind == ExprKind::MemInit) {
            for (const auto &t : terms)
                if (expr_equal(t, e))
                    return;
            terms.push_back(e);
        } else {
            collect_terms(e->a, terms);
        }
        return;
    default:
        collect_terms(e->a, terms);
        collect_terms(e->b, terms);
        collect_terms(e->c, terms);
        return;
    }
}

// constants appearing anywhere in the conjunction; an equality can only be
// hit by sampling its own constant
void collect_constants(const ExprRef &e, std::vector<uint64_t> &out) {
    if (!e)
        return;
    if (e->is_const())
        out.push_back(e->value);
    collect_constants(e->a, out);
    collect_constants(e->b, out);
    collect_constants(e->c, out);
}

std::vector<uint64_t> candidate_pool(unsigned width, std::mt19937_64 &rng,
                                     size_t random_count,
                                     const std::vector<uint64_t> &seen_constants) {
    std::vector<uint64_t> pool;
    auto push = [&](uint64_t v) {
        v = mask_width(width, v);
        if (std::find(pool.begin(), pool.end(), v) == pool.end())
            pool.push_back(v);
    };
    push(0);
    push(1);
    push(2);
    for (uint64_t c : seen_constants) {
        push(c);
        push(c + 1);
        push(c - 1);
    }
    for (unsigned k : {3u, 4u, 7u, 8u, 15u, 16u, 31u, 32u, 47u, 63u}) {
        if (k < width)
            push(uint64_t(1) << k);
        if (k <= width)
            push((k == 64 ? ~uint64_t(0) : (uint64_t(1) << k)) - 1);
    }
    push(mask_width(width, ~uint64_t(0)));
    for (size_t i = 0; i < random_count; i++)
        push(rng());
    return pool;
}

struct Assignment {
    const std::vector<ExprRef> &terms;
    std::vector<uint64_t> values;

    Witness to_witness() const {
        Witness w;
        for (size_t i = 0; i < terms.size(); i++)
            w.terms.emplace_back(terms[i], values[i]);
        return w;
    }
};

} // namespace

std::pair<MachineState, SymEnv> state_from_witness(const Arch &arch,
                                                   const Witness &w) {
    MachineState state(arch);
    SymEnv syms;
    for (const auto &[term, value] : w.terms)
        if (term->kind == ExprKind::Init)
            state.set_reg(term->name, value);
        else if (term->kind == ExprKind::Sym)
            syms[term->name] = mask_width(term->width, value);

    // memory terms: concretize inner reads before outer ones so dependent
    // addresses resolve against already-written bytes
    std::vector<std::pair<ExprRef, uint64_t>> mem_terms;
    for (const auto &[term, value] : w.terms)
        if (term->kind == ExprKind::MemSelect)
            mem_terms.emplace_back(term, value);
    std::stable_sort(mem_terms.begin(), mem_terms.end(),
                     [](const auto &a, const auto &b) {
                         return expr_size(a.first) < expr_size(b.first);
                     });
    for (const auto &[term, value] : mem_terms) {
        uint64_t addr = eval_expr(state, term->b, &syms);
        state.store(addr, term->width, mask_width(term->width, value));
    }
    return {std::move(state), std::move(syms)};
}

SatStatus check_satisfiable(const Arch &arch, const std::vector<ExprRef> &constraints,
                            const std::vector<ExprRef> &extra_constraints,
                            uint32_t budget, uint64_t seed) {
    if (budget == 0)
        throw ValidationError("satisfiability budget must be positive");

    std::vector<ExprRef> conjuncts;
    for (const auto &c : constraints)
        conjuncts.push_back(simplify(c));
    for (const auto &c : extra_constraints)
        conjuncts.push_back(simplify(c));
    for (const auto &c : conjuncts)
        if (c->width != 1)
            throw WidthError("constraint width must be 1");

    // rule 1: any conjunct folded to false
    for (const auto &c : conjuncts)
        if (c->is_const(0))
            return {SatResult::Unsat, {}};

    // rule 2: eq(e, c1) and eq(e, c2) with c1 != c2
    for (size_t i = 0; i < conjuncts.size(); i++) {
        const auto &x = conjuncts[i];
        if (!(x->kind == ExprKind::Bin && x->bin == BinKind::Eq && x->b->is_const()))
            continue;
        for (size_t j = i + 1; j < conjuncts.size(); j++) {
            const auto &y = conjuncts[j];
            if (y->kind == ExprKind::Bin && y->bin == BinKind::Eq &&
                y->b->is_const() && expr_equal(x->a, y->a) &&
                x->b->value != y->b->value)
                return {SatResult::Unsat, {}};
        }
    }

    // drop trivially true conjuncts before the witness search
    std::vector<ExprRef> live;
    for (const auto &c : conjuncts)
        if (!c->is_const(1))
            live.push_back(c);

    std::vector<ExprRef> terms;
    for (const auto &c : live)
        collect_terms(c, terms);

    Assignment asg{terms, std::vector<uint64_t>(terms.size(), 0)};
    uint32_t used = 0;
    auto score = [&]() -> size_t {
        used++;
        auto [state, syms] = state_from_witness(arch, asg.to_witness());
        size_t n = 0;
        for (const ExprRef &c : live)
            n += eval_expr(state, c, &syms) == 1;
        return n;
    };

    if (live.empty())
        return {SatResult::Sat, asg.to_witness()};

    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<uint64_t> constants;
    for (const auto &c : live)
        collect_constants(c, constants);
    std::vector<std::vector<uint64_t>> pools;
    for (const auto &t : terms)
        pools.push_back(candidate_pool(t->width, rng, 4, constants));

    // phase 1: the shared fixed candidates, all terms assigned the same slot
    size_t max_pool = 0;
    for (const auto &p : pools)
        max_pool = std::max(max_pool, p.size());
    for (size_t k = 0; k < max_pool && used < budget; k++) {
        for (size_t i = 0; i < terms.size(); i++)
            asg.values[i] = pools[i][k % pools[i].size()];
        if (score() == live.size())
            return {SatResult::Sat, asg.to_witness()};
    }

    // phase 2: greedy coordinate improvement over the candidate pools, with
    // seeded random restarts until the budget runs out
    bool first_start = true;
    while (used < budget) {
        if (first_start) {
            std::fill(asg.values.begin(), asg.values.end(), 0);
            first_start = false;
        } else {
            for (size_t i = 0; i < terms.size(); i++) {
                uint64_t roll = rng();
                asg.values[i] = (roll & 1)
                                    ? pools[i][size_t(roll >> 1) % pools[i].size()]
                                    : mask_width(terms[i]->width, rng());
            }
        }
        size_t best = score();
        if (best == live.size())
            return {SatResult::Sat, asg.to_witness()};
        bool improved = true;
        while (improved && used < budget) {
            improved = false;
            for (size_t i = 0; i < terms.size() && used < budget; i++) {
                uint64_t keep = asg.values[i];
                uint64_t best_v = keep;
                for (uint64_t v : pools[i]) {
                    if (used >= budget)
                        break;
                    if (v == keep)
                        continue;
                    asg.values[i] = v;
                    size_t s = score();
                    if (s == live.size())
                        return {SatResult::Sat, asg.to_witness()};
                    if (s > best) {
                        best = s;
                        best_v = v;
                    }
                }
                asg.values[i] = best_v;
                improved |= best_v != keep;
            }
        }
    }

    return {SatResult::Unknown, {}};
}

std::string solver_reply_to_text(const SolverReply &reply) {
    std::ostringstream os;
    switch (reply.result) {
    case SatResult::Sat: os << "sat\n"; break;
    case SatResult::Unsat: os << "unsat\n"; break;
    case SatResult::Unknown: os << "unknown\n"; break;
    }
    for (const auto &[term, value] : reply.witness)
        os << term << "=0x" << std::hex << value << std::dec << "\n";
    return os.str();
}

SolverReply parse_solver_reply(const std::string &text) {
    SolverReply reply;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw ParseError(1, "empty solver reply");
    if (line == "sat")
        reply.result = SatResult::Sat;
    else if (line == "unsat")
        reply.result = SatResult::Unsat;
    else if (line == "unknown")
        reply.result = SatResult::Unknown;
    else
        throw ParseError(1, "bad solver verdict: " + line);
    size_t lineno = 1;
    while (std::getline(in, line)) {
        lineno++;
        if (line.empty())
            continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(lineno, "bad witness line: " + line);
        std::string value = line.substr(eq + 1);
        if (value.rfind("0x", 0) != 0)
            throw ParseError(lineno, "witness values must be 0x-hex: " + line);
        try {
            reply.witness.emplace_back(line.substr(0, eq),
                                       std::stoull(value.substr(2), nullptr, 16));
        } catch (...) {
            throw ParseError(lineno, "bad witness value: " + line);
        }
    }
    return reply;
}

SolverReply ReferenceSolver::solve(const std::string &conjunction) {
    std::vector<ExprRef> constraints;
    std::istringstream in(conjunction);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        constraints.push_back(parse_expr(arch_, line));
    }
    SatStatus st = check_satisfiable(arch_, constraints, {}, budget_, seed_);
    SolverReply reply;
    reply.result = st.result;
    for (const auto &[term, value] : st.witness.terms)
        reply.witness.emplace_back(expr_to_text(term), value);
    return reply;
}

SatStatus solve_with_backend(SolverBackend &backend, const Arch &arch,
                             const std::vector<ExprRef> &constraints) {
    std::ostringstream req;
    for (const auto &c : constraints)
        req << expr_to_text(c) << "\n";
    SolverReply reply = backend.solve(req.str());
    SatStatus st;
    st.result = reply.result;
    for (const auto &[text, value] : reply.witness)
        st.witness.terms.emplace_back(parse_expr(arch, text), value);
    return st;
}

} // namespace gadgex
