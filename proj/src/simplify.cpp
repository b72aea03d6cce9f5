#include "gadgex/simplify.hpp"

#include <optional>
#include <unordered_map>

namespace gadgex {

namespace {

uint64_t fold_bin(BinKind op, unsigned w, uint64_t a, uint64_t b) {
    switch (op) {
    case BinKind::Add: return mask_width(w, a + b);
    case BinKind::Sub: return mask_width(w, a - b);
    case BinKind::Mul: return mask_width(w, a * b);
    case BinKind::And: return a & b;
    case BinKind::Or: return a | b;
    case BinKind::Xor: return a ^ b;
    case BinKind::Shl: return b >= w ? 0 : mask_width(w, a << b);
    case BinKind::Lshr: return b >= w ? 0 : a >> b;
    case BinKind::Ashr: {
        int64_t sa = sign_extend(w, a);
        if (b >= w)
            return mask_width(w, uint64_t(sa < 0 ? -1 : 0));
        return mask_width(w, uint64_t(sa >> b));
    }
    case BinKind::Eq: return a == b;
    case BinKind::Ne: return a != b;
    case BinKind::Ult: return a < b;
    case BinKind::Slt: return sign_extend(w, a) < sign_extend(w, b);
    case BinKind::Uge: return a >= b;
    case BinKind::Sge: return sign_extend(w, a) >= sign_extend(w, b);
    }
    return 0;
}

// (base, constant offset) decomposition used by store forwarding
struct AddrForm {
    ExprRef base; // null for pure constants
    uint64_t offset;
};

AddrForm addr_form(const ExprRef &a) {
    if (a->is_const())
        return {nullptr, a->value};
    if (a->kind == ExprKind::Bin && a->bin == BinKind::Add && a->b->is_const())
        return {a->a, a->b->value};
    return {a, 0};
}

// true only when the byte ranges provably cannot overlap
bool disjoint_ranges(unsigned addr_bits, uint64_t o1, unsigned w1, uint64_t o2,
                     unsigned w2) {
    uint64_t s1 = w1 / 8, s2 = w2 / 8;
    uint64_t top = addr_bits >= 64 ? ~uint64_t(0) : (uint64_t(1) << addr_bits) - 1;
    // reject ranges that wrap the address space
    if (o1 > top - (s1 - 1) || o2 > top - (s2 - 1))
        return false;
    return o1 + s1 <= o2 || o2 + s2 <= o1;
}

bool provably_disjoint(unsigned addr_bits, const ExprRef &a1, unsigned w1,
                       const ExprRef &a2, unsigned w2) {
    AddrForm f1 = addr_form(a1);
    AddrForm f2 = addr_form(a2);
    if (!f1.base && !f2.base)
        return disjoint_ranges(addr_bits, f1.offset, w1, f2.offset, w2);
    if (f1.base && f2.base && expr_equal(f1.base, f2.base))
        return disjoint_ranges(addr_bits, f1.offset, w1, f2.offset, w2);
    return false;
}

BinKind negate_compare(BinKind op) {
    switch (op) {
    case BinKind::Eq: return BinKind::Ne;
    case BinKind::Ne: return BinKind::Eq;
    case BinKind::Ult: return BinKind::Uge;
    case BinKind::Uge: return BinKind::Ult;
    case BinKind::Slt: return BinKind::Sge;
    case BinKind::Sge: return BinKind::Slt;
    default: return op;
    }
}

// canonical argument order: non-constants before constants, then structural
bool should_swap(const ExprRef &a, const ExprRef &b) {
    bool ac = a->is_const(), bc = b->is_const();
    if (ac != bc)
        return ac;
    return expr_compare(a, b) > 0;
}

struct Simplifier {
    std::unordered_map<const Expr *, ExprRef> memo;

    ExprRef simp(const ExprRef &e) {
        auto it = memo.find(e.get());
        if (it != memo.end())
            return it->second;
        ExprRef cur = rebuild(e);
        for (;;) {
            std::optional<ExprRef> next;
            switch (cur->kind) {
            case ExprKind::Bin: next = rule_bin(cur); break;
            case ExprKind::Un: next = rule_un(cur); break;
            case ExprKind::Ite: next = rule_ite(cur); break;
            case ExprKind::MemSelect: next = rule_select(cur); break;
            default: break;
            }
            if (!next)
                break;
            cur = rebuild(*next);
        }
        memo[e.get()] = cur;
        memo[cur.get()] = cur; // results are fixpoints
        return cur;
    }

    ExprRef rebuild(const ExprRef &e) {
        switch (e->kind) {
        case ExprKind::Const:
        case ExprKind::Reg:
        case ExprKind::Init:
        case ExprKind::Sym:
        case ExprKind::MemInit:
            return e;
        case ExprKind::Load: {
            ExprRef a = simp(e->a);
            return a.get() == e->a.get() ? e : make_load(a, e->width);
        }
        case ExprKind::MemSelect: {
            ExprRef m = simp(e->a);
            ExprRef a = simp(e->b);
            return m.get() == e->a.get() && a.get() == e->b.get()
                       ? e
                       : make_select(m, a, e->width);
        }
        case ExprKind::MemStore: {
            ExprRef m = simp(e->a);
            ExprRef a = simp(e->b);
            ExprRef v = simp(e->c);
            return m.get() == e->a.get() && a.get() == e->b.get() &&
                           v.get() == e->c.get()
                       ? e
                       : make_store(m, a, v, e->hi);
        }
        case ExprKind::Bin: {
            ExprRef a = simp(e->a);
            ExprRef b = simp(e->b);
            return a.get() == e->a.get() && b.get() == e->b.get()
                       ? e
                       : make_bin(e->bin, a, b);
        }
        case ExprKind::Un: {
            ExprRef a = simp(e->a);
            if (a.get() == e->a.get())
                return e;
            switch (e->un) {
            case UnKind::Not: return make_not(a);
            case UnKind::Neg: return make_neg(a);
            case UnKind::Zext: return make_zext(a, e->width);
            case UnKind::Sext: return make_sext(a, e->width);
            case UnKind::Extract: return make_extract(a, e->hi, e->lo);
            }
            return e;
        }
        case ExprKind::Ite: {
            ExprRef c = simp(e->a);
            ExprRef t = simp(e->b);
            ExprRef f = simp(e->c);
            return c.get() == e->a.get() && t.get() == e->b.get() &&
                           f.get() == e->c.get()
                       ? e
                       : make_ite(c, t, f);
        }
        }
        return e;
    }

    std::optional<ExprRef> rule_bin(const ExprRef &e) {
        const ExprRef &a = e->a;
        const ExprRef &b = e->b;
        unsigned w = a->width;

        if (a->is_const() && b->is_const())
            return make_const(e->width, fold_bin(e->bin, w, a->value, b->value));

        switch (e->bin) {
        case BinKind::Add:
            if (b->is_const(0))
                return a;
            // reassociate constant tails: add(add(x, c1), c2) -> add(x, c1+c2)
            if (b->is_const() && a->kind == ExprKind::Bin && a->bin == BinKind::Add &&
                a->b->is_const())
                return make_bin(BinKind::Add, a->a,
                                make_const(w, mask_width(w, a->b->value + b->value)));
            break;
        case BinKind::Sub:
            if (b->is_const(0))
                return a;
            if (expr_equal(a, b))
                return make_const(e->width, 0);
            // normalize constant subtraction to addition of the complement
            if (b->is_const())
                return make_bin(BinKind::Add, a,
                                make_const(w, mask_width(w, -b->value)));
            break;
        case BinKind::Mul:
            if (b->is_const(1))
                return a;
            if (a->is_const(1))
                return b;
            if (b->is_const(0) || a->is_const(0))
                return make_const(e->width, 0);
            break;
        case BinKind::And:
            if (expr_equal(a, b))
                return a;
            if (b->is_const(mask_width(w, ~uint64_t(0))))
                return a;
            if (a->is_const(mask_width(w, ~uint64_t(0))))
                return b;
            if (b->is_const(0) || a->is_const(0))
                return make_const(e->width, 0);
            break;
        case BinKind::Or:
            if (expr_equal(a, b))
                return a;
            if (b->is_const(0))
                return a;
            if (a->is_const(0))
                return b;
            if (b->is_const(mask_width(w, ~uint64_t(0))) ||
                a->is_const(mask_width(w, ~uint64_t(0))))
                return make_const(e->width, mask_width(w, ~uint64_t(0)));
            break;
        case BinKind::Xor:
            if (expr_equal(a, b))
                return make_const(e->width, 0);
            if (b->is_const(0))
                return a;
            if (a->is_const(0))
                return b;
            break;
        case BinKind::Shl:
        case BinKind::Lshr:
        case BinKind::Ashr:
            if (b->is_const(0))
                return a;
            break;
        case BinKind::Eq:
        case BinKind::Uge:
        case BinKind::Sge:
            if (expr_equal(a, b))
                return make_const(1, 1);
            break;
        case BinKind::Ne:
        case BinKind::Ult:
        case BinKind::Slt:
            if (expr_equal(a, b))
                return make_const(1, 0);
            break;
        }

        if (bin_is_commutative(e->bin) && should_swap(a, b))
            return make_bin(e->bin, b, a);
        return std::nullopt;
    }

    std::optional<ExprRef> rule_un(const ExprRef &e) {
        const ExprRef &a = e->a;
        if (a->is_const()) {
            switch (e->un) {
            case UnKind::Not:
                return make_const(e->width, mask_width(e->width, ~a->value));
            case UnKind::Neg:
                return make_const(e->width, mask_width(e->width, ~a->value + 1));
            case UnKind::Zext:
                return make_const(e->width, a->value);
            case UnKind::Sext:
                return make_const(
                    e->width,
                    mask_width(e->width, uint64_t(sign_extend(a->width, a->value))));
            case UnKind::Extract:
                return make_const(e->width, mask_width(e->width, a->value >> e->lo));
            }
        }
        switch (e->un) {
        case UnKind::Not:
            if (a->kind == ExprKind::Un && a->un == UnKind::Not)
                return a->a;
            if (a->kind == ExprKind::Bin && bin_is_compare(a->bin))
                return make_bin(negate_compare(a->bin), a->a, a->b);
            break;
        case UnKind::Neg:
            if (a->kind == ExprKind::Un && a->un == UnKind::Neg)
                return a->a;
            break;
        case UnKind::Zext:
        case UnKind::Sext:
            if (e->width == a->width)
                return a;
            break;
        case UnKind::Extract:
            if (e->lo == 0 && e->hi == a->width - 1)
                return a;
            // extract<k-1:0>(zext(x)) == x when x has exactly k bits
            if (e->lo == 0 && a->kind == ExprKind::Un && a->un == UnKind::Zext &&
                a->a->width == e->hi + 1)
                return a->a;
            break;
        }
        return std::nullopt;
    }

    std::optional<ExprRef> rule_select(const ExprRef &e) {
        // select over a store chain: forward on a structurally equal address,
        // bypass stores that provably cannot alias, keep everything else
        if (e->a->kind != ExprKind::MemStore)
            return std::nullopt;
        const ExprRef &st = e->a;
        unsigned store_width = st->hi;
        if (store_width == e->width && expr_equal(st->b, e->b))
            return st->c;
        unsigned addr_bits = e->b->width;
        if (provably_disjoint(addr_bits, st->b, store_width, e->b, e->width))
            return make_select(st->a, e->b, e->width);
        return std::nullopt;
    }

    std::optional<ExprRef> rule_ite(const ExprRef &e) {
        if (e->a->is_const())
            return e->a->value ? e->b : e->c;
        if (expr_equal(e->b, e->c))
            return e->b;
        return std::nullopt;
    }
};

} // namespace

ExprRef simplify(const ExprRef &e) {
    if (!e)
        return e;
    Simplifier s;
    return s.simp(e);
}

} // namespace gadgex
