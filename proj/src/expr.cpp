#include "gadgex/expr.hpp"

#include "gadgex/errors.hpp"

#include <array>
#include <sstream>

namespace gadgex {

uint64_t mask_width(unsigned width, uint64_t v) {
    if (width >= 64)
        return v;
    return v & ((uint64_t(1) << width) - 1);
}

int64_t sign_extend(unsigned width, uint64_t v) {
    v = mask_width(width, v);
    if (width >= 64)
        return int64_t(v);
    uint64_t sign_bit = uint64_t(1) << (width - 1);
    if (v & sign_bit)
        v |= ~((uint64_t(1) << width) - 1);
    return int64_t(v);
}

const char *bin_name(BinKind k) {
    switch (k) {
    case BinKind::Add: return "add";
    case BinKind::Sub: return "sub";
    case BinKind::Mul: return "mul";
    case BinKind::And: return "and";
    case BinKind::Or: return "or";
    case BinKind::Xor: return "xor";
    case BinKind::Shl: return "shl";
    case BinKind::Lshr: return "lshr";
    case BinKind::Ashr: return "ashr";
    case BinKind::Eq: return "eq";
    case BinKind::Ne: return "ne";
    case BinKind::Ult: return "ult";
    case BinKind::Slt: return "slt";
    case BinKind::Uge: return "uge";
    case BinKind::Sge: return "sge";
    }
    return "?";
}

bool bin_is_commutative(BinKind k) {
    switch (k) {
    case BinKind::Add:
    case BinKind::Mul:
    case BinKind::And:
    case BinKind::Or:
    case BinKind::Xor:
    case BinKind::Eq:
    case BinKind::Ne:
        return true;
    default:
        return false;
    }
}

bool bin_is_compare(BinKind k) {
    switch (k) {
    case BinKind::Eq:
    case BinKind::Ne:
    case BinKind::Ult:
    case BinKind::Slt:
    case BinKind::Uge:
    case BinKind::Sge:
        return true;
    default:
        return false;
    }
}

namespace {

constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr uint64_t kFnvPrime = 0x100000001b3ull;

uint64_t fnv_mix(uint64_t h, uint64_t v) {
    for (int i = 0; i < 8; i++) {
        h ^= (v >> (i * 8)) & 0xff;
        h *= kFnvPrime;
    }
    return h;
}

uint64_t fnv_str(uint64_t h, const std::string &s) {
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

size_t node_hash(const Expr &e) {
    uint64_t h = kFnvOffset;
    h = fnv_mix(h, uint64_t(e.kind));
    h = fnv_mix(h, e.width);
    h = fnv_mix(h, e.value);
    h = fnv_str(h, e.name);
    h = fnv_mix(h, uint64_t(e.bin));
    h = fnv_mix(h, uint64_t(e.un));
    h = fnv_mix(h, (uint64_t(e.hi) << 32) | e.lo);
    if (e.a) h = fnv_mix(h, e.a->hash);
    if (e.b) h = fnv_mix(h, e.b->hash);
    if (e.c) h = fnv_mix(h, e.c->hash);
    return size_t(h);
}

ExprRef finish(Expr e) {
    e.hash = node_hash(e);
    return std::make_shared<const Expr>(std::move(e));
}

void require_value_width(unsigned w, const char *what) {
    if (w != 1 && w != 8 && w != 16 && w != 32 && w != 64)
        throw WidthError(std::string(what) + ": unsupported width " + std::to_string(w));
}

void require_mem_width(unsigned w, const char *what) {
    if (w != 8 && w != 16 && w != 32 && w != 64)
        throw WidthError(std::string(what) + ": unsupported memory width " +
                         std::to_string(w));
}

} // namespace

ExprRef make_const(unsigned width, uint64_t value) {
    require_value_width(width, "const");
    if (mask_width(width, value) != value)
        throw WidthError("constant " + std::to_string(value) +
                         " does not fit width " + std::to_string(width));
    Expr e;
    e.kind = ExprKind::Const;
    e.width = width;
    e.value = value;
    return finish(std::move(e));
}

ExprRef make_reg(const std::string &name, unsigned width) {
    require_value_width(width, "register");
    Expr e;
    e.kind = ExprKind::Reg;
    e.width = width;
    e.name = name;
    return finish(std::move(e));
}

ExprRef make_init(const std::string &name, unsigned width) {
    require_value_width(width, "init");
    Expr e;
    e.kind = ExprKind::Init;
    e.width = width;
    e.name = name;
    return finish(std::move(e));
}

ExprRef make_sym(const std::string &name, unsigned width) {
    require_value_width(width, "sym");
    Expr e;
    e.kind = ExprKind::Sym;
    e.width = width;
    e.name = name;
    return finish(std::move(e));
}

ExprRef make_meminit() {
    Expr e;
    e.kind = ExprKind::MemInit;
    e.width = 0;
    return finish(std::move(e));
}

ExprRef make_load(ExprRef addr, unsigned width) {
    require_mem_width(width, "load");
    if (!addr || addr->is_mem_sort())
        throw WidthError("load address must be a value expression");
    Expr e;
    e.kind = ExprKind::Load;
    e.width = width;
    e.a = std::move(addr);
    return finish(std::move(e));
}

ExprRef make_select(ExprRef mem, ExprRef addr, unsigned width) {
    require_mem_width(width, "select");
    if (!mem || !mem->is_mem_sort())
        throw WidthError("select needs a memory expression");
    if (!addr || addr->is_mem_sort())
        throw WidthError("select address must be a value expression");
    Expr e;
    e.kind = ExprKind::MemSelect;
    e.width = width;
    e.a = std::move(mem);
    e.b = std::move(addr);
    return finish(std::move(e));
}

ExprRef make_store(ExprRef mem, ExprRef addr, ExprRef value, unsigned width) {
    require_mem_width(width, "store");
    if (!mem || !mem->is_mem_sort())
        throw WidthError("store needs a memory expression");
    if (!addr || addr->is_mem_sort() || !value || value->is_mem_sort())
        throw WidthError("store address/value must be value expressions");
    if (value->width != width)
        throw WidthError("store value width " + std::to_string(value->width) +
                         " != store width " + std::to_string(width));
    Expr e;
    e.kind = ExprKind::MemStore;
    e.width = 0;
    e.a = std::move(mem);
    e.b = std::move(addr);
    e.c = std::move(value);
    // the declared width travels in `hi` so the node itself stays mem-sorted
    e.hi = width;
    return finish(std::move(e));
}

ExprRef make_bin(BinKind op, ExprRef lhs, ExprRef rhs) {
    if (!lhs || !rhs || lhs->is_mem_sort() || rhs->is_mem_sort())
        throw WidthError("binary operands must be value expressions");
    if (lhs->width != rhs->width)
        throw WidthError(std::string(bin_name(op)) + ": operand widths differ (" +
                         std::to_string(lhs->width) + " vs " +
                         std::to_string(rhs->width) + ")");
    Expr e;
    e.kind = ExprKind::Bin;
    e.bin = op;
    e.width = bin_is_compare(op) ? 1 : lhs->width;
    e.a = std::move(lhs);
    e.b = std::move(rhs);
    return finish(std::move(e));
}

static ExprRef make_un_node(UnKind op, ExprRef arg, unsigned width, unsigned hi,
                            unsigned lo) {
    Expr e;
    e.kind = ExprKind::Un;
    e.un = op;
    e.width = width;
    e.hi = hi;
    e.lo = lo;
    e.a = std::move(arg);
    return finish(std::move(e));
}

ExprRef make_not(ExprRef arg) {
    if (!arg || arg->is_mem_sort())
        throw WidthError("not: operand must be a value expression");
    unsigned w = arg->width;
    return make_un_node(UnKind::Not, std::move(arg), w, 0, 0);
}

ExprRef make_neg(ExprRef arg) {
    if (!arg || arg->is_mem_sort())
        throw WidthError("neg: operand must be a value expression");
    unsigned w = arg->width;
    return make_un_node(UnKind::Neg, std::move(arg), w, 0, 0);
}

ExprRef make_zext(ExprRef arg, unsigned width) {
    require_value_width(width, "zext");
    if (!arg || arg->is_mem_sort())
        throw WidthError("zext: operand must be a value expression");
    if (width < arg->width)
        throw WidthError("zext: target width smaller than operand");
    return make_un_node(UnKind::Zext, std::move(arg), width, 0, 0);
}

ExprRef make_sext(ExprRef arg, unsigned width) {
    require_value_width(width, "sext");
    if (!arg || arg->is_mem_sort())
        throw WidthError("sext: operand must be a value expression");
    if (width < arg->width)
        throw WidthError("sext: target width smaller than operand");
    return make_un_node(UnKind::Sext, std::move(arg), width, 0, 0);
}

ExprRef make_extract(ExprRef arg, unsigned hi, unsigned lo) {
    if (!arg || arg->is_mem_sort())
        throw WidthError("extract: operand must be a value expression");
    if (lo > hi || hi >= arg->width)
        throw WidthError("extract: bounds " + std::to_string(hi) + ":" +
                         std::to_string(lo) + " out of range for width " +
                         std::to_string(arg->width));
    unsigned w = hi - lo + 1;
    require_value_width(w, "extract result");
    return make_un_node(UnKind::Extract, std::move(arg), w, hi, lo);
}

ExprRef make_ite(ExprRef cond, ExprRef then_e, ExprRef else_e) {
    if (!cond || cond->width != 1 || cond->is_mem_sort())
        throw WidthError("ite: condition must have width 1");
    if (!then_e || !else_e || then_e->is_mem_sort() || else_e->is_mem_sort())
        throw WidthError("ite: branches must be value expressions");
    if (then_e->width != else_e->width)
        throw WidthError("ite: branch widths differ");
    Expr e;
    e.kind = ExprKind::Ite;
    e.width = then_e->width;
    e.a = std::move(cond);
    e.b = std::move(then_e);
    e.c = std::move(else_e);
    return finish(std::move(e));
}

bool expr_equal(const ExprRef &a, const ExprRef &b) {
    if (a.get() == b.get())
        return true;
    if (!a || !b)
        return false;
    if (a->hash != b->hash)
        return false;
    return expr_compare(a, b) == 0;
}

int expr_compare(const ExprRef &a, const ExprRef &b) {
    if (a.get() == b.get())
        return 0;
    if (!a)
        return b ? -1 : 0;
    if (!b)
        return 1;
    auto cmp = [](auto x, auto y) { return x < y ? -1 : (x > y ? 1 : 0); };
    if (int r = cmp(uint8_t(a->kind), uint8_t(b->kind)))
        return r;
    if (int r = cmp(a->width, b->width))
        return r;
    if (int r = cmp(a->value, b->value))
        return r;
    if (int r = a->name.compare(b->name))
        return r < 0 ? -1 : 1;
    if (int r = cmp(uint8_t(a->bin), uint8_t(b->bin)))
        return r;
    if (int r = cmp(uint8_t(a->un), uint8_t(b->un)))
        return r;
    if (int r = cmp(a->hi, b->hi))
        return r;
    if (int r = cmp(a->lo, b->lo))
        return r;
    if (int r = expr_compare(a->a, b->a))
        return r;
    if (int r = expr_compare(a->b, b->b))
        return r;
    return expr_compare(a->c, b->c);
}

size_t expr_size(const ExprRef &e) {
    if (!e)
        return 0;
    return 1 + expr_size(e->a) + expr_size(e->b) + expr_size(e->c);
}

namespace {

void to_hex(std::ostringstream &os, uint64_t v) {
    os << "0x" << std::hex << v << std::dec;
}

void print(std::ostringstream &os, const ExprRef &e) {
    switch (e->kind) {
    case ExprKind::Const:
        to_hex(os, e->value);
        os << ":" << e->width;
        return;
    case ExprKind::Reg:
        os << e->name;
        return;
    case ExprKind::Init:
        os << "init(" << e->name << ")";
        return;
    case ExprKind::Sym:
        os << "sym(" << e->name << "):" << e->width;
        return;
    case ExprKind::MemInit:
        os << "meminit";
        return;
    case ExprKind::Load:
        os << "load" << e->width << "(";
        print(os, e->a);
        os << ")";
        return;
    case ExprKind::MemSelect:
        os << "select" << e->width << "(";
        print(os, e->a);
        os << ", ";
        print(os, e->b);
        os << ")";
        return;
    case ExprKind::MemStore:
        os << "store" << e->hi << "(";
        print(os, e->a);
        os << ", ";
        print(os, e->b);
        os << ", ";
        print(os, e->c);
        os << ")";
        return;
    case ExprKind::Bin:
        os << bin_name(e->bin) << "(";
        print(os, e->a);
        os << ", ";
        print(os, e->b);
        os << ")";
        return;
    case ExprKind::Un:
        switch (e->un) {
        case UnKind::Not: os << "not("; break;
        case UnKind::Neg: os << "neg("; break;
        case UnKind::Zext: os << "zext" << e->width << "("; break;
        case UnKind::Sext: os << "sext" << e->width << "("; break;
        case UnKind::Extract:
            os << "extract" << e->hi << ":" << e->lo << "(";
            break;
        }
        print(os, e->a);
        os << ")";
        return;
    case ExprKind::Ite:
        os << "ite(";
        print(os, e->a);
        os << ", ";
        print(os, e->b);
        os << ", ";
        print(os, e->c);
        os << ")";
        return;
    }
}

} // namespace

std::string expr_to_text(const ExprRef &e) {
    if (!e)
        return "<null>";
    std::ostringstream os;
    print(os, e);
    return os.str();
}

} // namespace gadgex
