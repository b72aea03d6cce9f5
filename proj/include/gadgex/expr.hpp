#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace gadgex {

enum class BinKind : uint8_t {
    Add, Sub, Mul, And, Or, Xor, Shl, Lshr, Ashr,
    Eq, Ne, Ult, Slt, Uge, Sge,
};

enum class UnKind : uint8_t { Not, Neg, Zext, Sext, Extract };

enum class ExprKind : uint8_t {
    Const,     // literal value at a width
    Reg,       // current value of a register (IR-level leaf)
    Init,      // symbolic initial value of a register
    Sym,       // fresh symbolic value (fixed-call havoc)
    MemInit,   // symbolic initial memory
    Load,      // IR-level memory read: load<w>(addr)
    MemSelect, // read from a memory expression: select<w>(mem, addr)
    MemStore,  // memory expression with one more write: store<w>(mem, addr, value)
    Bin,
    Un,
    Ite,
};

class Expr;
using ExprRef = std::shared_ptr<const Expr>;

/// Immutable expression node. Width is in bits; memory-sorted nodes
/// (MemInit/MemStore) carry width 0. Structural hash is computed at
/// construction and cached.
class Expr {
  public:
    ExprKind kind;
    unsigned width = 0;
    uint64_t value = 0;     // Const
    std::string name;       // Reg / Init / Sym
    BinKind bin{};          // Bin
    UnKind un{};            // Un
    unsigned hi = 0, lo = 0; // Extract bounds
    ExprRef a, b, c;        // children
    size_t hash = 0;

    bool is_const() const { return kind == ExprKind::Const; }
    bool is_const(uint64_t v) const { return kind == ExprKind::Const && value == v; }
    bool is_mem_sort() const {
        return kind == ExprKind::MemInit || kind == ExprKind::MemStore;
    }
};

const char *bin_name(BinKind k);
bool bin_is_commutative(BinKind k);
bool bin_is_compare(BinKind k);

ExprRef make_const(unsigned width, uint64_t value);
ExprRef make_reg(const std::string &name, unsigned width);
ExprRef make_init(const std::string &name, unsigned width);
ExprRef make_sym(const std::string &name, unsigned width);
ExprRef make_meminit();
ExprRef make_load(ExprRef addr, unsigned width);
ExprRef make_select(ExprRef mem, ExprRef addr, unsigned width);
ExprRef make_store(ExprRef mem, ExprRef addr, ExprRef value, unsigned width);
ExprRef make_bin(BinKind op, ExprRef lhs, ExprRef rhs);
ExprRef make_not(ExprRef arg);
ExprRef make_neg(ExprRef arg);
ExprRef make_zext(ExprRef arg, unsigned width);
ExprRef make_sext(ExprRef arg, unsigned width);
ExprRef make_extract(ExprRef arg, unsigned hi, unsigned lo);
ExprRef make_ite(ExprRef cond, ExprRef then_e, ExprRef else_e);

bool expr_equal(const ExprRef &a, const ExprRef &b);
/// Total order used for canonical argument ordering; negative/zero/positive.
int expr_compare(const ExprRef &a, const ExprRef &b);
size_t expr_size(const ExprRef &e);

std::string expr_to_text(const ExprRef &e);

/// Masks a value to `width` bits.
uint64_t mask_width(unsigned width, uint64_t v);
/// Sign-extends the low `width` bits of v to 64 bits.
int64_t sign_extend(unsigned width, uint64_t v);

} // namespace gadgex
