#pragma once

#include "gadgex/arch.hpp"
#include "gadgex/expr.hpp"
#include "gadgex/ir.hpp"

#include <map>
#include <vector>

namespace gadgex {

/// Concrete machine state: register file plus sparse byte-addressed memory.
/// Unmapped memory reads yield zero bytes. Values are masked to their
/// register's declared width on write.
struct MachineState {
    const Arch *arch = nullptr;
    std::map<std::string, uint64_t> regs;
    std::map<uint64_t, uint8_t> mem;

    explicit MachineState(const Arch &a) : arch(&a) {}

    uint64_t get_reg(const std::string &r) const;
    void set_reg(const std::string &r, uint64_t v);
    uint64_t load(uint64_t addr, unsigned width) const;
    void store(uint64_t addr, unsigned width, uint64_t v);
};

/// Extra bindings for Sym leaves (fresh symbols have no home in the register
/// file); addressed by symbol name.
using SymEnv = std::map<std::string, uint64_t>;

/// Evaluates an expression against a state. Total: modular two's-complement
/// arithmetic at declared widths, unmapped reads return zero. Reg and Init
/// leaves both read the given state's register file, so summaries are
/// evaluated by passing the initial state.
uint64_t eval_expr(const MachineState &state, const ExprRef &e,
                   const SymEnv *syms = nullptr);

struct StoreEvent {
    uint64_t addr;
    uint64_t value;
    unsigned width;
};

/// Applies statements in order; each assignment is visible to subsequent
/// statements. Returns the resulting state; records store events when a trace
/// vector is supplied.
MachineState exec_path(MachineState state, const std::vector<Stmt> &stmts,
                       const SymEnv *syms = nullptr,
                       std::vector<StoreEvent> *trace = nullptr);

} // namespace gadgex
