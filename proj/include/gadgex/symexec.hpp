#pragma once

#include "gadgex/discovery.hpp"
#include "gadgex/expr.hpp"
#include "gadgex/program.hpp"

#include <map>
#include <string>
#include <vector>

namespace gadgex {

/// Symbolic effect of one gadget over a fully symbolic initial state:
/// final equations for the classifiable registers, the ordered memory writes
/// (also folded into mem_out as a store chain over the initial memory), and
/// the path constraints collected at conditional exits.
struct SymbolicSummary {
    std::map<std::string, ExprRef> reg_out;
    ExprRef mem_out;
    struct Write {
        ExprRef addr;
        ExprRef value;
        unsigned width;
    };
    std::vector<Write> writes;
    std::vector<ExprRef> constraints;
    uint32_t n_mem_reads = 0;
    ExprRef suffix_target;
};

/// Registers clobbered by a call into an opaque fixed function, per the
/// calling convention the architecture name implies. The first entry is the
/// return-value register.
std::vector<std::string> havoc_registers(const Arch &arch);

/// Runs the gadget's IR with substitution over a symbolic initial state.
/// Fixed function calls inside the path havoc their caller-saved registers
/// with fresh symbols; branch conditions (negated on fallthrough edges) and
/// static indirect-jump targets become path constraints.
SymbolicSummary execute_symbolic(const Program &p, const GadgetPath &g);

} // namespace gadgex
