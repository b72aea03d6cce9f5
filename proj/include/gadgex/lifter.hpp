#pragma once

#include "gadgex/arch.hpp"
#include "gadgex/ir.hpp"
#include "gadgex/program.hpp"

#include <string>
#include <vector>

namespace gadgex {

/// Output of the mini-lifters: the statement list plus the control-flow
/// class the mnemonic implies and, for conditional branches, the branch
/// condition over the flag registers.
struct LiftResult {
    std::vector<Stmt> ir;
    InstrClass cls = InstrClass::FALL;
    ExprRef cond; // COND only
};

/// Lifts one instruction of the supported subset to micro-IR. `addr` and
/// `size` locate the instruction (return addresses of calls are concrete).
/// Throws LiftError for anything outside the subset.
LiftResult lift_instruction(const Arch &arch, const std::string &asm_text,
                            uint64_t addr, uint32_t size);

LiftResult lift_x86_64(const Arch &arch, const std::string &asm_text, uint64_t addr,
                       uint32_t size);
LiftResult lift_arm_a32(const Arch &arch, const std::string &asm_text, uint64_t addr,
                        uint32_t size);

} // namespace gadgex
