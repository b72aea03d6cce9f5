#pragma once

#include "gadgex/arch.hpp"
#include "gadgex/expr.hpp"
#include "gadgex/ir.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace gadgex {

enum class InstrClass : uint8_t { FALL, JUMP, COND, CALL, ICALL, IJUMP, RET };

const char *instr_class_name(InstrClass c);
InstrClass instr_class_from_name(const std::string &s); // throws ValidationError

enum class EdgeKind : uint8_t { Taken, Fallthrough, Unconditional };

const char *edge_kind_name(EdgeKind k);
EdgeKind edge_kind_from_name(const std::string &s);

struct Instruction {
    uint64_t addr = 0;
    uint32_t size = 0;
    std::string text; // display asm
    InstrClass cls = InstrClass::FALL;
    std::optional<std::string> call_target; // CALL only
    std::vector<Stmt> ir;
    ExprRef branch_cond; // COND only, width 1

    bool operator==(const Instruction &o) const;
};

struct Succ {
    uint64_t addr = 0;
    EdgeKind kind = EdgeKind::Unconditional;
    bool operator==(const Succ &) const = default;
};

struct BasicBlock {
    uint64_t addr = 0;
    std::vector<Instruction> instrs;
    std::vector<Succ> succs;

    const Instruction &terminator() const { return instrs.back(); }
    bool operator==(const BasicBlock &o) const = default;
};

struct Function {
    std::string name;
    uint64_t entry = 0;
    std::map<uint64_t, BasicBlock> blocks;

    bool operator==(const Function &) const = default;
};

struct Program {
    Arch arch;
    std::string module_name;
    std::vector<Function> functions;
    std::set<std::string> fixed_functions;

    bool is_fixed_call(const Instruction &in) const {
        return in.cls == InstrClass::CALL && in.call_target &&
               fixed_functions.count(*in.call_target) > 0;
    }

    bool operator==(const Program &) const = default;
};

/// Edge transpose of a function's CFG. Every block appears as a key; the
/// predecessor lists are duplicate-free and sorted by ascending address.
std::map<uint64_t, std::vector<uint64_t>> predecessors(const Function &fn);

/// Returns the instruction's declared class after rejecting contradictions
/// (RET carrying a call target, indirect transfers whose IR never assigns the
/// instruction pointer, ...). Throws MalformedInstruction.
InstrClass classify_instruction(const Arch &arch, const Instruction &in);

/// Full structural validation of a program; throws ValidationError /
/// MalformedInstruction on the first violation.
void validate_program(const Program &p);

} // namespace gadgex
