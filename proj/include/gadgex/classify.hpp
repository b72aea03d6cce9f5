#pragma once

#include "gadgex/arch.hpp"
#include "gadgex/expr.hpp"
#include "gadgex/symexec.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gadgex {

enum class TagKind : uint8_t {
    Nop,
    MovReg,
    LoadReg,
    Arithmetic,
    LoadMem,
    ArithmeticLoad,
    StoreMem,
    ArithmeticStore,
    Undefined,
};

const char *tag_kind_name(TagKind k);
TagKind tag_kind_from_name(const std::string &s);

/// Semantic classification of one register equation or one memory write.
/// Operand meaning per kind: MovReg(a=source init), LoadReg(a=constant),
/// Arithmetic(op, a, b), LoadMem(a=address), ArithmeticLoad(op, a=address,
/// b=other operand), StoreMem(a=address, b=stored init),
/// ArithmeticStore(op, a=address, b=other operand).
struct SemanticTag {
    TagKind kind = TagKind::Undefined;
    BinKind op = BinKind::Add;
    ExprRef a, b;

    bool operator==(const SemanticTag &o) const;
};

std::string tag_to_text(const SemanticTag &t);
SemanticTag parse_tag(const Arch &arch, const std::string &text);

/// Matches one classifiable register's output equation against the semantic
/// definitions, first match in the fixed order NOP, MovReg, LoadReg, LoadMem,
/// Arithmetic, ArithmeticLoad, else Undefined. Equations must be simplified.
SemanticTag classify_register(const SymbolicSummary &summary, const Arch &arch,
                              const std::string &reg);

/// Tags every memory write; result order matches summary.writes.
std::vector<SemanticTag> classify_memory_writes(const SymbolicSummary &summary);

/// Lexicographic ranking key: fewer instructions, then fewer memory writes,
/// then fewer memory reads, then more NOP registers.
struct ComplexityKey {
    uint32_t instr_count = 0;
    uint32_t mem_writes = 0;
    uint32_t mem_reads = 0;
    uint32_t nops = 0;

    bool operator==(const ComplexityKey &) const = default;
};

bool key_less(const ComplexityKey &a, const ComplexityKey &b);

} // namespace gadgex
