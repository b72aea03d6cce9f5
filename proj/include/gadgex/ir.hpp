#pragma once

#include "gadgex/arch.hpp"
#include "gadgex/expr.hpp"

#include <string>
#include <vector>

namespace gadgex {

/// One micro-IR statement: either `REG := <expr>` or `store<w>(<addr>, <value>)`.
struct Stmt {
    enum class Kind : uint8_t { Assign, Store } kind = Kind::Assign;
    std::string reg;   // Assign target
    ExprRef value;     // assigned value / stored value
    ExprRef addr;      // Store address
    unsigned width = 0; // Store width

    bool operator==(const Stmt &o) const;
};

/// Parses an expression in the micro-IR grammar. Register leaves take their
/// width from `arch`; unknown registers raise ValidationError, grammar errors
/// raise ParseError, width inconsistencies raise WidthError.
ExprRef parse_expr(const Arch &arch, const std::string &text);

Stmt parse_stmt(const Arch &arch, const std::string &text);

std::string stmt_to_text(const Stmt &s);

/// Width discipline check over an already-built tree (factories enforce most
/// of it; this re-walks and validates load/store widths and address widths
/// against the arch).
void check_widths(const Arch &arch, const ExprRef &e);
void check_widths(const Arch &arch, const Stmt &s);

} // namespace gadgex
