#pragma once

#include "gadgex/program.hpp"

#include <string>

namespace gadgex {

/// Parses the `.gcfg` interchange text into a validated Program.
/// Instructions without an explicit "ir" list are lifted by the mini-lifter
/// for the document's architecture. Throws ParseError for malformed text,
/// LiftError for unsupported assembly, ValidationError for invariant
/// violations.
Program parse_program(const std::string &document);

/// Inverse of parse_program: emits a `.gcfg` document with explicit IR for
/// every instruction, so parse(serialize(p)) == p field-for-field.
std::string serialize_program(const Program &p);

Program load_program_file(const std::string &path);

} // namespace gadgex
