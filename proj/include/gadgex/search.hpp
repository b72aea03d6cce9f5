#pragma once

#include "gadgex/store.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gadgex {

/// Declarative semantic query, loaded from a `.gq` file. At least one
/// requirement (structural or value) must be present.
struct GadgetQuery {
    std::optional<PrefixKind> prefix;
    std::optional<SuffixKind> suffix;
    std::optional<ContentKind> content;
    std::optional<std::string> fixed_symbol;
    std::vector<TagRequirement> reg_requirements;
    std::vector<TagRequirement> mem_requirements;
    struct ValueConstraint {
        std::string reg;
        uint64_t value;
    };
    std::vector<ValueConstraint> value_constraints;
    size_t max_results = 64;
};

GadgetQuery parse_query(const std::string &text);
GadgetQuery load_query_file(const std::string &path);

/// Validates query register/symbol names against a database's arch.
void validate_query(const GadgetQuery &q, const Arch &arch);

struct Candidate {
    size_t db_index;
    uint64_t id;
};

/// Structural filtering and complexity ordering across databases: the first
/// database yielding any candidate wins and later ones are not consulted.
std::vector<Candidate> run_query(const std::vector<const GadgetDb *> &dbs,
                                 const GadgetQuery &q);

struct VerifiedGadget {
    Candidate candidate;
    Witness witness;
};

/// Walks the ranked candidates, conjoining each gadget's path constraints
/// with the query's value constraints (substituting the gadget's output
/// equations), until one is satisfiable. Unknown counts as a miss for that
/// candidate.
std::optional<VerifiedGadget>
verify_until_satisfiable(const std::vector<const GadgetDb *> &dbs,
                         const std::vector<Candidate> &candidates,
                         const GadgetQuery &q, uint32_t budget, uint64_t seed);

/// The value-constraint conjunction for one candidate (exposed for tests and
/// for external solver backends).
std::vector<ExprRef> value_constraint_exprs(const GadgetDb &db,
                                            const GadgetRecord &r,
                                            const GadgetQuery &q);

} // namespace gadgex
