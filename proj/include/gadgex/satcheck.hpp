#pragma once

#include "gadgex/arch.hpp"
#include "gadgex/eval.hpp"
#include "gadgex/expr.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace gadgex {

enum class SatResult : uint8_t { Unknown = 0, Sat = 1, Unsat = 2 };

const char *sat_result_name(SatResult r);

/// A satisfying assignment for the free terms of a conjunction: initial
/// register values, fresh call symbols, and reads from initial memory.
struct Witness {
    std::vector<std::pair<ExprRef, uint64_t>> terms;

    std::string to_text() const; // one `term=0xvalue` line per term
};

struct SatStatus {
    SatResult result = SatResult::Unknown;
    Witness witness; // Sat only
};

/// Decides a conjunction of width-1 constraints. Unsat comes only from two
/// sound rules (a conjunct folding to false, or two equality conjuncts
/// pinning one expression to different constants); Sat always carries a
/// witness that concretely evaluates every conjunct to 1; everything else is
/// Unknown after `budget` concrete evaluations. Deterministic given the seed.
SatStatus check_satisfiable(const Arch &arch, const std::vector<ExprRef> &constraints,
                            const std::vector<ExprRef> &extra_constraints,
                            uint32_t budget, uint64_t seed);

/// Builds the machine state a witness describes: registers from Init terms,
/// memory words from initial-memory read terms (inner reads written first so
/// pointer chains concretize), fresh symbols into the returned SymEnv.
std::pair<MachineState, SymEnv> state_from_witness(const Arch &arch,
                                                   const Witness &w);

/// External solver contract: the request is the conjunction in the micro-IR
/// expression grammar, one constraint per line; the reply is sat/unsat/
/// unknown plus optional `term=0xvalue` witness lines.
struct SolverReply {
    SatResult result = SatResult::Unknown;
    std::vector<std::pair<std::string, uint64_t>> witness;
};

/// Wire form of a reply: first line `sat`/`unsat`/`unknown`, then one
/// `term=0xvalue` line per witness entry.
std::string solver_reply_to_text(const SolverReply &reply);
SolverReply parse_solver_reply(const std::string &text);

class SolverBackend {
  public:
    virtual ~SolverBackend() = default;
    virtual SolverReply solve(const std::string &conjunction) = 0;
};

/// Reference backend: parses the conjunction back and runs check_satisfiable.
class ReferenceSolver : public SolverBackend {
  public:
    ReferenceSolver(const Arch &arch, uint32_t budget, uint64_t seed)
        : arch_(arch), budget_(budget), seed_(seed) {}
    SolverReply solve(const std::string &conjunction) override;

  private:
    Arch arch_;
    uint32_t budget_;
    uint64_t seed_;
};

/// Runs a conjunction through a backend and re-parses the witness.
SatStatus solve_with_backend(SolverBackend &backend, const Arch &arch,
                             const std::vector<ExprRef> &constraints);

} // namespace gadgex
