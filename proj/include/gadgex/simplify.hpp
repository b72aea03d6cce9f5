#pragma once

#include "gadgex/expr.hpp"

namespace gadgex {

/// Rewrites an expression to a canonical, semantics-preserving normal form:
/// constant folding, identity and self-cancellation elimination, canonical
/// argument order for commutative operators, ite collapse, and partial
/// store-to-load forwarding (structurally equal addresses resolve, provably
/// disjoint stores are bypassed, everything else is left intact).
/// Idempotent: simplify(simplify(e)) == simplify(e).
ExprRef simplify(const ExprRef &e);

} // namespace gadgex
