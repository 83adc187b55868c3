#pragma once

#include <string>
#include <utility>
#include <vector>

#include "flowtrack/core.hpp"
#include "flowtrack/network.hpp"

namespace flowtrack {

enum class Relation { LessEq, Eq };

struct LpRow {
  std::vector<std::pair<int, double>> coeffs;  // (variable, coefficient)
  Relation rel = Relation::LessEq;
  double rhs = 0.0;
  std::string tag;  // row origin for diagnostics ("out 2 5", "lc1 3", ...)
};

// Maximize objective . x subject to the rows and x >= 0.
struct LpProblem {
  int num_vars = 0;
  std::vector<double> objective;
  std::vector<LpRow> rows;
  std::vector<int> var_edge;  // LP variable -> edge index in the network
  std::vector<int> edge_var;  // edge index -> LP variable, -1 if excluded
};

// Build the matching LP over the network's edges. Variables cover Source and
// Temporal edges always, Loop edges only when the constraint set enables
// them; Source variables carry objective coefficient 0. Rows:
//   - out: per node, sum of outgoing candidate edges <= 1
//   - inc: per node, sum of incoming Temporal/Loop edges <= 1
//   - bal: conservation equalities; frame 1 ties source flow to outflow
//     (plus the loop-return balance in loop mode), the last frame gets an
//     incoming cap without loop mode and a loop-outflow balance with it
//   - loop: the global source-vs-loop-flow equality (redundant but kept)
LpProblem assemble_lp(const FlowNetwork& network,
                      const ConstraintSet& constraints);

struct LpResult {
  std::vector<double> x;
  double objective = 0.0;
  std::int64_t iterations = 0;
};

// Dense primal simplex (Dantzig entering rule with a Bland fallback against
// stalling). Equality rows are split into opposing inequalities; since every
// equality here has zero right-hand side, the slack basis stays feasible.
// Intended for the modest instances the tracking LPs produce.
LpResult solve_lp_simplex(const LpProblem& problem);

}  // namespace flowtrack
