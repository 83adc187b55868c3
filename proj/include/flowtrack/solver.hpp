#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flowtrack/core.hpp"
#include "flowtrack/network.hpp"

namespace flowtrack {

struct SolverStats {
  std::int64_t iterations = 0;
  double max_integrality_deviation = 0.0;
  double max_constraint_residual = 0.0;
  std::string method;
};

// Binary edge flows aligned with the network's edge list. Source-edge flows
// are meaningful under conservation (they mark active trajectory starts);
// the objective sums weight * flow over Temporal and Loop edges only.
struct FlowSolution {
  ConstraintSet constraints;
  std::vector<double> flow;
  double objective = 0.0;
  SolverStats stats;
};

// Maximizes total matched weight under the constraint set. Dispatches to the
// cheapest exact method for the rows involved: per-node argmax for {out},
// per-transition assignment for {out,in}, and a split-node min-cost
// circulation when conservation is on. All methods solve the same LP the
// dense simplex route solves; results are exactly binary.
FlowSolution solve_flow(const FlowNetwork& network,
                        const ConstraintSet& constraints);

// Same contract, but solves the assembled LP relaxation with the dense
// simplex and verifies the vertex is integral (NonIntegralSolution "never"
// fires; the constraint matrices are totally unimodular). Intended for tests
// and modest instances; the circulation route is the production path.
FlowSolution solve_flow_lp(const FlowNetwork& network,
                           const ConstraintSet& constraints);

// Complete tracked paths. Under conservation, walks start at frame-1 nodes
// with active source flow and are provably walkable to the last frame (loop
// closures recorded when present). Without conservation, every frame-1 node
// starts a greedy walk; walks that die early are dropped here (see
// extract_paths) and walks may overlap, matching the weaker constraint sets.
std::vector<Trajectory> extract_trajectories(const FlowSolution& solution,
                                             const FlowNetwork& network);

// Raw per-start walks, one per frame-1 node, each followed as far as flow
// carries it (length 1..T). Evaluation uses these so that broken or inactive
// tracks still contribute (frozen at their last known position) and the
// constraint sets stay comparable.
std::vector<std::vector<PointId>> extract_paths(const FlowSolution& solution,
                                                const FlowNetwork& network);

// Checks binary flows and every enabled constraint row; returns one entry
// per violation with the offending node where applicable.
std::vector<Violation> verify_solution(const FlowSolution& solution,
                                       const FlowNetwork& network,
                                       const ConstraintSet& constraints);

}  // namespace flowtrack
