#include "flowtrack/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flowtrack/lp.hpp"
#include "flowtrack/mincostflow.hpp"

namespace flowtrack {
namespace {

constexpr double kResidualTol = 1e-9;

double recompute_objective(const FlowNetwork& net,
                           const std::vector<double>& flow) {
  double obj = 0.0;
  for (size_t e = 0; e < net.edges.size(); ++e)
    if (net.edges[e].kind != EdgeKind::Source)
      obj += net.edges[e].weight * flow[e];
  return obj;
}

// {out}: rows decouple per node, so the optimum picks each node's best
// candidate (weights are strictly positive). Ties go to candidate rank order.
FlowSolution solve_greedy(const FlowNetwork& net, const ConstraintSet& cs) {
  FlowSolution sol;
  sol.constraints = cs;
  sol.flow.assign(net.edges.size(), 0.0);
  sol.stats.method = "greedy";
  const int T = net.frame_count();
  for (int t = 1; t <= T; ++t)
    for (int i = 1; i <= net.sequence.point_count(t); ++i) {
      int best = -1;
      double best_w = 0.0;
      for (int e : net.outgoing[t - 1][i - 1]) {
        if (net.edges[e].kind == EdgeKind::Loop && !cs.loop) continue;
        if (net.edges[e].weight > best_w) {
          best_w = net.edges[e].weight;
          best = e;
        }
      }
      if (best >= 0) sol.flow[best] = 1.0;
    }
  sol.objective = recompute_objective(net, sol.flow);
  return sol;
}

// {out,in}: the LP separates into one assignment problem per transition;
// each is solved as a small min-cost circulation.
FlowSolution solve_per_transition_matching(const FlowNetwork& net,
                                           const ConstraintSet& cs) {
  FlowSolution sol;
  sol.constraints = cs;
  sol.flow.assign(net.edges.size(), 0.0);
  sol.stats.method = "matching";
  const int T = net.frame_count();
  for (int t = 1; t < T; ++t) {
    const int n_from = net.sequence.point_count(t);
    const int n_to = net.sequence.point_count(t + 1);
    // Nodes: 0..n_from-1 left, then right, then S, K.
    const int s_node = n_from + n_to;
    const int k_node = s_node + 1;
    MinCostCirculation mcf(k_node + 1);
    std::vector<int> arc_edge;
    for (int i = 0; i < n_from; ++i) mcf.add_arc(s_node, i, 1, 0.0);
    for (int j = 0; j < n_to; ++j) mcf.add_arc(n_from + j, k_node, 1, 0.0);
    mcf.add_arc(k_node, s_node, std::min(n_from, n_to), 0.0);
    std::vector<int> arc_of_edge;
    for (int i = 1; i <= n_from; ++i)
      for (int e : net.outgoing[t - 1][i - 1]) {
        const Edge& edge = net.edges[e];
        if (edge.kind != EdgeKind::Temporal) continue;
        int a = mcf.add_arc(i - 1, n_from + edge.to.index - 1, 1,
                            -edge.weight);
        arc_edge.push_back(a);
        arc_of_edge.push_back(e);
      }
    mcf.solve();
    sol.stats.iterations += mcf.iterations();
    for (size_t k = 0; k < arc_edge.size(); ++k)
      sol.flow[arc_of_edge[k]] = static_cast<double>(mcf.flow(arc_edge[k]));
  }
  sol.objective = recompute_objective(net, sol.flow);
  return sol;
}

// Conservation modes: each point becomes an in/out node pair joined by a
// capacity-1 internal arc (C_out and the inflow cap in one stroke). Without
// loop rows, a super source feeds frame 1 and the last frame drains to a
// super sink; with them, loop arcs close the cycle and the source flow is
// read off the frame-1 internal arcs.
FlowSolution solve_circulation(const FlowNetwork& net,
                               const ConstraintSet& cs) {
  FlowSolution sol;
  sol.constraints = cs;
  sol.flow.assign(net.edges.size(), 0.0);
  sol.stats.method = "circulation";
  const int T = net.frame_count();

  std::vector<int> base(T + 1, 0);
  for (int t = 1; t <= T; ++t)
    base[t] = base[t - 1] + net.sequence.point_count(t);
  const int total = base[T];
  auto in_node = [&](PointId id) { return base[id.frame - 1] + id.index - 1; };
  auto out_node = [&](PointId id) { return total + in_node(id); };

  const int s_node = 2 * total;
  const int k_node = s_node + 1;
  MinCostCirculation mcf(cs.loop ? 2 * total : k_node + 1);

  std::vector<int> internal_arc(total);
  for (int t = 1; t <= T; ++t)
    for (int i = 1; i <= net.sequence.point_count(t); ++i) {
      PointId id{t, i};
      internal_arc[in_node(id)] =
          mcf.add_arc(in_node(id), out_node(id), 1, 0.0);
    }

  std::vector<int> edge_arc(net.edges.size(), -1);
  for (size_t e = 0; e < net.edges.size(); ++e) {
    const Edge& edge = net.edges[e];
    if (edge.kind == EdgeKind::Temporal ||
        (edge.kind == EdgeKind::Loop && cs.loop))
      edge_arc[e] = mcf.add_arc(out_node(edge.from), in_node(edge.to), 1,
                                -edge.weight);
    else if (edge.kind == EdgeKind::Source && !cs.loop)
      edge_arc[e] = mcf.add_arc(s_node, in_node(edge.to), 1, 0.0);
  }
  if (!cs.loop) {
    for (int j = 1; j <= net.sequence.point_count(T); ++j)
      mcf.add_arc(out_node(PointId{T, j}), k_node, 1, 0.0);
    mcf.add_arc(k_node, s_node, net.sequence.point_count(1), 0.0);
  }

  mcf.solve();
  sol.stats.iterations = mcf.iterations();

  for (size_t e = 0; e < net.edges.size(); ++e)
    if (edge_arc[e] >= 0)
      sol.flow[e] = static_cast<double>(mcf.flow(edge_arc[e]));
  if (cs.loop) {
    // lc1 pins source flow to frame-1 outflow, which the internal arc holds.
    for (int i = 1; i <= net.sequence.point_count(1); ++i)
      sol.flow[net.source_edge[i - 1]] =
          static_cast<double>(mcf.flow(internal_arc[in_node(PointId{1, i})]));
  }
  sol.objective = recompute_objective(net, sol.flow);
  return sol;
}

void finish_solution(FlowSolution& sol, const FlowNetwork& net,
                     const ConstraintSet& cs) {
  double dev = 0.0;
  for (double& f : sol.flow) {
    dev = std::max(dev, std::abs(f - std::round(f)));
    f = std::round(f);
  }
  sol.stats.max_integrality_deviation = dev;
  if (dev >= 1e-6) throw NonIntegralSolution(dev);

  std::vector<Violation> report = verify_solution(sol, net, cs);
  if (!report.empty())
    throw SolverFailure("solution violates constraints: " +
                        report.front().what);
}

}  // namespace

FlowSolution solve_flow(const FlowNetwork& network,
                        const ConstraintSet& constraints) {
  constraints.validate();
  if (constraints.loop && !network.has_loop_edges)
    throw InvalidConstraintSet(
        "loop constraints need a network built with loop edges");

  FlowSolution sol;
  if (constraints.bal)
    sol = solve_circulation(network, constraints);
  else if (constraints.inc)
    sol = solve_per_transition_matching(network, constraints);
  else
    sol = solve_greedy(network, constraints);
  finish_solution(sol, network, constraints);
  return sol;
}

FlowSolution solve_flow_lp(const FlowNetwork& network,
                           const ConstraintSet& constraints) {
  constraints.validate();
  if (constraints.loop && !network.has_loop_edges)
    throw InvalidConstraintSet(
        "loop constraints need a network built with loop edges");

  LpProblem lp = assemble_lp(network, constraints);
  LpResult res = solve_lp_simplex(lp);

  FlowSolution sol;
  sol.constraints = constraints;
  sol.flow.assign(network.edges.size(), 0.0);
  sol.stats.method = "simplex";
  sol.stats.iterations = res.iterations;
  for (int v = 0; v < lp.num_vars; ++v) sol.flow[lp.var_edge[v]] = res.x[v];
  finish_solution(sol, network, constraints);
  sol.objective = recompute_objective(network, sol.flow);
  return sol;
}

std::vector<std::vector<PointId>> extract_paths(const FlowSolution& solution,
                                                const FlowNetwork& network) {
  const int T = network.frame_count();
  std::vector<std::vector<PointId>> paths;
  paths.reserve(network.sequence.point_count(1));
  for (int i = 1; i <= network.sequence.point_count(1); ++i) {
    std::vector<PointId> path{PointId{1, i}};
    for (int t = 1; t < T; ++t) {
      const PointId cur = path.back();
      int next_edge = -1;
      for (int e : network.outgoing[cur.frame - 1][cur.index - 1]) {
        if (network.edges[e].kind != EdgeKind::Temporal) continue;
        if (solution.flow[e] <= 0.5) continue;
        if (next_edge >= 0)
          throw BrokenPath("node carries two outgoing units (frame " +
                           std::to_string(cur.frame) + ")");
        next_edge = e;
      }
      if (next_edge < 0) break;
      path.push_back(network.edges[next_edge].to);
    }
    paths.push_back(std::move(path));
  }
  return paths;
}

std::vector<Trajectory> extract_trajectories(const FlowSolution& solution,
                                             const FlowNetwork& network) {
  const int T = network.frame_count();
  const ConstraintSet cs = solution.constraints;
  std::vector<std::vector<PointId>> walks = extract_paths(solution, network);

  std::vector<Trajectory> out;
  for (int i = 1; i <= network.sequence.point_count(1); ++i) {
    if (cs.bal) {
      // Only active starts carry trajectories; conservation guarantees the
      // walk reaches the last frame.
      if (solution.flow[network.source_edge[i - 1]] <= 0.5) continue;
      if (static_cast<int>(walks[i - 1].size()) != T)
        throw BrokenPath("active start " + std::to_string(i) +
                         " does not reach the last frame");
    } else if (static_cast<int>(walks[i - 1].size()) != T) {
      continue;  // greedy walk died early; no complete trajectory
    }
    Trajectory traj;
    traj.points = walks[i - 1];
    if (cs.loop) {
      const PointId last = traj.points.back();
      for (int e : network.outgoing[last.frame - 1][last.index - 1]) {
        if (network.edges[e].kind == EdgeKind::Loop &&
            solution.flow[e] > 0.5) {
          traj.loop_closure = network.edges[e].to;
          break;
        }
      }
      if (!traj.loop_closure)
        throw BrokenPath("loop trajectory from start " + std::to_string(i) +
                         " has no loop closure");
    }
    out.push_back(std::move(traj));
  }
  return out;
}

std::vector<Violation> verify_solution(const FlowSolution& solution,
                                       const FlowNetwork& network,
                                       const ConstraintSet& constraints) {
  std::vector<Violation> report;
  auto flag = [&](std::string what, std::optional<PointId> where) {
    report.push_back({std::move(what), where});
  };

  if (solution.flow.size() != network.edges.size()) {
    flag("flow vector size does not match edge count", std::nullopt);
    return report;
  }

  for (size_t e = 0; e < network.edges.size(); ++e) {
    double f = solution.flow[e];
    if (std::abs(f - std::round(f)) > kResidualTol || f < -kResidualTol ||
        f > 1.0 + kResidualTol)
      flag("edge flow not binary: " + std::to_string(f),
           network.edges[e].from);
    if (network.edges[e].kind == EdgeKind::Loop && !constraints.loop &&
        f > kResidualTol)
      flag("loop edge carries flow without loop constraints",
           network.edges[e].from);
  }

  const int T = network.frame_count();
  // Per-node sums over eligible edges.
  std::vector<std::vector<double>> in_sum(T), out_sum(T), loop_in(1),
      loop_out(T);
  for (int t = 1; t <= T; ++t) {
    in_sum[t - 1].assign(network.sequence.point_count(t), 0.0);
    out_sum[t - 1].assign(network.sequence.point_count(t), 0.0);
  }
  loop_in[0].assign(network.sequence.point_count(1), 0.0);
  loop_out[T - 1].assign(network.sequence.point_count(T), 0.0);
  double src_total = 0.0, loop_total = 0.0;
  std::vector<double> src(network.sequence.point_count(1), 0.0);

  for (size_t e = 0; e < network.edges.size(); ++e) {
    const Edge& edge = network.edges[e];
    const double f = solution.flow[e];
    switch (edge.kind) {
      case EdgeKind::Source:
        src[edge.to.index - 1] += f;
        src_total += f;
        break;
      case EdgeKind::Temporal:
        out_sum[edge.from.frame - 1][edge.from.index - 1] += f;
        in_sum[edge.to.frame - 1][edge.to.index - 1] += f;
        break;
      case EdgeKind::Loop:
        if (!constraints.loop) break;
        loop_out[T - 1][edge.from.index - 1] += f;
        loop_in[0][edge.to.index - 1] += f;
        loop_total += f;
        break;
    }
  }

  for (int t = 1; t <= T; ++t)
    for (int i = 1; i <= network.sequence.point_count(t); ++i) {
      PointId id{t, i};
      double total_out = out_sum[t - 1][i - 1] +
                         (t == T && constraints.loop ? loop_out[T - 1][i - 1]
                                                     : 0.0);
      double total_in =
          in_sum[t - 1][i - 1] +
          (t == 1 && constraints.loop ? loop_in[0][i - 1] : 0.0);
      if (total_out > 1.0 + kResidualTol)
        flag("outgoing flow exceeds 1", id);
      if (constraints.inc && total_in > 1.0 + kResidualTol)
        flag("incoming flow exceeds 1", id);
      if (constraints.bal) {
        if (t == 1) {
          if (std::abs(src[i - 1] - out_sum[0][i - 1]) > kResidualTol)
            flag("source flow does not match outflow", id);
          if (constraints.loop &&
              std::abs(loop_in[0][i - 1] - out_sum[0][i - 1]) > kResidualTol)
            flag("loop return does not match outflow", id);
        } else if (t < T) {
          if (std::abs(in_sum[t - 1][i - 1] - out_sum[t - 1][i - 1]) >
              kResidualTol)
            flag("flow not conserved", id);
        } else if (constraints.loop) {
          if (std::abs(in_sum[T - 1][i - 1] - loop_out[T - 1][i - 1]) >
              kResidualTol)
            flag("last-frame inflow does not match loop outflow", id);
        } else if (in_sum[T - 1][i - 1] > 1.0 + kResidualTol) {
          flag("last-frame inflow exceeds 1", id);
        }
      }
    }

  if (constraints.loop && std::abs(src_total - loop_total) > kResidualTol)
    flag("total source flow does not match total loop flow", std::nullopt);

  return report;
}

}  // namespace flowtrack
