#include "flowtrack/lp.hpp"

#include <algorithm>
#include <cmath>

namespace flowtrack {
namespace {

std::string node_tag(const char* kind, int t, int i) {
  return std::string(kind) + " " + std::to_string(t) + " " + std::to_string(i);
}

}  // namespace

LpProblem assemble_lp(const FlowNetwork& net, const ConstraintSet& cs) {
  cs.validate();
  const int T = net.frame_count();

  LpProblem lp;
  lp.edge_var.assign(net.edges.size(), -1);
  for (size_t e = 0; e < net.edges.size(); ++e) {
    const Edge& edge = net.edges[e];
    if (edge.kind == EdgeKind::Loop && !cs.loop) continue;
    lp.edge_var[e] = lp.num_vars++;
    lp.var_edge.push_back(static_cast<int>(e));
    lp.objective.push_back(edge.kind == EdgeKind::Source ? 0.0 : edge.weight);
  }

  // Per-node variable lists split by role.
  std::vector<std::vector<std::vector<int>>> in_vars(T), out_vars(T);
  for (int t = 1; t <= T; ++t) {
    in_vars[t - 1].resize(net.sequence.point_count(t));
    out_vars[t - 1].resize(net.sequence.point_count(t));
  }
  std::vector<int> src_var(net.sequence.point_count(1), -1);
  for (int v = 0; v < lp.num_vars; ++v) {
    const Edge& edge = net.edges[lp.var_edge[v]];
    if (edge.kind == EdgeKind::Source) {
      src_var[edge.to.index - 1] = v;
    } else {
      out_vars[edge.from.frame - 1][edge.from.index - 1].push_back(v);
      in_vars[edge.to.frame - 1][edge.to.index - 1].push_back(v);
    }
  }

  auto add_row = [&](std::vector<std::pair<int, double>> coeffs, Relation rel,
                     double rhs, std::string tag) {
    lp.rows.push_back({std::move(coeffs), rel, rhs, std::move(tag)});
  };
  auto signed_coeffs = [](const std::vector<int>& plus,
                          const std::vector<int>& minus) {
    std::vector<std::pair<int, double>> c;
    c.reserve(plus.size() + minus.size());
    for (int v : plus) c.push_back({v, 1.0});
    for (int v : minus) c.push_back({v, -1.0});
    return c;
  };

  for (int t = 1; t <= T; ++t)
    for (int i = 1; i <= net.sequence.point_count(t); ++i) {
      const auto& out = out_vars[t - 1][i - 1];
      if (!out.empty())
        add_row(signed_coeffs(out, {}), Relation::LessEq, 1.0,
                node_tag("out", t, i));
    }

  if (cs.inc)
    for (int t = 1; t <= T; ++t)
      for (int i = 1; i <= net.sequence.point_count(t); ++i) {
        const auto& in = in_vars[t - 1][i - 1];
        if (!in.empty())
          add_row(signed_coeffs(in, {}), Relation::LessEq, 1.0,
                  node_tag("in", t, i));
      }

  if (cs.bal) {
    for (int i = 1; i <= net.sequence.point_count(1); ++i) {
      if (src_var[i - 1] < 0)
        throw Error("frame-1 node " + std::to_string(i) +
                    " has no source edge");
      const auto& out = out_vars[0][i - 1];
      // Source flow equals outflow whether or not the loop closes.
      add_row(signed_coeffs({src_var[i - 1]}, out), Relation::Eq, 0.0,
              cs.loop ? node_tag("lc1", 1, i) : node_tag("bal", 1, i));
      if (cs.loop)
        // Loop return flow equals outflow.
        add_row(signed_coeffs(in_vars[0][i - 1], out), Relation::Eq, 0.0,
                node_tag("lc2", 1, i));
    }
    for (int t = 2; t < T; ++t)
      for (int i = 1; i <= net.sequence.point_count(t); ++i) {
        const auto& in = in_vars[t - 1][i - 1];
        const auto& out = out_vars[t - 1][i - 1];
        if (in.empty() && out.empty()) continue;
        add_row(signed_coeffs(in, out), Relation::Eq, 0.0,
                node_tag("bal", t, i));
      }
    for (int i = 1; i <= net.sequence.point_count(T); ++i) {
      const auto& in = in_vars[T - 1][i - 1];
      if (cs.loop) {
        const auto& out = out_vars[T - 1][i - 1];
        if (in.empty() && out.empty()) continue;
        add_row(signed_coeffs(in, out), Relation::Eq, 0.0,
                node_tag("bal", T, i));
      } else if (!in.empty() && !cs.inc) {
        // Terminal nodes have no outgoing edges; cap their inflow so
        // trajectories stay node-disjoint.
        add_row(signed_coeffs(in, {}), Relation::LessEq, 1.0,
                node_tag("cap", T, i));
      }
    }
    if (cs.loop) {
      // Total source flow equals total loop flow. Implied by the per-node
      // rows, kept for row-level fidelity with the formulation.
      std::vector<int> all_src, all_loop;
      for (int v : src_var)
        if (v >= 0) all_src.push_back(v);
      for (int v = 0; v < lp.num_vars; ++v)
        if (net.edges[lp.var_edge[v]].kind == EdgeKind::Loop)
          all_loop.push_back(v);
      add_row(signed_coeffs(all_src, all_loop), Relation::Eq, 0.0, "lc3");
    }
  }

  return lp;
}

LpResult solve_lp_simplex(const LpProblem& problem) {
  const int n = problem.num_vars;

  // Split equalities into opposing <= rows; all equality right-hand sides
  // are zero here, so b stays nonnegative and the slack basis is feasible.
  std::vector<std::vector<double>> dense;
  std::vector<double> b;
  for (const LpRow& row : problem.rows) {
    std::vector<double> a(n, 0.0);
    for (auto [v, c] : row.coeffs) a[v] += c;
    if (row.rhs < 0.0) throw Error("simplex expects nonnegative rhs");
    dense.push_back(a);
    b.push_back(row.rhs);
    if (row.rel == Relation::Eq) {
      if (row.rhs != 0.0) throw Error("equality rows must have rhs 0");
      std::vector<double> neg(n);
      for (int j = 0; j < n; ++j) neg[j] = -a[j];
      dense.push_back(std::move(neg));
      b.push_back(0.0);
    }
  }
  const int m = static_cast<int>(dense.size());
  const int width = n + m + 1;

  std::vector<std::vector<double>> tab(m + 1, std::vector<double>(width, 0.0));
  for (int r = 0; r < m; ++r) {
    for (int j = 0; j < n; ++j) tab[r][j] = dense[r][j];
    tab[r][n + r] = 1.0;
    tab[r][width - 1] = b[r];
  }
  for (int j = 0; j < n; ++j) tab[m][j] = problem.objective[j];

  std::vector<int> basis(m);
  for (int r = 0; r < m; ++r) basis[r] = n + r;

  constexpr double kEnterEps = 1e-9;
  constexpr double kPivotEps = 1e-11;
  const std::int64_t bland_after = 20LL * (m + n) + 200;
  const std::int64_t max_iters = 400LL * (m + n) + 4000;

  LpResult result;
  while (true) {
    const bool bland = result.iterations > bland_after;
    int enter = -1;
    double best = kEnterEps;
    for (int j = 0; j < n + m; ++j) {
      if (tab[m][j] > best) {
        enter = j;
        if (bland) break;
        best = tab[m][j];
      }
    }
    if (enter < 0) break;

    int leave = -1;
    double best_ratio = 0.0;
    for (int r = 0; r < m; ++r) {
      if (tab[r][enter] <= kPivotEps) continue;
      double ratio = tab[r][width - 1] / tab[r][enter];
      if (leave < 0 || ratio < best_ratio - 1e-12 ||
          (ratio < best_ratio + 1e-12 && basis[r] < basis[leave])) {
        leave = r;
        best_ratio = ratio;
      }
    }
    if (leave < 0) throw SolverFailure("LP is unbounded (modeling bug)");

    double piv = tab[leave][enter];
    for (int j = 0; j < width; ++j) tab[leave][j] /= piv;
    for (int r = 0; r <= m; ++r) {
      if (r == leave) continue;
      double factor = tab[r][enter];
      if (factor == 0.0) continue;
      for (int j = 0; j < width; ++j) tab[r][j] -= factor * tab[leave][j];
    }
    basis[leave] = enter;

    if (++result.iterations > max_iters)
      throw SolverFailure("simplex exceeded " + std::to_string(max_iters) +
                          " iterations");
  }

  result.x.assign(n, 0.0);
  for (int r = 0; r < m; ++r)
    if (basis[r] < n) result.x[basis[r]] = tab[r][width - 1];
  result.objective = 0.0;
  for (int j = 0; j < n; ++j)
    result.objective += problem.objective[j] * result.x[j];
  return result;
}

}  // namespace flowtrack
