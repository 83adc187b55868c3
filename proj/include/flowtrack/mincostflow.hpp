#pragma once

#include <cstdint>
#include <vector>

#include "flowtrack/core.hpp"

namespace flowtrack {

// Min-cost circulation on a directed graph with integer arc capacities and
// real arc costs (network simplex with a block-search pivot rule). All node
// supplies are zero, so the zero flow is feasible and the optimum is the
// cheapest circulation; with negative-cost arcs this maximizes the total
// weight of saturated arcs. Integer capacities make every intermediate flow
// integral, so the result is exact.
class MinCostCirculation {
 public:
  explicit MinCostCirculation(int node_count);

  // Returns the arc id. Capacity must be >= 0.
  int add_arc(int from, int to, std::int64_t capacity, double cost);

  // Computes the optimal circulation. Single-use per instance. Throws
  // SolverFailure if the pivot iteration cap is exceeded (indicates numerical
  // trouble, not expected).
  void solve();

  std::int64_t flow(int arc) const { return flow_[arc]; }
  double total_cost() const;
  std::int64_t iterations() const { return iterations_; }

 private:
  static constexpr std::int64_t kInfCap = INT64_MAX / 4;

  enum ArcState : char { kStateUpper = -1, kStateTree = 0, kStateLower = 1 };

  bool find_entering_arc();
  void find_join_node();
  bool find_leaving_arc();
  void change_flow(bool tree_changes);
  void update_tree();
  void update_potentials();

  int node_count_;
  int root_;

  // Per arc (real arcs first, one artificial arc per node appended by solve).
  std::vector<int> source_, target_;
  std::vector<std::int64_t> cap_, flow_;
  std::vector<double> cost_;
  std::vector<char> state_;

  // Spanning tree bookkeeping, per node (including the artificial root).
  std::vector<double> pi_;
  std::vector<int> parent_, pred_, thread_, rev_thread_, succ_num_, last_succ_;
  std::vector<char> forward_;
  std::vector<int> dirty_revs_;

  int real_arc_count_ = 0;
  int next_arc_ = 0;
  int block_size_ = 0;
  std::int64_t iterations_ = 0;

  // Pivot scratch state.
  int in_arc_ = -1;
  int join_ = -1, u_in_ = -1, v_in_ = -1, u_out_ = -1;
  std::int64_t delta_ = 0;
};

}  // namespace flowtrack
