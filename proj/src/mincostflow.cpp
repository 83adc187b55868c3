#include "flowtrack/mincostflow.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace flowtrack {

namespace {
// Reduced costs of real arcs stay O(graph diameter * max |cost|); this
// absolute tolerance decides both pivot entry and final optimality.
constexpr double kRcEps = 1e-11;
}  // namespace

MinCostCirculation::MinCostCirculation(int node_count)
    : node_count_(node_count), root_(node_count) {
  if (node_count < 1) throw Error("circulation needs at least one node");
}

int MinCostCirculation::add_arc(int from, int to, std::int64_t capacity,
                                double cost) {
  if (from < 0 || from >= node_count_ || to < 0 || to >= node_count_)
    throw Error("arc endpoint out of range");
  if (capacity < 0) throw Error("arc capacity must be >= 0");
  if (!std::isfinite(cost)) throw Error("arc cost must be finite");
  source_.push_back(from);
  target_.push_back(to);
  cap_.push_back(capacity);
  flow_.push_back(0);
  cost_.push_back(cost);
  state_.push_back(kStateLower);
  return static_cast<int>(source_.size()) - 1;
}

void MinCostCirculation::solve() {
  if (real_arc_count_ > 0 || !pi_.empty())
    throw Error("MinCostCirculation instances are single-use");
  real_arc_count_ = static_cast<int>(source_.size());
  const int all_nodes = node_count_ + 1;

  pi_.assign(all_nodes, 0.0);
  parent_.assign(all_nodes, 0);
  pred_.assign(all_nodes, 0);
  thread_.assign(all_nodes, 0);
  rev_thread_.assign(all_nodes, 0);
  succ_num_.assign(all_nodes, 0);
  last_succ_.assign(all_nodes, 0);
  forward_.assign(all_nodes, true);

  // Initial spanning tree: a zero-cost artificial arc from every node to the
  // root. No arc ever leaves the root, so conservation pins every artificial
  // flow at zero and the zero circulation is the starting basis.
  parent_[root_] = -1;
  pred_[root_] = -1;
  thread_[root_] = 0;
  rev_thread_[0] = root_;
  succ_num_[root_] = all_nodes;
  last_succ_[root_] = root_ - 1;
  pi_[root_] = 0.0;

  for (int u = 0; u < node_count_; ++u) {
    int e = add_arc(u, u, kInfCap, 0.0);
    target_[e] = root_;  // root id is outside add_arc's client-facing range
    state_[e] = kStateTree;
    parent_[u] = root_;
    pred_[u] = e;
    thread_[u] = u + 1;
    rev_thread_[u + 1] = u;
    succ_num_[u] = 1;
    last_succ_[u] = u;
    forward_[u] = true;
    pi_[u] = 0.0;
  }

  next_arc_ = 0;
  block_size_ = std::max(
      static_cast<int>(std::sqrt(static_cast<double>(real_arc_count_))), 10);
  iterations_ = 0;
  const std::int64_t max_iters =
      100 * static_cast<std::int64_t>(real_arc_count_ + all_nodes) + 10000;

  while (find_entering_arc()) {
    if (++iterations_ > max_iters)
      throw SolverFailure("network simplex exceeded " +
                          std::to_string(max_iters) + " pivots");
    find_join_node();
    bool tree_changes = find_leaving_arc();
    change_flow(tree_changes);
    if (tree_changes) {
      update_tree();
      update_potentials();
    }
  }
}

double MinCostCirculation::total_cost() const {
  double total = 0.0;
  for (int a = 0; a < real_arc_count_; ++a)
    total += static_cast<double>(flow_[a]) * cost_[a];
  return total;
}

bool MinCostCirculation::find_entering_arc() {
  double best = 0.0;
  int e = next_arc_;
  int countdown = block_size_;
  bool found = false;
  for (int scanned = 0; scanned < real_arc_count_; ++scanned, ++e) {
    if (e == real_arc_count_) e = 0;
    double rc =
        state_[e] * (cost_[e] + pi_[source_[e]] - pi_[target_[e]]);
    if (rc < best) {
      best = rc;
      in_arc_ = e;
      found = true;
    }
    if (--countdown == 0) {
      if (best < -kRcEps) {
        next_arc_ = e + 1 == real_arc_count_ ? 0 : e + 1;
        return true;
      }
      countdown = block_size_;
      best = 0.0;
      found = false;
    }
  }
  if (found && best < -kRcEps) {
    next_arc_ = e == real_arc_count_ ? 0 : e;
    return true;
  }
  return false;
}

void MinCostCirculation::find_join_node() {
  int u = source_[in_arc_];
  int v = target_[in_arc_];
  while (u != v) {
    if (succ_num_[u] < succ_num_[v])
      u = parent_[u];
    else
      v = parent_[v];
  }
  join_ = u;
}

bool MinCostCirculation::find_leaving_arc() {
  // Cycle direction follows the entering arc (reversed when it sits at its
  // upper bound).
  int first, second;
  if (state_[in_arc_] == kStateLower) {
    first = source_[in_arc_];
    second = target_[in_arc_];
  } else {
    first = target_[in_arc_];
    second = source_[in_arc_];
  }
  delta_ = cap_[in_arc_];
  int result = 0;

  // First path: cycle runs parent-to-child here, so a forward tree arc is
  // traversed against its direction. Strict < keeps the basis strongly
  // feasible (Cunningham's rule).
  for (int u = first; u != join_; u = parent_[u]) {
    int e = pred_[u];
    std::int64_t d = forward_[u] ? flow_[e] : cap_[e] - flow_[e];
    if (d < delta_) {
      delta_ = d;
      u_out_ = u;
      result = 1;
    }
  }
  // Second path: child-to-parent, forward arcs gain flow; ties prefer this
  // side (<=).
  for (int u = second; u != join_; u = parent_[u]) {
    int e = pred_[u];
    std::int64_t d = forward_[u] ? cap_[e] - flow_[e] : flow_[e];
    if (d <= delta_) {
      delta_ = d;
      u_out_ = u;
      result = 2;
    }
  }

  if (result == 1) {
    u_in_ = first;
    v_in_ = second;
  } else {
    u_in_ = second;
    v_in_ = first;
  }
  return result != 0;
}

void MinCostCirculation::change_flow(bool tree_changes) {
  if (delta_ > 0) {
    std::int64_t val = state_[in_arc_] * delta_;
    flow_[in_arc_] += val;
    for (int u = source_[in_arc_]; u != join_; u = parent_[u])
      flow_[pred_[u]] += forward_[u] ? -val : val;
    for (int u = target_[in_arc_]; u != join_; u = parent_[u])
      flow_[pred_[u]] += forward_[u] ? val : -val;
  }
  if (tree_changes) {
    state_[in_arc_] = kStateTree;
    int e = pred_[u_out_];
    state_[e] = flow_[e] == 0 ? kStateLower : kStateUpper;
  } else {
    state_[in_arc_] = -state_[in_arc_];
  }
}

void MinCostCirculation::update_tree() {
  int u = last_succ_[u_in_];
  int old_rev_thread = rev_thread_[u_out_];
  int old_succ_num = succ_num_[u_out_];
  int old_last_succ = last_succ_[u_out_];
  int v_out = parent_[u_out_];
  int right = thread_[u];
  int last;
  if (old_rev_thread == v_in_)
    last = thread_[last_succ_[u_out_]];
  else
    last = thread_[v_in_];

  // Re-hang the stem (the path u_in .. u_out) upside down under v_in,
  // splicing each detached subtree back into the thread list.
  thread_[v_in_] = u_in_;
  int stem = u_in_;
  dirty_revs_.clear();
  dirty_revs_.push_back(v_in_);
  int par_stem = v_in_;
  while (stem != u_out_) {
    int new_stem = parent_[stem];
    thread_[u] = new_stem;
    dirty_revs_.push_back(u);

    int w = rev_thread_[stem];
    thread_[w] = right;
    rev_thread_[right] = w;

    parent_[stem] = par_stem;
    par_stem = stem;
    stem = new_stem;

    u = last_succ_[stem] == last_succ_[par_stem] ? rev_thread_[par_stem]
                                                 : last_succ_[stem];
    right = thread_[u];
  }
  parent_[u_out_] = par_stem;
  thread_[u] = last;
  rev_thread_[last] = u;
  last_succ_[u_out_] = u;

  if (old_rev_thread != v_in_) {
    thread_[old_rev_thread] = right;
    rev_thread_[right] = old_rev_thread;
  }
  for (int n : dirty_revs_) rev_thread_[thread_[n]] = n;

  // Predecessor arcs flip along the stem; successor counts are rebuilt.
  int tmp_sc = 0;
  int tmp_ls = last_succ_[u_out_];
  u = u_out_;
  while (u != u_in_) {
    int w = parent_[u];
    pred_[u] = pred_[w];
    forward_[u] = !forward_[w];
    tmp_sc += succ_num_[u] - succ_num_[w];
    succ_num_[u] = tmp_sc;
    last_succ_[w] = tmp_ls;
    u = w;
  }
  pred_[u_in_] = in_arc_;
  forward_[u_in_] = u_in_ == source_[in_arc_];
  succ_num_[u_in_] = old_succ_num;

  int up_limit_in = -1;
  int up_limit_out = -1;
  if (last_succ_[join_] == v_in_)
    up_limit_out = join_;
  else
    up_limit_in = join_;

  for (u = v_in_; u != up_limit_in && last_succ_[u] == v_in_; u = parent_[u])
    last_succ_[u] = last_succ_[u_out_];

  if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
    for (u = v_out; u != up_limit_out && last_succ_[u] == old_last_succ;
         u = parent_[u])
      last_succ_[u] = old_rev_thread;
  } else {
    for (u = v_out; u != up_limit_out && last_succ_[u] == old_last_succ;
         u = parent_[u])
      last_succ_[u] = last_succ_[u_out_];
  }

  for (u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
  for (u = v_out; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
}

void MinCostCirculation::update_potentials() {
  double sigma = forward_[u_in_]
                     ? pi_[v_in_] - pi_[u_in_] - cost_[pred_[u_in_]]
                     : pi_[v_in_] - pi_[u_in_] + cost_[pred_[u_in_]];
  int end = thread_[last_succ_[u_in_]];
  for (int u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
}

}  // namespace flowtrack
