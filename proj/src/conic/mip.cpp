// Best-first branch-and-bound over the binary variables of a conic program.
// Branching rule: most-fractional variable, ties by lowest index.

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "restore/conic.hpp"

namespace restore::conic {

ConicSolution solve_conic_with_fixes(const ConicProgram& p, const SolverSettings& st,
                                     const std::vector<std::pair<int, double>>& fixes);

namespace {

struct Node {
  double bound;  // relaxation objective (maximization upper bound)
  std::int64_t id;
  std::vector<std::pair<int, double>> fixes;

  bool operator<(const Node& o) const {
    if (bound != o.bound) return bound < o.bound;  // max-heap on bound
    return id > o.id;                              // then FIFO
  }
};

}  // namespace

ConicSolution solve_mip(const ConicProgram& p, const SolverSettings& st) {
  const auto& bins = p.binaries();
  if (bins.empty()) return solve_conic(p, st);

  ConicSolution best;
  best.status = SolveStatus::infeasible;
  double incumbent = -std::numeric_limits<double>::infinity();
  bool have_incumbent = false;
  std::int64_t next_id = 0, nodes = 0;

  std::priority_queue<Node> open;

  auto process = [&](std::vector<std::pair<int, double>> fixes) {
    ++nodes;
    ConicSolution rel = solve_conic_with_fixes(p, st, fixes);
    if (rel.status == SolveStatus::infeasible) return;
    if (rel.status != SolveStatus::optimal) {
      // treat numerical failures as prunable but remember the status
      if (!have_incumbent) best.status = rel.status;
      return;
    }
    if (have_incumbent && rel.objective <= incumbent + st.feas_tol) return;
    // most fractional unfixed binary
    int branch_var = -1;
    double worst = st.int_tol;
    for (int v : bins) {
      bool fixed = false;
      for (const auto& [fv, _] : fixes)
        if (fv == v) fixed = true;
      if (fixed) continue;
      double val = rel.x[v];
      double frac = std::abs(val - std::round(val));
      if (frac > worst) {
        worst = frac;
        branch_var = v;
      }
    }
    if (branch_var < 0) {
      // integral solution
      if (!have_incumbent || rel.objective > incumbent) {
        incumbent = rel.objective;
        have_incumbent = true;
        best = rel;
        // round the binaries exactly
        for (int v : bins) best.x[v] = std::round(best.x[v]);
      }
      return;
    }
    for (double val : {1.0, 0.0}) {
      Node child;
      child.bound = rel.objective;
      child.id = next_id++;
      child.fixes = fixes;
      child.fixes.emplace_back(branch_var, val);
      open.push(std::move(child));
    }
  };

  process({});
  while (!open.empty() && nodes < st.node_limit) {
    Node nd = open.top();
    open.pop();
    if (have_incumbent && nd.bound <= incumbent + st.feas_tol) continue;
    process(std::move(nd.fixes));
  }
  best.stats.bb_nodes = nodes;
  if (!have_incumbent && best.status == SolveStatus::optimal)
    best.status = SolveStatus::infeasible;
  return best;
}

}  // namespace restore::conic
