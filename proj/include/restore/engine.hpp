// Iterative restoration engine: weight validation, the constraint-adding
// loop that drives the relaxation to an integral plan, the optimality
// criterion, sufficient-condition heuristics, and final dispatch.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "restore/models.hpp"

namespace restore::engine {

// Priority weights w^1 > ... > w^n >= 0, with virtual w^0 = inf, w^(n+1) = 0.
struct WeightScheme {
  std::vector<double> w;

  int levels() const { return static_cast<int>(w.size()); }
  // w^k for k in 0 .. n+1
  double at(int k) const;
};

struct WeightReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Condition A (exact): w^j > sum over deeper levels of w^k * |level k loads|.
// Condition B (heuristic): weight-per-kW of a higher level dominates that of
// any lower level by at least `dominance_margin`.
WeightReport validate_weights(const WeightScheme& ws, const net::Network& net,
                              const topo::IslandGraph& island, double dominance_margin = 10.0);

enum class StepKind { terminal, step3, step4, step5 };
enum class Verdict { verified_global, unverified };

std::string to_string(StepKind s);
std::string to_string(Verdict v);

struct IterState {
  int iteration = 0;
  models::Fixes fixes;                  // fixes in force when this solve ran
  std::map<std::string, double> gamma;  // relaxation values by load bus
  double w_sdp = 0.0;                   // relaxation objective
  double w_int = 0.0;                   // weight sum of the fully restored set
  std::vector<std::string> l_gamma1, l_ni, l_c1, l_c2, l_c3, l_c4;
  int k_star = 0;   // 1..n+1; 0 on the terminal state
  int n_re = 0;     // step-5 restorable count; 0 otherwise
  StepKind branch = StepKind::terminal;
};

struct IterationTrace {
  std::vector<IterState> states;
  std::string termination;
};

struct RestorationPlan {
  std::string island_id;
  topo::SpanningTree tree;
  std::vector<std::string> restored;  // load bus ids with gamma = 1
  double objective = 0.0;             // weight sum over the restored set
  models::PhasorProfile profile;
  IterationTrace trace;
  Verdict verdict = Verdict::unverified;
  std::string error;  // nonempty when this island's solve failed
};

struct EngineConfig {
  conic::SolverSettings solver;
  std::string reference_bus;      // empty: bus of the largest-rated source
  double integrality_eps = 1e-4;  // gamma in [eps, 1-eps] counts non-integer
  double binding_tol = 1e-4;      // relative closeness to a bound
  double gap_tol = 1e-6;          // boundary tolerance for level selection
  double dominance_margin = 10.0;
  double ampacity_multiple = 2.0;
  double demand_rel_gap = 0.01;
};

// Level selection: unique K* with w^K* <= gap < w^(K*-1); gaps within
// gap_tol of a weight resolve to the larger K*.
int identify_k_star(double w_sdp, double w_int, const WeightScheme& ws, double gap_tol = 1e-6);

// floor(gap / wK); requires wK > 0.
int compute_n_re(double w_sdp, double w_int, double wK);

std::pair<std::map<std::string, double>, IterationTrace> iterate(
    const net::Network& net, const topo::IslandGraph& island, const topo::SpanningTree& tree,
    const EngineConfig& cfg = {});

Verdict check_optimality_criterion(const IterationTrace& trace, const WeightScheme& ws,
                                   double tol = 1e-6);

struct SufficiencyReport {
  bool ampacity_ok = true;
  bool demand_gap_ok = true;
  std::vector<std::string> notes;
};

SufficiencyReport check_sufficient_conditions(const net::Network& net,
                                              const topo::IslandGraph& island,
                                              double ampacity_multiple = 2.0,
                                              double demand_rel_gap = 0.01);

// Minimum-generation power flow with every gamma fixed.
models::PhasorProfile final_dispatch(const net::Network& net, const topo::IslandGraph& island,
                                     const topo::SpanningTree& tree, const models::Fixes& gammas,
                                     const conic::SolverSettings& settings = {},
                                     const std::string& reference_bus = {});

std::vector<RestorationPlan> solve_restoration(const net::PostEventNetwork& pe,
                                               const EngineConfig& cfg = {});

}  // namespace restore::engine
