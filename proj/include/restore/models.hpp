// Restoration formulations over a chosen island and radial topology:
// the semidefinite branch-flow relaxation, the balanced second-order-cone
// variant, and the lossless linear approximation, plus exactness
// diagnostics and phasor recovery.
#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "restore/conic.hpp"
#include "restore/netmodel.hpp"
#include "restore/topology.hpp"

namespace restore::models {

// Hermitian matrix variable: lower-triangle scalar variable ids, column
// major; im has no diagonal entries.
struct HermVar {
  net::PhaseSet phases;
  std::vector<int> re;  // size m(m+1)/2
  std::vector<int> im;  // size m(m-1)/2
};

// General complex matrix variable, full m x m, column major.
struct CplxVar {
  net::PhaseSet phases;
  std::vector<int> re, im;  // each m*m
};

struct VarMap {
  std::map<std::string, HermVar> V;  // by bus id
  std::map<std::string, CplxVar> S;  // by line id, directed parent -> child
  std::map<std::string, HermVar> I;  // by line id
  std::map<std::string, int> gamma;  // by load bus id
  // per source id, per phase index a/b/c; -1 where the phase is absent
  std::map<std::string, std::array<int, 3>> pg, qg;
  // line id -> (parent bus, child bus); orientation away from the tree root
  std::map<std::string, std::pair<std::string, std::string>> direction;
  // balanced single-phase model: per bus u = |v|^2, per line P, Q, l
  std::map<std::string, int> u;
  std::map<std::string, std::array<int, 3>> flow;  // line id -> {P, Q, l}
  // linear model: per line per phase Re/Im of the diagonal flow vector
  std::map<std::string, CplxVar> lambda;

  double s_base_phase_kw = 0.0;  // kW per p.u. on the per-phase base
  double i_base_amp = 0.0;
  std::string reference_bus;
};

struct PhasorProfile {
  struct Entry {
    double magnitude = 0.0;  // p.u.
    double angle_deg = 0.0;
  };
  std::map<std::string, std::array<std::optional<Entry>, 3>> bus_voltage;
  std::map<std::string, std::pair<double, double>> source_pq;  // kW, kvar
  double losses_kw = 0.0;
  double generation_kw = 0.0;
  double restored_kw = 0.0;
};

using Fixes = std::vector<std::pair<std::string, double>>;  // load bus -> 0/1

enum class Objective { restore, min_generation };

struct BuildOptions {
  Objective objective = Objective::restore;
  std::string reference_bus;  // empty: bus of the largest-rated source
  double w0 = -1.0;           // misocp loss weight; <0 picks 1e-3 * w^n
  bool strict_balance = true; // misocp: reject unbalanced islands
};

std::pair<conic::ConicProgram, VarMap> build_clr_sdp(const net::Network& net,
                                                     const topo::IslandGraph& island,
                                                     const topo::SpanningTree& tree,
                                                     const Fixes& fixes = {},
                                                     const BuildOptions& opt = {});

std::pair<conic::ConicProgram, VarMap> build_clr_misocp(const net::Network& net,
                                                        const topo::IslandGraph& island,
                                                        const topo::SpanningTree& tree,
                                                        const Fixes& fixes = {},
                                                        const BuildOptions& opt = {});

std::pair<conic::ConicProgram, VarMap> build_clr_milp(const net::Network& net,
                                                      const topo::IslandGraph& island,
                                                      const topo::SpanningTree& tree,
                                                      const Fixes& fixes = {},
                                                      const BuildOptions& opt = {});

// Max over line blocks [[V, S], [S^H, I]] of |lambda2| / |lambda1|.
double rank1_ratio(const conic::ConicSolution& sol, const VarMap& vm);

// Max over lines of |l * u_parent - |S|^2| / max(1, |S|^2).
double socp_exactness(const conic::ConicSolution& sol, const VarMap& vm);

// Complex matrix values read back from a solution.
Eigen::MatrixXcd herm_value(const conic::ConicSolution& sol, const HermVar& hv);
Eigen::MatrixXcd cplx_value(const conic::ConicSolution& sol, const CplxVar& cv);

constexpr double kRankExactnessThreshold = 1e-4;

PhasorProfile recover_phasors(const net::Network& net, const topo::IslandGraph& island,
                              const topo::SpanningTree& tree, const conic::ConicSolution& sol,
                              const VarMap& vm);

}  // namespace restore::models
