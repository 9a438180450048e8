// Exhaustive ground truth for small instances: load-status enumeration
// against the fixed-status conic relaxation, and spanning-tree diameter
// search.
#pragma once

#include <vector>

#include "restore/conic.hpp"
#include "restore/netmodel.hpp"
#include "restore/topology.hpp"

namespace restore::oracle {

struct OracleResult {
  std::vector<std::vector<int>> optimal_gammas;  // all optima, 0/1 per load
  std::vector<std::string> load_buses;           // column order of the vectors
  double objective = 0.0;
  long feasible_examined = 0;
};

// Enumerate all 2^|loads| status vectors over the island's loads; a vector is
// feasible when the fixed-status relaxation solves to optimality with an
// exact rank profile.  Returns every maximum-weight feasible vector.
OracleResult brute_force_clr(const net::Network& net, const topo::IslandGraph& island,
                             const topo::SpanningTree& tree,
                             const conic::SolverSettings& settings = {}, int max_loads = 16);

// Minimum diameter over all spanning trees of g.
double brute_force_mdst(const topo::IslandGraph& g, int max_extra_edges = 8);

}  // namespace restore::oracle
