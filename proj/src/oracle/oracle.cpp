#include <algorithm>
#include <set>
#include <stdexcept>

#include "restore/models.hpp"
#include "restore/oracle.hpp"

namespace restore::oracle {
namespace {

bool connected_with(const topo::IslandGraph& g, const std::vector<int>& edge_sel) {
  const int n = static_cast<int>(g.vertices.size());
  std::vector<int> up(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) up[static_cast<size_t>(i)] = i;
  auto find = [&](int a) {
    while (up[static_cast<size_t>(a)] != a) a = up[static_cast<size_t>(a)] =
        up[static_cast<size_t>(up[static_cast<size_t>(a)])];
    return a;
  };
  int comps = n;
  for (int ei : edge_sel) {
    const auto& e = g.edges[static_cast<size_t>(ei)];
    int a = find(e.u), b = find(e.v);
    if (a != b) {
      up[static_cast<size_t>(a)] = b;
      --comps;
    }
  }
  return comps == 1;
}

double tree_diam(const topo::IslandGraph& g, const std::vector<int>& edge_sel) {
  topo::IslandGraph sub;
  sub.vertices = g.vertices;
  for (int ei : edge_sel) sub.edges.push_back(g.edges[static_cast<size_t>(ei)]);
  return topo::tree_diameter(sub);
}

}  // namespace

OracleResult brute_force_clr(const net::Network& net, const topo::IslandGraph& island,
                             const topo::SpanningTree& tree,
                             const conic::SolverSettings& settings, int max_loads) {
  OracleResult out;
  std::set<std::string> members(island.vertices.begin(), island.vertices.end());
  std::vector<double> weight, pkw, qkvar;
  for (const auto& ld : net.loads) {
    if (!members.count(ld.bus)) continue;
    out.load_buses.push_back(ld.bus);
    weight.push_back(ld.weight);
    pkw.push_back(ld.total_p());
    qkvar.push_back(ld.total_q());
  }
  const int n = static_cast<int>(out.load_buses.size());
  if (n > max_loads) throw std::invalid_argument("too many loads to enumerate");

  double cap_p = 0.0, cap_q = 0.0;
  for (const auto& src : net.sources)
    if (members.count(src.bus)) {
      cap_p += src.p_rate;
      cap_q += src.q_rate;
    }

  const long total = 1L << n;
  double best = -1.0;
  std::vector<std::pair<double, long>> optima;  // (objective, mask)
  long examined = 0;

#pragma omp parallel
  {
    double lbest = -1.0;
    std::vector<std::pair<double, long>> lopt;
    long lexam = 0;
#pragma omp for schedule(dynamic) nowait
    for (long mask = 0; mask < total; ++mask) {
      double w = 0.0, p = 0.0, q = 0.0;
      for (int i = 0; i < n; ++i)
        if (mask >> i & 1) {
          w += weight[static_cast<size_t>(i)];
          p += pkw[static_cast<size_t>(i)];
          q += qkvar[static_cast<size_t>(i)];
        }
      // aggregate-capacity prune: lossless demand alone must fit
      if (p > cap_p || q > cap_q) continue;
      if (w < lbest - 1e-9) continue;
      models::Fixes fixes;
      for (int i = 0; i < n; ++i)
        fixes.emplace_back(out.load_buses[static_cast<size_t>(i)], mask >> i & 1 ? 1.0 : 0.0);
      models::BuildOptions opt;
      opt.objective = models::Objective::min_generation;
      auto [prog, vm] = models::build_clr_sdp(net, island, tree, fixes, opt);
      auto sol = conic::solve_conic(prog, settings);
      ++lexam;
      if (!sol.optimal()) continue;
      if (models::rank1_ratio(sol, vm) > models::kRankExactnessThreshold) continue;
      if (w > lbest + 1e-9) {
        lbest = w;
        lopt.clear();
      }
      if (w >= lbest - 1e-9) lopt.emplace_back(w, mask);
    }
#pragma omp critical
    {
      examined += lexam;
      if (lbest > best + 1e-9) {
        best = lbest;
        optima.clear();
      }
      if (std::abs(lbest - best) <= 1e-9)
        for (const auto& o : lopt)
          if (o.first >= best - 1e-9) optima.push_back(o);
    }
  }

  std::sort(optima.begin(), optima.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });
  out.objective = std::max(0.0, best);
  out.feasible_examined = examined;
  for (const auto& [w, mask] : optima) {
    if (w < best - 1e-9) continue;
    std::vector<int> g(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) g[static_cast<size_t>(i)] = mask >> i & 1;
    out.optimal_gammas.push_back(std::move(g));
  }
  return out;
}

double brute_force_mdst(const topo::IslandGraph& g, int max_extra_edges) {
  const int n = static_cast<int>(g.vertices.size());
  const int m = static_cast<int>(g.edges.size());
  if (n == 0) throw std::invalid_argument("empty graph");
  const int k = m - (n - 1);  // edges to drop
  if (k < 0 || !connected_with(g, [m] {
        std::vector<int> all(static_cast<size_t>(m));
        for (int i = 0; i < m; ++i) all[static_cast<size_t>(i)] = i;
        return all;
      }()))
    throw std::invalid_argument("disconnected graph");
  if (k > max_extra_edges) throw std::invalid_argument("too many non-tree edges");
  if (k == 0) {
    std::vector<int> all(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) all[static_cast<size_t>(i)] = i;
    return tree_diam(g, all);
  }

  // enumerate k-subsets of dropped edges; parallel over the first choice
  double best = std::numeric_limits<double>::infinity();
#pragma omp parallel
  {
    double local = std::numeric_limits<double>::infinity();
#pragma omp for schedule(dynamic) nowait
    for (int first = 0; first <= m - k; ++first) {
      std::vector<int> drop(static_cast<size_t>(k));
      drop[0] = first;
      // odometer over the remaining k-1 positions
      for (int i = 1; i < k; ++i) drop[static_cast<size_t>(i)] = first + i;
      while (true) {
        std::vector<int> keep;
        keep.reserve(static_cast<size_t>(m - k));
        {
          size_t di = 0;
          for (int e = 0; e < m; ++e) {
            if (di < drop.size() && drop[di] == e)
              ++di;
            else
              keep.push_back(e);
          }
        }
        if (connected_with(g, keep)) local = std::min(local, tree_diam(g, keep));
        // advance positions 1..k-1 (position 0 fixed by the loop)
        int pos = k - 1;
        while (pos >= 1 && drop[static_cast<size_t>(pos)] == m - k + pos) --pos;
        if (pos < 1) break;
        ++drop[static_cast<size_t>(pos)];
        for (int i = pos + 1; i < k; ++i)
          drop[static_cast<size_t>(i)] = drop[static_cast<size_t>(i - 1)] + 1;
      }
    }
#pragma omp critical
    best = std::min(best, local);
  }
  return best;
}

}  // namespace restore::oracle
