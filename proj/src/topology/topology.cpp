#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "restore/topology.hpp"

namespace restore::topo {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dijkstra over the island graph from vertex s.
std::vector<double> sssp(const IslandGraph& g, int s) {
  const int n = static_cast<int>(g.vertices.size());
  std::vector<std::vector<std::pair<int, double>>> adj(static_cast<size_t>(n));
  for (const auto& e : g.edges) {
    adj[static_cast<size_t>(e.u)].push_back({e.v, e.length});
    adj[static_cast<size_t>(e.v)].push_back({e.u, e.length});
  }
  std::vector<double> d(static_cast<size_t>(n), kInf);
  d[static_cast<size_t>(s)] = 0.0;
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> q;
  q.push({0.0, s});
  while (!q.empty()) {
    auto [du, u] = q.top();
    q.pop();
    if (du > d[static_cast<size_t>(u)]) continue;
    for (auto [v, w] : adj[static_cast<size_t>(u)]) {
      if (du + w < d[static_cast<size_t>(v)]) {
        d[static_cast<size_t>(v)] = du + w;
        q.push({du + w, v});
      }
    }
  }
  return d;
}

std::vector<std::vector<double>> all_pairs(const IslandGraph& g, bool parallel) {
  const int n = static_cast<int>(g.vertices.size());
  std::vector<std::vector<double>> d(static_cast<size_t>(n));
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int s = 0; s < n; ++s) d[static_cast<size_t>(s)] = sssp(g, s);
  return d;
}

struct CenterPoint {
  int edge = -1;      // index into g.edges; -1 means vertex center
  int vertex = -1;    // used when edge == -1
  double t = 0.0;     // offset from edge endpoint u
  double radius = kInf;
};

// Eccentricity of the point at offset t on edge e: max over vertices of
// min(d(u,x) + t, d(v,x) + w - t).
double point_ecc(const std::vector<double>& du, const std::vector<double>& dv, double w,
                 double t) {
  double ecc = 0.0;
  for (size_t x = 0; x < du.size(); ++x)
    ecc = std::max(ecc, std::min(du[x] + t, dv[x] + w - t));
  return ecc;
}

SpanningTree build_mdst(const IslandGraph& g, bool parallel) {
  const int n = static_cast<int>(g.vertices.size());
  SpanningTree tree;
  tree.island_id = g.id;
  if (n == 0) return tree;
  if (n == 1) {
    tree.root = g.vertices[0];
    tree.parent[g.vertices[0]] = "";
    return tree;
  }

  auto d = all_pairs(g, parallel);
  for (int x = 0; x < n; ++x)
    if (d[0][static_cast<size_t>(x)] == kInf)
      throw std::invalid_argument("island graph is disconnected");

  // vertex centers first (covers t = 0 / t = w candidates for every edge)
  CenterPoint best;
  for (int v = 0; v < n; ++v) {
    double ecc = *std::max_element(d[static_cast<size_t>(v)].begin(),
                                   d[static_cast<size_t>(v)].end());
    if (ecc < best.radius ||
        (ecc == best.radius && best.edge == -1 && best.vertex >= 0 &&
         g.vertices[static_cast<size_t>(v)] < g.vertices[static_cast<size_t>(best.vertex)])) {
      best = {-1, v, 0.0, ecc};
    }
  }

  // interior candidates on each edge: crossings of an increasing branch
  // d(u,x) + t with a decreasing branch d(v,y) + w - t
  const int m = static_cast<int>(g.edges.size());
  std::vector<CenterPoint> per_edge(static_cast<size_t>(m));
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int ei = 0; ei < m; ++ei) {
    const auto& e = g.edges[static_cast<size_t>(ei)];
    if (e.length <= 0.0) continue;
    const auto& du = d[static_cast<size_t>(e.u)];
    const auto& dv = d[static_cast<size_t>(e.v)];
    CenterPoint loc;
    loc.edge = ei;
    for (int x = 0; x < n; ++x) {
      for (int y = 0; y < n; ++y) {
        double t = (dv[static_cast<size_t>(y)] + e.length - du[static_cast<size_t>(x)]) / 2.0;
        if (t <= 0.0 || t >= e.length) continue;
        double ecc = point_ecc(du, dv, e.length, t);
        if (ecc < loc.radius) {
          loc.t = t;
          loc.radius = ecc;
        }
      }
    }
    per_edge[static_cast<size_t>(ei)] = loc;
  }
  for (const auto& loc : per_edge)
    if (loc.radius < best.radius - 1e-12) best = loc;

  // shortest-path tree from the center; deterministic parent choice
  // (smaller distance, then smaller line id)
  std::vector<double> dc(static_cast<size_t>(n));
  std::set<std::string> tree_edges;
  int root_idx;
  if (best.edge < 0) {
    dc = d[static_cast<size_t>(best.vertex)];
    root_idx = best.vertex;
  } else {
    const auto& e = g.edges[static_cast<size_t>(best.edge)];
    const auto& du = d[static_cast<size_t>(e.u)];
    const auto& dv = d[static_cast<size_t>(e.v)];
    for (int x = 0; x < n; ++x)
      dc[static_cast<size_t>(x)] = std::min(du[static_cast<size_t>(x)] + best.t,
                                            dv[static_cast<size_t>(x)] + e.length - best.t);
    root_idx = e.u;
    tree_edges.insert(e.line_id);
    tree.parent[g.vertices[static_cast<size_t>(e.v)]] = g.vertices[static_cast<size_t>(e.u)];
  }
  tree.root = g.vertices[static_cast<size_t>(root_idx)];
  tree.parent[tree.root] = "";

  // order vertices by center distance and attach each to a settled neighbor
  std::vector<int> order(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (dc[static_cast<size_t>(a)] != dc[static_cast<size_t>(b)])
      return dc[static_cast<size_t>(a)] < dc[static_cast<size_t>(b)];
    return g.vertices[static_cast<size_t>(a)] < g.vertices[static_cast<size_t>(b)];
  });
  for (int x : order) {
    const std::string& xid = g.vertices[static_cast<size_t>(x)];
    if (tree.parent.count(xid)) continue;
    const IslandGraph::Edge* pick = nullptr;
    int pu = -1;
    for (const auto& e : g.edges) {
      int other = -1;
      if (e.u == x)
        other = e.v;
      else if (e.v == x)
        other = e.u;
      else
        continue;
      if (std::abs(dc[static_cast<size_t>(other)] + e.length - dc[static_cast<size_t>(x)]) >
          1e-9 * std::max(1.0, dc[static_cast<size_t>(x)]))
        continue;
      if (!tree.parent.count(g.vertices[static_cast<size_t>(other)])) continue;
      if (!pick || e.line_id < pick->line_id) {
        pick = &e;
        pu = other;
      }
    }
    if (!pick) throw std::logic_error("shortest-path tree construction failed");
    tree_edges.insert(pick->line_id);
    tree.parent[xid] = g.vertices[static_cast<size_t>(pu)];
  }

  tree.edge_ids.assign(tree_edges.begin(), tree_edges.end());
  tree.diameter = tree_diameter(tree, g);
  for (const auto& e : g.edges) {
    if (!e.switchable) continue;
    tree.switch_actions.push_back({e.line_id, tree_edges.count(e.line_id) > 0});
  }
  return tree;
}

}  // namespace

int IslandGraph::vertex_index(const std::string& bus) const {
  for (size_t i = 0; i < vertices.size(); ++i)
    if (vertices[i] == bus) return static_cast<int>(i);
  return -1;
}

double electrical_distance(const net::Line& line) {
  int np = static_cast<int>(line.Z.rows());
  if (np == 0) throw std::invalid_argument("line without phases");
  double sum = 0.0;
  for (int p = 0; p < np; ++p) sum += std::abs(line.Z(p, p));
  return sum / np;
}

std::vector<IslandGraph> find_target_islands(const net::PostEventNetwork& pe) {
  const net::Network& net = pe.net;
  const int nb = static_cast<int>(net.buses.size());
  // union-find over buses via energizable lines
  std::vector<int> up(static_cast<size_t>(nb));
  for (int i = 0; i < nb; ++i) up[static_cast<size_t>(i)] = i;
  auto find = [&](int a) {
    while (up[static_cast<size_t>(a)] != a) {
      up[static_cast<size_t>(a)] = up[static_cast<size_t>(up[static_cast<size_t>(a)])];
      a = up[static_cast<size_t>(a)];
    }
    return a;
  };
  auto energizable = [](const net::Line& l) {
    if (l.state == net::LineState::faulted) return false;
    return l.state == net::LineState::closed || l.kind != net::LineKind::fixed;
  };
  for (const auto& l : net.lines) {
    if (!energizable(l)) continue;
    int a = find(net.bus_index(l.from)), b = find(net.bus_index(l.to));
    if (a != b) up[static_cast<size_t>(a)] = b;
  }

  std::map<int, IslandGraph> groups;
  std::map<int, std::map<std::string, int>> vidx;
  for (int i = 0; i < nb; ++i) {
    int r = find(i);
    auto& g = groups[r];
    vidx[r][net.buses[static_cast<size_t>(i)].id] = static_cast<int>(g.vertices.size());
    g.vertices.push_back(net.buses[static_cast<size_t>(i)].id);
  }
  for (const auto& l : net.lines) {
    if (!energizable(l)) continue;
    int r = find(net.bus_index(l.from));
    auto& g = groups[r];
    g.edges.push_back({l.id, vidx[r][l.from], vidx[r][l.to], electrical_distance(l),
                       l.kind != net::LineKind::fixed});
  }
  for (const auto& s : net.sources) {
    int r = find(net.bus_index(s.bus));
    groups[r].sources.push_back(s.id);
  }

  std::vector<IslandGraph> out;
  for (auto& [r, g] : groups) {
    g.id = *std::min_element(g.vertices.begin(), g.vertices.end());
    out.push_back(std::move(g));
  }
  std::sort(out.begin(), out.end(),
            [](const IslandGraph& a, const IslandGraph& b) { return a.id < b.id; });
  return out;
}

SpanningTree minimum_diameter_spanning_tree(const IslandGraph& g) {
  return build_mdst(g, true);
}

SpanningTree minimum_diameter_spanning_tree_serial(const IslandGraph& g) {
  return build_mdst(g, false);
}

double tree_diameter(const IslandGraph& g) {
  const int n = static_cast<int>(g.vertices.size());
  if (n == 0) return 0.0;
  double diam = 0.0;
  for (int s = 0; s < n; ++s) {
    auto d = sssp(g, s);
    for (double v : d) {
      if (v == kInf) throw std::invalid_argument("disconnected graph");
      diam = std::max(diam, v);
    }
  }
  return diam;
}

double tree_diameter(const SpanningTree& t, const IslandGraph& g) {
  IslandGraph sub;
  sub.id = g.id;
  sub.vertices = g.vertices;
  std::set<std::string> keep(t.edge_ids.begin(), t.edge_ids.end());
  for (const auto& e : g.edges)
    if (keep.count(e.line_id)) sub.edges.push_back(e);
  return tree_diameter(sub);
}

bool validate_radial(const SpanningTree& t, const IslandGraph& g) {
  std::set<std::string> have;
  for (const auto& e : g.edges) have.insert(e.line_id);
  std::set<std::string> used;
  for (const auto& id : t.edge_ids) {
    if (!have.count(id)) return false;
    if (!used.insert(id).second) return false;
  }
  if (used.size() + 1 != g.vertices.size()) return false;
  IslandGraph sub;
  sub.vertices = g.vertices;
  for (const auto& e : g.edges)
    if (used.count(e.line_id)) sub.edges.push_back(e);
  try {
    tree_diameter(sub);
  } catch (const std::invalid_argument&) {
    return false;
  }
  return true;
}

}  // namespace restore::topo
