#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "restore/oracle.hpp"
#include "restore/topology.hpp"

using namespace restore;
using topo::IslandGraph;
using topo::SpanningTree;

namespace {

IslandGraph make_graph(int n, const std::vector<std::tuple<int, int, double>>& edges) {
  IslandGraph g;
  for (int i = 0; i < n; ++i) g.vertices.push_back("v" + std::to_string(i + 1));
  int k = 0;
  for (auto [u, v, w] : edges)
    g.edges.push_back({"e" + std::to_string(k++), u, v, w, false});
  g.id = g.vertices.empty() ? "" : g.vertices[0];
  return g;
}

net::Network load13() {
  std::ifstream in(std::string(RESTORE_SOURCE_DIR) + "/data/ieee13_mod.feeder");
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return net::parse_feeder(ss.str());
}

// random connected graph: a spanning tree plus up to `extra` chords
IslandGraph random_graph(std::mt19937& rng, int n, int extra) {
  std::uniform_real_distribution<double> wd(0.1, 2.0);
  std::vector<std::tuple<int, int, double>> edges;
  std::set<std::pair<int, int>> used;
  for (int v = 1; v < n; ++v) {
    int u = static_cast<int>(rng() % static_cast<unsigned>(v));
    edges.push_back({u, v, wd(rng)});
    used.insert({u, v});
  }
  int attempts = 4 * extra;
  while (extra > 0 && attempts-- > 0) {
    int u = static_cast<int>(rng() % static_cast<unsigned>(n));
    int v = static_cast<int>(rng() % static_cast<unsigned>(n));
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (used.count({u, v})) continue;
    used.insert({u, v});
    edges.push_back({u, v, wd(rng)});
    --extra;
  }
  return make_graph(n, edges);
}

}  // namespace

TEST_CASE("electrical distance: mean self-impedance magnitude") {
  net::Line l;
  l.phases = net::PhaseSet::parse("a");
  l.Z = Eigen::MatrixXcd::Zero(1, 1);
  l.Z(0, 0) = net::cplx(1.0, 0.0);
  CHECK(topo::electrical_distance(l) == 1.0);

  net::Line l3;
  l3.phases = net::PhaseSet::all();
  l3.Z = Eigen::MatrixXcd::Zero(3, 3);
  l3.Z(0, 0) = net::cplx(0.0, 1.0);
  l3.Z(1, 1) = net::cplx(2.0, 0.0);
  l3.Z(2, 2) = net::cplx(3.0, 0.0);
  CHECK(topo::electrical_distance(l3) == doctest::Approx(2.0));

  net::Line sw;
  sw.phases = net::PhaseSet::parse("a");
  sw.Z = Eigen::MatrixXcd::Zero(1, 1);
  CHECK(topo::electrical_distance(sw) == 0.0);
}

TEST_CASE("four-vertex cycle graph: star tree wins over path") {
  // vertices 1..4, unit edges 1-2, 2-3, 2-4, 3-4
  IslandGraph g = make_graph(4, {{0, 1, 1.0}, {1, 2, 1.0}, {1, 3, 1.0}, {2, 3, 1.0}});
  SpanningTree t = topo::minimum_diameter_spanning_tree(g);
  CHECK(t.diameter == doctest::Approx(2.0));
  std::set<std::string> sel(t.edge_ids.begin(), t.edge_ids.end());
  CHECK(sel.count("e2"));   // edge (2,4) kept
  CHECK(!sel.count("e3"));  // edge (3,4) dropped
  CHECK(topo::validate_radial(t, g));
}

TEST_CASE("input already a tree returns itself") {
  IslandGraph g = make_graph(4, {{0, 1, 1.0}, {1, 2, 2.0}, {1, 3, 0.5}});
  SpanningTree t = topo::minimum_diameter_spanning_tree(g);
  CHECK(t.edge_ids.size() == 3);
  CHECK(t.diameter == doctest::Approx(topo::tree_diameter(g)));
}

TEST_CASE("tree diameter basics") {
  IslandGraph single = make_graph(1, {});
  CHECK(topo::tree_diameter(single) == 0.0);
  // star on 4 leaves
  IslandGraph star =
      make_graph(5, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}, {0, 4, 1.0}});
  CHECK(topo::tree_diameter(star) == doctest::Approx(2.0));
}

TEST_CASE("radiality validation") {
  IslandGraph g = make_graph(4, {{0, 1, 1.0}, {1, 2, 1.0}, {1, 3, 1.0}, {2, 3, 1.0}});
  SpanningTree good;
  good.edge_ids = {"e0", "e1", "e2"};
  CHECK(topo::validate_radial(good, g));
  SpanningTree cyc;
  cyc.edge_ids = {"e1", "e2", "e3"};  // cycle 2-3-4, vertex 1 detached
  CHECK(!topo::validate_radial(cyc, g));
  SpanningTree forest;
  forest.edge_ids = {"e0", "e1"};
  CHECK(!topo::validate_radial(forest, g));
}

TEST_CASE("post-event islands on the thirteen-node feeder") {
  net::Network n13 = load13();
  net::EventSpec ev;
  ev.faulted_lines = {"632-671", "684-652"};
  auto islands = topo::find_target_islands(net::apply_event(n13, ev));
  REQUIRE(islands.size() == 2);
  // one restorable island with all sources; 652 alone and unrestorable
  const IslandGraph* big = nullptr;
  const IslandGraph* lone = nullptr;
  for (const auto& g : islands) (g.vertices.size() > 1 ? big : lone) = &g;
  REQUIRE(big != nullptr);
  REQUIRE(lone != nullptr);
  CHECK(big->vertex_index("675") >= 0);
  CHECK(big->vertex_index("652") < 0);
  CHECK(big->sources.size() == 4);
  CHECK(lone->vertices == std::vector<std::string>{"652"});
  CHECK(!lone->restorable());
}

TEST_CASE("intact network is a single island, disjoint halves are two") {
  net::Network n13 = load13();
  auto islands = topo::find_target_islands(net::apply_event(n13, {}));
  CHECK(islands.size() == 1);
  net::EventSpec ev;
  ev.faulted_lines = {"632-633", "633-671", "634-675"};  // cut {633,634} off
  auto two = topo::find_target_islands(net::apply_event(n13, ev));
  CHECK(two.size() == 2);
}

TEST_CASE("island tree selection matches the published switch plan") {
  net::Network n13 = load13();
  net::EventSpec ev;
  ev.faulted_lines = {"632-671", "684-652"};
  auto islands = topo::find_target_islands(net::apply_event(n13, ev));
  const IslandGraph* big = nullptr;
  for (const auto& g : islands)
    if (g.restorable()) big = &g;
  REQUIRE(big != nullptr);
  SpanningTree t = topo::minimum_diameter_spanning_tree(*big);
  std::map<std::string, bool> act(t.switch_actions.begin(), t.switch_actions.end());
  CHECK(act.at("632-645"));
  CHECK(act.at("633-671"));
  CHECK(act.at("671-692"));
  CHECK(!act.at("634-675"));
  CHECK(topo::validate_radial(t, *big));
}

TEST_CASE("tree diameter is minimal against exhaustive search") {
  std::mt19937 rng(20240811);
  for (int trial = 0; trial < 40; ++trial) {
    int n = 4 + static_cast<int>(rng() % 7u);
    int extra = static_cast<int>(rng() % 7u);
    IslandGraph g = random_graph(rng, n, extra);
    SpanningTree t = topo::minimum_diameter_spanning_tree(g);
    double best = oracle::brute_force_mdst(g);
    INFO("trial ", trial, " n=", n);
    CHECK(t.diameter == doctest::Approx(best).epsilon(1e-9));
    CHECK(topo::validate_radial(t, g));
  }
}

TEST_CASE("parallel and serial tree construction agree") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    IslandGraph g = random_graph(rng, 8, 5);
    SpanningTree a = topo::minimum_diameter_spanning_tree(g);
    SpanningTree b = topo::minimum_diameter_spanning_tree_serial(g);
    CHECK(a.edge_ids == b.edge_ids);
    CHECK(a.diameter == b.diameter);
    CHECK(a.root == b.root);
  }
}

TEST_CASE("adding an edge never increases the minimal diameter") {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    IslandGraph g = random_graph(rng, 7, 3);
    double before = topo::minimum_diameter_spanning_tree(g).diameter;
    // add one chord
    IslandGraph g2 = g;
    for (int u = 0; u < 7 && g2.edges.size() == g.edges.size(); ++u)
      for (int v = u + 1; v < 7; ++v) {
        bool exists = false;
        for (const auto& e : g.edges)
          exists = exists || (std::min(e.u, e.v) == u && std::max(e.u, e.v) == v);
        if (!exists) {
          g2.edges.push_back({"chord", u, v, 0.3, false});
          break;
        }
      }
    double after = topo::minimum_diameter_spanning_tree(g2).diameter;
    CHECK(after <= before + 1e-9);
  }
}
