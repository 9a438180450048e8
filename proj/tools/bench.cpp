// Timing comparison of the OpenMP kernels against their serial references:
// minimum-diameter spanning tree search and the exhaustive status oracle.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "restore/netmodel.hpp"
#include "restore/oracle.hpp"
#include "restore/topology.hpp"

namespace {

using namespace restore;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

topo::IslandGraph random_graph(std::mt19937& rng, int n, int extra) {
  std::uniform_real_distribution<double> wd(0.1, 2.0);
  topo::IslandGraph g;
  for (int i = 0; i < n; ++i) g.vertices.push_back("v" + std::to_string(i + 1));
  g.id = g.vertices[0];
  std::set<std::pair<int, int>> used;
  int k = 0;
  auto add = [&](int u, int v) {
    g.edges.push_back({"e" + std::to_string(k++), u, v, wd(rng), false});
  };
  for (int v = 1; v < n; ++v) {
    int u = static_cast<int>(rng() % static_cast<unsigned>(v));
    used.insert({u, v});
    add(u, v);
  }
  int attempts = 4 * extra;
  while (extra > 0 && attempts-- > 0) {
    int u = static_cast<int>(rng() % static_cast<unsigned>(n));
    int v = static_cast<int>(rng() % static_cast<unsigned>(n));
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (!used.insert({u, v}).second) continue;
    add(u, v);
    --extra;
  }
  return g;
}

void bench_mdst() {
  std::printf("minimum-diameter spanning tree, %d threads available\n", omp_get_max_threads());
  std::printf("%8s %8s %12s %12s %9s\n", "vertices", "chords", "parallel_s", "serial_s", "speedup");
  std::mt19937 rng(42);
  for (int n : {60, 120, 240}) {
    int extra = n / 2;
    topo::IslandGraph g = random_graph(rng, n, extra);

    auto t0 = Clock::now();
    topo::SpanningTree par = topo::minimum_diameter_spanning_tree(g);
    double tp = seconds_since(t0);

    t0 = Clock::now();
    topo::SpanningTree ser = topo::minimum_diameter_spanning_tree_serial(g);
    double ts = seconds_since(t0);

    const char* tag = (par.edge_ids == ser.edge_ids && par.diameter == ser.diameter)
                          ? ""
                          : "  MISMATCH";
    std::printf("%8d %8zu %12.4f %12.4f %8.2fx%s\n", n, g.edges.size() - (n - 1), tp, ts,
                ts / tp, tag);
  }
}

void bench_oracle(const std::string& data_dir) {
  net::Network n = [&] {
    std::ifstream in(data_dir + "/ieee13_mod.feeder");
    std::ostringstream ss;
    ss << in.rdbuf();
    return net::parse_feeder(ss.str());
  }();
  net::EventSpec ev;
  ev.faulted_lines = {"632-671", "684-652"};
  net::PostEventNetwork pe = net::apply_event(n, ev);

  const topo::IslandGraph* big = nullptr;
  auto islands = topo::find_target_islands(pe);
  for (const auto& g : islands)
    if (g.restorable()) big = &g;
  if (!big) return;
  auto tree = topo::minimum_diameter_spanning_tree(*big);

  std::printf("\nexhaustive status oracle, thirteen-node island\n");
  std::printf("%8s %10s %12s %9s\n", "threads", "feasible", "wall_s", "speedup");
  double base = 0.0;
  for (int threads : {1, omp_get_max_threads()}) {
    omp_set_num_threads(threads);
    auto t0 = Clock::now();
    auto res = oracle::brute_force_clr(pe.net, *big, tree);
    double t = seconds_since(t0);
    if (threads == 1) base = t;
    std::printf("%8d %10ld %12.3f %8.2fx\n", threads, res.feasible_examined, t, base / t);
  }
}

}  // namespace

int main() {
  bench_mdst();
  bench_oracle(std::string(RESTORE_SOURCE_DIR) + "/data");
  return 0;
}
