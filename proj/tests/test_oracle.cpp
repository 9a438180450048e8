#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "restore/engine.hpp"
#include "restore/oracle.hpp"

using namespace restore;

namespace {

struct Fixture {
  net::Network net;
  topo::IslandGraph island;
  topo::SpanningTree tree;
};

Fixture make(const std::string& text) {
  Fixture f;
  f.net = net::parse_feeder(text);
  net::PostEventNetwork pe{f.net};
  auto islands = topo::find_target_islands(pe);
  REQUIRE(islands.size() == 1);
  f.island = islands[0];
  f.tree = topo::minimum_diameter_spanning_tree(f.island);
  return f;
}

const char* kTiny =
    "feeder-format 1\n"
    "name tiny\n"
    "levels 1\n"
    "weights 1\n"
    "bus n1 a\n"
    "bus n2 a\n"
    "line n1-n2 n1 n2 a ampacity 400\n"
    "zrow 0.02+0.04j\n"
    "load n2 1 a 10+5j\n"
    "source g1 n1 diesel 50 50\n";

// two-level chain where capacity covers only the level-1 load
const char* kPriority =
    "feeder-format 1\n"
    "name priority\n"
    "levels 2\n"
    "weights 10 1\n"
    "bus n1 abc\n"
    "bus n2 abc\n"
    "bus n3 abc\n"
    "line n1-n2 n1 n2 abc ampacity 400 400 400\n"
    "zrow 0.1+0.3j\n"
    "zrow 0+0j 0.1+0.3j\n"
    "zrow 0+0j 0+0j 0.1+0.3j\n"
    "line n2-n3 n2 n3 abc ampacity 400 400 400\n"
    "zrow 0.05+0.15j\n"
    "zrow 0+0j 0.05+0.15j\n"
    "zrow 0+0j 0+0j 0.05+0.15j\n"
    "load n2 1 a 60+20j b 60+20j c 60+20j\n"
    "load n3 2 a 90+30j b 90+30j c 90+30j\n"
    "source g1 n1 diesel 300 150\n";

// two identical level-1 loads, capacity for exactly one
const char* kSymmetric =
    "feeder-format 1\n"
    "name symmetric\n"
    "levels 1\n"
    "weights 1\n"
    "bus n1 a\n"
    "bus n2 a\n"
    "bus n3 a\n"
    "line n1-n2 n1 n2 a ampacity 400\n"
    "zrow 0.02+0.04j\n"
    "line n1-n3 n1 n3 a ampacity 400\n"
    "zrow 0.02+0.04j\n"
    "load n2 1 a 100+50j\n"
    "load n3 1 a 100+50j\n"
    "source g1 n1 diesel 120 60\n";

}  // namespace

TEST_CASE("single feasible load is the optimum") {
  Fixture f = make(kTiny);
  auto res = oracle::brute_force_clr(f.net, f.island, f.tree);
  CHECK(res.load_buses == std::vector<std::string>{"n2"});
  CHECK(res.objective == doctest::Approx(1.0));
  REQUIRE(res.optimal_gammas.size() == 1);
  CHECK(res.optimal_gammas[0] == std::vector<int>{1});
  CHECK(res.feasible_examined >= 1);
}

TEST_CASE("priority load wins under tight capacity") {
  Fixture f = make(kPriority);
  auto res = oracle::brute_force_clr(f.net, f.island, f.tree);
  REQUIRE(res.load_buses == std::vector<std::string>{"n2", "n3"});
  CHECK(res.objective == doctest::Approx(10.0));
  REQUIRE(res.optimal_gammas.size() == 1);
  CHECK(res.optimal_gammas[0] == std::vector<int>{1, 0});
}

TEST_CASE("symmetric instance returns both optima") {
  Fixture f = make(kSymmetric);
  auto res = oracle::brute_force_clr(f.net, f.island, f.tree);
  CHECK(res.objective == doctest::Approx(1.0));
  REQUIRE(res.optimal_gammas.size() == 2);
  CHECK(res.optimal_gammas[0] == std::vector<int>{1, 0});
  CHECK(res.optimal_gammas[1] == std::vector<int>{0, 1});
}

TEST_CASE("load cap guards the enumeration") {
  Fixture f = make(kSymmetric);
  CHECK_THROWS_AS(oracle::brute_force_clr(f.net, f.island, f.tree, {}, 1),
                  std::invalid_argument);
}

TEST_CASE("verified engine runs match the oracle objective") {
  for (const char* doc : {kTiny, kPriority, kSymmetric}) {
    Fixture f = make(doc);
    auto [gamma, trace] = engine::iterate(f.net, f.island, f.tree);
    engine::WeightScheme ws{f.net.level_weights};
    double obj = 0.0;
    for (const auto& ld : f.net.loads)
      if (gamma.at(ld.bus) == 1.0) obj += ld.weight;
    auto res = oracle::brute_force_clr(f.net, f.island, f.tree);
    if (engine::check_optimality_criterion(trace, ws) == engine::Verdict::verified_global) {
      CHECK(obj == doctest::Approx(res.objective));
      // the integral plan must be one of the enumerated optima
      std::vector<int> got;
      for (const auto& bus : res.load_buses)
        got.push_back(gamma.at(bus) == 1.0 ? 1 : 0);
      CHECK(std::count(res.optimal_gammas.begin(), res.optimal_gammas.end(), got) == 1);
    } else {
      // unverified still never overshoots the true optimum
      CHECK(obj <= res.objective + 1e-9);
    }
  }
}
