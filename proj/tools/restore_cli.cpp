// Command-line front end: solve an outage event, run randomized sweeps,
// invoke the exhaustive oracle, compare formulations, validate inputs.
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "restore/cli.hpp"
#include "restore/models.hpp"
#include "restore/oracle.hpp"

namespace {

using namespace restore;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out.good()) throw std::runtime_error("cannot write " + path);
  out << text;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    std::cout << text;
  else
    write_file(path, text);
}

struct CommonOpts {
  std::string feeder_path, event_path;
  std::string out_path, phasor_path, trajectory_path;
  std::vector<double> weights;
  std::string reference_bus;
  engine::EngineConfig cfg;
};

net::Network load_feeder(const CommonOpts& o) {
  net::Network n = net::parse_feeder(read_file(o.feeder_path));
  if (!o.weights.empty()) {
    n.level_weights = o.weights;
    n.level_count = static_cast<int>(o.weights.size());
    for (auto& ld : n.loads) ld.weight = n.weight_of_level(ld.level);
  }
  auto report = net::validate_network(n);
  if (!report.ok()) {
    std::ostringstream msg;
    msg << "invalid feeder:";
    for (const auto& s : report.issues) msg << "\n  " << s;
    throw std::runtime_error(msg.str());
  }
  return n;
}

net::PostEventNetwork load_scene(const CommonOpts& o) {
  net::Network n = load_feeder(o);
  net::EventSpec ev;
  if (!o.event_path.empty()) ev = net::parse_event(read_file(o.event_path), n);
  return net::apply_event(n, ev);
}

int run_solve(const CommonOpts& o) {
  net::PostEventNetwork pe = load_scene(o);
  auto plans = engine::solve_restoration(pe, o.cfg);
  emit(o.out_path, cli::result_json(plans));
  if (!o.phasor_path.empty()) write_file(o.phasor_path, cli::phasor_csv(plans));
  if (!o.trajectory_path.empty()) write_file(o.trajectory_path, cli::trajectory_csv(plans));
  for (const auto& p : plans)
    if (!p.error.empty()) {
      std::cerr << "island " << p.island_id << ": " << p.error << "\n";
      return p.error.find("infeasible") != std::string::npos ? kExitInfeasible : kExitError;
    }
  return kExitOk;
}

int run_sweep(const CommonOpts& o, cli::SweepSpec spec) {
  spec.engine = o.cfg;
  net::Network n = load_feeder(o);
  auto result = cli::run_sweep(n, spec);
  emit(o.out_path, cli::sweep_json(spec, result));
  return kExitOk;
}

int run_oracle(const CommonOpts& o, int max_loads) {
  net::PostEventNetwork pe = load_scene(o);
  nlohmann::json out;
  out["schema_version"] = cli::kSchemaVersion;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& island : topo::find_target_islands(pe)) {
    if (!island.restorable()) continue;
    auto tree = topo::minimum_diameter_spanning_tree(island);
    auto res = oracle::brute_force_clr(pe.net, island, tree, o.cfg.solver, max_loads);
    nlohmann::json j;
    j["island"] = island.id;
    j["objective"] = res.objective;
    j["load_buses"] = res.load_buses;
    j["optimal_gammas"] = res.optimal_gammas;
    j["feasible_examined"] = res.feasible_examined;
    arr.push_back(j);
  }
  out["islands"] = arr;
  emit(o.out_path, out.dump(2) + "\n");
  return kExitOk;
}

// Restored sets from the iterative SDP engine and the linear MILP, plus the
// balanced SOC model where the island admits it.
int run_compare(const CommonOpts& o) {
  net::PostEventNetwork pe = load_scene(o);
  auto plans = engine::solve_restoration(pe, o.cfg);
  nlohmann::json out;
  out["schema_version"] = cli::kSchemaVersion;
  nlohmann::json arr = nlohmann::json::array();
  auto islands = topo::find_target_islands(pe);
  for (const auto& island : islands) {
    if (!island.restorable()) continue;
    const engine::RestorationPlan* plan = nullptr;
    for (const auto& p : plans)
      if (p.island_id == island.id) plan = &p;
    if (!plan || !plan->error.empty()) continue;

    nlohmann::json j;
    j["island"] = island.id;
    std::set<std::string> sdp(plan->restored.begin(), plan->restored.end());
    j["sdp"] = plan->restored;

    models::BuildOptions bopt;
    bopt.reference_bus = o.cfg.reference_bus;
    auto [mprog, mvm] = models::build_clr_milp(pe.net, island, plan->tree, {}, bopt);
    auto msol = conic::solve_mip(mprog, o.cfg.solver);
    if (msol.optimal()) {
      std::set<std::string> milp;
      for (const auto& [bus, id] : mvm.gamma)
        if (msol.x[id] > 0.5) milp.insert(bus);
      j["milp"] = milp;
      j["milp_same"] = (milp == sdp);
      j["milp_extra"] = [&] {
        std::vector<std::string> extra;
        for (const auto& b : milp)
          if (!sdp.count(b)) extra.push_back(b);
        return extra;
      }();
    }

    try {
      auto [sprog, svm] = models::build_clr_misocp(pe.net, island, plan->tree, {}, bopt);
      auto ssol = conic::solve_mip(sprog, o.cfg.solver);
      if (ssol.optimal()) {
        std::set<std::string> soc;
        for (const auto& [bus, id] : svm.gamma)
          if (ssol.x[id] > 0.5) soc.insert(bus);
        j["misocp"] = soc;
        j["misocp_same"] = (soc == sdp);
      }
    } catch (const std::invalid_argument&) {
      j["misocp"] = nullptr;  // island is unbalanced
    }
    arr.push_back(j);
  }
  out["islands"] = arr;
  emit(o.out_path, out.dump(2) + "\n");
  return kExitOk;
}

int run_validate(const CommonOpts& o) {
  net::Network n = load_feeder(o);
  net::PostEventNetwork pe{n};
  if (!o.event_path.empty()) pe = net::apply_event(n, net::parse_event(read_file(o.event_path), n));
  nlohmann::json out;
  out["schema_version"] = cli::kSchemaVersion;
  out["feeder"] = n.name;
  out["buses"] = n.buses.size();
  out["lines"] = n.lines.size();
  out["loads"] = n.loads.size();
  out["sources"] = n.sources.size();
  nlohmann::json arr = nlohmann::json::array();
  engine::WeightScheme ws{n.level_weights};
  for (const auto& island : topo::find_target_islands(pe)) {
    nlohmann::json j;
    j["island"] = island.id;
    j["buses"] = island.vertices.size();
    j["restorable"] = island.restorable();
    if (island.restorable()) {
      auto wr = engine::validate_weights(ws, n, island, o.cfg.dominance_margin);
      j["weights_ok"] = wr.ok();
      j["weight_violations"] = wr.violations;
      auto sr = engine::check_sufficient_conditions(n, island, o.cfg.ampacity_multiple,
                                                    o.cfg.demand_rel_gap);
      j["ampacity_ok"] = sr.ampacity_ok;
      j["demand_gap_ok"] = sr.demand_gap_ok;
      j["notes"] = sr.notes;
    }
    arr.push_back(j);
  }
  out["islands"] = arr;
  emit(o.out_path, out.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"critical-load restoration planner"};
  app.require_subcommand(1);

  CommonOpts o;
  try {
    o.cfg.solver = cli::settings_from_env();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }

  auto add_common = [&](CLI::App* cmd, bool with_event) {
    cmd->add_option("feeder", o.feeder_path, "feeder document")->required();
    if (with_event) cmd->add_option("event", o.event_path, "outage event JSON");
    cmd->add_option("--out", o.out_path, "result JSON path ('-' for stdout)");
    cmd->add_option("--weights", o.weights, "override priority level weights");
    cmd->add_option("--reference-bus", o.cfg.reference_bus, "slack bus override");
    cmd->add_option("--feas-tol", o.cfg.solver.feas_tol, "interior-point tolerance");
    cmd->add_option("--max-iterations", o.cfg.solver.max_iterations, "interior-point cap");
    cmd->add_option("--integrality-eps", o.cfg.integrality_eps, "relaxed-status rounding band");
    cmd->add_option("--gap-tol", o.cfg.gap_tol, "level-selection boundary tolerance");
    cmd->add_option("--binding-tol", o.cfg.binding_tol, "binding-constraint tolerance");
  };

  auto* solve = app.add_subcommand("solve", "restore an outage event");
  add_common(solve, true);
  solve->add_option("--phasors", o.phasor_path, "write bus phasor CSV");
  solve->add_option("--trajectory", o.trajectory_path, "write per-iteration objective CSV");

  cli::SweepSpec spec;
  auto* sweep = app.add_subcommand("sweep", "randomized scenario sweep");
  add_common(sweep, false);
  sweep->add_option("--scenarios", spec.scenarios, "scenario count");
  sweep->add_option("--seed", spec.seed, "random seed");
  sweep->add_option("--max-faults", spec.max_faults, "faulted lines per scenario");
  sweep->add_option("--rating-low", spec.rating_low, "source rating rescale lower bound");
  sweep->add_option("--rating-high", spec.rating_high, "source rating rescale upper bound");
  sweep->add_flag("--compare-milp", spec.compare_milp, "also solve the linear model");
  sweep->add_option("--workers", spec.workers, "worker threads (0: all cores)");

  int max_loads = 16;
  auto* orc = app.add_subcommand("oracle", "exhaustive ground-truth enumeration");
  add_common(orc, true);
  orc->add_option("--max-loads", max_loads, "refuse islands with more loads");

  auto* cmp = app.add_subcommand("compare", "formulation agreement report");
  add_common(cmp, true);

  auto* val = app.add_subcommand("validate", "check feeder, weights, and island conditions");
  add_common(val, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return run_solve(o);
    if (sweep->parsed()) return run_sweep(o, spec);
    if (orc->parsed()) return run_oracle(o, max_loads);
    if (cmp->parsed()) return run_compare(o);
    if (val->parsed()) return run_validate(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
