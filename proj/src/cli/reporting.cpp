#include "restore/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "restore/models.hpp"

namespace restore::cli {

namespace {

using nlohmann::json;

json profile_json(const models::PhasorProfile& p) {
  json j;
  j["generation_kw"] = p.generation_kw;
  j["restored_kw"] = p.restored_kw;
  j["losses_kw"] = p.losses_kw;
  json src = json::object();
  for (const auto& [id, pq] : p.source_pq) src[id] = {pq.first, pq.second};
  j["source_pq"] = src;
  json volt = json::object();
  for (const auto& [bus, entries] : p.bus_voltage) {
    json row = json::object();
    const char* names[3] = {"a", "b", "c"};
    for (int k = 0; k < 3; ++k)
      if (entries[k])
        row[names[k]] = {{"magnitude_pu", entries[k]->magnitude},
                         {"angle_deg", entries[k]->angle_deg}};
    volt[bus] = row;
  }
  j["bus_voltage"] = volt;
  return j;
}

json state_json(const engine::IterState& st) {
  json j;
  j["iteration"] = st.iteration;
  j["branch"] = engine::to_string(st.branch);
  j["w_sdp"] = st.w_sdp;
  j["w_int"] = st.w_int;
  j["k_star"] = st.k_star;
  j["n_re"] = st.n_re;
  j["gamma"] = st.gamma;
  j["gamma_one"] = st.l_gamma1;
  j["nonintegral"] = st.l_ni;
  j["fixed_level_prune"] = st.l_c1;
  j["fixed_binding"] = st.l_c2;
  j["fixed_cardinality"] = st.l_c3;
  j["fixed_zero"] = st.l_c4;
  return j;
}

json plan_json(const engine::RestorationPlan& p) {
  json j;
  j["island"] = p.island_id;
  j["error"] = p.error;
  j["objective"] = p.objective;
  j["verdict"] = engine::to_string(p.verdict);
  j["restored"] = p.restored;
  json tree;
  tree["edges"] = p.tree.edge_ids;
  tree["diameter"] = p.tree.diameter;
  tree["root"] = p.tree.root;
  json acts = json::array();
  for (const auto& [line, close] : p.tree.switch_actions)
    acts.push_back({{"line", line}, {"close", close}});
  tree["switch_actions"] = acts;
  j["tree"] = tree;
  json trace;
  trace["termination"] = p.trace.termination;
  json states = json::array();
  for (const auto& st : p.trace.states) states.push_back(state_json(st));
  trace["states"] = states;
  j["trace"] = trace;
  if (p.error.empty()) j["profile"] = profile_json(p.profile);
  return j;
}

int constraint_iterations(const engine::RestorationPlan& p) {
  return std::max(0, static_cast<int>(p.trace.states.size()) - 1);
}

}  // namespace

std::string result_json(const std::vector<engine::RestorationPlan>& plans) {
  json j;
  j["schema_version"] = kSchemaVersion;
  double objective = 0.0;
  int iterations = 0;
  bool all_verified = true, any_error = false;
  json arr = json::array();
  for (const auto& p : plans) {
    arr.push_back(plan_json(p));
    objective += p.objective;
    iterations = std::max(iterations, constraint_iterations(p));
    if (!p.error.empty()) any_error = true;
    if (p.verdict != engine::Verdict::verified_global) all_verified = false;
  }
  j["islands"] = arr;
  j["objective"] = objective;
  j["iterations"] = iterations;
  j["all_verified"] = all_verified;
  j["any_error"] = any_error;
  return j.dump(2) + "\n";
}

std::string phasor_csv(const std::vector<engine::RestorationPlan>& plans) {
  std::ostringstream out;
  out << "island,bus,phase,magnitude_pu,angle_deg\n";
  out.precision(10);
  const char* names[3] = {"a", "b", "c"};
  for (const auto& p : plans)
    for (const auto& [bus, entries] : p.profile.bus_voltage)
      for (int k = 0; k < 3; ++k)
        if (entries[k])
          out << p.island_id << ',' << bus << ',' << names[k] << ','
              << entries[k]->magnitude << ',' << entries[k]->angle_deg << '\n';
  return out.str();
}

std::string trajectory_csv(const std::vector<engine::RestorationPlan>& plans) {
  std::ostringstream out;
  out << "island,iteration,branch,w_sdp,w_int,k_star,n_re,nonintegral\n";
  out.precision(10);
  for (const auto& p : plans)
    for (const auto& st : p.trace.states)
      out << p.island_id << ',' << st.iteration << ',' << engine::to_string(st.branch) << ','
          << st.w_sdp << ',' << st.w_int << ',' << st.k_star << ',' << st.n_re << ','
          << st.l_ni.size() << '\n';
  return out.str();
}

namespace {

// One scenario end to end; self-contained so scenarios can run on any worker.
ScenarioRecord run_scenario(const net::Network& base, const SweepSpec& spec, int index) {
  ScenarioRecord rec;
  rec.index = index;
  std::mt19937_64 rng(spec.seed + static_cast<std::uint64_t>(index));

  net::Network n = base;
  std::uniform_real_distribution<double> scale(spec.rating_low, spec.rating_high);
  for (auto& s : n.sources) {
    double f = scale(rng);
    s.p_rate *= f;
    s.q_rate *= f;
  }

  std::vector<int> candidates;
  for (int i = 0; i < static_cast<int>(n.lines.size()); ++i)
    if (n.lines[i].state != net::LineState::faulted) candidates.push_back(i);
  std::uniform_int_distribution<int> count(1, std::max(1, spec.max_faults));
  int faults = std::min<int>(count(rng), static_cast<int>(candidates.size()));
  std::shuffle(candidates.begin(), candidates.end(), rng);
  net::EventSpec ev;
  for (int k = 0; k < faults; ++k) {
    ev.faulted_lines.push_back(n.lines[candidates[k]].id);
    rec.faulted.push_back(n.lines[candidates[k]].id);
  }
  std::sort(rec.faulted.begin(), rec.faulted.end());

  try {
    net::PostEventNetwork pe = net::apply_event(n, ev);
    auto plans = engine::solve_restoration(pe, spec.engine);

    rec.ok = true;
    rec.verified = true;
    std::set<std::string> restored;
    for (const auto& p : plans) {
      if (!p.error.empty()) {
        rec.ok = false;
        rec.error = p.error;
      }
      rec.objective += p.objective;
      rec.iterations = std::max(rec.iterations, constraint_iterations(p));
      if (!p.trace.states.empty() && p.verdict != engine::Verdict::verified_global)
        rec.verified = false;
      restored.insert(p.restored.begin(), p.restored.end());
    }
    rec.restored.assign(restored.begin(), restored.end());
    if (!rec.ok) rec.verified = false;

    if (spec.compare_milp && rec.ok) {
      auto islands = topo::find_target_islands(pe);
      std::set<std::string> milp_restored;
      bool solved_all = true;
      for (const auto& g : islands) {
        if (!g.restorable()) continue;
        auto tree = topo::minimum_diameter_spanning_tree(g);
        auto [prog, vm] = models::build_clr_milp(pe.net, g, tree);
        auto sol = conic::solve_mip(prog, spec.engine.solver);
        if (!sol.optimal()) {
          solved_all = false;
          break;
        }
        for (const auto& [bus, id] : vm.gamma)
          if (sol.x[id] > 0.5) milp_restored.insert(bus);
      }
      if (solved_all) {
        rec.milp_compared = true;
        rec.milp_same = (milp_restored == restored);
        rec.milp_superset =
            !rec.milp_same &&
            std::includes(milp_restored.begin(), milp_restored.end(), restored.begin(),
                          restored.end());
      }
    }
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.verified = false;
    rec.error = e.what();
  }
  return rec;
}

}  // namespace

SweepResult run_sweep(const net::Network& base, const SweepSpec& spec) {
  SweepResult res;
  res.records.resize(std::max(0, spec.scenarios));
  int threads = spec.workers > 0 ? spec.workers : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int i = 0; i < spec.scenarios; ++i) res.records[i] = run_scenario(base, spec, i);

  for (const auto& rec : res.records) {
    if (!rec.ok) continue;
    ++res.solved;
    ++res.iteration_histogram[rec.iterations];
    if (rec.verified) ++res.verified;
    if (rec.milp_compared) {
      ++res.milp_compared;
      if (rec.milp_same) ++res.milp_same;
      if (rec.milp_superset) ++res.milp_superset;
    }
  }
  return res;
}

std::string sweep_json(const SweepSpec& spec, const SweepResult& result) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["spec"] = {{"scenarios", spec.scenarios},   {"seed", spec.seed},
               {"max_faults", spec.max_faults}, {"rating_low", spec.rating_low},
               {"rating_high", spec.rating_high}, {"compare_milp", spec.compare_milp}};
  j["solved"] = result.solved;
  j["verified"] = result.verified;
  j["milp_compared"] = result.milp_compared;
  j["milp_same"] = result.milp_same;
  j["milp_superset"] = result.milp_superset;
  json hist = json::object();
  for (const auto& [iters, n] : result.iteration_histogram) hist[std::to_string(iters)] = n;
  j["iteration_histogram"] = hist;
  json arr = json::array();
  for (const auto& rec : result.records) {
    json r;
    r["index"] = rec.index;
    r["faulted"] = rec.faulted;
    r["ok"] = rec.ok;
    r["iterations"] = rec.iterations;
    r["verified"] = rec.verified;
    r["objective"] = rec.objective;
    r["restored"] = rec.restored;
    if (rec.milp_compared) {
      r["milp_same"] = rec.milp_same;
      r["milp_superset"] = rec.milp_superset;
    }
    if (!rec.error.empty()) r["error"] = rec.error;
    arr.push_back(r);
  }
  j["scenarios"] = arr;
  return j.dump(2) + "\n";
}

conic::SolverSettings settings_from_env() {
  conic::SolverSettings s;
  const char* path = std::getenv("RESTORE_SOLVER_SETTINGS");
  if (!path) return s;
  std::ifstream in(path);
  if (!in.good()) throw std::runtime_error(std::string("cannot read solver settings: ") + path);
  json j = json::parse(in);
  s.feas_tol = j.value("feas_tol", s.feas_tol);
  s.max_iterations = j.value("max_iterations", s.max_iterations);
  s.int_tol = j.value("int_tol", s.int_tol);
  s.deterministic = j.value("deterministic", s.deterministic);
  s.node_limit = j.value("node_limit", s.node_limit);
  return s;
}

}  // namespace restore::cli
