#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "restore/engine.hpp"

namespace restore::engine {
namespace {

struct LoadInfo {
  std::string bus;
  int level = 1;
  double weight = 0.0;
  double kw = 0.0;
};

std::vector<LoadInfo> island_loads(const net::Network& net, const topo::IslandGraph& island) {
  std::set<std::string> members(island.vertices.begin(), island.vertices.end());
  std::vector<LoadInfo> out;
  for (const auto& ld : net.loads)
    if (members.count(ld.bus)) out.push_back({ld.bus, ld.level, ld.weight, ld.total_p()});
  return out;
}

const LoadInfo& info_of(const std::vector<LoadInfo>& loads, const std::string& bus) {
  for (const auto& l : loads)
    if (l.bus == bus) return l;
  throw std::logic_error("no load at bus '" + bus + "'");
}

// deterministic ordering for argmin selections: smallest gamma, then
// largest demand, then smallest bus id
bool pick_before(const std::pair<double, const LoadInfo*>& a,
                 const std::pair<double, const LoadInfo*>& b) {
  if (a.first != b.first) return a.first < b.first;
  if (a.second->kw != b.second->kw) return a.second->kw > b.second->kw;
  return a.second->bus < b.second->bus;
}

}  // namespace

double WeightScheme::at(int k) const {
  int n = levels();
  if (k <= 0) return std::numeric_limits<double>::infinity();
  if (k >= n + 1) return 0.0;
  return w[static_cast<size_t>(k - 1)];
}

std::string to_string(StepKind s) {
  switch (s) {
    case StepKind::terminal: return "terminal";
    case StepKind::step3: return "step3";
    case StepKind::step4: return "step4";
    case StepKind::step5: return "step5";
  }
  return "?";
}

std::string to_string(Verdict v) {
  return v == Verdict::verified_global ? "verified_global" : "unverified";
}

WeightReport validate_weights(const WeightScheme& ws, const net::Network& net,
                              const topo::IslandGraph& island, double dominance_margin) {
  WeightReport rep;
  int n = ws.levels();
  for (int k = 1; k < n; ++k)
    if (ws.at(k) <= ws.at(k + 1))
      rep.violations.push_back("weights not strictly decreasing at level " + std::to_string(k));
  auto loads = island_loads(net, island);
  std::vector<int> count(static_cast<size_t>(n) + 1, 0);
  for (const auto& l : loads)
    if (l.level >= 1 && l.level <= n) ++count[static_cast<size_t>(l.level)];
  for (int j = 1; j < n; ++j) {
    double deeper = 0.0;
    for (int k = j + 1; k <= n; ++k) deeper += ws.at(k) * count[static_cast<size_t>(k)];
    if (!(ws.at(j) > deeper))
      rep.violations.push_back("level " + std::to_string(j) + " weight " +
                               std::to_string(ws.at(j)) +
                               " does not dominate deeper levels (sum " +
                               std::to_string(deeper) + ")");
  }
  for (const auto& hi : loads)
    for (const auto& lo : loads) {
      if (hi.level >= lo.level || hi.kw <= 0.0 || lo.kw <= 0.0) continue;
      double lhs = ws.at(hi.level) / hi.kw;
      double rhs = ws.at(lo.level) / lo.kw;
      if (lhs < dominance_margin * rhs)
        rep.violations.push_back("weight per kW of load " + hi.bus + " (level " +
                                 std::to_string(hi.level) + ") is not " +
                                 std::to_string(dominance_margin) + "x that of load " + lo.bus);
    }
  return rep;
}

int identify_k_star(double w_sdp, double w_int, const WeightScheme& ws, double gap_tol) {
  double gap = std::max(0.0, w_sdp - w_int);
  int n = ws.levels();
  // gaps within gap_tol of a weight resolve toward the larger index
  for (int k = 1; k <= n; ++k)
    if (gap >= ws.at(k) + gap_tol) return k;
  return n + 1;
}

int compute_n_re(double w_sdp, double w_int, double wK) {
  if (!(wK > 0.0)) throw std::invalid_argument("restorable count undefined at zero weight");
  double gap = std::max(0.0, w_sdp - w_int);
  return static_cast<int>(std::floor(gap / wK + 1e-9));
}

std::pair<std::map<std::string, double>, IterationTrace> iterate(const net::Network& net,
                                                                 const topo::IslandGraph& island,
                                                                 const topo::SpanningTree& tree,
                                                                 const EngineConfig& cfg) {
  WeightScheme ws{net.level_weights};
  auto loads = island_loads(net, island);
  IterationTrace trace;
  models::Fixes fixes;
  std::map<std::string, double> fixed_of;
  const double eps = cfg.integrality_eps;

  for (int it = 0; it <= static_cast<int>(loads.size()); ++it) {
    models::BuildOptions bopt;
    bopt.reference_bus = cfg.reference_bus;
    auto [prog, vm] = models::build_clr_sdp(net, island, tree, fixes, bopt);
    auto sol = conic::solve_conic(prog, cfg.solver);
    if (!sol.optimal())
      throw std::runtime_error("relaxation solve failed at iteration " + std::to_string(it) +
                               ": " + conic::to_string(sol.status));

    IterState st;
    st.iteration = it;
    st.fixes = fixes;
    st.w_sdp = sol.objective;
    for (const auto& [bus, var] : vm.gamma) st.gamma[bus] = sol.x[var];
    for (const auto& l : loads) {
      double g = st.gamma.at(l.bus);
      if (g > 1.0 - eps) {
        st.l_gamma1.push_back(l.bus);
        st.w_int += l.weight;
      } else if (g >= eps) {
        st.l_ni.push_back(l.bus);
      }
    }

    if (st.l_ni.empty()) {
      st.branch = StepKind::terminal;
      trace.states.push_back(std::move(st));
      trace.termination = "integral relaxation";
      break;
    }

    st.k_star = identify_k_star(st.w_sdp, st.w_int, ws, cfg.gap_tol);
    size_t fixed_before = fixed_of.size();
    auto fix = [&](const std::string& bus, double val) {
      if (fixed_of.count(bus)) return;
      fixed_of[bus] = val;
      fixes.emplace_back(bus, val);
    };
    // loads certified fully restored stay restored
    for (const auto& bus : st.l_gamma1) fix(bus, 1.0);

    // loads above the identified level can never be traded away: a
    // fractional one signals a genuinely unservable load
    double w_above = ws.at(st.k_star - 1);
    for (const auto& bus : st.l_ni)
      if (info_of(loads, bus).weight >= w_above && std::isfinite(w_above))
        st.l_c1.push_back(bus);

    if (!st.l_c1.empty()) {
      st.branch = StepKind::step3;
      for (const auto& bus : st.l_c1) fix(bus, 0.0);
    } else {
      // binding-limit loads at the identified level
      std::vector<std::pair<double, const LoadInfo*>> c2;
      for (const auto& bus : st.l_ni) {
        const LoadInfo& li = info_of(loads, bus);
        if (li.level != st.k_star) continue;
        bool binding = false;
        const net::Bus& b = net.buses[static_cast<size_t>(net.bus_index(bus))];
        const models::HermVar& V = vm.V.at(bus);
        Eigen::MatrixXcd Vm = models::herm_value(sol, V);
        for (int d = 0; d < Vm.rows(); ++d) {
          double u = Vm(d, d).real();
          if (std::abs(u - b.vmin * b.vmin) < cfg.binding_tol * b.vmin * b.vmin ||
              std::abs(u - b.vmax * b.vmax) < cfg.binding_tol * b.vmax * b.vmax)
            binding = true;
        }
        for (const auto& [lid, dir] : vm.direction) {
          if (dir.first != bus && dir.second != bus) continue;
          const net::Line& ln = net.lines[static_cast<size_t>(net.line_index(lid))];
          Eigen::MatrixXcd Im = models::herm_value(sol, vm.I.at(lid));
          for (int d = 0; d < Im.rows(); ++d) {
            double cap = ln.ampacity[static_cast<size_t>(d)] / vm.i_base_amp;
            if (std::abs(Im(d, d).real() - cap * cap) < cfg.binding_tol * cap * cap)
              binding = true;
          }
        }
        if (binding) c2.push_back({st.gamma.at(bus), &li});
      }
      if (!c2.empty()) {
        st.branch = StepKind::step4;
        std::sort(c2.begin(), c2.end(), pick_before);
        for (const auto& [g, li] : c2) st.l_c2.push_back(li->bus);
        fix(c2.front().second->bus, 0.0);
      } else {
        // trade the fractional set down to the restorable count
        double wK = ws.at(st.k_star);
        if (!(wK > 0.0)) {
          // virtual level: the remaining gap is below every real weight,
          // nothing fractional can be kept
          st.branch = StepKind::step5;
          st.n_re = 0;
          for (const auto& bus : st.l_ni) {
            st.l_c3.push_back(bus);
            fix(bus, 0.0);
          }
        } else {
          st.branch = StepKind::step5;
          st.n_re = compute_n_re(st.w_sdp, st.w_int, wK);
          int drop = static_cast<int>(st.l_ni.size()) - st.n_re;
          std::vector<std::pair<double, const LoadInfo*>> order;
          for (const auto& bus : st.l_ni) order.push_back({st.gamma.at(bus), &info_of(loads, bus)});
          std::sort(order.begin(), order.end(), pick_before);
          for (int k = 0; k < drop && k < static_cast<int>(order.size()); ++k) {
            st.l_c3.push_back(order[static_cast<size_t>(k)].second->bus);
            fix(order[static_cast<size_t>(k)].second->bus, 0.0);
          }
          for (const auto& l : loads)
            if (l.level == st.k_star && !fixed_of.count(l.bus) && st.gamma.at(l.bus) < eps) {
              st.l_c4.push_back(l.bus);
              fix(l.bus, 0.0);
            }
        }
      }
    }

    // once the gap drops below the smallest weight, and every weight is a
    // multiple of the smallest one, achievable objectives live on that grid:
    // the rounded solution is already optimal, so shed every remaining
    // unfixed load in one batch instead of letting the sliver wander
    if (st.k_star == ws.levels() + 1) {
      double w_min = ws.at(ws.levels());
      bool on_grid = w_min > 0.0;
      for (int k = 1; on_grid && k <= ws.levels(); ++k) {
        double r = ws.at(k) / w_min;
        if (std::abs(r - std::round(r)) > 1e-6 * r) on_grid = false;
      }
      if (on_grid)
        for (const auto& l : loads)
          if (!fixed_of.count(l.bus)) fix(l.bus, 0.0);
    }

    if (fixed_of.size() == fixed_before) {
      // ensure progress: retire the weakest fractional load and flag the
      // iteration so the optimality criterion reports unverified
      st.branch = StepKind::step4;
      std::vector<std::pair<double, const LoadInfo*>> order;
      for (const auto& bus : st.l_ni)
        if (!fixed_of.count(bus)) order.push_back({st.gamma.at(bus), &info_of(loads, bus)});
      if (order.empty())
        throw std::runtime_error("no progress at iteration " + std::to_string(it));
      std::sort(order.begin(), order.end(), pick_before);
      fix(order.front().second->bus, 0.0);
    }
    trace.states.push_back(std::move(st));
  }

  if (trace.termination.empty())
    throw std::runtime_error("iteration budget exhausted without an integral plan");

  std::map<std::string, double> gamma;
  const IterState& last = trace.states.back();
  for (const auto& [bus, g] : last.gamma) gamma[bus] = g > 1.0 - cfg.integrality_eps ? 1.0 : 0.0;
  return {gamma, trace};
}

Verdict check_optimality_criterion(const IterationTrace& trace, const WeightScheme& ws,
                                   double tol) {
  if (trace.states.empty() || trace.states.back().branch != StepKind::terminal)
    return Verdict::unverified;
  for (size_t j = 0; j + 1 < trace.states.size(); ++j) {
    const IterState& cur = trace.states[j];
    const IterState& nxt = trace.states[j + 1];
    if (cur.branch == StepKind::step4) return Verdict::unverified;
    double need = 0.0;
    if (cur.branch == StepKind::step5) need = ws.at(cur.k_star) * cur.n_re;
    if (nxt.w_int + tol < cur.w_int + need) return Verdict::unverified;
  }
  return Verdict::verified_global;
}

SufficiencyReport check_sufficient_conditions(const net::Network& net,
                                              const topo::IslandGraph& island,
                                              double ampacity_multiple, double demand_rel_gap) {
  SufficiencyReport rep;
  auto loads = island_loads(net, island);
  double total_kw = 0.0;
  for (const auto& l : loads) total_kw += l.kw;
  double v_ln_kv = net.vbase_kv / std::sqrt(3.0);
  double demand_amp = total_kw / 3.0 / v_ln_kv;
  for (const auto& e : island.edges) {
    const net::Line& ln = net.lines[static_cast<size_t>(net.line_index(e.line_id))];
    double amp = *std::min_element(ln.ampacity.begin(), ln.ampacity.end());
    if (amp < ampacity_multiple * demand_amp) {
      rep.ampacity_ok = false;
      rep.notes.push_back("line " + ln.id + " ampacity " + std::to_string(amp) +
                          " A below " + std::to_string(ampacity_multiple) +
                          "x island demand current " + std::to_string(demand_amp) + " A");
    }
  }
  for (size_t a = 0; a < loads.size(); ++a)
    for (size_t b = a + 1; b < loads.size(); ++b) {
      if (loads[a].level != loads[b].level) continue;
      double hi = std::max(loads[a].kw, loads[b].kw);
      if (hi <= 0.0) continue;
      if (std::abs(loads[a].kw - loads[b].kw) < demand_rel_gap * hi) {
        rep.demand_gap_ok = false;
        rep.notes.push_back("level " + std::to_string(loads[a].level) + " loads at " +
                            loads[a].bus + " and " + loads[b].bus +
                            " have nearly equal demand");
      }
    }
  return rep;
}

models::PhasorProfile final_dispatch(const net::Network& net, const topo::IslandGraph& island,
                                     const topo::SpanningTree& tree, const models::Fixes& gammas,
                                     const conic::SolverSettings& settings,
                                     const std::string& reference_bus) {
  models::BuildOptions opt;
  opt.objective = models::Objective::min_generation;
  opt.reference_bus = reference_bus;
  auto [prog, vm] = models::build_clr_sdp(net, island, tree, gammas, opt);
  auto sol = conic::solve_conic(prog, settings);
  if (!sol.optimal())
    throw std::runtime_error("dispatch solve failed: " + conic::to_string(sol.status));
  return models::recover_phasors(net, island, tree, sol, vm);
}

std::vector<RestorationPlan> solve_restoration(const net::PostEventNetwork& pe,
                                               const EngineConfig& cfg) {
  std::vector<RestorationPlan> plans;
  for (const auto& island : topo::find_target_islands(pe)) {
    RestorationPlan plan;
    plan.island_id = island.id;
    if (!island.restorable()) {
      plan.verdict = Verdict::verified_global;  // nothing to restore
      plans.push_back(std::move(plan));
      continue;
    }
    try {
      plan.tree = topo::minimum_diameter_spanning_tree(island);
      auto loads = island_loads(pe.net, island);
      if (loads.empty()) {
        plan.verdict = Verdict::verified_global;
        plans.push_back(std::move(plan));
        continue;
      }
      auto [gamma, trace] = iterate(pe.net, island, plan.tree, cfg);
      plan.trace = std::move(trace);
      WeightScheme ws{pe.net.level_weights};
      plan.verdict = check_optimality_criterion(plan.trace, ws);
      models::Fixes fixed;
      for (const auto& [bus, g] : gamma) {
        fixed.emplace_back(bus, g);
        if (g > 0.5) {
          plan.restored.push_back(bus);
          plan.objective += info_of(loads, bus).weight;
        }
      }
      plan.profile = final_dispatch(pe.net, island, plan.tree, fixed, cfg.solver,
                                    cfg.reference_bus);
    } catch (const std::exception& ex) {
      plan.error = ex.what();
      plan.verdict = Verdict::unverified;
    }
    plans.push_back(std::move(plan));
  }
  return plans;
}

}  // namespace restore::engine
