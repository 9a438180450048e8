// Reporting and batch plumbing behind the command-line front end: JSON
// result documents, CSV tables, and the randomized scenario sweep.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "restore/engine.hpp"

namespace restore::cli {

inline constexpr int kSchemaVersion = 1;

// JSON document for one solved event: per-island plans, traces, phasors.
std::string result_json(const std::vector<engine::RestorationPlan>& plans);

// bus,phase,magnitude_pu,angle_deg rows across all islands
std::string phasor_csv(const std::vector<engine::RestorationPlan>& plans);

// per-iteration relaxation/restored-weight trajectory, plot-ready
std::string trajectory_csv(const std::vector<engine::RestorationPlan>& plans);

struct SweepSpec {
  int scenarios = 200;
  std::uint64_t seed = 1;
  int max_faults = 3;
  double rating_low = 0.8;   // uniform source-rating rescale range
  double rating_high = 1.2;
  bool compare_milp = false;
  int workers = 0;  // 0: library default
  engine::EngineConfig engine;
};

struct ScenarioRecord {
  int index = 0;
  std::vector<std::string> faulted;
  bool ok = false;
  int iterations = 0;
  bool verified = false;
  double objective = 0.0;
  std::vector<std::string> restored;
  bool milp_compared = false;
  bool milp_same = false;
  bool milp_superset = false;  // lossless model restored strictly more
  std::string error;
};

struct SweepResult {
  std::vector<ScenarioRecord> records;   // ordered by scenario index
  std::map<int, int> iteration_histogram;
  int solved = 0;
  int verified = 0;
  int milp_compared = 0;
  int milp_same = 0;
  int milp_superset = 0;
};

// Deterministic under a fixed seed regardless of worker count.
SweepResult run_sweep(const net::Network& base, const SweepSpec& spec);

std::string sweep_json(const SweepSpec& spec, const SweepResult& result);

// Solver settings overrides from the JSON file named by
// RESTORE_SOLVER_SETTINGS, when set; defaults otherwise.
conic::SolverSettings settings_from_env();

}  // namespace restore::cli
