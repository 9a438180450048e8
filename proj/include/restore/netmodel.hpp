// Three-phase distribution network data model, feeder document parsing,
// validation and outage-event application.
#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace restore::net {

using cplx = std::complex<double>;

enum class Phase : int { a = 0, b = 1, c = 2 };

// Ordered subset of {a, b, c}.
struct PhaseSet {
  std::uint8_t mask = 0;

  static PhaseSet all() { return {0x7}; }
  static PhaseSet parse(const std::string& s);  // e.g. "abc", "bc"

  bool has(Phase p) const { return mask & (1u << static_cast<int>(p)); }
  void add(Phase p) { mask |= (1u << static_cast<int>(p)); }
  int count() const;
  bool empty() const { return mask == 0; }
  bool subset_of(PhaseSet o) const { return (mask & ~o.mask) == 0; }
  // Position of p within the canonical a<b<c ordering of this set.
  int index_of(Phase p) const;
  std::vector<Phase> list() const;
  std::string str() const;
  bool operator==(const PhaseSet&) const = default;
};

struct Bus {
  std::string id;
  PhaseSet phases;
  double vmin = 0.95, vmax = 1.05;  // per-unit, same bound on every phase
  bool is_reference = false;
};

struct Load {
  std::string bus;
  std::array<cplx, 3> s{};  // kW + j kvar per phase; zero where absent
  int level = 1;
  double weight = 0.0;  // assigned from the network's level weights

  PhaseSet phases() const;
  double total_p() const { return s[0].real() + s[1].real() + s[2].real(); }
  double total_q() const { return s[0].imag() + s[1].imag() + s[2].imag(); }
};

enum class LineKind { fixed, swtch, tie };
enum class LineState { closed, open, faulted };

struct Line {
  std::string id;  // canonical "<from>-<to>"
  std::string from, to;
  PhaseSet phases;
  Eigen::MatrixXcd Z;  // ohm, dimension count(phases), canonical phase order
  std::vector<double> ampacity;    // A per phase
  std::vector<double> flow_limit;  // kVA per phase (linear model only)
  LineKind kind = LineKind::fixed;
  LineState state = LineState::closed;

  bool energizable() const { return state != LineState::faulted; }
};

enum class SourceKind { diesel, storage, pv };

struct Source {
  std::string id;
  std::string bus;
  SourceKind kind = SourceKind::diesel;
  double p_rate = 0.0, q_rate = 0.0;  // kW, kvar
  bool fixed_p = false;               // pv: active power pinned at rating
  std::string microgrid;              // optional grouping tag
};

struct Network {
  std::string name;
  double sbase_kva = 1000.0;  // three-phase power base
  double vbase_kv = 4.16;     // line-to-line voltage base
  int level_count = 1;
  std::vector<double> level_weights;  // w^1 > ... > w^n >= 0

  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Load> loads;
  std::vector<Source> sources;

  int bus_index(const std::string& id) const;   // -1 if absent
  int line_index(const std::string& id) const;  // -1 if absent
  const Bus& bus(const std::string& id) const;
  double weight_of_level(int level) const { return level_weights.at(level - 1); }
};

struct EventSpec {
  std::vector<std::string> faulted_lines;
  std::vector<std::string> unavailable_sources;
};

struct PostEventNetwork {
  Network net;  // faulted lines and lost sources removed, infeed absent
};

struct ValidationReport {
  std::vector<std::string> issues;
  bool ok() const { return issues.empty(); }
};

// Thrown by parse_feeder and parse_event with 1-based position info.
struct ParseError : std::runtime_error {
  int line = 0, column = 0;
  ParseError(int ln, int col, const std::string& msg);
};

Network parse_feeder(const std::string& text);
std::string serialize_feeder(const Network& net);

EventSpec parse_event(const std::string& json_text, const Network& net);
std::string serialize_event(const EventSpec& ev);

ValidationReport validate_network(const Network& net);
PostEventNetwork apply_event(const Network& net, const EventSpec& ev);

}  // namespace restore::net
