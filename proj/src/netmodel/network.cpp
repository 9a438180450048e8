#include <algorithm>
#include <map>
#include <set>

#include "restore/netmodel.hpp"

namespace restore::net {

PhaseSet PhaseSet::parse(const std::string& s) {
  PhaseSet ps;
  for (char ch : s) {
    switch (ch) {
      case 'a': ps.add(Phase::a); break;
      case 'b': ps.add(Phase::b); break;
      case 'c': ps.add(Phase::c); break;
      default: throw std::invalid_argument("bad phase label '" + std::string(1, ch) + "'");
    }
  }
  return ps;
}

int PhaseSet::count() const {
  int n = 0;
  for (int p = 0; p < 3; ++p) n += (mask >> p) & 1;
  return n;
}

int PhaseSet::index_of(Phase p) const {
  if (!has(p)) return -1;
  int idx = 0;
  for (int q = 0; q < static_cast<int>(p); ++q) idx += (mask >> q) & 1;
  return idx;
}

std::vector<Phase> PhaseSet::list() const {
  std::vector<Phase> v;
  for (int p = 0; p < 3; ++p)
    if (mask & (1u << p)) v.push_back(static_cast<Phase>(p));
  return v;
}

std::string PhaseSet::str() const {
  std::string s;
  if (has(Phase::a)) s += 'a';
  if (has(Phase::b)) s += 'b';
  if (has(Phase::c)) s += 'c';
  return s;
}

PhaseSet Load::phases() const {
  PhaseSet ps;
  for (int p = 0; p < 3; ++p)
    if (s[p] != cplx(0.0, 0.0)) ps.add(static_cast<Phase>(p));
  return ps;
}

int Network::bus_index(const std::string& id) const {
  for (size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == id) return static_cast<int>(i);
  return -1;
}

int Network::line_index(const std::string& id) const {
  for (size_t i = 0; i < lines.size(); ++i)
    if (lines[i].id == id) return static_cast<int>(i);
  return -1;
}

const Bus& Network::bus(const std::string& id) const {
  int i = bus_index(id);
  if (i < 0) throw std::out_of_range("no bus '" + id + "'");
  return buses[static_cast<size_t>(i)];
}

ParseError::ParseError(int ln, int col, const std::string& msg)
    : std::runtime_error("line " + std::to_string(ln) + ", column " + std::to_string(col) +
                         ": " + msg),
      line(ln),
      column(col) {}

ValidationReport validate_network(const Network& net) {
  ValidationReport rep;
  auto issue = [&rep](const std::string& s) { rep.issues.push_back(s); };

  std::set<std::string> bus_ids;
  for (const auto& b : net.buses) {
    if (!bus_ids.insert(b.id).second) issue("duplicate bus id '" + b.id + "'");
    if (b.phases.empty()) issue("bus '" + b.id + "' has no phases");
    if (b.vmin > b.vmax)
      issue("bus '" + b.id + "' voltage band empty (vmin > vmax)");
  }

  if (net.level_count < 1) issue("level count must be at least 1");
  if (static_cast<int>(net.level_weights.size()) != net.level_count)
    issue("weight list length differs from level count");
  for (size_t i = 0; i + 1 < net.level_weights.size(); ++i)
    if (!(net.level_weights[i] > net.level_weights[i + 1]))
      issue("weights not strictly decreasing at position " + std::to_string(i + 1));
  if (!net.level_weights.empty() && net.level_weights.back() < 0.0)
    issue("weights must be nonnegative");

  std::set<std::string> line_ids;
  std::set<std::pair<std::string, std::string>> endpoints;
  for (const auto& l : net.lines) {
    if (!line_ids.insert(l.id).second) issue("duplicate line id '" + l.id + "'");
    int fi = net.bus_index(l.from), ti = net.bus_index(l.to);
    if (fi < 0) issue("line '" + l.id + "' references unknown bus '" + l.from + "'");
    if (ti < 0) issue("line '" + l.id + "' references unknown bus '" + l.to + "'");
    if (l.from == l.to) issue("line '" + l.id + "' is a self-loop");
    auto key = std::minmax(l.from, l.to);
    if (!endpoints.insert({key.first, key.second}).second)
      issue("parallel lines between '" + l.from + "' and '" + l.to + "'");
    int np = l.phases.count();
    if (np == 0) issue("line '" + l.id + "' has no phases");
    if (l.Z.rows() != np || l.Z.cols() != np)
      issue("line '" + l.id + "' impedance dimension differs from phase count");
    if (static_cast<int>(l.ampacity.size()) != np)
      issue("line '" + l.id + "' ampacity list length differs from phase count");
    for (double a : l.ampacity)
      if (!(a > 0.0)) issue("line '" + l.id + "' ampacity must be positive");
    if (fi >= 0 && !l.phases.subset_of(net.buses[static_cast<size_t>(fi)].phases))
      issue("line '" + l.id + "' carries phases absent at bus '" + l.from + "'");
    if (ti >= 0 && !l.phases.subset_of(net.buses[static_cast<size_t>(ti)].phases))
      issue("line '" + l.id + "' carries phases absent at bus '" + l.to + "'");
  }

  for (const auto& ld : net.loads) {
    int bi = net.bus_index(ld.bus);
    if (bi < 0) {
      issue("load references unknown bus '" + ld.bus + "'");
      continue;
    }
    if (ld.level < 1 || ld.level > net.level_count)
      issue("load at bus '" + ld.bus + "' has level outside 1.." +
            std::to_string(net.level_count));
    if (!ld.phases().subset_of(net.buses[static_cast<size_t>(bi)].phases))
      issue("load at bus '" + ld.bus + "' demands power on phases absent at the bus");
  }

  std::set<std::string> src_ids;
  for (const auto& s : net.sources) {
    if (!src_ids.insert(s.id).second) issue("duplicate source id '" + s.id + "'");
    if (net.bus_index(s.bus) < 0)
      issue("source '" + s.id + "' references unknown bus '" + s.bus + "'");
    if (s.p_rate < 0.0 || s.q_rate < 0.0)
      issue("source '" + s.id + "' has a negative rating");
  }

  return rep;
}

PostEventNetwork apply_event(const Network& net, const EventSpec& ev) {
  for (const auto& id : ev.faulted_lines)
    if (net.line_index(id) < 0) throw std::out_of_range("unknown line '" + id + "' in event");
  std::set<std::string> lost(ev.unavailable_sources.begin(), ev.unavailable_sources.end());
  for (const auto& id : lost) {
    bool found = false;
    for (const auto& s : net.sources) found = found || s.id == id;
    if (!found) throw std::out_of_range("unknown source '" + id + "' in event");
  }

  std::set<std::string> faulted(ev.faulted_lines.begin(), ev.faulted_lines.end());
  PostEventNetwork out;
  out.net = net;
  out.net.lines.clear();
  for (const auto& l : net.lines)
    if (!faulted.count(l.id)) out.net.lines.push_back(l);
  out.net.sources.clear();
  for (const auto& s : net.sources)
    if (!lost.count(s.id)) out.net.sources.push_back(s);
  return out;
}

}  // namespace restore::net
