// Feeder document format (version 1), line oriented, '#' starts a comment.
// See docs/feeder-format.md for the grammar.

#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>

#include <json.hpp>

#include "restore/netmodel.hpp"

namespace restore::net {
namespace {

struct Token {
  std::string text;
  int column = 0;  // 1-based
};

std::vector<Token> tokenize(const std::string& raw) {
  std::vector<Token> out;
  size_t i = 0;
  while (i < raw.size()) {
    if (raw[i] == '#') break;
    if (std::isspace(static_cast<unsigned char>(raw[i]))) {
      ++i;
      continue;
    }
    size_t start = i;
    while (i < raw.size() && !std::isspace(static_cast<unsigned char>(raw[i])) &&
           raw[i] != '#')
      ++i;
    out.push_back({raw.substr(start, i - start), static_cast<int>(start) + 1});
  }
  return out;
}

double parse_real(const Token& t, int ln) {
  char* end = nullptr;
  double v = std::strtod(t.text.c_str(), &end);
  if (end != t.text.c_str() + t.text.size())
    throw ParseError(ln, t.column, "expected a number, got '" + t.text + "'");
  return v;
}

int parse_int(const Token& t, int ln) {
  char* end = nullptr;
  long v = std::strtol(t.text.c_str(), &end, 10);
  if (end != t.text.c_str() + t.text.size())
    throw ParseError(ln, t.column, "expected an integer, got '" + t.text + "'");
  return static_cast<int>(v);
}

// "1.5", "1.5+0.3j", "-2j"
cplx parse_complex(const Token& t, int ln) {
  const std::string& s = t.text;
  auto fail = [&]() -> cplx {
    throw ParseError(ln, t.column, "expected a complex number, got '" + s + "'");
  };
  if (s.empty()) return fail();
  if (s.back() == 'j') {
    std::string body = s.substr(0, s.size() - 1);
    // split at the last +/- that is not an exponent sign and not leading
    size_t split = std::string::npos;
    for (size_t i = body.size(); i-- > 1;) {
      if ((body[i] == '+' || body[i] == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') {
        split = i;
        break;
      }
    }
    char* end = nullptr;
    if (split == std::string::npos) {
      double im = std::strtod(body.c_str(), &end);
      if (end != body.c_str() + body.size()) return fail();
      return {0.0, im};
    }
    std::string res = body.substr(0, split), ims = body.substr(split);
    if (ims == "+") ims = "+1";
    if (ims == "-") ims = "-1";
    double re = std::strtod(res.c_str(), &end);
    if (end != res.c_str() + res.size()) return fail();
    double im = std::strtod(ims.c_str(), &end);
    if (end != ims.c_str() + ims.size()) return fail();
    return {re, im};
  }
  char* end = nullptr;
  double re = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return fail();
  return {re, 0.0};
}

PhaseSet parse_phases(const Token& t, int ln) {
  try {
    PhaseSet ps = PhaseSet::parse(t.text);
    if (ps.empty()) throw std::invalid_argument("empty");
    return ps;
  } catch (const std::invalid_argument&) {
    throw ParseError(ln, t.column, "expected a phase set like 'abc', got '" + t.text + "'");
  }
}

struct LineConfig {
  PhaseSet phases;
  Eigen::MatrixXcd z_per_mile;
  std::vector<double> ampacity;
};

struct PendingZ {
  Eigen::MatrixXcd* target = nullptr;
  int dim = 0;
  int next_row = 0;
};

}  // namespace

Network parse_feeder(const std::string& text) {
  Network net;
  bool saw_header = false;
  std::map<std::string, LineConfig> configs;
  PendingZ pending;
  // lines awaiting config expansion: (line index, config name, length_ft, token, ln)
  struct Deferred {
    size_t line_idx;
    std::string config;
    double length_ft;
    int ln, col;
    bool amp_given, flow_given;
  };
  std::vector<Deferred> deferred;

  std::istringstream in(text);
  std::string raw;
  int ln = 0;
  while (std::getline(in, raw)) {
    ++ln;
    std::vector<Token> tok = tokenize(raw);
    if (tok.empty()) continue;
    const std::string& kw = tok[0].text;
    auto need = [&](size_t k) {
      if (tok.size() <= k)
        throw ParseError(ln, static_cast<int>(raw.size()) + 1, "missing field after '" + kw + "'");
      return tok[k];
    };

    if (kw == "zrow") {
      if (!pending.target || pending.next_row >= pending.dim)
        throw ParseError(ln, tok[0].column, "zrow without a preceding config or line");
      int r = pending.next_row;
      if (static_cast<int>(tok.size()) != r + 2)
        throw ParseError(ln, tok[0].column,
                         "zrow " + std::to_string(r + 1) + " needs " + std::to_string(r + 1) +
                             " entries");
      for (int c = 0; c <= r; ++c) {
        cplx v = parse_complex(tok[static_cast<size_t>(c) + 1], ln);
        (*pending.target)(r, c) = v;
        (*pending.target)(c, r) = v;
      }
      ++pending.next_row;
      continue;
    }
    if (pending.target && pending.next_row < pending.dim)
      throw ParseError(ln, tok[0].column, "incomplete impedance matrix before '" + kw + "'");
    pending = {};

    if (!saw_header) {
      if (kw != "feeder-format" || need(1).text != "1")
        throw ParseError(ln, tok[0].column, "document must start with 'feeder-format 1'");
      saw_header = true;
      continue;
    }

    if (kw == "name") {
      net.name = need(1).text;
    } else if (kw == "sbase_kva") {
      net.sbase_kva = parse_real(need(1), ln);
    } else if (kw == "vbase_kv") {
      net.vbase_kv = parse_real(need(1), ln);
    } else if (kw == "levels") {
      net.level_count = parse_int(need(1), ln);
    } else if (kw == "weights") {
      net.level_weights.clear();
      for (size_t i = 1; i < tok.size(); ++i)
        net.level_weights.push_back(parse_real(tok[i], ln));
      for (size_t i = 0; i + 1 < net.level_weights.size(); ++i)
        if (!(net.level_weights[i] > net.level_weights[i + 1]))
          throw ParseError(ln, tok[i + 2].column, "weights must be strictly decreasing");
    } else if (kw == "config") {
      std::string cname = need(1).text;
      if (configs.count(cname))
        throw ParseError(ln, tok[1].column, "duplicate config '" + cname + "'");
      LineConfig cfg;
      cfg.phases = parse_phases(need(2), ln);
      int np = cfg.phases.count();
      cfg.z_per_mile = Eigen::MatrixXcd::Zero(np, np);
      size_t k = 3;
      if (k < tok.size() && tok[k].text == "ampacity") {
        ++k;
        for (int p = 0; p < np; ++p) cfg.ampacity.push_back(parse_real(need(k++), ln));
      }
      auto [it, ok] = configs.emplace(cname, std::move(cfg));
      (void)ok;
      pending = {&it->second.z_per_mile, np, 0};
    } else if (kw == "bus") {
      Bus b;
      b.id = need(1).text;
      b.phases = parse_phases(need(2), ln);
      size_t k = 3;
      while (k < tok.size()) {
        const std::string& opt = tok[k].text;
        if (opt == "ref") {
          b.is_reference = true;
          b.vmin = b.vmax = 1.0;
          ++k;
        } else if (opt == "vmin") {
          b.vmin = parse_real(need(k + 1), ln);
          k += 2;
        } else if (opt == "vmax") {
          b.vmax = parse_real(need(k + 1), ln);
          k += 2;
        } else {
          throw ParseError(ln, tok[k].column, "unknown bus option '" + opt + "'");
        }
      }
      if (net.bus_index(b.id) >= 0)
        throw ParseError(ln, tok[1].column, "duplicate bus '" + b.id + "'");
      net.buses.push_back(std::move(b));
    } else if (kw == "line") {
      Line l;
      l.id = need(1).text;
      l.from = need(2).text;
      l.to = need(3).text;
      if (net.bus_index(l.from) < 0)
        throw ParseError(ln, tok[2].column, "line references unknown bus '" + l.from + "'");
      if (net.bus_index(l.to) < 0)
        throw ParseError(ln, tok[3].column, "line references unknown bus '" + l.to + "'");
      size_t k = 4;
      std::string cfg_name;
      double length_ft = 0.0;
      bool explicit_z = false;
      int cfg_col = 0;
      bool amp_given = false, flow_given = false;
      if (need(4).text == "config") {
        cfg_name = need(5).text;
        cfg_col = tok[5].column;
        if (need(6).text != "length_ft")
          throw ParseError(ln, tok[6].column, "expected 'length_ft' after config name");
        length_ft = parse_real(need(7), ln);
        k = 8;
      } else {
        l.phases = parse_phases(tok[4], ln);
        explicit_z = true;
        k = 5;
      }
      while (k < tok.size()) {
        const std::string& opt = tok[k].text;
        if (opt == "kind") {
          const std::string& v = need(k + 1).text;
          if (v == "fixed")
            l.kind = LineKind::fixed;
          else if (v == "switch")
            l.kind = LineKind::swtch;
          else if (v == "tie")
            l.kind = LineKind::tie;
          else
            throw ParseError(ln, tok[k + 1].column, "unknown line kind '" + v + "'");
          k += 2;
        } else if (opt == "state") {
          const std::string& v = need(k + 1).text;
          if (v == "closed")
            l.state = LineState::closed;
          else if (v == "open")
            l.state = LineState::open;
          else if (v == "faulted")
            l.state = LineState::faulted;
          else
            throw ParseError(ln, tok[k + 1].column, "unknown line state '" + v + "'");
          k += 2;
        } else if (opt == "ampacity") {
          int np = explicit_z ? l.phases.count() : 3;  // config count patched later
          if (!explicit_z && configs.count(cfg_name))
            np = configs[cfg_name].phases.count();
          l.ampacity.clear();
          for (int p = 0; p < np; ++p) l.ampacity.push_back(parse_real(need(k + 1 + static_cast<size_t>(p)), ln));
          amp_given = true;
          k += 1 + static_cast<size_t>(np);
        } else if (opt == "flow") {
          int np = explicit_z ? l.phases.count() : 3;
          if (!explicit_z && configs.count(cfg_name))
            np = configs[cfg_name].phases.count();
          l.flow_limit.clear();
          for (int p = 0; p < np; ++p) l.flow_limit.push_back(parse_real(need(k + 1 + static_cast<size_t>(p)), ln));
          flow_given = true;
          k += 1 + static_cast<size_t>(np);
        } else {
          throw ParseError(ln, tok[k].column, "unknown line option '" + opt + "'");
        }
      }
      if (net.line_index(l.id) >= 0)
        throw ParseError(ln, tok[1].column, "duplicate line '" + l.id + "'");
      net.lines.push_back(std::move(l));
      if (explicit_z) {
        Line& stored = net.lines.back();
        int np = stored.phases.count();
        stored.Z = Eigen::MatrixXcd::Zero(np, np);
        pending = {&stored.Z, np, 0};
      } else {
        deferred.push_back({net.lines.size() - 1, cfg_name, length_ft, ln, cfg_col, amp_given,
                            flow_given});
      }
    } else if (kw == "load") {
      Load ld;
      ld.bus = need(1).text;
      if (net.bus_index(ld.bus) < 0)
        throw ParseError(ln, tok[1].column, "load references unknown bus '" + ld.bus + "'");
      ld.level = parse_int(need(2), ln);
      size_t k = 3;
      while (k < tok.size()) {
        const std::string& ph = tok[k].text;
        int pi;
        if (ph == "a")
          pi = 0;
        else if (ph == "b")
          pi = 1;
        else if (ph == "c")
          pi = 2;
        else
          throw ParseError(ln, tok[k].column, "expected phase label a, b or c");
        ld.s[static_cast<size_t>(pi)] = parse_complex(need(k + 1), ln);
        k += 2;
      }
      net.loads.push_back(std::move(ld));
    } else if (kw == "source") {
      Source s;
      s.id = need(1).text;
      s.bus = need(2).text;
      if (net.bus_index(s.bus) < 0)
        throw ParseError(ln, tok[2].column, "source references unknown bus '" + s.bus + "'");
      const std::string& kind = need(3).text;
      if (kind == "diesel")
        s.kind = SourceKind::diesel;
      else if (kind == "storage")
        s.kind = SourceKind::storage;
      else if (kind == "pv")
        s.kind = SourceKind::pv;
      else
        throw ParseError(ln, tok[3].column, "unknown source kind '" + kind + "'");
      s.p_rate = parse_real(need(4), ln);
      s.q_rate = parse_real(need(5), ln);
      size_t k = 6;
      while (k < tok.size()) {
        if (tok[k].text == "fixed_p") {
          s.fixed_p = true;
          ++k;
        } else if (tok[k].text == "mg") {
          s.microgrid = need(k + 1).text;
          k += 2;
        } else {
          throw ParseError(ln, tok[k].column, "unknown source option '" + tok[k].text + "'");
        }
      }
      if (s.kind == SourceKind::pv) s.fixed_p = true;
      net.sources.push_back(std::move(s));
    } else {
      throw ParseError(ln, tok[0].column, "unknown directive '" + kw + "'");
    }
  }
  if (pending.target && pending.next_row < pending.dim)
    throw ParseError(ln + 1, 1, "document ends inside an impedance matrix");
  if (!saw_header) throw ParseError(1, 1, "empty document");

  // expand configs into per-line impedances
  double vln_kv = net.vbase_kv / std::sqrt(3.0);
  for (const auto& d : deferred) {
    auto it = configs.find(d.config);
    if (it == configs.end())
      throw ParseError(d.ln, d.col, "unknown config '" + d.config + "'");
    const LineConfig& cfg = it->second;
    Line& l = net.lines[d.line_idx];
    l.phases = cfg.phases;
    l.Z = cfg.z_per_mile * (d.length_ft / 5280.0);
    if (!d.amp_given) l.ampacity = cfg.ampacity;
    if (static_cast<int>(l.ampacity.size()) != cfg.phases.count())
      throw ParseError(d.ln, d.col, "config '" + d.config + "' carries no ampacity");
    if (!d.flow_given) {
      l.flow_limit.clear();
      for (double a : l.ampacity) l.flow_limit.push_back(a * vln_kv);
    }
  }
  for (auto& l : net.lines) {
    if (l.flow_limit.empty())
      for (double a : l.ampacity) l.flow_limit.push_back(a * vln_kv);
  }

  if (static_cast<int>(net.level_weights.size()) != net.level_count)
    throw ParseError(1, 1, "weight list length differs from declared level count");
  for (auto& ld : net.loads) {
    if (ld.level < 1 || ld.level > net.level_count)
      throw ParseError(1, 1, "load at bus '" + ld.bus + "' has out-of-range level");
    ld.weight = net.level_weights[static_cast<size_t>(ld.level) - 1];
  }
  return net;
}

namespace {

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_complex(cplx v) {
  std::string s = fmt_real(v.real());
  if (v.imag() >= 0.0) s += "+";
  s += fmt_real(v.imag());
  s += "j";
  return s;
}

}  // namespace

std::string serialize_feeder(const Network& net) {
  std::ostringstream o;
  o << "feeder-format 1\n";
  if (!net.name.empty()) o << "name " << net.name << "\n";
  o << "sbase_kva " << fmt_real(net.sbase_kva) << "\n";
  o << "vbase_kv " << fmt_real(net.vbase_kv) << "\n";
  o << "levels " << net.level_count << "\n";
  o << "weights";
  for (double w : net.level_weights) o << " " << fmt_real(w);
  o << "\n\n";
  for (const auto& b : net.buses) {
    o << "bus " << b.id << " " << b.phases.str();
    if (b.is_reference)
      o << " ref";
    else if (b.vmin != 0.95 || b.vmax != 1.05)
      o << " vmin " << fmt_real(b.vmin) << " vmax " << fmt_real(b.vmax);
    o << "\n";
  }
  o << "\n";
  for (const auto& l : net.lines) {
    o << "line " << l.id << " " << l.from << " " << l.to << " " << l.phases.str();
    o << " kind "
      << (l.kind == LineKind::fixed ? "fixed" : l.kind == LineKind::swtch ? "switch" : "tie");
    o << " state "
      << (l.state == LineState::closed ? "closed"
          : l.state == LineState::open ? "open"
                                       : "faulted");
    o << " ampacity";
    for (double a : l.ampacity) o << " " << fmt_real(a);
    o << " flow";
    for (double f : l.flow_limit) o << " " << fmt_real(f);
    o << "\n";
    for (int r = 0; r < l.Z.rows(); ++r) {
      o << "zrow";
      for (int c = 0; c <= r; ++c) o << " " << fmt_complex(l.Z(r, c));
      o << "\n";
    }
  }
  o << "\n";
  for (const auto& ld : net.loads) {
    o << "load " << ld.bus << " " << ld.level;
    const char* lbl[3] = {"a", "b", "c"};
    for (int p = 0; p < 3; ++p)
      if (ld.s[static_cast<size_t>(p)] != cplx(0.0, 0.0))
        o << " " << lbl[p] << " " << fmt_complex(ld.s[static_cast<size_t>(p)]);
    o << "\n";
  }
  o << "\n";
  for (const auto& s : net.sources) {
    o << "source " << s.id << " " << s.bus << " "
      << (s.kind == SourceKind::diesel ? "diesel"
          : s.kind == SourceKind::storage ? "storage"
                                          : "pv")
      << " " << fmt_real(s.p_rate) << " " << fmt_real(s.q_rate);
    if (s.fixed_p && s.kind != SourceKind::pv) o << " fixed_p";
    if (!s.microgrid.empty()) o << " mg " << s.microgrid;
    o << "\n";
  }
  return o.str();
}

EventSpec parse_event(const std::string& json_text, const Network& net) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  EventSpec ev;
  for (const auto& v : j.value("faulted_lines", nlohmann::json::array())) {
    std::string id = v.get<std::string>();
    if (net.line_index(id) < 0) throw std::out_of_range("unknown line '" + id + "' in event");
    ev.faulted_lines.push_back(id);
  }
  for (const auto& v : j.value("unavailable_sources", nlohmann::json::array())) {
    std::string id = v.get<std::string>();
    bool found = false;
    for (const auto& s : net.sources) found = found || s.id == id;
    if (!found) throw std::out_of_range("unknown source '" + id + "' in event");
    ev.unavailable_sources.push_back(id);
  }
  return ev;
}

std::string serialize_event(const EventSpec& ev) {
  nlohmann::json j;
  j["faulted_lines"] = ev.faulted_lines;
  j["unavailable_sources"] = ev.unavailable_sources;
  return j.dump(2);
}

}  // namespace restore::net
