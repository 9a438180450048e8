#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "restore/models.hpp"

namespace restore::models {
namespace {

using conic::ConicProgram;
using conic::LinExpr;
using net::cplx;
using net::Phase;

struct BusCtx {
  const net::Bus* bus = nullptr;
  std::vector<const net::Load*> loads;
  std::vector<const net::Source*> sources;
  std::vector<int> lines_in;   // indices into Ctx::lines (this bus is child)
  std::vector<int> lines_out;  // this bus is parent
};

struct DirLine {
  const net::Line* line = nullptr;
  std::string parent, child;
  Eigen::MatrixXcd z_pu;
  std::vector<double> amp_pu;
  std::vector<double> flow_pu;
};

// Shared assembly context: tree-directed lines and per-bus element lists.
struct Ctx {
  const net::Network* net = nullptr;
  const topo::IslandGraph* island = nullptr;
  const topo::SpanningTree* tree = nullptr;
  double s_base_phase_kw = 0.0;  // per-phase power base
  double z_base_ohm = 0.0;
  double i_base_amp = 0.0;
  std::string reference;
  std::map<std::string, BusCtx> buses;  // all island buses
  std::vector<DirLine> lines;           // tree lines, parent -> child
};

Ctx make_ctx(const net::Network& net, const topo::IslandGraph& island,
             const topo::SpanningTree& tree, const BuildOptions& opt) {
  Ctx c;
  c.net = &net;
  c.island = &island;
  c.tree = &tree;
  c.s_base_phase_kw = net.sbase_kva / 3.0;
  double v_ln_v = net.vbase_kv * 1000.0 / std::sqrt(3.0);
  c.z_base_ohm = v_ln_v * v_ln_v / (c.s_base_phase_kw * 1000.0);
  c.i_base_amp = c.s_base_phase_kw * 1000.0 / v_ln_v;

  std::set<std::string> members(island.vertices.begin(), island.vertices.end());
  for (const auto& id : island.vertices) {
    int bi = net.bus_index(id);
    if (bi < 0) throw std::invalid_argument("island bus '" + id + "' not in network");
    c.buses[id].bus = &net.buses[static_cast<size_t>(bi)];
  }
  for (const auto& ld : net.loads)
    if (members.count(ld.bus)) c.buses[ld.bus].loads.push_back(&ld);

  const net::Source* biggest = nullptr;
  for (const auto& s : net.sources)
    if (members.count(s.bus)) {
      c.buses[s.bus].sources.push_back(&s);
      if (!biggest || s.p_rate > biggest->p_rate ||
          (s.p_rate == biggest->p_rate && s.bus < biggest->bus))
        biggest = &s;
    }
  if (!biggest) throw std::invalid_argument("island has no source");
  c.reference = opt.reference_bus.empty() ? biggest->bus : opt.reference_bus;
  if (!members.count(c.reference))
    throw std::invalid_argument("reference bus '" + c.reference + "' not in island");

  std::set<std::string> tree_edges(tree.edge_ids.begin(), tree.edge_ids.end());
  if (tree_edges.size() + 1 != island.vertices.size())
    throw std::invalid_argument("tree does not span the island");
  for (const auto& e : island.edges) {
    if (!tree_edges.count(e.line_id)) continue;
    int li = net.line_index(e.line_id);
    if (li < 0) throw std::invalid_argument("tree line '" + e.line_id + "' not in network");
    const net::Line& l = net.lines[static_cast<size_t>(li)];
    // orient away from the root using the tree's parent map
    std::string parent = l.from, child = l.to;
    auto it = tree.parent.find(l.to);
    if (it == tree.parent.end() || it->second != l.from) {
      auto it2 = tree.parent.find(l.from);
      if (it2 == tree.parent.end() || it2->second != l.to)
        throw std::invalid_argument("tree parent map inconsistent at line '" + l.id + "'");
      std::swap(parent, child);
    }
    DirLine dl;
    dl.line = &l;
    dl.parent = parent;
    dl.child = child;
    dl.z_pu = l.Z / c.z_base_ohm;
    for (double a : l.ampacity) dl.amp_pu.push_back(a / c.i_base_amp);
    for (double f : l.flow_limit) dl.flow_pu.push_back(f / c.s_base_phase_kw);
    int idx = static_cast<int>(c.lines.size());
    c.lines.push_back(std::move(dl));
    c.buses[child].lines_in.push_back(idx);
    c.buses[parent].lines_out.push_back(idx);
  }
  return c;
}

// accessors for matrix variables -------------------------------------------

int tri_index(int r, int c, int m) {  // lower-triangle column-major
  return c * m - c * (c - 1) / 2 + (r - c);
}
int strict_tri_index(int r, int c, int m) {  // strictly-lower column-major
  return c * (m - 1) - c * (c - 1) / 2 + (r - c - 1);
}

LinExpr herm_re(const HermVar& h, int r, int c) {
  int m = h.phases.count();
  if (r < c) std::swap(r, c);
  return LinExpr(h.re[static_cast<size_t>(tri_index(r, c, m))], 1.0);
}

LinExpr herm_im(const HermVar& h, int r, int c) {
  if (r == c) return {};
  int m = h.phases.count();
  double sgn = 1.0;
  if (r < c) {
    std::swap(r, c);
    sgn = -1.0;
  }
  return LinExpr(h.im[static_cast<size_t>(strict_tri_index(r, c, m))], sgn);
}

LinExpr cplx_re(const CplxVar& v, int r, int c) {
  int m = v.phases.count();
  return LinExpr(v.re[static_cast<size_t>(c * m + r)], 1.0);
}
LinExpr cplx_im(const CplxVar& v, int r, int c) {
  int m = v.phases.count();
  return LinExpr(v.im[static_cast<size_t>(c * m + r)], 1.0);
}

// acc += k * x (complex coefficient times complex expression)
void caxpy(LinExpr& acc_re, LinExpr& acc_im, cplx k, const LinExpr& x_re,
           const LinExpr& x_im) {
  acc_re += k.real() * x_re;
  acc_re -= k.imag() * x_im;
  acc_im += k.real() * x_im;
  acc_im += k.imag() * x_re;
}

// pin V_ref = v v^H for the balanced unit reference phasors at 0, +120,
// -120 degrees (the rotation the linear model's delta matrix assumes); only
// the diagonal would leave the phase correlations free and break rank-1
// recovery
void pin_reference_voltage(ConicProgram& p, const HermVar& V, net::PhaseSet ps) {
  static const double kAngle[3] = {0.0, 2.0 * M_PI / 3.0, -2.0 * M_PI / 3.0};
  auto phs = ps.list();
  int m = ps.count();
  for (int a = 0; a < m; ++a)
    for (int b = 0; b <= a; ++b) {
      double th = kAngle[static_cast<int>(phs[static_cast<size_t>(a)])] -
                  kAngle[static_cast<int>(phs[static_cast<size_t>(b)])];
      p.add_eq(LinExpr(V.re[static_cast<size_t>(tri_index(a, b, m))], 1.0), std::cos(th));
      if (a != b)
        p.add_eq(LinExpr(V.im[static_cast<size_t>(strict_tri_index(a, b, m))], 1.0),
                 std::sin(th));
    }
}

HermVar new_herm(ConicProgram& p, net::PhaseSet ps, const std::string& tag) {
  HermVar h;
  h.phases = ps;
  int m = ps.count();
  for (int c = 0; c < m; ++c)
    for (int r = c; r < m; ++r)
      h.re.push_back(p.add_variable(tag + ".re" + std::to_string(r) + std::to_string(c)));
  for (int c = 0; c < m; ++c)
    for (int r = c + 1; r < m; ++r)
      h.im.push_back(p.add_variable(tag + ".im" + std::to_string(r) + std::to_string(c)));
  return h;
}

CplxVar new_cplx(ConicProgram& p, net::PhaseSet ps, const std::string& tag) {
  CplxVar v;
  v.phases = ps;
  int m = ps.count();
  for (int i = 0; i < m * m; ++i) v.re.push_back(p.add_variable(tag + ".re" + std::to_string(i)));
  for (int i = 0; i < m * m; ++i) v.im.push_back(p.add_variable(tag + ".im" + std::to_string(i)));
  return v;
}

// gamma variables, load/source injection expressions shared by sdp and milp
struct Injection {
  // per bus id, per phase slot (a/b/c): complex injection expression (p.u.)
  std::map<std::string, std::array<std::pair<LinExpr, LinExpr>, 3>> s;
};

void add_gammas(ConicProgram& p, const Ctx& c, const Fixes& fixes, VarMap& vm) {
  std::map<std::string, double> fixed(fixes.begin(), fixes.end());
  for (const auto& [bid, bc] : c.buses) {
    for (const net::Load* ld : bc.loads) {
      int g = p.add_variable("gamma." + bid);
      vm.gamma[bid] = g;
      auto it = fixed.find(bid);
      if (it != fixed.end())
        p.add_eq(LinExpr(g, 1.0), it->second);
      else
        p.add_box(g, 0.0, 1.0);
    }
  }
  for (const auto& [bid, val] : fixed)
    if (!vm.gamma.count(bid))
      throw std::invalid_argument("fix references a bus without a load: '" + bid + "'");
}

// source variables and rating caps (aggregate over phases)
void add_sources(ConicProgram& p, const Ctx& c, VarMap& vm) {
  for (const auto& [bid, bc] : c.buses) {
    for (const net::Source* src : bc.sources) {
      std::array<int, 3> pg{-1, -1, -1}, qg{-1, -1, -1};
      LinExpr psum, qsum;
      for (Phase ph : bc.bus->phases.list()) {
        int i = static_cast<int>(ph);
        pg[static_cast<size_t>(i)] = p.add_variable("pg." + src->id);
        qg[static_cast<size_t>(i)] = p.add_variable("qg." + src->id);
        psum.add(pg[static_cast<size_t>(i)], 1.0);
        qsum.add(qg[static_cast<size_t>(i)], 1.0);
      }
      double pcap = src->p_rate / c.s_base_phase_kw;
      double qcap = src->q_rate / c.s_base_phase_kw;
      if (src->fixed_p)
        p.add_eq(psum, pcap);
      else {
        p.add_ge(psum, 0.0);
        p.add_le(psum, pcap);
      }
      if (qcap > 0.0) {
        p.add_ge(qsum, 0.0);
        p.add_le(qsum, qcap);
      } else {
        p.add_eq(qsum, 0.0);
      }
      vm.pg[src->id] = pg;
      vm.qg[src->id] = qg;
    }
  }
}

Injection make_injection(const Ctx& c, const VarMap& vm) {
  Injection inj;
  for (const auto& [bid, bc] : c.buses) {
    auto& slots = inj.s[bid];
    for (const net::Source* src : bc.sources) {
      const auto& pg = vm.pg.at(src->id);
      const auto& qg = vm.qg.at(src->id);
      for (int i = 0; i < 3; ++i) {
        if (pg[static_cast<size_t>(i)] >= 0)
          slots[static_cast<size_t>(i)].first.add(pg[static_cast<size_t>(i)], 1.0);
        if (qg[static_cast<size_t>(i)] >= 0)
          slots[static_cast<size_t>(i)].second.add(qg[static_cast<size_t>(i)], 1.0);
      }
    }
    for (const net::Load* ld : bc.loads) {
      int g = vm.gamma.at(bid);
      for (int i = 0; i < 3; ++i) {
        cplx d = ld->s[static_cast<size_t>(i)] / c.s_base_phase_kw;
        slots[static_cast<size_t>(i)].first.add(g, -d.real());
        slots[static_cast<size_t>(i)].second.add(g, -d.imag());
      }
    }
  }
  return inj;
}

void set_restore_objective(ConicProgram& p, const Ctx& c, const VarMap& vm) {
  for (const auto& [bid, g] : vm.gamma) {
    for (const net::Load* ld : c.buses.at(bid).loads) p.set_objective_coeff(g, ld->weight);
  }
}

void set_min_generation_objective(ConicProgram& p, const Ctx& c, const VarMap& vm) {
  for (const auto& [sid, pg] : vm.pg)
    for (int i = 0; i < 3; ++i)
      if (pg[static_cast<size_t>(i)] >= 0) p.set_objective_coeff(pg[static_cast<size_t>(i)], -1.0);
  // tiny reactive penalty off the reference bus: the slack unit carries the
  // island's reactive balance, the rest run near unity power factor
  for (const auto& [bid, bc] : c.buses) {
    if (bid == c.reference) continue;
    for (const net::Source* src : bc.sources) {
      const auto& qg = vm.qg.at(src->id);
      for (int i = 0; i < 3; ++i)
        if (qg[static_cast<size_t>(i)] >= 0)
          p.set_objective_coeff(qg[static_cast<size_t>(i)], -2e-3);
    }
  }
}

}  // namespace

std::pair<ConicProgram, VarMap> build_clr_sdp(const net::Network& net,
                                              const topo::IslandGraph& island,
                                              const topo::SpanningTree& tree,
                                              const Fixes& fixes, const BuildOptions& opt) {
  Ctx c = make_ctx(net, island, tree, opt);
  ConicProgram p;
  VarMap vm;
  vm.s_base_phase_kw = c.s_base_phase_kw;
  vm.i_base_amp = c.i_base_amp;
  vm.reference_bus = c.reference;

  // bus voltage products V_i, with magnitude bounds on the diagonal
  for (const auto& [bid, bc] : c.buses) {
    HermVar V = new_herm(p, bc.bus->phases, "V." + bid);
    int m = bc.bus->phases.count();
    if (bid == c.reference) {
      pin_reference_voltage(p, V, bc.bus->phases);
    } else {
      double lo = bc.bus->vmin * bc.bus->vmin;
      double hi = bc.bus->vmax * bc.bus->vmax;
      for (int d = 0; d < m; ++d) p.add_box(V.re[static_cast<size_t>(tri_index(d, d, m))], lo, hi);
    }
    vm.V[bid] = std::move(V);
  }

  // line flow and current products
  for (const auto& dl : c.lines) {
    const std::string& id = dl.line->id;
    vm.S[id] = new_cplx(p, dl.line->phases, "S." + id);
    vm.I[id] = new_herm(p, dl.line->phases, "I." + id);
    vm.direction[id] = {dl.parent, dl.child};
    int m = dl.line->phases.count();
    const HermVar& I = vm.I.at(id);
    for (int d = 0; d < m; ++d) {
      double cap = dl.amp_pu[static_cast<size_t>(d)];
      p.add_le(herm_re(I, d, d), cap * cap);
    }
  }

  add_gammas(p, c, fixes, vm);
  add_sources(p, c, vm);
  Injection inj = make_injection(c, vm);

  // power balance per bus and phase
  for (const auto& [bid, bc] : c.buses) {
    for (Phase ph : bc.bus->phases.list()) {
      LinExpr re = inj.s[bid][static_cast<size_t>(static_cast<int>(ph))].first;
      LinExpr im = inj.s[bid][static_cast<size_t>(static_cast<int>(ph))].second;
      for (int li : bc.lines_in) {
        const DirLine& dl = c.lines[static_cast<size_t>(li)];
        if (!dl.line->phases.has(ph)) continue;
        int q = dl.line->phases.index_of(ph);
        const CplxVar& S = vm.S.at(dl.line->id);
        const HermVar& I = vm.I.at(dl.line->id);
        re += cplx_re(S, q, q);
        im += cplx_im(S, q, q);
        int m = dl.line->phases.count();
        for (int r = 0; r < m; ++r)
          caxpy(re, im, -dl.z_pu(q, r), herm_re(I, r, q), herm_im(I, r, q));
      }
      for (int li : bc.lines_out) {
        const DirLine& dl = c.lines[static_cast<size_t>(li)];
        if (!dl.line->phases.has(ph)) continue;
        int q = dl.line->phases.index_of(ph);
        const CplxVar& S = vm.S.at(dl.line->id);
        re -= cplx_re(S, q, q);
        im -= cplx_im(S, q, q);
      }
      p.add_eq(re, 0.0);
      p.add_eq(im, 0.0);
    }
  }

  // Ohm's law over voltage products, entrywise on the line's phase block
  for (const auto& dl : c.lines) {
    const HermVar& Vp = vm.V.at(dl.parent);
    const HermVar& Vc = vm.V.at(dl.child);
    const CplxVar& S = vm.S.at(dl.line->id);
    const HermVar& I = vm.I.at(dl.line->id);
    auto phs = dl.line->phases.list();
    int m = static_cast<int>(phs.size());
    auto ppar = [&](int k) { return c.buses.at(dl.parent).bus->phases.index_of(phs[static_cast<size_t>(k)]); };
    auto pchd = [&](int k) { return c.buses.at(dl.child).bus->phases.index_of(phs[static_cast<size_t>(k)]); };
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b <= a; ++b) {
        LinExpr re = herm_re(Vc, pchd(a), pchd(b)) - herm_re(Vp, ppar(a), ppar(b));
        LinExpr im = herm_im(Vc, pchd(a), pchd(b)) - herm_im(Vp, ppar(a), ppar(b));
        // + (S Z^H + Z S^H)(a,b)
        for (int r = 0; r < m; ++r) {
          caxpy(re, im, std::conj(dl.z_pu(b, r)), cplx_re(S, a, r), cplx_im(S, a, r));
          // (Z S^H)(a,b) = sum_r Z(a,r) conj(S(b,r))
          LinExpr sre = cplx_re(S, b, r), sim = cplx_im(S, b, r);
          sim *= -1.0;
          caxpy(re, im, dl.z_pu(a, r), sre, sim);
        }
        // - (Z I Z^H)(a,b)
        for (int r = 0; r < m; ++r)
          for (int t = 0; t < m; ++t)
            caxpy(re, im, -dl.z_pu(a, r) * std::conj(dl.z_pu(b, t)), herm_re(I, r, t),
                  herm_im(I, r, t));
        p.add_eq(re, 0.0);
        if (a != b) p.add_eq(im, 0.0);
      }
    }
  }

  // PSD coupling blocks [[V_parent^a, S],[S^H, I]]
  for (const auto& dl : c.lines) {
    const HermVar& Vp = vm.V.at(dl.parent);
    const CplxVar& S = vm.S.at(dl.line->id);
    const HermVar& I = vm.I.at(dl.line->id);
    auto phs = dl.line->phases.list();
    int m = static_cast<int>(phs.size());
    auto ppar = [&](int k) { return c.buses.at(dl.parent).bus->phases.index_of(phs[static_cast<size_t>(k)]); };
    auto re_fn = [&](int r, int cc) -> LinExpr {
      if (r < m && cc < m) return herm_re(Vp, ppar(r), ppar(cc));
      if (r >= m && cc >= m) return herm_re(I, r - m, cc - m);
      // r >= m, cc < m: S^H(r-m, cc) = conj(S(cc, r-m))
      return cplx_re(S, cc, r - m);
    };
    auto im_fn = [&](int r, int cc) -> LinExpr {
      if (r < m && cc < m) return herm_im(Vp, ppar(r), ppar(cc));
      if (r >= m && cc >= m) return herm_im(I, r - m, cc - m);
      LinExpr e = cplx_im(S, cc, r - m);
      e *= -1.0;
      return e;
    };
    p.add_psd_block(conic::herm_embed_block(2 * m, re_fn, im_fn));
  }

  if (opt.objective == Objective::restore)
    set_restore_objective(p, c, vm);
  else
    set_min_generation_objective(p, c, vm);
  return {std::move(p), std::move(vm)};
}

std::pair<ConicProgram, VarMap> build_clr_misocp(const net::Network& net,
                                                 const topo::IslandGraph& island,
                                                 const topo::SpanningTree& tree,
                                                 const Fixes& fixes, const BuildOptions& opt) {
  Ctx c = make_ctx(net, island, tree, opt);
  if (opt.strict_balance) {
    for (const auto& dl : c.lines) {
      const Eigen::MatrixXcd& Z = dl.line->Z;
      for (int d = 1; d < Z.rows(); ++d)
        if (std::abs(Z(d, d) - Z(0, 0)) > 1e-6 * std::max(1.0, std::abs(Z(0, 0))))
          throw std::invalid_argument("unbalanced line '" + dl.line->id + "'");
    }
    for (const auto& [bid, bc] : c.buses)
      for (const net::Load* ld : bc.loads) {
        auto ps = ld->phases().list();
        for (size_t k = 1; k < ps.size(); ++k)
          if (std::abs(ld->s[static_cast<size_t>(static_cast<int>(ps[k]))] -
                       ld->s[static_cast<size_t>(static_cast<int>(ps[0]))]) > 1e-6)
            throw std::invalid_argument("unbalanced load at bus '" + bid + "'");
      }
  }

  ConicProgram p;
  VarMap vm;
  vm.s_base_phase_kw = c.s_base_phase_kw;
  vm.i_base_amp = c.i_base_amp;
  vm.reference_bus = c.reference;

  // single-phase equivalent quantities: per-phase average of each element
  for (const auto& [bid, bc] : c.buses) {
    int u = p.add_variable("u." + bid);
    bool ref = (bid == c.reference);
    double lo = ref ? 1.0 : bc.bus->vmin * bc.bus->vmin;
    double hi = ref ? 1.0 : bc.bus->vmax * bc.bus->vmax;
    if (lo == hi)
      p.add_eq(LinExpr(u, 1.0), lo);
    else
      p.add_box(u, lo, hi);
    vm.u[bid] = u;
  }
  for (const auto& dl : c.lines) {
    int P = p.add_variable("P." + dl.line->id);
    int Q = p.add_variable("Q." + dl.line->id);
    int L = p.add_variable("l." + dl.line->id);
    vm.flow[dl.line->id] = {P, Q, L};
    vm.direction[dl.line->id] = {dl.parent, dl.child};
    double cap = 0.0;
    for (double a : dl.amp_pu) cap += a / static_cast<double>(dl.amp_pu.size());
    p.add_box(L, 0.0, cap * cap);
  }

  add_gammas(p, c, fixes, vm);
  add_sources(p, c, vm);
  Injection inj = make_injection(c, vm);

  auto line_z = [](const DirLine& dl) {
    cplx z = 0.0;
    for (int d = 0; d < dl.z_pu.rows(); ++d) z += dl.z_pu(d, d);
    return z / static_cast<double>(dl.z_pu.rows());
  };

  // balance; injections aggregated over phases (single-phase equivalent
  // carries the full three-phase power on the per-phase base x3)
  for (const auto& [bid, bc] : c.buses) {
    LinExpr re, im;
    for (int i = 0; i < 3; ++i) {
      re += inj.s[bid][static_cast<size_t>(i)].first;
      im += inj.s[bid][static_cast<size_t>(i)].second;
    }
    re *= 1.0 / 3.0;
    im *= 1.0 / 3.0;
    for (int li : bc.lines_in) {
      const DirLine& dl = c.lines[static_cast<size_t>(li)];
      auto [P, Q, L] = vm.flow.at(dl.line->id);
      cplx z = line_z(dl);
      re += LinExpr(P, 1.0);
      re.add(L, -z.real());
      im += LinExpr(Q, 1.0);
      im.add(L, -z.imag());
    }
    for (int li : bc.lines_out) {
      const DirLine& dl = c.lines[static_cast<size_t>(li)];
      auto [P, Q, L] = vm.flow.at(dl.line->id);
      (void)L;
      re -= LinExpr(P, 1.0);
      im -= LinExpr(Q, 1.0);
    }
    p.add_eq(re, 0.0);
    p.add_eq(im, 0.0);
  }

  // voltage drop and the conic power-definition relaxation
  for (const auto& dl : c.lines) {
    auto [P, Q, L] = vm.flow.at(dl.line->id);
    cplx z = line_z(dl);
    LinExpr drop(vm.u.at(dl.child), 1.0);
    drop.add(vm.u.at(dl.parent), -1.0);
    drop.add(P, 2.0 * z.real());
    drop.add(Q, 2.0 * z.imag());
    drop.add(L, -std::norm(z));
    p.add_eq(drop, 0.0);
    // l * u_parent >= P^2 + Q^2  as  ||(2P, 2Q, l-u)|| <= l+u
    conic::SocConstraint soc;
    LinExpr t(L, 1.0);
    t.add(vm.u.at(dl.parent), 1.0);
    soc.rows.push_back(t);
    soc.rows.push_back(LinExpr(P, 2.0));
    soc.rows.push_back(LinExpr(Q, 2.0));
    LinExpr d(L, 1.0);
    d.add(vm.u.at(dl.parent), -1.0);
    soc.rows.push_back(d);
    p.add_soc(std::move(soc));
  }

  if (opt.objective == Objective::restore) {
    set_restore_objective(p, c, vm);
    // loss penalty: w0 * total real injection = w0 * sum of r*l over lines
    double w0 = opt.w0 >= 0.0 ? opt.w0 : 1e-3 * c.net->level_weights.back();
    for (const auto& dl : c.lines) {
      auto [P, Q, L] = vm.flow.at(dl.line->id);
      (void)P;
      (void)Q;
      p.set_objective_coeff(L, -w0 * line_z(dl).real());
    }
  } else {
    set_min_generation_objective(p, c, vm);
  }
  for (const auto& [bid, g] : vm.gamma) p.mark_binary(g);
  return {std::move(p), std::move(vm)};
}

std::pair<ConicProgram, VarMap> build_clr_milp(const net::Network& net,
                                               const topo::IslandGraph& island,
                                               const topo::SpanningTree& tree,
                                               const Fixes& fixes, const BuildOptions& opt) {
  Ctx c = make_ctx(net, island, tree, opt);
  ConicProgram p;
  VarMap vm;
  vm.s_base_phase_kw = c.s_base_phase_kw;
  vm.i_base_amp = c.i_base_amp;
  vm.reference_bus = c.reference;

  for (const auto& [bid, bc] : c.buses) {
    HermVar V = new_herm(p, bc.bus->phases, "V." + bid);
    int m = bc.bus->phases.count();
    if (bid == c.reference) {
      pin_reference_voltage(p, V, bc.bus->phases);
    } else {
      double lo = bc.bus->vmin * bc.bus->vmin;
      double hi = bc.bus->vmax * bc.bus->vmax;
      for (int d = 0; d < m; ++d) p.add_box(V.re[static_cast<size_t>(tri_index(d, d, m))], lo, hi);
    }
    vm.V[bid] = std::move(V);
  }

  // per-line diagonal flow vector with box caps
  for (const auto& dl : c.lines) {
    CplxVar lam;
    lam.phases = dl.line->phases;
    int m = dl.line->phases.count();
    for (int i = 0; i < m; ++i) lam.re.push_back(p.add_variable("lam.re." + dl.line->id));
    for (int i = 0; i < m; ++i) lam.im.push_back(p.add_variable("lam.im." + dl.line->id));
    for (int i = 0; i < m; ++i) {
      double cap = dl.flow_pu[static_cast<size_t>(i)];
      p.add_box(lam.re[static_cast<size_t>(i)], -cap, cap);
      p.add_box(lam.im[static_cast<size_t>(i)], -cap, cap);
    }
    vm.lambda[dl.line->id] = std::move(lam);
    vm.direction[dl.line->id] = {dl.parent, dl.child};
  }

  add_gammas(p, c, fixes, vm);
  add_sources(p, c, vm);
  Injection inj = make_injection(c, vm);

  // lossless balance per bus and phase
  for (const auto& [bid, bc] : c.buses) {
    for (Phase ph : bc.bus->phases.list()) {
      LinExpr re = inj.s[bid][static_cast<size_t>(static_cast<int>(ph))].first;
      LinExpr im = inj.s[bid][static_cast<size_t>(static_cast<int>(ph))].second;
      for (int li : bc.lines_in) {
        const DirLine& dl = c.lines[static_cast<size_t>(li)];
        if (!dl.line->phases.has(ph)) continue;
        int q = dl.line->phases.index_of(ph);
        const CplxVar& lam = vm.lambda.at(dl.line->id);
        re.add(lam.re[static_cast<size_t>(q)], 1.0);
        im.add(lam.im[static_cast<size_t>(q)], 1.0);
      }
      for (int li : bc.lines_out) {
        const DirLine& dl = c.lines[static_cast<size_t>(li)];
        if (!dl.line->phases.has(ph)) continue;
        int q = dl.line->phases.index_of(ph);
        const CplxVar& lam = vm.lambda.at(dl.line->id);
        re.add(lam.re[static_cast<size_t>(q)], -1.0);
        im.add(lam.im[static_cast<size_t>(q)], -1.0);
      }
      p.add_eq(re, 0.0);
      p.add_eq(im, 0.0);
    }
  }

  // lossless voltage drop with the rotation matrix delta
  const cplx alpha = std::exp(cplx(0.0, -2.0 * M_PI / 3.0));
  Eigen::Matrix3cd delta;
  delta << cplx(1.0, 0.0), alpha * alpha, alpha, alpha, cplx(1.0, 0.0), alpha * alpha,
      alpha * alpha, alpha, cplx(1.0, 0.0);
  for (const auto& dl : c.lines) {
    const HermVar& Vp = vm.V.at(dl.parent);
    const HermVar& Vc = vm.V.at(dl.child);
    const CplxVar& lam = vm.lambda.at(dl.line->id);
    auto phs = dl.line->phases.list();
    int m = static_cast<int>(phs.size());
    auto ppar = [&](int k) { return c.buses.at(dl.parent).bus->phases.index_of(phs[static_cast<size_t>(k)]); };
    auto pchd = [&](int k) { return c.buses.at(dl.child).bus->phases.index_of(phs[static_cast<size_t>(k)]); };
    auto dsub = [&](int r, int cc) {
      return delta(static_cast<int>(phs[static_cast<size_t>(r)]), static_cast<int>(phs[static_cast<size_t>(cc)]));
    };
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b <= a; ++b) {
        LinExpr re = herm_re(Vc, pchd(a), pchd(b)) - herm_re(Vp, ppar(a), ppar(b));
        LinExpr im = herm_im(Vc, pchd(a), pchd(b)) - herm_im(Vp, ppar(a), ppar(b));
        for (int r = 0; r < m; ++r) {
          // (delta DIAG(L) Z^H)(a,b) = delta(a,r) L_r conj(Z(b,r))
          caxpy(re, im, dsub(a, r) * std::conj(dl.z_pu(b, r)),
                LinExpr(lam.re[static_cast<size_t>(r)], 1.0),
                LinExpr(lam.im[static_cast<size_t>(r)], 1.0));
          // (Z (delta DIAG(L))^H)(a,b) = Z(a,r) conj(delta(b,r)) conj(L_r)
          caxpy(re, im, dl.z_pu(a, r) * std::conj(dsub(b, r)),
                LinExpr(lam.re[static_cast<size_t>(r)], 1.0),
                LinExpr(lam.im[static_cast<size_t>(r)], -1.0));
        }
        p.add_eq(re, 0.0);
        if (a != b) p.add_eq(im, 0.0);
      }
    }
  }

  if (opt.objective == Objective::restore)
    set_restore_objective(p, c, vm);
  else
    set_min_generation_objective(p, c, vm);
  for (const auto& [bid, g] : vm.gamma) p.mark_binary(g);
  return {std::move(p), std::move(vm)};
}

}  // namespace restore::models
