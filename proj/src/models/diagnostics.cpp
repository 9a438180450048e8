#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "restore/models.hpp"

namespace restore::models {
namespace {

using net::cplx;

int tri_index(int r, int c, int m) { return c * m - c * (c - 1) / 2 + (r - c); }
int strict_tri_index(int r, int c, int m) { return c * (m - 1) - c * (c - 1) / 2 + (r - c - 1); }

}  // namespace

Eigen::MatrixXcd herm_value(const conic::ConicSolution& sol, const HermVar& hv) {
  int m = hv.phases.count();
  Eigen::MatrixXcd M(m, m);
  for (int c = 0; c < m; ++c)
    for (int r = c; r < m; ++r) {
      double re = sol.x[static_cast<size_t>(hv.re[static_cast<size_t>(tri_index(r, c, m))])];
      double im = r == c ? 0.0
                         : sol.x[static_cast<size_t>(
                               hv.im[static_cast<size_t>(strict_tri_index(r, c, m))])];
      M(r, c) = cplx(re, im);
      M(c, r) = cplx(re, -im);
    }
  return M;
}

Eigen::MatrixXcd cplx_value(const conic::ConicSolution& sol, const CplxVar& cv) {
  int m = cv.phases.count();
  Eigen::MatrixXcd M(m, m);
  for (int c = 0; c < m; ++c)
    for (int r = 0; r < m; ++r) {
      size_t k = static_cast<size_t>(c * m + r);
      M(r, c) = cplx(sol.x[static_cast<size_t>(cv.re[k])], sol.x[static_cast<size_t>(cv.im[k])]);
    }
  return M;
}

double rank1_ratio(const conic::ConicSolution& sol, const VarMap& vm) {
  double worst = 0.0;
  for (const auto& [lid, S] : vm.S) {
    const auto& [parent, child] = vm.direction.at(lid);
    (void)child;
    const HermVar& Vp = vm.V.at(parent);
    const HermVar& I = vm.I.at(lid);
    Eigen::MatrixXcd Sm = cplx_value(sol, S);
    Eigen::MatrixXcd Im = herm_value(sol, I);
    int m = static_cast<int>(Sm.rows());
    // parent voltage restricted to the line's phases
    Eigen::MatrixXcd Vfull = herm_value(sol, Vp);
    auto phs = S.phases.list();
    Eigen::MatrixXcd Vm(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        Vm(a, b) = Vfull(Vp.phases.index_of(phs[static_cast<size_t>(a)]),
                         Vp.phases.index_of(phs[static_cast<size_t>(b)]));
    Eigen::MatrixXcd B(2 * m, 2 * m);
    B.topLeftCorner(m, m) = Vm;
    B.topRightCorner(m, m) = Sm;
    B.bottomLeftCorner(m, m) = Sm.adjoint();
    B.bottomRightCorner(m, m) = Im;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(B, Eigen::EigenvaluesOnly);
    Eigen::VectorXd ev = es.eigenvalues();  // ascending
    int n = static_cast<int>(ev.size());
    double l1 = std::abs(ev[n - 1]);
    double l2 = n > 1 ? std::abs(ev[n - 2]) : 0.0;
    if (l1 <= 0.0) continue;
    worst = std::max(worst, l2 / l1);
  }
  return worst;
}

double socp_exactness(const conic::ConicSolution& sol, const VarMap& vm) {
  double worst = 0.0;
  for (const auto& [lid, f] : vm.flow) {
    const auto& [parent, child] = vm.direction.at(lid);
    (void)child;
    double P = sol.x[static_cast<size_t>(f[0])];
    double Q = sol.x[static_cast<size_t>(f[1])];
    double L = sol.x[static_cast<size_t>(f[2])];
    double u = sol.x[static_cast<size_t>(vm.u.at(parent))];
    double s2 = P * P + Q * Q;
    worst = std::max(worst, std::abs(L * u - s2) / std::max(1.0, s2));
  }
  return worst;
}

PhasorProfile recover_phasors(const net::Network& net, const topo::IslandGraph& island,
                              const topo::SpanningTree& tree, const conic::ConicSolution& sol,
                              const VarMap& vm) {
  double ratio = rank1_ratio(sol, vm);
  if (ratio > kRankExactnessThreshold)
    throw std::runtime_error("relaxation is not numerically rank-1 (ratio " +
                             std::to_string(ratio) + "), refusing phasor recovery");

  PhasorProfile out;

  // reference phasors from the reference bus voltage product: phase a at 0
  // degrees, remaining phases at the relative angle the product dictates.
  std::map<std::string, Eigen::VectorXcd> v;  // per bus, dim = phase count
  {
    const HermVar& Vr = vm.V.at(vm.reference_bus);
    Eigen::MatrixXcd M = herm_value(sol, Vr);
    int m = Vr.phases.count();
    Eigen::VectorXcd vr(m);
    for (int k = 0; k < m; ++k) {
      double mag = std::sqrt(std::max(0.0, M(k, k).real()));
      double ang = k == 0 ? 0.0 : -std::arg(M(0, k));
      vr[k] = std::polar(mag, ang);
    }
    v[vm.reference_bus] = vr;
  }

  // chain down the tree: children in BFS order from the stored directions
  std::vector<std::string> order{vm.reference_bus};
  for (size_t h = 0; h < order.size(); ++h) {
    for (const auto& [lid, dir] : vm.direction) {
      if (dir.first != order[h]) continue;
      const net::Line& line = net.lines[static_cast<size_t>(net.line_index(lid))];
      const CplxVar& S = vm.S.at(lid);
      Eigen::MatrixXcd Sm = cplx_value(sol, S);
      int m = static_cast<int>(Sm.rows());
      auto phs = S.phases.list();
      const net::Bus& pbus = net.buses[static_cast<size_t>(net.bus_index(dir.first))];
      const net::Bus& cbus = net.buses[static_cast<size_t>(net.bus_index(dir.second))];
      Eigen::VectorXcd vp(m);
      for (int k = 0; k < m; ++k)
        vp[k] = v.at(dir.first)[pbus.phases.index_of(phs[static_cast<size_t>(k)])];
      // on the rank-1 block S = v i^H, so i = S^H v / |v|^2
      double n2 = vp.squaredNorm();
      Eigen::VectorXcd i = Sm.adjoint() * vp / n2;
      double s_base_phase_kw = vm.s_base_phase_kw;
      double v_ln_v = net.vbase_kv * 1000.0 / std::sqrt(3.0);
      double z_base = v_ln_v * v_ln_v / (s_base_phase_kw * 1000.0);
      Eigen::MatrixXcd zpu = line.Z / z_base;
      Eigen::VectorXcd vc_line = vp - zpu * i;
      Eigen::VectorXcd vc = Eigen::VectorXcd::Zero(cbus.phases.count());
      for (int k = 0; k < m; ++k)
        vc[cbus.phases.index_of(phs[static_cast<size_t>(k)])] = vc_line[k];
      v[dir.second] = vc;
      order.push_back(dir.second);
    }
  }
  (void)island;
  (void)tree;

  for (const auto& [bid, vv] : v) {
    const net::Bus& bus = net.buses[static_cast<size_t>(net.bus_index(bid))];
    auto& slot = out.bus_voltage[bid];
    int k = 0;
    for (net::Phase ph : bus.phases.list()) {
      PhasorProfile::Entry e;
      e.magnitude = std::abs(vv[k]);
      e.angle_deg = std::arg(vv[k]) * 180.0 / M_PI;
      slot[static_cast<size_t>(static_cast<int>(ph))] = e;
      ++k;
    }
  }

  for (const auto& [sid, pg] : vm.pg) {
    double p = 0.0, q = 0.0;
    const auto& qg = vm.qg.at(sid);
    for (int i = 0; i < 3; ++i) {
      if (pg[static_cast<size_t>(i)] >= 0) p += sol.x[static_cast<size_t>(pg[static_cast<size_t>(i)])];
      if (qg[static_cast<size_t>(i)] >= 0) q += sol.x[static_cast<size_t>(qg[static_cast<size_t>(i)])];
    }
    out.source_pq[sid] = {p * vm.s_base_phase_kw, q * vm.s_base_phase_kw};
    out.generation_kw += p * vm.s_base_phase_kw;
  }

  for (const auto& [bid, g] : vm.gamma) {
    double gv = sol.x[static_cast<size_t>(g)];
    for (const auto& ld : net.loads)
      if (ld.bus == bid) out.restored_kw += gv * ld.total_p();
  }
  out.losses_kw = out.generation_kw - out.restored_kw;
  return out;
}

}  // namespace restore::models
