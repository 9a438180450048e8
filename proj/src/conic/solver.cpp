// Homogeneous self-dual interior-point method over the symmetric cone
// product R+^l x SOC x PSD, with Nesterov-Todd scaling and Mehrotra
// predictor-corrector steps.  Dense per-block linear algebra, sparse KKT.

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <limits>
#include <vector>

#include "restore/conic.hpp"

namespace restore::conic {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kSqrt2 = std::sqrt(2.0);

int svec_dim(int m) { return m * (m + 1) / 2; }

// svec layout: column-major lower triangle, off-diagonals scaled by sqrt(2).
int svec_index(int r, int c, int m) {
  if (r < c) std::swap(r, c);
  return c * m - c * (c - 1) / 2 + (r - c);
}

Eigen::MatrixXd smat(const Eigen::Ref<const Eigen::VectorXd>& u, int m) {
  Eigen::MatrixXd M(m, m);
  int k = 0;
  for (int c = 0; c < m; ++c) {
    M(c, c) = u[k++];
    for (int r = c + 1; r < m; ++r) {
      double v = u[k++] / kSqrt2;
      M(r, c) = v;
      M(c, r) = v;
    }
  }
  return M;
}

Eigen::VectorXd svec(const Eigen::MatrixXd& M) {
  const int m = static_cast<int>(M.rows());
  Eigen::VectorXd u(svec_dim(m));
  int k = 0;
  for (int c = 0; c < m; ++c) {
    u[k++] = M(c, c);
    for (int r = c + 1; r < m; ++r) u[k++] = kSqrt2 * M(r, c);
  }
  return u;
}

// Cone layout over the slack vector.
struct Cones {
  int l = 0;                  // leading nonnegative orthant
  std::vector<int> soc;       // SOC block sizes
  std::vector<int> psd;       // PSD matrix orders
  std::vector<int> soc_off;   // offsets into the slack vector
  std::vector<int> psd_off;

  int dim = 0;
  int degree = 0;

  void finalize() {
    int off = l;
    for (int q : soc) {
      soc_off.push_back(off);
      off += q;
    }
    for (int m : psd) {
      psd_off.push_back(off);
      off += svec_dim(m);
    }
    dim = off;
    degree = l + static_cast<int>(soc.size());
    for (int m : psd) degree += m;
  }

  Eigen::VectorXd identity() const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
    e.head(l).setOnes();
    for (size_t i = 0; i < soc.size(); ++i) e[soc_off[i]] = 1.0;
    for (size_t i = 0; i < psd.size(); ++i) {
      int m = psd[i], k = psd_off[i];
      for (int c = 0; c < m; ++c) {
        e[k] = 1.0;
        k += m - c;
      }
    }
    return e;
  }

  // Smallest "cone eigenvalue" of u: positivity margin.
  double min_eig(const Eigen::VectorXd& u) const {
    double me = kInf;
    if (l > 0) me = std::min(me, u.head(l).minCoeff());
    for (size_t i = 0; i < soc.size(); ++i) {
      int q = soc[i], o = soc_off[i];
      me = std::min(me, u[o] - u.segment(o + 1, q - 1).norm());
    }
    for (size_t i = 0; i < psd.size(); ++i) {
      Eigen::MatrixXd M = smat(u.segment(psd_off[i], svec_dim(psd[i])), psd[i]);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
      me = std::min(me, es.eigenvalues().minCoeff());
    }
    return me;
  }

  // Largest step alpha with u + alpha*du staying in the cone (u interior).
  double max_step(const Eigen::VectorXd& u, const Eigen::VectorXd& du) const {
    double amax = kInf;
    for (int i = 0; i < l; ++i)
      if (du[i] < 0.0) amax = std::min(amax, -u[i] / du[i]);
    for (size_t i = 0; i < soc.size(); ++i) {
      int q = soc[i], o = soc_off[i];
      double u0 = u[o], d0 = du[o];
      Eigen::VectorXd u1 = u.segment(o + 1, q - 1), d1 = du.segment(o + 1, q - 1);
      double a = d0 * d0 - d1.squaredNorm();
      double b = 2.0 * (u0 * d0 - u1.dot(d1));
      double c = u0 * u0 - u1.squaredNorm();
      // g(t) = c + b t + a t^2 > 0 inside the cone (c > 0 at an interior
      // point); the boundary is hit at the first positive root of g.
      double root = kInf;
      if (std::abs(a) < 1e-300) {
        if (b < 0.0) root = -c / b;
      } else {
        double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
          double sq = std::sqrt(disc);
          double r1 = (-b - sq) / (2.0 * a);
          double r2 = (-b + sq) / (2.0 * a);
          if (r1 > r2) std::swap(r1, r2);
          if (r1 > 0.0)
            root = r1;
          else if (r2 > 0.0)
            root = r2;
        }
      }
      amax = std::min(amax, root);
    }
    for (size_t i = 0; i < psd.size(); ++i) {
      int m = psd[i];
      Eigen::MatrixXd U = smat(u.segment(psd_off[i], svec_dim(m)), m);
      Eigen::MatrixXd D = smat(du.segment(psd_off[i], svec_dim(m)), m);
      Eigen::LLT<Eigen::MatrixXd> llt(U);
      if (llt.info() != Eigen::Success) return 0.0;
      Eigen::MatrixXd L = llt.matrixL();
      Eigen::MatrixXd T = L.triangularView<Eigen::Lower>().solve(D);
      T = L.triangularView<Eigen::Lower>().solve(T.transpose()).eval();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T, Eigen::EigenvaluesOnly);
      double lmin = es.eigenvalues().minCoeff();
      if (lmin < 0.0) amax = std::min(amax, -1.0 / lmin);
    }
    return amax;
  }
};

// Nesterov-Todd scaling state.
struct Scaling {
  const Cones* K = nullptr;
  Eigen::VectorXd wnn;         // nonneg: w_i = sqrt(s/z)
  struct SocScale {
    double beta = 1.0;
    Eigen::VectorXd wbar;      // J-normalized scaling point
  };
  std::vector<SocScale> soc;
  struct PsdScale {
    Eigen::MatrixXd R, Rinv;
  };
  std::vector<PsdScale> psd;
  Eigen::VectorXd lambda;      // scaled central point, lambda = W z = W^-T s

  bool compute(const Cones& cones, const Eigen::VectorXd& s, const Eigen::VectorXd& z) {
    K = &cones;
    lambda.resize(cones.dim);
    wnn = (s.head(cones.l).array() / z.head(cones.l).array()).sqrt();
    lambda.head(cones.l) = (s.head(cones.l).array() * z.head(cones.l).array()).sqrt();
    soc.resize(cones.soc.size());
    for (size_t i = 0; i < cones.soc.size(); ++i) {
      int q = cones.soc[i], o = cones.soc_off[i];
      Eigen::VectorXd sb = s.segment(o, q), zb = z.segment(o, q);
      double snorm2 = sb[0] * sb[0] - sb.tail(q - 1).squaredNorm();
      double znorm2 = zb[0] * zb[0] - zb.tail(q - 1).squaredNorm();
      if (snorm2 <= 0.0 || znorm2 <= 0.0) return false;
      double srt = std::sqrt(snorm2), zrt = std::sqrt(znorm2);
      Eigen::VectorXd sbar = sb / srt, zbar = zb / zrt;
      double gamma = std::sqrt((1.0 + sbar.dot(zbar)) / 2.0);
      Eigen::VectorXd wb(q);
      wb[0] = (sbar[0] + zbar[0]) / (2.0 * gamma);
      wb.tail(q - 1) = (sbar.tail(q - 1) - zbar.tail(q - 1)) / (2.0 * gamma);
      soc[i].beta = std::sqrt(srt / zrt);
      soc[i].wbar = wb;
      // lambda for the block
      double scale = std::sqrt(srt * zrt);
      Eigen::VectorXd lb(q);
      lb[0] = gamma;
      lb.tail(q - 1) = ((gamma + zbar[0]) * sbar.tail(q - 1) +
                        (gamma + sbar[0]) * zbar.tail(q - 1)) /
                       (sbar[0] + zbar[0] + 2.0 * gamma);
      lambda.segment(o, q) = scale * lb;
    }
    psd.resize(cones.psd.size());
    for (size_t i = 0; i < cones.psd.size(); ++i) {
      int m = cones.psd[i], o = cones.psd_off[i];
      Eigen::MatrixXd S = smat(s.segment(o, svec_dim(m)), m);
      Eigen::MatrixXd Z = smat(z.segment(o, svec_dim(m)), m);
      Eigen::LLT<Eigen::MatrixXd> ls(S), lz(Z);
      if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
      Eigen::MatrixXd Ls = ls.matrixL(), Lz = lz.matrixL();
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(Lz.transpose() * Ls,
                                            Eigen::ComputeFullU | Eigen::ComputeFullV);
      Eigen::VectorXd sig = svd.singularValues();
      if (sig.minCoeff() <= 0.0) return false;
      Eigen::VectorXd isqrt = sig.array().sqrt().inverse();
      psd[i].R = Ls * svd.matrixV() * isqrt.asDiagonal();
      psd[i].Rinv = isqrt.asDiagonal() * svd.matrixU().transpose() * Lz.transpose();
      lambda.segment(o, svec_dim(m)) = svec(sig.asDiagonal());
    }
    return true;
  }

  enum class Op { W, WT, Winv, WinvT };

  Eigen::VectorXd apply(Op op, const Eigen::VectorXd& u) const {
    const Cones& c = *K;
    Eigen::VectorXd r(c.dim);
    switch (op) {
      case Op::W:
      case Op::WT:
        r.head(c.l) = u.head(c.l).array() * wnn.array();
        break;
      default:
        r.head(c.l) = u.head(c.l).array() / wnn.array();
    }
    for (size_t i = 0; i < c.soc.size(); ++i) {
      int q = c.soc[i], o = c.soc_off[i];
      const auto& sc = soc[i];
      Eigen::VectorXd ub = u.segment(o, q);
      const Eigen::VectorXd& wb = sc.wbar;
      double w0 = wb[0];
      Eigen::VectorXd w1 = wb.tail(q - 1);
      bool inv = (op == Op::Winv || op == Op::WinvT);
      double sgn = inv ? -1.0 : 1.0;
      double beta = inv ? 1.0 / sc.beta : sc.beta;
      double u0 = ub[0];
      Eigen::VectorXd u1 = ub.tail(q - 1);
      double t0 = w0 * u0 + sgn * w1.dot(u1);
      Eigen::VectorXd t1 = sgn * w1 * u0 + u1 + w1 * (w1.dot(u1) / (1.0 + w0));
      r[o] = beta * t0;
      r.segment(o + 1, q - 1) = beta * t1;
    }
    for (size_t i = 0; i < c.psd.size(); ++i) {
      int m = c.psd[i], o = c.psd_off[i];
      Eigen::MatrixXd U = smat(u.segment(o, svec_dim(m)), m);
      const Eigen::MatrixXd& R = psd[i].R;
      const Eigen::MatrixXd& Ri = psd[i].Rinv;
      Eigen::MatrixXd V;
      switch (op) {
        case Op::W: V = R.transpose() * U * R; break;
        case Op::WT: V = R * U * R.transpose(); break;
        case Op::Winv: V = Ri.transpose() * U * Ri; break;
        case Op::WinvT: V = Ri * U * Ri.transpose(); break;
      }
      // symmetrize against roundoff
      V = 0.5 * (V + V.transpose()).eval();
      r.segment(o, svec_dim(m)) = svec(V);
    }
    return r;
  }

  // Jordan product u o v in the scaled algebra.
  Eigen::VectorXd circ(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    const Cones& c = *K;
    Eigen::VectorXd r(c.dim);
    r.head(c.l) = u.head(c.l).array() * v.head(c.l).array();
    for (size_t i = 0; i < c.soc.size(); ++i) {
      int q = c.soc[i], o = c.soc_off[i];
      r[o] = u.segment(o, q).dot(v.segment(o, q));
      r.segment(o + 1, q - 1) =
          u[o] * v.segment(o + 1, q - 1) + v[o] * u.segment(o + 1, q - 1);
    }
    for (size_t i = 0; i < c.psd.size(); ++i) {
      int m = c.psd[i], o = c.psd_off[i];
      Eigen::MatrixXd U = smat(u.segment(o, svec_dim(m)), m);
      Eigen::MatrixXd V = smat(v.segment(o, svec_dim(m)), m);
      Eigen::MatrixXd P = 0.5 * (U * V + V * U);
      r.segment(o, svec_dim(m)) = svec(P);
    }
    return r;
  }

  // Solve lambda o x = d.
  Eigen::VectorXd lambda_solve(const Eigen::VectorXd& d) const {
    const Cones& c = *K;
    Eigen::VectorXd x(c.dim);
    x.head(c.l) = d.head(c.l).array() / lambda.head(c.l).array();
    for (size_t i = 0; i < c.soc.size(); ++i) {
      int q = c.soc[i], o = c.soc_off[i];
      double l0 = lambda[o];
      Eigen::VectorXd l1 = lambda.segment(o + 1, q - 1);
      double d0 = d[o];
      Eigen::VectorXd d1 = d.segment(o + 1, q - 1);
      double denom = l0 - l1.squaredNorm() / l0;
      double x0 = (d0 - l1.dot(d1) / l0) / denom;
      x[o] = x0;
      x.segment(o + 1, q - 1) = (d1 - x0 * l1) / l0;
    }
    for (size_t i = 0; i < c.psd.size(); ++i) {
      int m = c.psd[i], o = c.psd_off[i];
      // lambda block is diagonal by construction
      Eigen::MatrixXd D = smat(d.segment(o, svec_dim(m)), m);
      Eigen::VectorXd sig(m);
      {
        int k = o;
        for (int cc = 0; cc < m; ++cc) {
          sig[cc] = lambda[k];
          k += m - cc;
        }
      }
      Eigen::MatrixXd X(m, m);
      for (int r2 = 0; r2 < m; ++r2)
        for (int c2 = 0; c2 < m; ++c2) X(r2, c2) = 2.0 * D(r2, c2) / (sig[r2] + sig[c2]);
      x.segment(o, svec_dim(m)) = svec(X);
    }
    return x;
  }
};

// Standard-form problem: min c'x  s.t. Ax=b, Gx+s=h, s in K.
struct StdForm {
  int n = 0, p = 0;
  Eigen::VectorXd c, b, h;
  Eigen::SparseMatrix<double> A, G;
  Cones cones;
};

// Assemble the internal standard form from the public program.
StdForm to_standard_form(const ConicProgram& p,
                         const std::vector<std::pair<int, double>>& extra_fixes) {
  StdForm f;
  f.n = p.num_variables();
  f.c = -Eigen::Map<const Eigen::VectorXd>(p.objective().data(), f.n);

  std::vector<Triplet> ta, tg;
  std::vector<double> bs, hs;
  for (const auto& [e, rhs] : p.eqs()) {
    int row = static_cast<int>(bs.size());
    for (const auto& [v, cf] : e.terms) ta.emplace_back(row, v, cf);
    bs.push_back(rhs - e.constant);
  }
  for (const auto& [v, val] : extra_fixes) {
    int row = static_cast<int>(bs.size());
    ta.emplace_back(row, v, 1.0);
    bs.push_back(val);
  }
  f.p = static_cast<int>(bs.size());

  // nonneg rows
  for (const auto& [e, rhs] : p.ineqs()) {
    int row = static_cast<int>(hs.size());
    for (const auto& [v, cf] : e.terms) tg.emplace_back(row, v, cf);
    hs.push_back(rhs - e.constant);
  }
  f.cones.l = static_cast<int>(hs.size());
  // SOC blocks: s = const + Cx  ->  G = -C, h = const
  for (const auto& soc : p.socs()) {
    f.cones.soc.push_back(static_cast<int>(soc.rows.size()));
    for (const auto& r : soc.rows) {
      int row = static_cast<int>(hs.size());
      for (const auto& [v, cf] : r.terms) tg.emplace_back(row, v, -cf);
      hs.push_back(r.constant);
    }
  }
  // PSD blocks, svec'd
  for (const auto& blk : p.psd_blocks()) {
    int m = blk.size;
    int base = static_cast<int>(hs.size());
    f.cones.psd.push_back(m);
    hs.resize(hs.size() + svec_dim(m), 0.0);
    for (const auto& [rc, e] : blk.entries) {
      double scale = (rc.first == rc.second) ? 1.0 : kSqrt2;
      int row = base + svec_index(rc.first, rc.second, m);
      for (const auto& [v, cf] : e.terms) tg.emplace_back(row, v, -scale * cf);
      hs[row] += scale * e.constant;
    }
  }
  f.cones.finalize();

  f.b = Eigen::Map<const Eigen::VectorXd>(bs.data(), bs.size());
  f.h = Eigen::Map<const Eigen::VectorXd>(hs.data(), hs.size());
  f.A.resize(f.p, f.n);
  f.A.setFromTriplets(ta.begin(), ta.end());
  f.G.resize(f.cones.dim, f.n);
  f.G.setFromTriplets(tg.begin(), tg.end());
  return f;
}

// KKT solver: factorizes [H A'; A -eps I] with H = Gs'Gs + delta I,
// Gs = W^-T G, and solves the 3x3 system with z eliminated.
class KktSolver {
 public:
  KktSolver(const StdForm& f) : f_(f) {
    // collect, per PSD block, the set of columns with entries in the block
    int npsd = static_cast<int>(f.cones.psd.size());
    psd_cols_.resize(npsd);
    const auto& G = f.G;
    for (int col = 0; col < G.outerSize(); ++col) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(G, col); it; ++it) {
        int row = static_cast<int>(it.row());
        int bi = psd_block_of(row);
        if (bi >= 0 && (psd_cols_[bi].empty() || psd_cols_[bi].back() != col))
          psd_cols_[bi].push_back(col);
      }
    }
    first_ = true;
  }

  bool factorize(const Scaling& W) {
    build_scaled_g(W);
    Eigen::SparseMatrix<double> H = Eigen::SparseMatrix<double>(Gs_.transpose()) * Gs_;
    const int n = f_.n, p = f_.p;
    std::vector<Triplet> t;
    t.reserve(H.nonZeros() + f_.A.nonZeros() * 2 + n + p);
    for (int col = 0; col < H.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(H, col); it; ++it)
        t.emplace_back(static_cast<int>(it.row()), col, it.value());
    for (int col = 0; col < f_.A.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(f_.A, col); it; ++it) {
        t.emplace_back(n + static_cast<int>(it.row()), col, it.value());
        t.emplace_back(col, n + static_cast<int>(it.row()), it.value());
      }
    // quasi-definite regularization, escalated on pivot breakdown; the
    // solve-time refinement step absorbs the perturbation
    for (double reg = kReg; reg <= 1e-5; reg *= 100.0) {
      std::vector<Triplet> tr = t;
      for (int i = 0; i < n; ++i) tr.emplace_back(i, i, reg);
      for (int i = 0; i < p; ++i) tr.emplace_back(n + i, n + i, -reg);
      Eigen::SparseMatrix<double> kkt(n + p, n + p);
      kkt.setFromTriplets(tr.begin(), tr.end());
      if (first_) {
        ldlt_.analyzePattern(kkt);
        first_ = false;
      }
      ldlt_.factorize(kkt);
      if (ldlt_.info() == Eigen::Success) return true;
    }
    return false;
  }

  // Solve: A'dy + G'dz = bx;  A dx = by;  G dx - W'W dz = bz.
  void solve(const Scaling& W, const Eigen::VectorXd& bx, const Eigen::VectorXd& by,
             const Eigen::VectorXd& bz, Eigen::VectorXd& dx, Eigen::VectorXd& dy,
             Eigen::VectorXd& dz) const {
    Eigen::VectorXd wz = W.apply(Scaling::Op::WinvT, bz);
    Eigen::VectorXd rhs(f_.n + f_.p);
    rhs.head(f_.n) = bx + Gs_.transpose() * wz;
    rhs.tail(f_.p) = by;
    Eigen::VectorXd sol = ldlt_.solve(rhs);
    // one round of iterative refinement on the regularized residual
    {
      Eigen::VectorXd r(f_.n + f_.p);
      Eigen::VectorXd hx = Gs_.transpose() * (Gs_ * sol.head(f_.n));
      r.head(f_.n) = rhs.head(f_.n) - hx - f_.A.transpose() * sol.tail(f_.p);
      r.tail(f_.p) = rhs.tail(f_.p) - f_.A * sol.head(f_.n);
      sol += ldlt_.solve(r);
    }
    dx = sol.head(f_.n);
    dy = sol.tail(f_.p);
    dz = W.apply(Scaling::Op::Winv, Gs_ * dx - wz);
  }

 private:
  int psd_block_of(int row) const {
    const Cones& c = f_.cones;
    for (size_t i = 0; i < c.psd.size(); ++i) {
      int o = c.psd_off[i], d = svec_dim(c.psd[i]);
      if (row >= o && row < o + d) return static_cast<int>(i);
    }
    return -1;
  }

  void build_scaled_g(const Scaling& W) {
    const Cones& c = f_.cones;
    std::vector<Triplet> t;
    t.reserve(f_.G.nonZeros() * 2);
    // cheap rows: nonneg and SOC handled columnwise via dense block temp
    std::vector<std::vector<std::pair<int, double>>> soc_cols(c.soc.size());
    for (int col = 0; col < f_.G.outerSize(); ++col) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(f_.G, col); it; ++it) {
        int row = static_cast<int>(it.row());
        if (row < c.l) {
          t.emplace_back(row, col, it.value() / W.wnn[row]);
        }
      }
    }
    for (size_t i = 0; i < c.soc.size(); ++i) {
      int q = c.soc[i], o = c.soc_off[i];
      // gather columns intersecting the block
      for (int col = 0; col < f_.G.outerSize(); ++col) {
        Eigen::VectorXd u = Eigen::VectorXd::Zero(q);
        bool any = false;
        for (Eigen::SparseMatrix<double>::InnerIterator it(f_.G, col); it; ++it) {
          int row = static_cast<int>(it.row());
          if (row >= o && row < o + q) {
            u[row - o] = it.value();
            any = true;
          }
        }
        if (!any) continue;
        // apply W^-1 (symmetric) to the block column
        const auto& sc = W.soc[i];
        double w0 = sc.wbar[0];
        Eigen::VectorXd w1 = sc.wbar.tail(q - 1);
        double u0 = u[0];
        Eigen::VectorXd u1 = u.tail(q - 1);
        double t0 = w0 * u0 - w1.dot(u1);
        Eigen::VectorXd t1 = -w1 * u0 + u1 + w1 * (w1.dot(u1) / (1.0 + w0));
        // emit the whole block column, zeros included: the sparsity pattern
        // must not depend on the scaling point, the KKT factorization
        // analyzes it only once
        t.emplace_back(o, col, t0 / sc.beta);
        for (int k = 0; k < q - 1; ++k) t.emplace_back(o + 1 + k, col, t1[k] / sc.beta);
      }
    }
    for (size_t i = 0; i < c.psd.size(); ++i) {
      int m = c.psd[i], o = c.psd_off[i], d = svec_dim(m);
      const Eigen::MatrixXd& Ri = W.psd[i].Rinv;
      for (int col : psd_cols_[i]) {
        Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
        for (Eigen::SparseMatrix<double>::InnerIterator it(f_.G, col); it; ++it) {
          int row = static_cast<int>(it.row());
          if (row >= o && row < o + d) u[row - o] = it.value();
        }
        Eigen::MatrixXd U = smat(u, m);
        Eigen::MatrixXd V = Ri * U * Ri.transpose();  // W^-T on the block
        V = 0.5 * (V + V.transpose()).eval();
        Eigen::VectorXd v = svec(V);
        for (int k = 0; k < d; ++k) t.emplace_back(o + k, col, v[k]);
      }
    }
    Gs_.resize(c.dim, f_.n);
    Gs_.setFromTriplets(t.begin(), t.end());
  }

  static constexpr double kReg = 1e-11;
  const StdForm& f_;
  Eigen::SparseMatrix<double> Gs_;
  std::vector<std::vector<int>> psd_cols_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  bool first_ = true;
};

struct HsdResult {
  SolveStatus status;
  Eigen::VectorXd x;
  double pobj = 0.0;  // value of c'x (minimization)
  SolveStats stats;
};

HsdResult solve_hsd(const StdForm& f, const SolverSettings& st) {
  const Cones& K = f.cones;
  const int n = f.n, p = f.p, N = K.dim;
  HsdResult out;
  out.status = SolveStatus::numerical_limit;

  if (N == 0) {
    // pure equality-constrained linear objective; not expected in practice
    out.status = SolveStatus::numerical_limit;
    return out;
  }

  Eigen::VectorXd e = K.identity();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n), y = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd s, z;
  double tau = 1.0, kappa = 1.0;

  KktSolver kkt(f);
  Scaling W;

  // initialization: unit-scaling KKT solves, then shift into the cone interior
  {
    Scaling id;
    Eigen::VectorXd ones_s = e, ones_z = e;
    // identity scaling == compute() with s=z=e
    if (!id.compute(K, ones_s, ones_z)) return out;
    if (!kkt.factorize(id)) return out;
    Eigen::VectorXd dx, dy, dz;
    kkt.solve(id, Eigen::VectorXd::Zero(n), f.b, f.h, dx, dy, dz);
    x = dx;
    s = -dz;
    double me = K.min_eig(s);
    if (me <= 0.0) s += (1.0 - me) * e;
    kkt.solve(id, -f.c, Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(N), dx, dy, dz);
    y = dy;
    z = dz;
    me = K.min_eig(z);
    if (me <= 0.0) z += (1.0 - me) * e;
  }

  const double bnorm = std::max(1.0, f.b.norm());
  const double hnorm = std::max(1.0, f.h.norm());
  const double cnorm = std::max(1.0, f.c.norm());
  const double tol = st.feas_tol;

  for (int iter = 0; iter < st.max_iterations; ++iter) {
    out.stats.iterations = iter;
    // residuals
    Eigen::VectorXd rx = f.A.transpose() * y + f.G.transpose() * z + f.c * tau;
    Eigen::VectorXd ry = f.A * x - f.b * tau;
    Eigen::VectorXd rz = f.G * x + s - f.h * tau;
    double rtau = f.c.dot(x) + f.b.dot(y) + f.h.dot(z) + kappa;

    double gap = s.dot(z);
    double mu = (gap + tau * kappa) / (K.degree + 1);

    // convergence in the de-homogenized variables
    double pres = std::max(ry.norm() / tau / bnorm, rz.norm() / tau / hnorm);
    double dres = rx.norm() / tau / cnorm;
    double pcost = f.c.dot(x) / tau;
    double relgap = (gap / (tau * tau)) / std::max(1.0, std::abs(pcost));
    out.stats.primal_residual = pres;
    out.stats.dual_residual = dres;
    out.stats.gap = relgap;
    if (pres <= tol && dres <= tol && relgap <= tol) {
      out.status = SolveStatus::optimal;
      out.x = x / tau;
      out.pobj = pcost;
      return out;
    }
    // infeasibility certificates
    double by_hz = f.b.dot(y) + f.h.dot(z);
    if (by_hz < 0.0) {
      double m = (f.A.transpose() * y + f.G.transpose() * z).norm() / (-by_hz);
      if (m <= tol) {
        out.status = SolveStatus::infeasible;
        return out;
      }
    }
    double cx = f.c.dot(x);
    if (cx < 0.0) {
      double m = std::max((f.A * x).norm(), (f.G * x + s).norm()) / (-cx);
      if (m <= tol) {
        out.status = SolveStatus::unbounded;
        return out;
      }
    }
    if (tau <= 1e-10 * std::max(1.0, kappa)) {
      out.status = (by_hz < cx) ? SolveStatus::infeasible : SolveStatus::unbounded;
      return out;
    }

    if (!W.compute(K, s, z)) return out;
    if (!kkt.factorize(W)) return out;

    Eigen::VectorXd x1, y1, z1;
    kkt.solve(W, -f.c, f.b, f.h, x1, y1, z1);
    double denom = f.c.dot(x1) + f.b.dot(y1) + f.h.dot(z1) - kappa / tau;
    if (std::abs(denom) < 1e-300) return out;

    auto direction = [&](double eta, const Eigen::VectorXd& ds_rhs, double dk_rhs,
                         Eigen::VectorXd& dx, Eigen::VectorXd& dy, Eigen::VectorXd& dz,
                         Eigen::VectorXd& ds, double& dtau, double& dkappa) {
      Eigen::VectorXd dsbar = W.lambda_solve(ds_rhs);
      Eigen::VectorXd bz = -eta * rz - W.apply(Scaling::Op::WT, dsbar);
      Eigen::VectorXd x2, y2, z2;
      kkt.solve(W, -eta * rx, -eta * ry, bz, x2, y2, z2);
      double num = -eta * rtau - (f.c.dot(x2) + f.b.dot(y2) + f.h.dot(z2)) - dk_rhs / tau;
      dtau = num / denom;
      dx = x2 + dtau * x1;
      dy = y2 + dtau * y1;
      dz = z2 + dtau * z1;
      ds = -eta * rz + f.h * dtau - f.G * dx;
      dkappa = (dk_rhs - kappa * dtau) / tau;
    };

    // affine direction
    Eigen::VectorXd ll = W.circ(W.lambda, W.lambda);
    Eigen::VectorXd dxa, dya, dza, dsa;
    double dtaua, dkappaa;
    direction(1.0, -ll, -tau * kappa, dxa, dya, dza, dsa, dtaua, dkappaa);

    double alpha_a = std::min(K.max_step(s, dsa), K.max_step(z, dza));
    if (dtaua < 0.0) alpha_a = std::min(alpha_a, -tau / dtaua);
    if (dkappaa < 0.0) alpha_a = std::min(alpha_a, -kappa / dkappaa);
    alpha_a = std::min(1.0, alpha_a);
    double sigma = std::pow(1.0 - alpha_a, 3);
    sigma = std::min(1.0, std::max(sigma, 1e-8));

    // combined direction with Mehrotra correction
    Eigen::VectorXd corr =
        W.circ(W.apply(Scaling::Op::WinvT, dsa), W.apply(Scaling::Op::W, dza));
    Eigen::VectorXd ds_rhs = -ll - corr + sigma * mu * e;
    double dk_rhs = -tau * kappa - dtaua * dkappaa + sigma * mu;
    Eigen::VectorXd dx, dy, dz, ds;
    double dtau, dkappa;
    direction(1.0 - sigma, ds_rhs, dk_rhs, dx, dy, dz, ds, dtau, dkappa);

    double alpha = std::min(K.max_step(s, ds), K.max_step(z, dz));
    if (dtau < 0.0) alpha = std::min(alpha, -tau / dtau);
    if (dkappa < 0.0) alpha = std::min(alpha, -kappa / dkappa);
    alpha = std::min(1.0, 0.99 * alpha);
    if (!(alpha > 0.0)) return out;

    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
    tau += alpha * dtau;
    kappa += alpha * dkappa;
  }
  return out;
}

}  // namespace

ConicSolution solve_conic_with_fixes(const ConicProgram& p, const SolverSettings& st,
                                     const std::vector<std::pair<int, double>>& fixes);

ConicSolution solve_conic_with_fixes(const ConicProgram& p, const SolverSettings& st,
                                     const std::vector<std::pair<int, double>>& fixes) {
  StdForm f = to_standard_form(p, fixes);
  HsdResult r = solve_hsd(f, st);
  ConicSolution sol;
  sol.status = r.status;
  sol.stats = r.stats;
  if (r.status == SolveStatus::optimal) {
    sol.x = r.x;
    sol.objective = -r.pobj;  // internal form minimizes
  }
  return sol;
}

ConicSolution solve_conic(const ConicProgram& p, const SolverSettings& st) {
  return solve_conic_with_fixes(p, st, {});
}

}  // namespace restore::conic
