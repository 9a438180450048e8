#include "restore/conic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace restore::conic {

LinExpr& LinExpr::operator+=(const LinExpr& o) {
  terms.insert(terms.end(), o.terms.begin(), o.terms.end());
  constant += o.constant;
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
  for (const auto& [v, c] : o.terms) terms.emplace_back(v, -c);
  constant -= o.constant;
  return *this;
}

LinExpr& LinExpr::operator*=(double k) {
  for (auto& [v, c] : terms) c *= k;
  constant *= k;
  return *this;
}

void PsdBlock::add(int r, int c, const LinExpr& e) {
  if (r < c) std::swap(r, c);
  entries[{r, c}] += e;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::numerical_limit: return "numerical_limit";
  }
  return "?";
}

int ConicProgram::add_variable(const std::string& name) {
  obj_.push_back(0.0);
  names_.push_back(name);
  return n_++;
}

int ConicProgram::add_variables(int count) {
  int first = n_;
  for (int i = 0; i < count; ++i) add_variable();
  return first;
}

void ConicProgram::set_objective_coeff(int var, double coef) { obj_.at(var) = coef; }

void ConicProgram::add_objective(const LinExpr& e) {
  for (const auto& [v, c] : e.terms) obj_.at(v) += c;
}

void ConicProgram::add_eq(const LinExpr& lhs, double rhs) { eqs_.emplace_back(lhs, rhs); }

void ConicProgram::add_le(const LinExpr& lhs, double rhs) { ineqs_.emplace_back(lhs, rhs); }

void ConicProgram::add_ge(const LinExpr& lhs, double rhs) {
  LinExpr neg = lhs;
  neg *= -1.0;
  ineqs_.emplace_back(neg, -rhs);
}

void ConicProgram::add_box(int var, double lo, double hi) {
  add_ge(LinExpr(var, 1.0), lo);
  add_le(LinExpr(var, 1.0), hi);
}

void ConicProgram::add_soc(SocConstraint c) {
  if (c.rows.empty()) throw std::invalid_argument("empty SOC constraint");
  socs_.push_back(std::move(c));
}

int ConicProgram::add_psd_block(PsdBlock b) {
  if (b.size <= 0) throw std::invalid_argument("PSD block must have positive size");
  for (const auto& [rc, e] : b.entries) {
    if (rc.first >= b.size || rc.second < 0) throw std::out_of_range("PSD entry index");
  }
  psd_.push_back(std::move(b));
  return static_cast<int>(psd_.size()) - 1;
}

void ConicProgram::mark_binary(int var) {
  if (var < 0 || var >= n_) throw std::out_of_range("binary var index");
  binaries_.push_back(var);
}

Eigen::MatrixXd ConicProgram::psd_block_value(int block, const Eigen::VectorXd& x) const {
  const PsdBlock& b = psd_.at(block);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(b.size, b.size);
  for (const auto& [rc, e] : b.entries) {
    double v = e.constant;
    for (const auto& [var, c] : e.terms) v += c * x[var];
    m(rc.first, rc.second) = v;
    m(rc.second, rc.first) = v;
  }
  return m;
}

Eigen::MatrixXd herm_embed(const Eigen::MatrixXcd& m) {
  const int k = static_cast<int>(m.rows());
  Eigen::MatrixXd e(2 * k, 2 * k);
  e.topLeftCorner(k, k) = m.real();
  e.bottomRightCorner(k, k) = m.real();
  e.topRightCorner(k, k) = -m.imag();
  e.bottomLeftCorner(k, k) = m.imag();
  return e;
}

PsdBlock herm_embed_block(int m, const std::function<LinExpr(int, int)>& re,
                          const std::function<LinExpr(int, int)>& im) {
  PsdBlock b;
  b.size = 2 * m;
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c <= r; ++c) {
      LinExpr er = re(r, c);
      b.add(r, c, er);
      b.add(m + r, m + c, er);
      if (r != c) {
        // bottom-left block carries Im(M); Im is skew-symmetric.
        LinExpr ei = im(r, c);
        b.add(m + r, c, ei);
        LinExpr nei = ei;
        nei *= -1.0;
        b.add(m + c, r, nei);
      }
    }
  }
  return b;
}

void ConicProgram::dump(std::ostream& os) const {
  os << "conicprogram 1\n";
  os << "vars " << n_ << "\n";
  os << "maximize";
  for (int i = 0; i < n_; ++i)
    if (obj_[i] != 0.0) os << " " << i << ":" << obj_[i];
  os << "\n";
  auto put = [&os](const LinExpr& e) {
    for (const auto& [v, c] : e.terms) os << " " << v << ":" << c;
    if (e.constant != 0.0) os << " const:" << e.constant;
  };
  for (const auto& [e, rhs] : eqs_) {
    os << "eq";
    put(e);
    os << " = " << rhs << "\n";
  }
  for (const auto& [e, rhs] : ineqs_) {
    os << "le";
    put(e);
    os << " <= " << rhs << "\n";
  }
  for (const auto& soc : socs_) {
    os << "soc " << soc.rows.size() << "\n";
    for (const auto& r : soc.rows) {
      os << "  row";
      put(r);
      os << "\n";
    }
  }
  for (const auto& b : psd_) {
    os << "psd " << b.size << "\n";
    for (const auto& [rc, e] : b.entries) {
      os << "  entry " << rc.first << " " << rc.second;
      put(e);
      os << "\n";
    }
  }
  for (int v : binaries_) os << "binary " << v << "\n";
}

}  // namespace restore::conic
