#ifndef RESTORE_CONIC_HPP
#define RESTORE_CONIC_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace restore::conic {

using Triplet = Eigen::Triplet<double>;

// Sparse linear expression  sum coef*x[var] + constant.
struct LinExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  LinExpr() = default;
  LinExpr(int var, double coef) { terms.emplace_back(var, coef); }
  static LinExpr constant_of(double c) {
    LinExpr e;
    e.constant = c;
    return e;
  }
  LinExpr& add(int var, double coef) {
    if (coef != 0.0) terms.emplace_back(var, coef);
    return *this;
  }
  LinExpr& operator+=(const LinExpr& o);
  LinExpr& operator-=(const LinExpr& o);
  LinExpr& operator*=(double k);
  friend LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
  friend LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
  friend LinExpr operator*(double k, LinExpr a) { return a *= k; }
};

// A PSD block M(x) = F0 + sum_k x_k Fk  over real symmetric matrices.
// Entries are accumulated per (row, col) with row >= col.
struct PsdBlock {
  int size = 0;
  // entries[(r,c)] = linear expression for M(r,c), r >= c
  std::map<std::pair<int, int>, LinExpr> entries;

  void add(int r, int c, const LinExpr& e);
};

struct SocConstraint {
  // (t, u1..uk) in second-order cone: t >= ||u||.
  std::vector<LinExpr> rows;  // rows[0] = t
};

enum class SolveStatus { optimal, infeasible, unbounded, numerical_limit };

std::string to_string(SolveStatus s);

struct SolverSettings {
  double feas_tol = 1e-8;
  int max_iterations = 100;
  double int_tol = 1e-6;     // branch-and-bound integrality tolerance
  bool deterministic = true; // fixed node order in branch-and-bound
  std::int64_t node_limit = 200000;
};

struct SolveStats {
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  std::int64_t bb_nodes = 0;
};

struct ConicSolution {
  SolveStatus status = SolveStatus::numerical_limit;
  Eigen::VectorXd x;      // present iff status == optimal
  double objective = 0.0; // maximization objective
  SolveStats stats;

  bool optimal() const { return status == SolveStatus::optimal; }
};

// Solver-agnostic conic program.  Objective is maximized.
class ConicProgram {
 public:
  int add_variable(const std::string& name = {});
  int add_variables(int count);
  int num_variables() const { return n_; }

  void set_objective_coeff(int var, double coef);
  void add_objective(const LinExpr& e);

  void add_eq(const LinExpr& lhs, double rhs);          // lhs == rhs
  void add_le(const LinExpr& lhs, double rhs);          // lhs <= rhs
  void add_ge(const LinExpr& lhs, double rhs);          // lhs >= rhs
  void add_box(int var, double lo, double hi);
  void add_soc(SocConstraint c);
  int add_psd_block(PsdBlock b);

  void mark_binary(int var);
  const std::vector<int>& binaries() const { return binaries_; }
  bool continuous() const { return binaries_.empty(); }

  const std::string& var_name(int v) const { return names_[v]; }
  void set_var_name(int v, const std::string& name) { names_[v] = name; }

  // Reassemble a solved PSD block as a dense symmetric matrix.
  Eigen::MatrixXd psd_block_value(int block, const Eigen::VectorXd& x) const;
  int num_psd_blocks() const { return static_cast<int>(psd_.size()); }

  // Documented text dump for external cross-checks (see docs/conic-format.md).
  void dump(std::ostream& os) const;

  const std::vector<double>& objective() const { return obj_; }
  const std::vector<std::pair<LinExpr, double>>& eqs() const { return eqs_; }
  const std::vector<std::pair<LinExpr, double>>& ineqs() const { return ineqs_; }
  const std::vector<SocConstraint>& socs() const { return socs_; }
  const std::vector<PsdBlock>& psd_blocks() const { return psd_; }

 private:
  int n_ = 0;
  std::vector<double> obj_;  // maximize obj'x
  std::vector<std::string> names_;
  std::vector<std::pair<LinExpr, double>> eqs_;
  std::vector<std::pair<LinExpr, double>> ineqs_;  // lhs <= rhs
  std::vector<SocConstraint> socs_;
  std::vector<PsdBlock> psd_;
  std::vector<int> binaries_;
};

// Interior-point solve of a continuous conic program.
ConicSolution solve_conic(const ConicProgram& p, const SolverSettings& s = {});

// Best-first branch-and-bound on the binary variables.
ConicSolution solve_mip(const ConicProgram& p, const SolverSettings& s = {});

// Real embedding of a complex Hermitian matrix:
// [[Re, -Im], [Im, Re]];  M is PSD iff the embedding is PSD.
Eigen::MatrixXd herm_embed(const Eigen::MatrixXcd& m);

// Helper mirroring herm_embed for program assembly: given per-entry linear
// expressions of a Hermitian matrix (re/im parts), emit the embedded PSD
// block.  re(r,c), im(r,c) give the expressions for entry (r,c), r >= c;
// im(r,r) must be empty (zero).
PsdBlock herm_embed_block(
    int m, const std::function<LinExpr(int, int)>& re,
    const std::function<LinExpr(int, int)>& im);

}  // namespace restore::conic

#endif
