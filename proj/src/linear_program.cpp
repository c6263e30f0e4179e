#include "mkbary/linear_program.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mkbary/error.hpp"

namespace mkbary {

std::size_t LinearProgram::add_column(double c, Column entries) {
  cost.push_back(c);
  columns.push_back(std::move(entries));
  return columns.size() - 1;
}

namespace {

constexpr double kPivotTolerance = 1e-9;
constexpr double kRatioTie = 1e-12;

class RevisedSimplex {
 public:
  RevisedSimplex(const LinearProgram& lp, const LpOptions& options)
      : lp_(lp), options_(options), m_(lp.rows), n_(lp.columns.size()) {
    if (lp.rhs.size() != m_ || lp.cost.size() != n_)
      throw Error(ErrorCode::InvalidArgument, "linear program dimensions are inconsistent");
    sign_.assign(m_, 1.0);
    b_ = Eigen::VectorXd(m_);
    for (std::size_t r = 0; r < m_; ++r) {
      if (!std::isfinite(lp.rhs[r])) throw Error(ErrorCode::InvalidArgument, "rhs must be finite");
      if (lp.rhs[r] < 0.0) sign_[r] = -1.0;
      b_[Eigen::Index(r)] = sign_[r] * lp.rhs[r];
    }
    double cmax = 0.0;
    for (double c : lp.cost) cmax = std::max(cmax, std::abs(c));
    cost_scale_ = 1.0 + cmax;
    price_tol_ = 1e-11 * cost_scale_;
    for (const auto& col : lp.columns)
      for (const auto& [row, value] : col)
        if (row >= m_ || !std::isfinite(value)) throw Error(ErrorCode::InvalidArgument, "bad matrix entry");
    max_iterations_ = 50000 + 20 * (m_ + n_);
  }

  LpSolution run() {
    // Phase 1 starts from the all-artificial identity basis.
    basis_.resize(m_);
    is_basic_.assign(n_ + m_, 0);
    for (std::size_t r = 0; r < m_; ++r) {
      basis_[r] = n_ + r;
      is_basic_[n_ + r] = 1;
    }
    refactor();

    phase_ = 1;
    optimize();
    double infeasibility = 0.0;
    for (std::size_t r = 0; r < m_; ++r)
      if (basis_[r] >= n_) infeasibility += x_b_[Eigen::Index(r)];
    if (infeasibility > 1e-9 * (1.0 + b_.cwiseAbs().maxCoeff()))
      throw Error(ErrorCode::NumericalFailure, "linear program is infeasible");
    drive_out_artificials();

    phase_ = 2;
    optimize();
    return finish();
  }

 private:
  double phase_cost(std::size_t var) const {
    if (phase_ == 1) return var >= n_ ? 1.0 : 0.0;
    return var >= n_ ? 0.0 : lp_.cost[var];
  }

  // Binv * A_var with rows already sign-normalized.
  Eigen::VectorXd ftran(std::size_t var) const {
    if (var >= n_) return binv_.col(Eigen::Index(var - n_));
    Eigen::VectorXd d = Eigen::VectorXd::Zero(Eigen::Index(m_));
    for (const auto& [row, value] : lp_.columns[var]) d += (sign_[row] * value) * binv_.col(Eigen::Index(row));
    return d;
  }

  double column_dot(std::size_t var, const Eigen::RowVectorXd& y) const {
    if (var >= n_) return y[Eigen::Index(var - n_)];
    double s = 0.0;
    for (const auto& [row, value] : lp_.columns[var]) s += y[Eigen::Index(row)] * sign_[row] * value;
    return s;
  }

  void refactor() {
    Eigen::MatrixXd basis_matrix = Eigen::MatrixXd::Zero(Eigen::Index(m_), Eigen::Index(m_));
    for (std::size_t k = 0; k < m_; ++k) {
      const std::size_t var = basis_[k];
      if (var >= n_) {
        basis_matrix(Eigen::Index(var - n_), Eigen::Index(k)) = 1.0;
      } else {
        for (const auto& [row, value] : lp_.columns[var])
          basis_matrix(Eigen::Index(row), Eigen::Index(k)) += sign_[row] * value;
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis_matrix);
    binv_ = lu.inverse();
    if (!binv_.allFinite()) throw Error(ErrorCode::NumericalFailure, "basis matrix became singular");
    x_b_ = binv_ * b_;
    for (Eigen::Index r = 0; r < x_b_.size(); ++r)
      if (x_b_[r] < 0.0) x_b_[r] = 0.0;
    since_refactor_ = 0;
  }

  Eigen::RowVectorXd prices() const {
    Eigen::RowVectorXd cb(static_cast<Eigen::Index>(m_));
    for (std::size_t k = 0; k < m_; ++k) cb[Eigen::Index(k)] = phase_cost(basis_[k]);
    return cb * binv_;
  }

  // Entering structural variable, or n_ if the basis is optimal.
  std::size_t choose_entering(const Eigen::RowVectorXd& y) const {
    std::size_t best_var = n_;
    double best = -price_tol_;
    for (std::size_t j = 0; j < n_; ++j) {
      if (is_basic_[j]) continue;
      const double reduced = phase_cost(j) - column_dot(j, y);
      if (reduced < best) {
        best_var = j;
        if (bland_) break;
        best = reduced;
      }
    }
    return best_var;
  }

  void pivot(std::size_t r, std::size_t entering, const Eigen::VectorXd& d) {
    const Eigen::Index ri = Eigen::Index(r);
    const double theta = x_b_[ri] / d[ri];
    x_b_ -= theta * d;
    x_b_[ri] = theta;
    for (Eigen::Index k = 0; k < x_b_.size(); ++k)
      if (x_b_[k] < 0.0) x_b_[k] = 0.0;

    const Eigen::RowVectorXd pivot_row = binv_.row(ri) / d[ri];
    binv_.noalias() -= d * pivot_row;
    binv_.row(ri) = pivot_row;

    is_basic_[basis_[r]] = 0;
    is_basic_[entering] = 1;
    basis_[r] = entering;
    if (++since_refactor_ >= options_.refactor_period) refactor();
  }

  void optimize() {
    std::size_t degenerate_run = 0;
    bool verified = false;
    while (true) {
      if (iterations_ >= max_iterations_)
        throw Error(ErrorCode::NumericalFailure, "simplex hit the iteration cap");
      const Eigen::RowVectorXd y = prices();
      const std::size_t q = choose_entering(y);
      if (q == n_) {
        // Confirm optimality on a fresh factorization before stopping.
        if (verified || since_refactor_ == 0) return;
        refactor();
        verified = true;
        continue;
      }
      verified = false;
      const Eigen::VectorXd d = ftran(q);
      std::size_t leave = m_;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < m_; ++k) {
        const double dk = d[Eigen::Index(k)];
        if (dk <= kPivotTolerance) continue;
        const double ratio = x_b_[Eigen::Index(k)] / dk;
        if (leave == m_ || ratio < best_ratio - kRatioTie) {
          leave = k;
          best_ratio = ratio;
        } else if (ratio <= best_ratio + kRatioTie) {
          const bool take = bland_ ? basis_[k] < basis_[leave] : dk > d[Eigen::Index(leave)];
          if (take) {
            leave = k;
            best_ratio = std::min(best_ratio, ratio);
          }
        }
      }
      if (leave == m_) throw Error(ErrorCode::NumericalFailure, "linear program is unbounded");
      if (best_ratio <= kRatioTie) {
        if (++degenerate_run > 50 + m_) bland_ = true;
      } else {
        degenerate_run = 0;
      }
      pivot(leave, q, d);
      ++iterations_;
    }
  }

  void drive_out_artificials() {
    for (std::size_t r = 0; r < m_; ++r) {
      if (basis_[r] < n_) continue;
      const Eigen::RowVectorXd row = binv_.row(Eigen::Index(r));
      std::size_t best_var = n_;
      double best = 1e-7;
      for (std::size_t j = 0; j < n_; ++j) {
        if (is_basic_[j]) continue;
        const double v = std::abs(column_dot(j, row));
        if (v > best) {
          best = v;
          best_var = j;
        }
      }
      // A zero row means the constraint is redundant; the artificial stays at 0.
      if (best_var == n_) continue;
      pivot(r, best_var, ftran(best_var));
    }
    refactor();
  }

  std::vector<double> primal() const {
    std::vector<double> x(n_, 0.0);
    for (std::size_t k = 0; k < m_; ++k)
      if (basis_[k] < n_) x[basis_[k]] = x_b_[Eigen::Index(k)];
    return x;
  }

  LpSolution finish() {
    refactor();
    LpSolution s;
    s.x = primal();
    s.iterations = iterations_;
    const Eigen::RowVectorXd y = prices();
    s.duals.resize(m_);
    for (std::size_t r = 0; r < m_; ++r) s.duals[r] = sign_[r] * y[Eigen::Index(r)];
    for (std::size_t j = 0; j < n_; ++j) s.objective += lp_.cost[j] * s.x[j];
    double dual = 0.0;
    for (std::size_t r = 0; r < m_; ++r) dual += lp_.rhs[r] * s.duals[r];
    s.gap = std::abs(s.objective - dual);
    for (std::size_t j = 0; j < n_; ++j)
      s.dual_violation = std::max(s.dual_violation, column_dot(j, y) - lp_.cost[j]);
    // Primal residual guards against a drifted factorization.
    std::vector<double> residual(lp_.rhs);
    for (std::size_t j = 0; j < n_; ++j)
      for (const auto& [row, value] : lp_.columns[j]) residual[row] -= value * s.x[j];
    for (double v : residual)
      if (std::abs(v) > 1e-8 * (1.0 + b_.cwiseAbs().maxCoeff()))
        throw Error(ErrorCode::NumericalFailure, "primal residual " + std::to_string(v) + " too large");
    if (options_.search_alternate) s.alternate = find_alternate(y, s.x);
    return s;
  }

  // Pivots along zero-reduced-cost edges looking for a second optimal vertex
  // that moves a watched variable.
  std::optional<std::vector<double>> find_alternate(const Eigen::RowVectorXd& y, const std::vector<double>& x) const {
    std::vector<char> watched(n_, 0);
    for (std::size_t w : options_.watched)
      if (w < n_) watched[w] = 1;
    for (std::size_t q = 0; q < n_; ++q) {
      if (is_basic_[q]) continue;
      if (std::abs(lp_.cost[q] - column_dot(q, y)) > 1e-9 * cost_scale_) continue;
      const Eigen::VectorXd d = ftran(q);
      double theta = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < m_; ++k)
        if (d[Eigen::Index(k)] > kPivotTolerance) theta = std::min(theta, x_b_[Eigen::Index(k)] / d[Eigen::Index(k)]);
      if (!std::isfinite(theta) || theta <= 1e-9) continue;
      std::vector<double> alt = x;
      alt[q] = theta;
      bool moved = watched[q] != 0;
      for (std::size_t k = 0; k < m_; ++k) {
        if (basis_[k] >= n_) continue;
        const double delta = theta * d[Eigen::Index(k)];
        alt[basis_[k]] = std::max(0.0, alt[basis_[k]] - delta);
        if (watched[basis_[k]] && std::abs(delta) > 1e-9) moved = true;
      }
      if (moved) return alt;
    }
    return std::nullopt;
  }

  const LinearProgram& lp_;
  const LpOptions& options_;
  std::size_t m_;
  std::size_t n_;
  std::vector<double> sign_;
  Eigen::VectorXd b_;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd x_b_;
  std::vector<std::size_t> basis_;
  std::vector<char> is_basic_;
  int phase_ = 1;
  bool bland_ = false;
  double cost_scale_ = 1.0;
  double price_tol_ = 0.0;
  std::size_t iterations_ = 0;
  std::size_t since_refactor_ = 0;
  std::size_t max_iterations_ = 0;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& options) {
  if (lp.rows == 0) {
    // No constraints: every cost must be nonnegative and x = 0 is optimal.
    for (double c : lp.cost)
      if (c < 0.0) throw Error(ErrorCode::NumericalFailure, "linear program is unbounded");
    LpSolution s;
    s.x.assign(lp.columns.size(), 0.0);
    return s;
  }
  return RevisedSimplex(lp, options).run();
}

}  // namespace mkbary
