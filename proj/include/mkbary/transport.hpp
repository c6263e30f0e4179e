#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mkbary/costs.hpp"
#include "mkbary/matrix.hpp"
#include "mkbary/measures.hpp"

namespace mkbary {

/// Kantorovich potentials: u over source atoms, v over target atoms.
struct Duals {
  std::vector<double> u;
  std::vector<double> v;
};

struct TransportPlan {
  DiscreteMeasure source;
  DiscreteMeasure target;
  /// Rows index source atoms, columns index target atoms.
  Matrix coupling;
  double objective = 0.0;
  std::optional<Duals> duals;
  /// Primal minus dual objective; zero when no duals are attached.
  double gap = 0.0;
};

/// Optimal solution of a transportation LP given as raw data.
struct TransportSolution {
  Matrix coupling;
  double objective = 0.0;
  Duals duals;
  double gap = 0.0;
  /// Largest u_i + v_j - c_ij over all cells.
  double dual_violation = 0.0;
  std::size_t iterations = 0;
};

/// Exact transportation simplex on spanning-tree bases. Entering cells use
/// Dantzig pricing and fall back permanently to Bland's rule after a run of
/// degenerate pivots; ties in the ratio test go to the smallest cell index.
/// `supply` and `demand` must be nonnegative with equal totals.
TransportSolution solve_transport_lp(std::span<const double> supply, std::span<const double> demand,
                                     const Matrix& cost);

/// Optimal plan between two measures; objective is J(mu, nu).
TransportPlan solve_transport(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostSpec& cost);

/// J(mu, nu).
double transport_cost(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostSpec& cost);

/// Sum of coupling(i, j) * cost(i, j).
double plan_cost(const Matrix& coupling, const Matrix& cost);

/// Oracle: minimum over all vertices of the transportation polytope,
/// enumerating spanning-tree bases and north-west-corner solutions for every
/// row/column ordering. Supports up to 4 x 4; throws TooLarge otherwise.
double brute_force_transport_lp(std::span<const double> supply, std::span<const double> demand,
                                const Matrix& cost);
double brute_force_transport(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostSpec& cost);

/// Minimum over north-west-corner vertices only (part of the oracle).
double north_west_corner_minimum(std::span<const double> supply, std::span<const double> demand,
                                 const Matrix& cost);

/// Plan in Pi(nu, mu) obtained by swapping the roles of the marginals.
TransportPlan transpose(const TransportPlan& plan);

/// Three-marginal coupling sigma on (x, y, z) atoms.
class ThreeCoupling {
 public:
  ThreeCoupling(DiscreteMeasure x, DiscreteMeasure y, DiscreteMeasure z, std::vector<double> mass);

  const DiscreteMeasure& x() const noexcept { return x_; }
  const DiscreteMeasure& y() const noexcept { return y_; }
  const DiscreteMeasure& z() const noexcept { return z_; }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return mass_[(i * y_.size() + j) * z_.size() + k];
  }

  Matrix marginal_xy() const;
  Matrix marginal_xz() const;
  Matrix marginal_yz() const;

 private:
  DiscreteMeasure x_;
  DiscreteMeasure y_;
  DiscreteMeasure z_;
  std::vector<double> mass_;
};

/// Glues gamma1 in Pi(mu, lambda) and gamma2 in Pi(nu, lambda) along lambda:
/// sigma(i, j, k) = gamma1(i, k) gamma2(j, k) / lambda(k).
/// Throws MarginalMismatch when the plans do not share their target.
ThreeCoupling glue(const TransportPlan& gamma1, const TransportPlan& gamma2);

struct InterpolationBound {
  double cost = 0.0;   ///< J(mu_t, mu_t')
  double bound = 0.0;  ///< (t' - t) J(mu_0, mu_1)
};

/// Compares J along the mixture segment with its Lipschitz bound.
InterpolationBound interpolation_cost(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1, double t,
                                      double t_prime, const CostSpec& cost);

}  // namespace mkbary
