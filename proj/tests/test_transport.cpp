#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "mkbary/error.hpp"
#include "mkbary/random.hpp"
#include "mkbary/transport.hpp"

namespace mkbary {
namespace {

const GroundSpace kLine = GroundSpace::euclidean(1);

DiscreteMeasure line_measure(std::vector<double> xs, std::vector<double> ws) {
  std::vector<Point> atoms;
  for (double x : xs) atoms.push_back({x});
  return DiscreteMeasure::canonicalize(std::move(atoms), std::move(ws), kLine);
}

DiscreteMeasure dirac(double x) { return line_measure({x}, {1.0}); }

DiscreteMeasure random_measure(Rng& rng, std::size_t max_atoms, std::size_t dim, double lo, double hi) {
  const std::size_t k = rng.uniform_int(1, max_atoms);
  std::vector<Point> atoms;
  std::vector<double> w;
  double s = 0;
  for (std::size_t i = 0; i < k; ++i) {
    Point p(dim);
    for (double& v : p) v = rng.uniform(lo, hi);
    atoms.push_back(std::move(p));
    w.push_back(rng.exponential());
    s += w.back();
  }
  for (double& x : w) x /= s;
  return DiscreteMeasure::canonicalize(std::move(atoms), std::move(w), GroundSpace::euclidean(dim));
}

// Test-side oracle: on the line with a convex cost the monotone (quantile)
// coupling is optimal, and it is the north-west corner on sorted atoms.
double monotone_coupling_cost(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                              const std::function<double(double)>& g) {
  std::size_t i = 0, j = 0;
  double a = mu.weight(0), b = nu.weight(0), total = 0;
  while (i < mu.size() && j < nu.size()) {
    const double f = std::min(a, b);
    total += f * g(mu.atom(i)[0] - nu.atom(j)[0]);
    a -= f;
    b -= f;
    if (a <= 1e-15 && ++i < mu.size()) a = mu.weight(i);
    if (b <= 1e-15 && ++j < nu.size()) b = nu.weight(j);
  }
  return total;
}

// Test-side oracle for 2 x 2: the plan polytope is the segment
// gamma(0,0) = s in [max(0, a0 - b1), min(a0, b0)], cost linear in s.
double two_by_two(double a0, double b0, const Matrix& c) {
  const auto cost = [&](double s) {
    return s * c(0, 0) + (a0 - s) * c(0, 1) + (b0 - s) * c(1, 0) + (1 - a0 - b0 + s) * c(1, 1);
  };
  return std::min(cost(std::max(0.0, a0 + b0 - 1)), cost(std::min(a0, b0)));
}

void expect_plan_invariants(const TransportPlan& plan, const CostSpec& cost) {
  const Matrix c = cost_matrix(cost, plan.source, plan.target);
  const auto rows = plan.coupling.row_sums(), cols = plan.coupling.col_sums();
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_NEAR(rows[i], plan.source.weight(i), 1e-9);
  for (std::size_t j = 0; j < cols.size(); ++j) EXPECT_NEAR(cols[j], plan.target.weight(j), 1e-9);
  std::size_t positive = 0;
  for (double v : plan.coupling.data()) {
    EXPECT_GE(v, 0.0);
    positive += v > 0.0;
  }
  EXPECT_LE(positive, plan.source.size() + plan.target.size() - 1);
  EXPECT_NEAR(plan.objective, plan_cost(plan.coupling, c), 1e-9);
  ASSERT_TRUE(plan.duals);
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < c.cols(); ++j) EXPECT_LE(plan.duals->u[i] + plan.duals->v[j], c(i, j) + 1e-9);
  EXPECT_LE(plan.gap, 1e-9 * (1 + plan.objective));
}

TEST(SolveTransport, Examples) {
  const auto c1 = CostSpec::norm_power(1), c2 = CostSpec::norm_power(2);
  const auto mu = line_measure({0, 1, 3}, {0.2, 0.5, 0.3});
  const auto same = solve_transport(mu, mu, c2);
  EXPECT_EQ(same.objective, 0.0);
  for (std::size_t i = 0; i < mu.size(); ++i) EXPECT_DOUBLE_EQ(same.coupling(i, i), mu.weight(i));

  EXPECT_DOUBLE_EQ(transport_cost(line_measure({0, 1}, {0.5, 0.5}), dirac(0.5), c2), 0.25);

  const auto plan = solve_transport(line_measure({0, 1}, {0.5, 0.5}), line_measure({1, 2}, {0.5, 0.5}), c1);
  EXPECT_NEAR(plan.objective, 1.0, 1e-12);
  expect_plan_invariants(plan, c1);
}

TEST(SolveTransport, MarginalMismatch) {
  EXPECT_THROW(solve_transport_lp(std::vector<double>{0.5, 0.5}, std::vector<double>{0.7, 0.7},
                                  Matrix(2, 2, 1.0)),
               Error);
}

TEST(BruteForce, Examples) {
  const auto c1 = CostSpec::norm_power(1);
  EXPECT_NEAR(brute_force_transport(line_measure({0, 1}, {0.5, 0.5}), line_measure({1, 2}, {0.5, 0.5}), c1), 1.0,
              1e-12);
  EXPECT_DOUBLE_EQ(brute_force_transport(dirac(0), dirac(1), c1), 1.0);
  EXPECT_DOUBLE_EQ(brute_force_transport(dirac(0), dirac(0), c1), 0.0);
  EXPECT_THROW(brute_force_transport(line_measure({0, 1, 2, 3, 4}, {0.2, 0.2, 0.2, 0.2, 0.2}), dirac(0), c1), Error);
}

TEST(BruteForce, MatchesTwoByTwoFormula) {
  Rng rng(21);
  for (int t = 0; t < 300; ++t) {
    const double a0 = rng.uniform(0.05, 0.95), b0 = rng.uniform(0.05, 0.95);
    Matrix c(2, 2);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) c(i, j) = rng.uniform(0, 5);
    const std::vector<double> a{a0, 1 - a0}, b{b0, 1 - b0};
    const double expected = two_by_two(a0, b0, c);
    EXPECT_NEAR(brute_force_transport_lp(a, b, c), expected, 1e-12);
    EXPECT_NEAR(solve_transport_lp(a, b, c).objective, expected, 1e-12);
  }
}

TEST(SolveTransport, OracleEquivalence) {
  Rng rng(2024);
  const CostSpec costs[] = {CostSpec::norm_power(1), CostSpec::norm_power(2), CostSpec::metric_power(0.5)};
  for (int t = 0; t < 300; ++t) {
    const std::size_t dim = 1 + t % 2;
    const auto mu = random_measure(rng, 4, dim, -2, 2), nu = random_measure(rng, 4, dim, -2, 2);
    for (const auto& cost : costs) {
      const auto plan = solve_transport(mu, nu, cost);
      const double oracle = brute_force_transport(mu, nu, cost);
      ASSERT_NEAR(plan.objective, oracle, 1e-9 * (1 + oracle));
      expect_plan_invariants(plan, cost);
    }
  }
}

TEST(SolveTransport, MatchesMonotoneCouplingOnLine) {
  Rng rng(99);
  for (int t = 0; t < 200; ++t) {
    const auto mu = random_measure(rng, 12, 1, -5, 5), nu = random_measure(rng, 12, 1, -5, 5);
    EXPECT_NEAR(transport_cost(mu, nu, CostSpec::norm_power(2)),
                monotone_coupling_cost(mu, nu, [](double u) { return u * u; }), 1e-9);
    EXPECT_NEAR(transport_cost(mu, nu, CostSpec::norm_power(1)),
                monotone_coupling_cost(mu, nu, [](double u) { return std::abs(u); }), 1e-9);
  }
}

TEST(SolveTransport, DegenerateIntegerMarginals) {
  // Equal-weight atoms on a lattice make every NW-corner basis degenerate.
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    std::vector<Point> xs, ys;
    for (int i = 0; i < 10; ++i) {
      xs.push_back({double(rng.uniform_int(0, 30))});
      ys.push_back({double(rng.uniform_int(0, 30))});
    }
    const std::vector<double> w(10, 0.1);
    const auto mu = DiscreteMeasure::canonicalize(xs, w, kLine), nu = DiscreteMeasure::canonicalize(ys, w, kLine);
    const auto plan = solve_transport(mu, nu, CostSpec::norm_power(1));
    expect_plan_invariants(plan, CostSpec::norm_power(1));
    EXPECT_NEAR(plan.objective, monotone_coupling_cost(mu, nu, [](double u) { return std::abs(u); }), 1e-9);
  }
}

TEST(SolveTransport, LargerInstanceCertificate) {
  Rng rng(8);
  const auto mu = random_measure(rng, 60, 2, 0, 1), nu = random_measure(rng, 60, 2, 0, 1);
  const auto plan = solve_transport(mu, nu, CostSpec::norm_power(2));
  expect_plan_invariants(plan, CostSpec::norm_power(2));
}

TEST(SolveTransport, FiniteSpace) {
  const auto space = GroundSpace::finite({{0, 1, 2}, {1, 0, 1}, {2, 1, 0}});
  const auto mu = DiscreteMeasure::canonicalize({{0}, {2}}, {0.5, 0.5}, space);
  const auto nu = DiscreteMeasure::canonicalize({{1}}, {1.0}, space);
  EXPECT_DOUBLE_EQ(transport_cost(mu, nu, CostSpec::metric_power(2)), 1.0);
  const auto fm = CostSpec::finite_matrix({{0, 3, 1}, {3, 0, 1}, {1, 1, 0}});
  EXPECT_DOUBLE_EQ(transport_cost(mu, nu, fm), 2.0);
}

TEST(TransportProperties, IdentitySymmetryConvexity) {
  Rng rng(77);
  const auto c2 = CostSpec::norm_power(2);
  for (int t = 0; t < 100; ++t) {
    const auto mu0 = random_measure(rng, 5, 2, 0, 1), mu1 = random_measure(rng, 5, 2, 0, 1);
    const auto nu0 = random_measure(rng, 5, 2, 0, 1), nu1 = random_measure(rng, 5, 2, 0, 1);
    EXPECT_EQ(transport_cost(mu0, mu0, c2), 0.0);
    const double j01 = transport_cost(mu0, mu1, c2);
    if (!approx_equal(mu0, mu1)) EXPECT_GT(j01, 0.0);
    EXPECT_NEAR(j01, transport_cost(mu1, mu0, c2), 1e-9 * (1 + j01));
    const double a = transport_cost(mu0, nu0, c2), b = transport_cost(mu1, nu1, c2);
    for (double s : {0.0, 0.25, 0.5, 0.75, 1.0})
      EXPECT_LE(transport_cost(mixture(mu0, mu1, s), mixture(nu0, nu1, s), c2), (1 - s) * a + s * b + 1e-9);
  }
}

TEST(InterpolationCost, Examples) {
  const auto c2 = CostSpec::norm_power(2);
  const auto end = interpolation_cost(dirac(0), dirac(1), 0, 1, c2);
  EXPECT_DOUBLE_EQ(end.cost, 1.0);
  EXPECT_DOUBLE_EQ(end.bound, 1.0);
  const auto half = interpolation_cost(dirac(0), dirac(1), 0, 0.5, c2);
  EXPECT_DOUBLE_EQ(half.cost, 0.5);
  EXPECT_DOUBLE_EQ(half.bound, 0.5);
  const auto same = interpolation_cost(dirac(0), dirac(1), 0.3, 0.3, c2);
  EXPECT_EQ(same.cost, 0.0);
  EXPECT_EQ(same.bound, 0.0);
}

TEST(Glue, Examples) {
  const auto c1 = CostSpec::norm_power(1);
  const auto mu = line_measure({0, 1}, {0.3, 0.7}), nu = line_measure({2, 4}, {0.6, 0.4});
  const auto lambda = dirac(0);
  const auto sigma = glue(solve_transport(mu, lambda, c1), solve_transport(nu, lambda, c1));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(sigma(i, j, 0), mu.weight(i) * nu.weight(j), 1e-15);

  const auto half = line_measure({0, 1}, {0.5, 0.5});
  const auto diag = solve_transport(half, half, c1);
  const auto s2 = glue(diag, diag);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t k = 0; k < 2; ++k) EXPECT_DOUBLE_EQ(s2(i, j, k), i == j && j == k ? 0.5 : 0.0);
}

TEST(Glue, MarginalMismatch) {
  const auto c1 = CostSpec::norm_power(1);
  EXPECT_THROW(glue(solve_transport(dirac(0), dirac(1), c1), solve_transport(dirac(0), dirac(2), c1)), Error);
}

TEST(Glue, MarginalsAndWeakTriangle) {
  Rng rng(31);
  const auto c2 = CostSpec::norm_power(2);
  for (int t = 0; t < 100; ++t) {
    const auto mu = random_measure(rng, 4, 2, 0, 1), nu = random_measure(rng, 4, 2, 0, 1),
               lambda = random_measure(rng, 4, 2, 0, 1);
    const auto g1 = solve_transport(mu, lambda, c2), g2 = solve_transport(nu, lambda, c2);
    const auto sigma = glue(g1, g2);
    const Matrix xz = sigma.marginal_xz(), yz = sigma.marginal_yz(), xy = sigma.marginal_xy();
    for (std::size_t i = 0; i < mu.size(); ++i)
      for (std::size_t k = 0; k < lambda.size(); ++k) EXPECT_NEAR(xz(i, k), g1.coupling(i, k), 1e-9);
    for (std::size_t j = 0; j < nu.size(); ++j)
      for (std::size_t k = 0; k < lambda.size(); ++k) EXPECT_NEAR(yz(j, k), g2.coupling(j, k), 1e-9);
    const double upper = plan_cost(xy, cost_matrix(c2, mu, nu));
    const double j = transport_cost(mu, nu, c2);
    EXPECT_GE(upper, j - 1e-9);
    EXPECT_LE(j, 2 * (g1.objective + g2.objective) + 1e-9);
  }
}

TEST(Transpose, SwapsRoles) {
  const auto c1 = CostSpec::norm_power(1);
  const auto plan = solve_transport(line_measure({0, 1}, {0.5, 0.5}), line_measure({1, 2}, {0.25, 0.75}), c1);
  const auto t = transpose(plan);
  EXPECT_TRUE(approx_equal(t.source, plan.target));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(t.coupling(j, i), plan.coupling(i, j));
}

}  // namespace
}  // namespace mkbary
