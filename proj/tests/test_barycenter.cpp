#include <gtest/gtest.h>

#include <cmath>

#include "mkbary/barycenter.hpp"
#include "mkbary/error.hpp"
#include "mkbary/random.hpp"
#include "mkbary/transport.hpp"

namespace mkbary {
namespace {

using Constraint = BarycenterProblem::Constraint;

const GroundSpace kLine = GroundSpace::euclidean(1);

DiscreteMeasure line_measure(std::vector<double> xs, std::vector<double> ws) {
  std::vector<Point> atoms;
  for (double x : xs) atoms.push_back({x});
  return DiscreteMeasure::canonicalize(std::move(atoms), std::move(ws), kLine);
}

DiscreteMeasure dirac(double x) { return line_measure({x}, {1.0}); }

std::vector<Point> pts(std::vector<double> xs) {
  std::vector<Point> out;
  for (double x : xs) out.push_back({x});
  return out;
}

DiscreteMeasure random_measure(Rng& rng, std::size_t max_atoms, std::size_t dim, double lo, double hi,
                               bool integer = false) {
  const std::size_t k = rng.uniform_int(1, max_atoms);
  std::vector<Point> atoms;
  std::vector<double> w;
  double s = 0;
  for (std::size_t i = 0; i < k; ++i) {
    Point p(dim);
    for (double& v : p) v = integer ? std::floor(rng.uniform(lo, hi)) : rng.uniform(lo, hi);
    atoms.push_back(std::move(p));
    w.push_back(rng.exponential());
    s += w.back();
  }
  for (double& x : w) x /= s;
  return DiscreteMeasure::canonicalize(std::move(atoms), std::move(w), GroundSpace::euclidean(dim));
}

std::vector<WeightedInput> two_diracs() { return {{dirac(0), 0.5}, {dirac(1), 0.5}}; }

TEST(Objective, Examples) {
  const auto c2 = CostSpec::norm_power(2);
  EXPECT_EQ(objective(dirac(0), BarycenterProblem({{dirac(0), 1}}, c2, Constraint::Quantile1d)), 0.0);
  const BarycenterProblem p(two_diracs(), c2, Constraint::Quantile1d);
  EXPECT_DOUBLE_EQ(objective(dirac(0.5), p), 0.25);
  EXPECT_DOUBLE_EQ(objective(dirac(0), p), 0.5);
}

TEST(Problem, Validation) {
  const auto c2 = CostSpec::norm_power(2);
  EXPECT_THROW(BarycenterProblem({}, c2, Constraint::Quantile1d), Error);
  EXPECT_THROW(BarycenterProblem({{dirac(0), -1}}, c2, Constraint::Quantile1d), Error);
  EXPECT_THROW(BarycenterProblem({{dirac(0), 1}}, c2, Constraint::SimplexOver, {}), Error);
  EXPECT_THROW(BarycenterProblem({{dirac(0), 1}}, c2, Constraint::SimplexOver, pts({0, 0})), Error);
  const BarycenterProblem p({{dirac(0), 3}, {dirac(1), 1}}, c2, Constraint::Quantile1d);
  EXPECT_DOUBLE_EQ(p.inputs()[0].lambda, 0.75);
}

TEST(FixedSupport, TwoDiracsOnThreePointGrid) {
  const BarycenterProblem p(two_diracs(), CostSpec::norm_power(2), Constraint::SimplexOver, pts({0, 0.5, 1}));
  const auto r = barycenter_fixed_support(p);
  ASSERT_EQ(r.measure.size(), 1u);
  EXPECT_NEAR(r.measure.atom(0)[0], 0.5, 1e-12);
  EXPECT_NEAR(r.objective, 0.25, 1e-12);
  EXPECT_EQ(r.certificate.kind, Certificate::Kind::LpOptimal);
  EXPECT_LE(r.certificate.value, 1e-9 * (1 + r.objective));
}

TEST(FixedSupport, SingleInputIsItsOwnBarycenter) {
  const auto mu = line_measure({0, 1, 3}, {0.2, 0.3, 0.5});
  const BarycenterProblem p({{mu, 1}}, CostSpec::norm_power(2), Constraint::SimplexOver, pts({-1, 0, 1, 2, 3}));
  const auto r = barycenter_fixed_support(p);
  EXPECT_NEAR(r.objective, 0.0, 1e-12);
  EXPECT_TRUE(approx_equal(r.measure, mu, 1e-9));
}

TEST(FixedSupport, FlatObjectiveFlagsMultipleOptima) {
  const BarycenterProblem p(two_diracs(), CostSpec::norm_power(1), Constraint::SimplexOver, pts({0, 1}));
  const auto r = barycenter_fixed_support(p);
  EXPECT_NEAR(r.objective, 0.5, 1e-12);
  EXPECT_TRUE(r.multiple_optima);
  // Every mixture of two optima is optimal too.
  const auto other = dirac(r.measure.atom(0)[0] == 0.0 ? 1.0 : 0.0);
  for (double t : {0.25, 0.5, 0.75}) EXPECT_NEAR(objective(mixture(r.measure, other, t), p), 0.5, 1e-9);
}

// Test-side oracle: scan weight vectors on a fine simplex grid over three
// candidates; the LP optimum must not exceed the best grid value and must be
// close to it.
TEST(FixedSupport, MatchesSimplexGridScan) {
  Rng rng(17);
  const auto c2 = CostSpec::norm_power(2);
  for (int t = 0; t < 10; ++t) {
    std::vector<WeightedInput> inputs;
    for (int i = 0; i < 3; ++i) inputs.push_back({random_measure(rng, 3, 1, 0, 2), rng.uniform(0.2, 1)});
    const auto cands = pts({0.2, 1.0, 1.7});
    const BarycenterProblem p(inputs, c2, Constraint::SimplexOver, cands);
    const auto r = barycenter_fixed_support(p);
    double best = INFINITY;
    const int steps = 40;
    for (int a = 0; a <= steps; ++a)
      for (int b = 0; a + b <= steps; ++b) {
        std::vector<double> w{double(a) / steps, double(b) / steps, double(steps - a - b) / steps};
        best = std::min(best, objective(DiscreteMeasure::canonicalize(cands, w, kLine), p));
      }
    EXPECT_LE(r.objective, best + 1e-12);
    EXPECT_GE(r.objective, best - 0.05);
    EXPECT_NEAR(objective(r.measure, p), r.objective, 1e-7);
  }
}

TEST(FixedSupport, ConvexityOfBarycenterSet) {
  const BarycenterProblem p(two_diracs(), CostSpec::norm_power(1), Constraint::SimplexOver, pts({0, 0.5, 1}));
  const auto r = barycenter_fixed_support(p);
  for (const auto& nu : {dirac(0), dirac(0.5), dirac(1)}) {
    ASSERT_NEAR(objective(nu, p), r.objective, 1e-12);
    for (double t : {0.25, 0.5, 0.75}) EXPECT_NEAR(objective(mixture(r.measure, nu, t), p), r.objective, 1e-9);
  }
}

TEST(Quantile1d, Examples) {
  const auto c2 = CostSpec::norm_power(2), c1 = CostSpec::norm_power(1);
  const auto r2 = barycenter_quantile_1d(BarycenterProblem(two_diracs(), c2, Constraint::Quantile1d));
  EXPECT_TRUE(approx_equal(r2.measure, dirac(0.5)));
  EXPECT_DOUBLE_EQ(r2.objective, 0.25);

  const auto r1 = barycenter_quantile_1d(BarycenterProblem(two_diracs(), c1, Constraint::Quantile1d));
  EXPECT_TRUE(approx_equal(r1.measure, dirac(0.5)));

  const auto r3 = barycenter_quantile_1d(BarycenterProblem(
      {{line_measure({0, 2}, {0.5, 0.5}), 0.5}, {line_measure({1, 3}, {0.5, 0.5}), 0.5}}, c2, Constraint::Quantile1d));
  EXPECT_TRUE(approx_equal(r3.measure, line_measure({0.5, 2.5}, {0.5, 0.5})));
}

TEST(Quantile1d, Errors) {
  const auto plane = DiscreteMeasure::dirac({0, 0}, GroundSpace::euclidean(2));
  try {
    barycenter_quantile_1d(BarycenterProblem({{plane, 1}}, CostSpec::norm_power(2), Constraint::Quantile1d));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotOneDimensional);
  }
  try {
    barycenter_quantile_1d(BarycenterProblem({{dirac(0), 1}}, CostSpec::metric_power(0.5), Constraint::Quantile1d));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotConvexCost);
  }
}

TEST(ScalarArgmin, MedianTieAndGeneralConvex) {
  EXPECT_DOUBLE_EQ(scalar_argmin(CostSpec::norm_power(1), {0, 1}, {0.5, 0.5}), 0.5);
  EXPECT_DOUBLE_EQ(scalar_argmin(CostSpec::norm_power(1), {0, 1, 5}, {0.3, 0.4, 0.3}), 1.0);
  // |u|^4 around symmetric points is minimized at the center. The objective
  // is flat there, so only the objective value is pinned tightly.
  const double m = scalar_argmin(CostSpec::norm_power(4), {-1, 3}, {0.5, 0.5});
  EXPECT_NEAR(m, 1.0, 1e-3);
  EXPECT_NEAR(0.5 * std::pow(m + 1, 4) + 0.5 * std::pow(3 - m, 4), 16.0, 1e-9);
  EXPECT_NEAR(scalar_argmin(CostSpec::norm_power(1.5), {0, 1, 4}, {1, 1, 1}), 1.27335006564073, 1e-6);
}

TEST(Quantile1d, CrossValidatesAgainstLp) {
  Rng rng(123);
  for (int t = 0; t < 40; ++t) {
    const CostSpec cost = t % 2 ? CostSpec::norm_power(1) : CostSpec::norm_power(2);
    std::vector<WeightedInput> inputs;
    const std::size_t n = rng.uniform_int(1, 4);
    for (std::size_t i = 0; i < n; ++i) inputs.push_back({random_measure(rng, 5, 1, -3, 3), rng.uniform(0.1, 1)});
    const auto q = barycenter_quantile_1d(BarycenterProblem(inputs, cost, Constraint::Quantile1d));
    std::vector<Point> grid(q.measure.atoms());
    for (const auto& in : inputs)
      for (const auto& x : in.measure.atoms())
        if (std::none_of(grid.begin(), grid.end(), [&](const Point& p) { return points_equal(p, x); }))
          grid.push_back(x);
    const auto lp = barycenter_fixed_support(BarycenterProblem(inputs, cost, Constraint::SimplexOver, grid));
    EXPECT_NEAR(q.objective, lp.objective, 1e-7);
    EXPECT_LE(q.certificate.value, 1e-9);
  }
}

TEST(FreeSupport, TwoDiracsInPlane) {
  const GroundSpace plane = GroundSpace::euclidean(2);
  const auto a = DiscreteMeasure::dirac({0, 0}, plane), b = DiscreteMeasure::dirac({2, 4}, plane);
  const auto r =
      barycenter_free_support(BarycenterProblem({{a, 0.5}, {b, 0.5}}, CostSpec::norm_power(2), Constraint::Free, {}, 1));
  ASSERT_EQ(r.measure.size(), 1u);
  EXPECT_NEAR(r.measure.atom(0)[0], 1.0, 1e-12);
  EXPECT_NEAR(r.measure.atom(0)[1], 2.0, 1e-12);
  EXPECT_NEAR(r.objective, 5.0, 1e-12);
  EXPECT_EQ(r.certificate.kind, Certificate::Kind::LocalStationary);
}

TEST(FreeSupport, SingleInputFixedPoint) {
  Rng rng(9);
  const auto mu = random_measure(rng, 5, 2, 0, 1);
  const auto r = barycenter_free_support(
      BarycenterProblem({{mu, 1}}, CostSpec::norm_power(2), Constraint::Free, {}, mu.size()));
  EXPECT_NEAR(r.objective, 0.0, 1e-12);
  EXPECT_TRUE(approx_equal(r.measure, mu, 1e-9));
}

TEST(FreeSupport, TraceNonincreasingAndObjectiveConsistent) {
  Rng rng(33);
  for (int t = 0; t < 8; ++t) {
    std::vector<WeightedInput> inputs;
    for (int i = 0; i < 3; ++i) inputs.push_back({random_measure(rng, 4, 2, 0, 1), rng.uniform(0.2, 1)});
    const CostSpec cost = t % 3 == 0 ? CostSpec::norm_power(1) : (t % 3 == 1 ? CostSpec::norm_power(2) : CostSpec::norm_power(3));
    const BarycenterProblem p(inputs, cost, Constraint::Free, {}, 3);
    const auto r = barycenter_free_support(p, t);
    for (std::size_t k = 1; k < r.trace.size(); ++k) EXPECT_LE(r.trace[k].objective, r.trace[k - 1].objective);
    EXPECT_LE(r.objective, r.trace.front().objective);
    EXPECT_NEAR(objective(r.measure, p), r.objective, 1e-7);
  }
}

TEST(FreeSupport, RejectsNonconvexCost) {
  try {
    barycenter_free_support(BarycenterProblem({{dirac(0), 1}}, CostSpec::metric_power(0.5), Constraint::Free, {}, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotConvexCost);
  }
}

TEST(Barycenter, TranslationEquivariance) {
  Rng rng(2);
  const auto c2 = CostSpec::norm_power(2);
  const GroundSpace plane = GroundSpace::euclidean(2);
  for (int t = 0; t < 5; ++t) {
    std::vector<WeightedInput> inputs, shifted;
    const Point v{rng.uniform(-3, 3), rng.uniform(-3, 3)};
    for (int i = 0; i < 3; ++i) {
      const auto mu = random_measure(rng, 3, 2, 0, 1);
      inputs.push_back({mu, 1.0 + i});
      shifted.push_back({pushforward(mu, [&](const Point& x) { return Point{x[0] + v[0], x[1] + v[1]}; }), 1.0 + i});
    }
    const auto a = barycenter_free_support(BarycenterProblem(inputs, c2, Constraint::Free, {}, 2), 4);
    const auto b = barycenter_free_support(BarycenterProblem(shifted, c2, Constraint::Free, {}, 2), 4);
    ASSERT_EQ(a.measure.size(), b.measure.size());
    EXPECT_NEAR(a.objective, b.objective, 1e-9);
    for (std::size_t k = 0; k < a.measure.size(); ++k) {
      EXPECT_NEAR(a.measure.atom(k)[0] + v[0], b.measure.atom(k)[0], 1e-9);
      EXPECT_NEAR(a.measure.atom(k)[1] + v[1], b.measure.atom(k)[1], 1e-9);
    }

    // Same on the line with the quantile method.
    std::vector<WeightedInput> line, line_shifted;
    for (int i = 0; i < 3; ++i) {
      const auto mu = random_measure(rng, 4, 1, 0, 1);
      line.push_back({mu, 1.0});
      line_shifted.push_back({pushforward(mu, [&](const Point& x) { return Point{x[0] + v[0]}; }), 1.0});
    }
    const auto qa = barycenter_quantile_1d(BarycenterProblem(line, c2, Constraint::Quantile1d));
    const auto qb = barycenter_quantile_1d(BarycenterProblem(line_shifted, c2, Constraint::Quantile1d));
    ASSERT_EQ(qa.measure.size(), qb.measure.size());
    EXPECT_NEAR(qa.objective, qb.objective, 1e-9);
    for (std::size_t k = 0; k < qa.measure.size(); ++k)
      EXPECT_NEAR(qa.measure.atom(k)[0] + v[0], qb.measure.atom(k)[0], 1e-9);
  }
}

}  // namespace
}  // namespace mkbary
