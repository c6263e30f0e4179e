#include <gtest/gtest.h>

#include <cmath>

#include "mkbary/costs.hpp"
#include "mkbary/error.hpp"
#include "mkbary/measures.hpp"
#include "mkbary/random.hpp"

namespace mkbary {
namespace {

const GroundSpace kLine = GroundSpace::euclidean(1);

DiscreteMeasure line_measure(std::vector<double> xs, std::vector<double> ws) {
  std::vector<Point> atoms;
  for (double x : xs) atoms.push_back({x});
  return DiscreteMeasure::canonicalize(std::move(atoms), std::move(ws), kLine);
}

void expect_measure(const DiscreteMeasure& m, std::vector<double> xs, std::vector<double> ws) {
  ASSERT_EQ(m.size(), xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    EXPECT_DOUBLE_EQ(m.atom(i)[0], xs[i]);
    EXPECT_NEAR(m.weight(i), ws[i], 1e-12);
  }
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::InvalidArgument;
}

TEST(Canonicalize, MergesDuplicates) {
  expect_measure(line_measure({0, 0, 1}, {0.25, 0.25, 0.5}), {0, 1}, {0.5, 0.5});
}

TEST(Canonicalize, SingleAtomUnchanged) { expect_measure(line_measure({0}, {1.0}), {0}, {1.0}); }

TEST(Canonicalize, Errors) {
  EXPECT_EQ(code_of([] { line_measure({0, 1}, {0.7, 0.2}); }), ErrorCode::MassNotOne);
  EXPECT_EQ(code_of([] { line_measure({0, 1}, {1.5, -0.5}); }), ErrorCode::NegativeWeight);
  EXPECT_EQ(code_of([] { line_measure({}, {}); }), ErrorCode::EmptySupport);
}

TEST(Canonicalize, DropsZeroWeightsAndSorts) {
  expect_measure(line_measure({3, 1, 2}, {0.5, 0.0, 0.5}), {2, 3}, {0.5, 0.5});
}

TEST(Canonicalize, AcceptsSmallMassErrorAndRenormalizes) {
  const auto m = line_measure({0, 1}, {0.5, 0.5 + 5e-10});
  EXPECT_NEAR(m.weight(0) + m.weight(1), 1.0, 1e-15);
}

TEST(Canonicalize, FiniteSpaceRejectsForeignAtoms) {
  const auto space = GroundSpace::finite({{0, 1}, {1, 0}});
  EXPECT_EQ(code_of([&] { DiscreteMeasure::canonicalize({{2.0}}, {1.0}, space); }), ErrorCode::SpaceMismatch);
}

TEST(GroundSpaceFinite, RejectsNonMetric) {
  EXPECT_THROW(GroundSpace::finite({{0, 1, 5}, {1, 0, 1}, {5, 1, 0}}), Error);
  EXPECT_THROW(GroundSpace::finite({{0, 0}, {0, 0}}), Error);
  EXPECT_THROW(GroundSpace::finite({{0, 1}, {2, 0}}), Error);
}

TEST(Pushforward, Examples) {
  const auto mu = line_measure({0, 1}, {0.5, 0.5});
  expect_measure(pushforward(mu, [](const Point& x) { return Point{x[0] + 1}; }), {1, 2}, {0.5, 0.5});
  expect_measure(pushforward(mu, [](const Point&) { return Point{0.0}; }), {0}, {1.0});
  expect_measure(pushforward(line_measure({0}, {1}), [](const Point& x) { return x; }), {0}, {1.0});
}

TEST(Pushforward, ImageOutsideFiniteSpace) {
  const auto space = GroundSpace::finite({{0, 1}, {1, 0}});
  const auto mu = DiscreteMeasure::dirac({1.0}, space);
  EXPECT_EQ(code_of([&] { pushforward(mu, [](const Point& x) { return Point{x[0] + 1}; }); }),
            ErrorCode::ImageOutsideSpace);
}

TEST(RestrictAndMix, Examples) {
  const auto r1 = restrict_and_mix(line_measure({0, 1}, {0.5, 0.5}),
                                   [](const Point& x) { return x[0] <= 0 ? 1.0 : 0.0; });
  EXPECT_DOUBLE_EQ(r1.mass, 0.5);
  ASSERT_TRUE(r1.measure);
  expect_measure(*r1.measure, {0}, {1.0});

  const auto r2 = restrict_and_mix(line_measure({0}, {1}), [](const Point&) { return 1.0; });
  EXPECT_DOUBLE_EQ(r2.mass, 1.0);
  expect_measure(*r2.measure, {0}, {1.0});

  const auto r3 = restrict_and_mix(line_measure({0}, {1}), [](const Point&) { return 0.0; });
  EXPECT_DOUBLE_EQ(r3.mass, 0.0);
  EXPECT_FALSE(r3.measure);
}

TEST(Mixture, Examples) {
  const auto d0 = line_measure({0}, {1}), d1 = line_measure({1}, {1});
  expect_measure(mixture(d0, d1, 0.0), {0}, {1.0});
  expect_measure(mixture(d0, d1, 0.5), {0, 1}, {0.5, 0.5});
  expect_measure(mixture(line_measure({0, 1}, {0.5, 0.5}), line_measure({0, 2}, {0.5, 0.5}), 0.5), {0, 1, 2},
                 {0.5, 0.25, 0.25});
}

TEST(Mixture, SpaceMismatch) {
  const auto plane = DiscreteMeasure::dirac({0.0, 0.0}, GroundSpace::euclidean(2));
  EXPECT_EQ(code_of([&] { mixture(line_measure({0}, {1}), plane, 0.5); }), ErrorCode::SpaceMismatch);
}

TEST(TruncateToBall, Examples) {
  const auto c = CostSpec::norm_power(1);
  expect_measure(truncate_to_ball(line_measure({0, 5}, {0.5, 0.5}), {0}, 1, c), {0}, {1.0});
  expect_measure(truncate_to_ball(line_measure({0}, {1}), {0}, 3, c), {0}, {1.0});
  expect_measure(truncate_to_ball(line_measure({0, 1.5}, {0.5, 0.5}), {0}, 1, c), {0, 1.5}, {0.75, 0.25});
}

TEST(TailCost, Examples) {
  const auto sq = CostSpec::norm_power(2);
  EXPECT_DOUBLE_EQ(tail_cost(line_measure({0}, {1}), {0}, 1, sq), 0.0);
  EXPECT_DOUBLE_EQ(tail_cost(line_measure({0, 3}, {0.5, 0.5}), {0}, 1, sq), 4.5);
  EXPECT_DOUBLE_EQ(tail_cost(line_measure({0, 3}, {0.5, 0.5}), {0}, 1e6, sq), 0.0);
}

DiscreteMeasure random_line_measure(Rng& rng, std::size_t max_atoms) {
  const std::size_t k = static_cast<std::size_t>(rng.uniform_int(1, max_atoms));
  std::vector<Point> atoms;
  std::vector<double> w;
  double s = 0;
  for (std::size_t i = 0; i < k; ++i) {
    atoms.push_back({std::round(rng.uniform(-5, 5) * 4) / 4});
    w.push_back(rng.exponential());
    s += w.back();
  }
  for (double& x : w) x /= s;
  return DiscreteMeasure::canonicalize(std::move(atoms), std::move(w), kLine);
}

double total(const DiscreteMeasure& m) {
  double s = 0;
  for (double w : m.weights()) s += w;
  return s;
}

TEST(MeasureProperties, RandomizedInvariants) {
  Rng rng(7);
  const auto c = CostSpec::norm_power(2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto mu = random_line_measure(rng, 6), nu = random_line_measure(rng, 6);
    for (std::size_t i = 0; i < mu.size(); ++i) EXPECT_GT(mu.weight(i), 0.0);
    EXPECT_NEAR(total(pushforward(mu, [](const Point& x) { return Point{std::floor(x[0])}; })), 1.0, 1e-12);

    const double t = rng.uniform();
    const auto mix = mixture(mu, nu, t);
    EXPECT_NEAR(total(mix), 1.0, 1e-12);
    for (const auto& a : mix.atoms()) {
      bool found = false;
      for (const auto& b : mu.atoms()) found |= points_equal(a, b);
      for (const auto& b : nu.atoms()) found |= points_equal(a, b);
      EXPECT_TRUE(found);
    }
    // Weight at each atom is bilinear in t.
    for (std::size_t k = 0; k < mix.size(); ++k) {
      double expected = 0;
      for (std::size_t i = 0; i < mu.size(); ++i)
        if (points_equal(mu.atom(i), mix.atom(k))) expected += (1 - t) * mu.weight(i);
      for (std::size_t i = 0; i < nu.size(); ++i)
        if (points_equal(nu.atom(i), mix.atom(k))) expected += t * nu.weight(i);
      EXPECT_NEAR(mix.weight(k), expected, 1e-12);
    }

    const double radius = rng.uniform(0.1, 10);
    EXPECT_NEAR(total(truncate_to_ball(nu, {0}, radius, c)), 1.0, 1e-12);
    EXPECT_TRUE(approx_equal(truncate_to_ball(nu, {0}, 100, c), nu));

    double previous = tail_cost(nu, {0}, 0.01, c);
    for (double r = 0.5; r < 40; r += 0.5) {
      const double tc = tail_cost(nu, {0}, r, c);
      EXPECT_LE(tc, previous);
      previous = tc;
    }
    EXPECT_EQ(previous, 0.0);
  }
}

}  // namespace
}  // namespace mkbary
