#include "mkbary/barycenter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mkbary/error.hpp"
#include "mkbary/linear_program.hpp"
#include "mkbary/random.hpp"
#include "mkbary/transport.hpp"

namespace mkbary {

namespace {

constexpr double kWeightFloor = 1e-14;
constexpr double kRelativeStop = 1e-8;
constexpr std::size_t kMaxIterations = 200;

bool is_power(const CostSpec& cost, double p) {
  return (cost.kind() == CostSpec::Kind::NormPower || cost.kind() == CostSpec::Kind::MetricPower) &&
         cost.exponent() == p;
}

}  // namespace

BarycenterProblem::BarycenterProblem(std::vector<WeightedInput> inputs, CostSpec cost, Constraint constraint,
                                     std::vector<Point> candidates, std::size_t atom_budget)
    : inputs_(std::move(inputs)),
      cost_(std::move(cost)),
      constraint_(constraint),
      candidates_(std::move(candidates)),
      atom_budget_(atom_budget) {
  if (inputs_.empty()) throw Error(ErrorCode::InvalidArgument, "barycenter problem needs at least one input");
  double total = 0.0;
  for (const auto& in : inputs_) {
    if (!(in.lambda > 0.0) || !std::isfinite(in.lambda))
      throw Error(ErrorCode::InvalidArgument, "input weights must be positive");
    if (!(in.measure.space() == space())) throw Error(ErrorCode::SpaceMismatch, "inputs live on different spaces");
    total += in.lambda;
  }
  for (auto& in : inputs_) in.lambda /= total;
  check_cost_space(cost_, space());

  if (constraint_ == Constraint::SimplexOver) {
    if (candidates_.empty()) throw Error(ErrorCode::InvalidArgument, "candidate atom list is empty");
    for (std::size_t a = 0; a < candidates_.size(); ++a) {
      if (!space().contains(candidates_[a]))
        throw Error(ErrorCode::SpaceMismatch, "candidate atom is not a point of the space");
      for (std::size_t b = 0; b < a; ++b)
        if (points_equal(candidates_[a], candidates_[b]))
          throw Error(ErrorCode::InvalidArgument, "candidate atoms must be distinct");
    }
  }
  if (constraint_ == Constraint::Free && atom_budget_ == 0)
    throw Error(ErrorCode::InvalidArgument, "free-support atom budget must be >= 1");
}

std::string to_string(BarycenterProblem::Constraint c) {
  switch (c) {
    case BarycenterProblem::Constraint::Free: return "free";
    case BarycenterProblem::Constraint::SimplexOver: return "simplex_over";
    case BarycenterProblem::Constraint::Quantile1d: return "quantile_1d";
  }
  return "unknown";
}

std::string to_string(Certificate::Kind k) {
  switch (k) {
    case Certificate::Kind::LpOptimal: return "lp_optimal";
    case Certificate::Kind::LocalStationary: return "local_stationary";
    case Certificate::Kind::QuantileExact: return "quantile_exact";
  }
  return "unknown";
}

double objective(const DiscreteMeasure& nu, const BarycenterProblem& problem) {
  double s = 0.0;
  for (const auto& in : problem.inputs()) s += in.lambda * transport_cost(in.measure, nu, problem.cost());
  return s;
}

// --- fixed support ----------------------------------------------------------

FixedSupportSolution solve_fixed_support(const std::vector<WeightedInput>& inputs, const CostSpec& cost,
                                         const std::vector<Point>& candidates) {
  if (candidates.empty()) throw Error(ErrorCode::InvalidArgument, "candidate atom list is empty");
  const GroundSpace& space = inputs.front().measure.space();
  const std::size_t K = candidates.size();

  // Row layout: for each input, its atom rows then its candidate rows.
  LinearProgram lp;
  std::vector<std::size_t> first_var(inputs.size());
  std::size_t row = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const DiscreteMeasure& mu = inputs[i].measure;
    const std::size_t atom_row = row, cand_row = row + mu.size();
    for (std::size_t j = 0; j < mu.size(); ++j) lp.rhs.push_back(mu.weight(j));
    lp.rhs.insert(lp.rhs.end(), K, 0.0);
    first_var[i] = lp.columns.size();
    for (std::size_t j = 0; j < mu.size(); ++j)
      for (std::size_t k = 0; k < K; ++k)
        lp.add_column(inputs[i].lambda * evaluate(cost, space, mu.atom(j), candidates[k]),
                      {{atom_row + j, 1.0}, {cand_row + k, 1.0}});
    row = cand_row + K;
  }
  lp.rows = row;
  const std::size_t first_w = lp.columns.size();
  for (std::size_t k = 0; k < K; ++k) {
    LinearProgram::Column col;
    std::size_t r = 0;
    for (const auto& in : inputs) {
      col.push_back({r + in.measure.size() + k, -1.0});
      r += in.measure.size() + K;
    }
    lp.add_column(0.0, std::move(col));
  }

  LpOptions options;
  options.search_alternate = true;
  for (std::size_t k = 0; k < K; ++k) options.watched.push_back(first_w + k);
  const LpSolution s = solve_lp(lp, options);

  const double tolerance = 1e-9 * (1.0 + std::abs(s.objective));
  if (s.gap > tolerance || s.dual_violation > 1e-9 * (1.0 + *std::max_element(lp.cost.begin(), lp.cost.end())))
    throw Error(ErrorCode::NumericalFailure, "fixed-support LP certificate not closed");

  FixedSupportSolution out;
  out.objective = s.objective;
  out.gap = s.gap;
  out.multiple_optima = s.alternate.has_value();
  out.weights.resize(K);
  for (std::size_t k = 0; k < K; ++k) out.weights[k] = s.x[first_w + k] < kWeightFloor ? 0.0 : s.x[first_w + k];
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::size_t m = inputs[i].measure.size();
    Matrix plan(m, K);
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < K; ++k) plan(j, k) = s.x[first_var[i] + j * K + k];
    out.plans.push_back(std::move(plan));
  }
  return out;
}

namespace {

DiscreteMeasure measure_from_weights(const std::vector<Point>& atoms, std::vector<double> weights,
                                     const GroundSpace& space) {
  double total = 0.0;
  for (double w : weights) total += w;
  for (double& w : weights) w /= total;
  return DiscreteMeasure::canonicalize(atoms, std::move(weights), space);
}

}  // namespace

BarycenterResult barycenter_fixed_support(const BarycenterProblem& problem) {
  if (problem.constraint() != BarycenterProblem::Constraint::SimplexOver)
    throw Error(ErrorCode::InvalidArgument, "fixed-support solver needs a simplex_over constraint");
  const FixedSupportSolution s = solve_fixed_support(problem.inputs(), problem.cost(), problem.candidates());
  return BarycenterResult{measure_from_weights(problem.candidates(), s.weights, problem.space()),
                          s.objective,
                          {{0, s.objective}},
                          {Certificate::Kind::LpOptimal, s.gap},
                          s.multiple_optima};
}

// --- free support -----------------------------------------------------------

namespace {

struct WeightedPoints {
  std::vector<Point> points;
  std::vector<double> weights;
};

double local_objective(const CostSpec& cost, const WeightedPoints& wp, const Point& m) {
  double s = 0.0;
  Point u(m.size());
  for (std::size_t i = 0; i < wp.points.size(); ++i) {
    for (std::size_t d = 0; d < m.size(); ++d) u[d] = wp.points[i][d] - m[d];
    s += wp.weights[i] * cost.g(u);
  }
  return s;
}

Point weighted_mean(const WeightedPoints& wp) {
  Point m(wp.points.front().size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < wp.points.size(); ++i) {
    for (std::size_t d = 0; d < m.size(); ++d) m[d] += wp.weights[i] * wp.points[i][d];
    total += wp.weights[i];
  }
  for (double& v : m) v /= total;
  return m;
}

Point weiszfeld(const WeightedPoints& wp, Point m) {
  for (int it = 0; it < 500; ++it) {
    Point next(m.size(), 0.0);
    double denom = 0.0;
    for (std::size_t i = 0; i < wp.points.size(); ++i) {
      double r = 0.0;
      for (std::size_t d = 0; d < m.size(); ++d) r += (wp.points[i][d] - m[d]) * (wp.points[i][d] - m[d]);
      r = std::sqrt(r);
      if (r < 1e-14) return m;  // sitting on a data point
      for (std::size_t d = 0; d < m.size(); ++d) next[d] += wp.weights[i] * wp.points[i][d] / r;
      denom += wp.weights[i] / r;
    }
    double step = 0.0;
    for (std::size_t d = 0; d < m.size(); ++d) {
      next[d] /= denom;
      step = std::max(step, std::abs(next[d] - m[d]));
    }
    m = std::move(next);
    if (step < 1e-13) break;
  }
  return m;
}

// Compass search; only ever moves to strictly better points.
Point compass_search(const CostSpec& cost, const WeightedPoints& wp, Point m) {
  double spread = 0.0;
  for (const auto& p : wp.points)
    for (std::size_t d = 0; d < m.size(); ++d) spread = std::max(spread, std::abs(p[d] - m[d]));
  double step = std::max(spread, 1e-6);
  double best = local_objective(cost, wp, m);
  while (step > 1e-12 * (1.0 + spread)) {
    bool improved = false;
    for (std::size_t d = 0; d < m.size() && !improved; ++d)
      for (double sign : {1.0, -1.0}) {
        Point trial = m;
        trial[d] += sign * step;
        const double f = local_objective(cost, wp, trial);
        if (f < best) {
          best = f;
          m = std::move(trial);
          improved = true;
          break;
        }
      }
    if (!improved) step *= 0.5;
  }
  return m;
}

Point update_atom(const CostSpec& cost, const WeightedPoints& wp, const Point& current) {
  Point proposal;
  if (is_power(cost, 2.0)) {
    proposal = weighted_mean(wp);
  } else if (current.size() == 1) {
    std::vector<double> xs;
    for (const auto& p : wp.points) xs.push_back(p[0]);
    proposal = {scalar_argmin(cost, xs, wp.weights)};
  } else if (is_power(cost, 1.0)) {
    proposal = weiszfeld(wp, weighted_mean(wp));
  } else {
    proposal = compass_search(cost, wp, current);
  }
  return local_objective(cost, wp, proposal) <= local_objective(cost, wp, current) ? proposal : current;
}

double squared_distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return s;
}

// Greedy farthest-point sampling over the distinct pooled input atoms.
std::vector<Point> farthest_points(const std::vector<WeightedInput>& inputs, std::size_t k, std::uint64_t seed) {
  std::vector<Point> pool;
  for (const auto& in : inputs)
    for (const auto& x : in.measure.atoms())
      if (std::none_of(pool.begin(), pool.end(), [&](const Point& p) { return points_equal(p, x); }))
        pool.push_back(x);
  std::sort(pool.begin(), pool.end(), point_less);
  k = std::min(k, pool.size());
  Rng rng(seed);
  std::vector<Point> chosen{pool[rng.uniform_int(0, pool.size() - 1)]};
  std::vector<double> nearest(pool.size());
  for (std::size_t a = 0; a < pool.size(); ++a) nearest[a] = squared_distance(pool[a], chosen[0]);
  while (chosen.size() < k) {
    const std::size_t far = static_cast<std::size_t>(std::max_element(nearest.begin(), nearest.end()) - nearest.begin());
    chosen.push_back(pool[far]);
    for (std::size_t a = 0; a < pool.size(); ++a) nearest[a] = std::min(nearest[a], squared_distance(pool[a], pool[far]));
  }
  return chosen;
}

}  // namespace

BarycenterResult barycenter_free_support(const BarycenterProblem& problem, std::uint64_t init_seed) {
  const GroundSpace& space = problem.space();
  const CostSpec& cost = problem.cost();
  if (!cost.is_convex_translation(space))
    throw Error(ErrorCode::NotConvexCost, "free support needs a convex translation cost on a euclidean space");
  const std::size_t k = problem.atom_budget() == 0 ? 1 : problem.atom_budget();

  std::vector<Point> atoms = farthest_points(problem.inputs(), k, init_seed);
  FixedSupportSolution current = solve_fixed_support(problem.inputs(), cost, atoms);
  std::vector<TraceEntry> trace{{0, current.objective}};
  double last_decrease = 0.0;

  for (std::size_t iteration = 1; iteration <= kMaxIterations; ++iteration) {
    // Drop atoms that carry no mass, then move each survivor to the
    // minimizer of its transported cost.
    std::vector<Point> next_atoms;
    for (std::size_t a = 0; a < atoms.size(); ++a) {
      if (current.weights[a] <= 0.0) continue;
      WeightedPoints wp;
      for (std::size_t i = 0; i < problem.inputs().size(); ++i) {
        const auto& in = problem.inputs()[i];
        for (std::size_t j = 0; j < in.measure.size(); ++j) {
          const double mass = in.lambda * current.plans[i](j, a);
          if (mass > 0.0) {
            wp.points.push_back(in.measure.atom(j));
            wp.weights.push_back(mass);
          }
        }
      }
      next_atoms.push_back(update_atom(cost, wp, atoms[a]));
    }
    // Coinciding atoms would make the LP carry redundant columns; merge them.
    std::vector<Point> distinct;
    for (auto& p : next_atoms)
      if (std::none_of(distinct.begin(), distinct.end(), [&](const Point& q) { return points_equal(p, q); }))
        distinct.push_back(std::move(p));

    FixedSupportSolution next = solve_fixed_support(problem.inputs(), cost, distinct);
    const double decrease = current.objective - next.objective;
    if (decrease < 0.0) break;  // numerical noise only; keep the better iterate
    atoms = std::move(distinct);
    current = std::move(next);
    trace.push_back({iteration, current.objective});
    last_decrease = decrease / std::max(trace[trace.size() - 2].objective, std::numeric_limits<double>::min());
    if (decrease <= kRelativeStop * trace[trace.size() - 2].objective) break;
  }

  return BarycenterResult{measure_from_weights(atoms, current.weights, space),
                          current.objective,
                          std::move(trace),
                          {Certificate::Kind::LocalStationary, last_decrease},
                          current.multiple_optima};
}

// --- quantile 1-D -----------------------------------------------------------

double scalar_argmin(const CostSpec& cost, const std::vector<double>& xs, const std::vector<double>& ws) {
  if (xs.empty() || xs.size() != ws.size()) throw Error(ErrorCode::InvalidArgument, "bad weighted sample");
  double total = 0.0;
  for (double w : ws) total += w;

  if (is_power(cost, 2.0)) {
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) s += ws[i] * xs[i];
    return s / total;
  }
  if (is_power(cost, 1.0)) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    const double half = 0.5 * total, tie = 1e-12 * total;
    double cum = 0.0;
    for (std::size_t r = 0; r < order.size(); ++r) {
      cum += ws[order[r]];
      if (std::abs(cum - half) <= tie && r + 1 < order.size()) return 0.5 * (xs[order[r]] + xs[order[r + 1]]);
      if (cum > half) return xs[order[r]];
    }
    return xs[order.back()];
  }

  double lo = *std::min_element(xs.begin(), xs.end());
  double hi = *std::max_element(xs.begin(), xs.end());
  const auto f = [&](double m) {
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double u = xs[i] - m;
      s += ws[i] * cost.g(std::span<const double>(&u, 1));
    }
    return s;
  };
  for (int it = 0; it < 400 && hi - lo > 1e-12; ++it) {
    const double a = lo + (hi - lo) / 3.0, b = hi - (hi - lo) / 3.0;
    if (f(a) <= f(b))
      hi = b;
    else
      lo = a;
  }
  return 0.5 * (lo + hi);
}

BarycenterResult barycenter_quantile_1d(const BarycenterProblem& problem) {
  const GroundSpace& space = problem.space();
  if (!space.is_euclidean() || space.dimension() != 1)
    throw Error(ErrorCode::NotOneDimensional, "quantile method needs a one-dimensional euclidean space");
  if (!problem.cost().is_convex_translation(space))
    throw Error(ErrorCode::NotConvexCost, "quantile method needs a convex translation cost");

  // Common refinement of all cumulative-weight breakpoints.
  std::vector<double> breaks{0.0, 1.0};
  for (const auto& in : problem.inputs()) {
    double cum = 0.0;
    for (std::size_t j = 0; j + 1 < in.measure.size(); ++j) breaks.push_back(cum += in.measure.weight(j));
  }
  std::sort(breaks.begin(), breaks.end());
  std::vector<double> levels{0.0};
  for (double t : breaks)
    if (t > levels.back() + 1e-14 && t < 1.0 - 1e-14) levels.push_back(t);
  levels.push_back(1.0);

  std::vector<Point> atoms;
  std::vector<double> weights;
  double formula_objective = 0.0;
  std::vector<double> lambdas;
  for (const auto& in : problem.inputs()) lambdas.push_back(in.lambda);
  for (std::size_t s = 0; s + 1 < levels.size(); ++s) {
    const double mid = 0.5 * (levels[s] + levels[s + 1]), length = levels[s + 1] - levels[s];
    std::vector<double> quantiles;
    for (const auto& in : problem.inputs()) {
      double cum = 0.0;
      std::size_t j = 0;
      while (j + 1 < in.measure.size() && (cum += in.measure.weight(j)) < mid) ++j;
      quantiles.push_back(in.measure.atom(j)[0]);
    }
    const double m = scalar_argmin(problem.cost(), quantiles, lambdas);
    for (std::size_t i = 0; i < quantiles.size(); ++i) {
      const double u = quantiles[i] - m;
      formula_objective += length * lambdas[i] * problem.cost().g(std::span<const double>(&u, 1));
    }
    atoms.push_back({m});
    weights.push_back(length);
  }

  DiscreteMeasure nu = measure_from_weights(atoms, std::move(weights), space);
  const double recomputed = objective(nu, problem);
  return BarycenterResult{std::move(nu),
                          formula_objective,
                          {{0, formula_objective}},
                          {Certificate::Kind::QuantileExact, std::abs(formula_objective - recomputed)},
                          false};
}

}  // namespace mkbary
