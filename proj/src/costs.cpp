#include "mkbary/costs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "mkbary/error.hpp"

namespace mkbary {

namespace {

std::string format_point(const Point& x) {
  std::string s = "(";
  for (std::size_t i = 0; i < x.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x[i]);
    if (i) s += ",";
    s += buf;
  }
  return s + ")";
}

std::vector<unsigned> first_primes(std::size_t count) {
  std::vector<unsigned> primes;
  for (unsigned candidate = 2; primes.size() < count; ++candidate) {
    bool prime = true;
    for (unsigned p : primes) {
      if (p * p > candidate) break;
      if (candidate % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(candidate);
  }
  return primes;
}

double euclidean_norm(std::span<const double> u) {
  double s = 0.0;
  for (double v : u) s += v * v;
  return std::sqrt(s);
}

Box default_box(const SampleOptions& options, std::size_t dim) {
  if (options.box) {
    if (options.box->lo.size() != dim || options.box->hi.size() != dim)
      throw Error(ErrorCode::InvalidArgument, "sample box has the wrong dimension");
    return *options.box;
  }
  return Box{std::vector<double>(dim, -1.0), std::vector<double>(dim, 1.0)};
}

// Draws `groups` points of dimension `dim` from one Halton point in the box.
std::vector<Point> halton_tuple(std::size_t index, std::size_t groups, const Box& box) {
  const std::size_t dim = box.lo.size();
  const auto h = halton(index, groups * dim);
  std::vector<Point> out(groups, Point(dim));
  for (std::size_t g = 0; g < groups; ++g)
    for (std::size_t k = 0; k < dim; ++k)
      out[g][k] = box.lo[k] + (box.hi[k] - box.lo[k]) * h[g * dim + k];
  return out;
}

}  // namespace

std::vector<double> halton(std::size_t index, std::size_t dims) {
  static const std::vector<unsigned> primes = first_primes(64);
  if (dims > primes.size()) throw Error(ErrorCode::InvalidArgument, "too many Halton dimensions");
  std::vector<double> out(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    const unsigned base = primes[d];
    double f = 1.0;
    double r = 0.0;
    std::size_t i = index;
    while (i > 0) {
      f /= base;
      r += f * static_cast<double>(i % base);
      i /= base;
    }
    out[d] = r;
  }
  return out;
}

CostSpec CostSpec::metric_power(double p) {
  if (!(p > 0.0) || !std::isfinite(p)) throw Error(ErrorCode::InvalidArgument, "metric power must be positive");
  CostSpec c;
  c.kind_ = Kind::MetricPower;
  c.p_ = p;
  c.name_ = "metric_power";
  return c;
}

CostSpec CostSpec::norm_power(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw Error(ErrorCode::InvalidArgument, "norm power must be >= 1");
  CostSpec c;
  c.kind_ = Kind::NormPower;
  c.p_ = p;
  c.convex_ = true;
  c.name_ = "norm_power";
  return c;
}

CostSpec CostSpec::custom(Function g, std::size_t dim, bool convex, std::string name) {
  if (!g) throw Error(ErrorCode::InvalidArgument, "custom cost needs a function");
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "custom cost dimension must be >= 1");
  const std::vector<double> zero(dim, 0.0);
  if (std::abs(g(zero)) > kAtomTolerance) throw Error(ErrorCode::InvalidArgument, "custom g(0) must be 0");
  for (std::size_t i = 1; i <= 64; ++i) {
    auto u = halton(i, dim);
    for (double& v : u) v = 2.0 * v - 1.0;
    if (euclidean_norm(u) == 0.0) continue;
    if (!(g(u) > 0.0)) throw Error(ErrorCode::InvalidArgument, "custom g must be positive away from 0");
  }
  CostSpec c;
  c.kind_ = Kind::Custom;
  c.g_ = std::move(g);
  c.dim_ = dim;
  c.convex_ = convex;
  c.name_ = std::move(name);
  return c;
}

CostSpec CostSpec::finite_matrix(const std::vector<std::vector<double>>& values) {
  Matrix m = Matrix::from_rows(values);
  if (m.rows() == 0 || m.rows() != m.cols())
    throw Error(ErrorCode::InvalidArgument, "finite cost matrix must be square and nonempty");
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (!std::isfinite(m(i, j)) || m(i, j) < 0.0)
        throw Error(ErrorCode::InvalidArgument, "finite costs must be finite and nonnegative");
      if (i == j && m(i, j) != 0.0) throw Error(ErrorCode::InvalidArgument, "finite cost diagonal must be zero");
    }
  CostSpec c;
  c.kind_ = Kind::FiniteMatrix;
  c.values_ = std::move(m);
  c.name_ = "finite_matrix";
  return c;
}

CostSpec CostSpec::with_declared(DeclaredConstants constants) const {
  if (constants.A && *constants.A < 0.0) throw Error(ErrorCode::InvalidArgument, "declared A must be >= 0");
  if (constants.B && *constants.B < 0.0) throw Error(ErrorCode::InvalidArgument, "declared B must be >= 0");
  if (constants.q && !(*constants.q > 0.0)) throw Error(ErrorCode::InvalidArgument, "declared q must be > 0");
  CostSpec c = *this;
  c.declared_ = constants;
  return c;
}

bool CostSpec::is_translation_invariant(const GroundSpace& space) const {
  if (!space.is_euclidean()) return false;
  if (kind_ == Kind::Custom) return dim_ == space.dimension();
  return kind_ == Kind::NormPower || kind_ == Kind::MetricPower;
}

bool CostSpec::is_convex_translation(const GroundSpace& space) const {
  if (!is_translation_invariant(space)) return false;
  if (kind_ == Kind::MetricPower) return p_ >= 1.0;
  return convex_;
}

double CostSpec::g(std::span<const double> u) const {
  switch (kind_) {
    case Kind::MetricPower:
    case Kind::NormPower: {
      const double r = euclidean_norm(u);
      if (p_ == 1.0) return r;
      if (p_ == 2.0) {
        double s = 0.0;
        for (double v : u) s += v * v;
        return s;
      }
      return std::pow(r, p_);
    }
    case Kind::Custom: return g_(u);
    case Kind::FiniteMatrix: break;
  }
  throw Error(ErrorCode::SpaceMismatch, "finite_matrix cost is not translation invariant");
}

bool CostSpec::is_symmetric() const {
  switch (kind_) {
    case Kind::MetricPower:
    case Kind::NormPower: return true;
    case Kind::Custom: return false;
    case Kind::FiniteMatrix:
      for (std::size_t i = 0; i < values_.rows(); ++i)
        for (std::size_t j = 0; j < i; ++j)
          if (values_(i, j) != values_(j, i)) return false;
      return true;
  }
  return false;
}

void check_cost_space(const CostSpec& cost, const GroundSpace& space) {
  switch (cost.kind()) {
    case CostSpec::Kind::MetricPower: return;
    case CostSpec::Kind::NormPower:
      if (!space.is_euclidean()) throw Error(ErrorCode::SpaceMismatch, "norm_power needs a euclidean space");
      return;
    case CostSpec::Kind::Custom:
      if (!space.is_euclidean() || space.dimension() != cost.custom_dimension())
        throw Error(ErrorCode::SpaceMismatch, "custom cost dimension does not match the space");
      return;
    case CostSpec::Kind::FiniteMatrix:
      if (!space.is_finite() || space.point_count() != cost.values().rows())
        throw Error(ErrorCode::SpaceMismatch, "finite_matrix size does not match the space");
      return;
  }
}

double evaluate(const CostSpec& cost, const GroundSpace& space, const Point& x, const Point& y) {
  check_cost_space(cost, space);
  if (!space.contains(x) || !space.contains(y))
    throw Error(ErrorCode::SpaceMismatch, "point is not in the cost's ground space");
  switch (cost.kind()) {
    case CostSpec::Kind::MetricPower: {
      const double r = space.distance(x, y);
      if (cost.exponent() == 1.0) return r;
      if (cost.exponent() == 2.0) return r * r;
      return std::pow(r, cost.exponent());
    }
    case CostSpec::Kind::FiniteMatrix: return cost.values()(space.index_of(x), space.index_of(y));
    case CostSpec::Kind::NormPower:
    case CostSpec::Kind::Custom: {
      Point u(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) u[i] = x[i] - y[i];
      return cost.g(u);
    }
  }
  return 0.0;
}

Matrix cost_matrix(const CostSpec& cost, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (!(mu.space() == nu.space())) throw Error(ErrorCode::SpaceMismatch, "measures live on different spaces");
  Matrix c(mu.size(), nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t j = 0; j < nu.size(); ++j) c(i, j) = evaluate(cost, mu.space(), mu.atom(i), nu.atom(j));
  return c;
}

std::string to_string(GrowthConstants::Provenance p) {
  switch (p) {
    case GrowthConstants::Provenance::Analytic: return "analytic";
    case GrowthConstants::Provenance::Declared: return "declared";
    case GrowthConstants::Provenance::SampledLowerBound: return "sampled_lower_bound";
  }
  return "unknown";
}

void fill_exponents(GrowthConstants& constants) {
  constants.q0 = std::log(2.0 * constants.B) / std::log(2.0);
  constants.q = std::max(3.0 * constants.B, constants.q0);
}

namespace {

GrowthConstants apply_declared(const CostSpec& cost, GrowthConstants derived) {
  if (!cost.declared()) return derived;
  const auto& d = *cost.declared();
  GrowthConstants out = derived;
  if (d.A) out.A = *d.A;
  if (d.B) out.B = *d.B;
  if (d.A || d.B || d.q) {
    out.provenance = GrowthConstants::Provenance::Declared;
    if (out.B > 0.0) fill_exponents(out);
    if (d.q) out.q = *d.q;
  }
  return out;
}

// Largest ratio c(x,y) / (c(a) + c(b)) over the four orderings of the
// weak triangle inequality, for a cost on a finite index set.
template <typename CostFn>
double exhaustive_ratio(std::size_t n, CostFn c) {
  double best = 0.0;
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) {
      const double cxy = c(x, y);
      if (cxy == 0.0) continue;
      for (std::size_t z = 0; z < n; ++z) {
        const double denominators[4] = {c(x, z) + c(y, z), c(x, z) + c(z, y), c(z, x) + c(y, z),
                                        c(z, x) + c(z, y)};
        for (double den : denominators)
          if (den > 0.0) best = std::max(best, cxy / den);
      }
    }
  return best;
}

}  // namespace

GrowthConstants growth_constants(const CostSpec& cost, const SampleOptions& options) {
  GrowthConstants gc;
  switch (cost.kind()) {
    case CostSpec::Kind::MetricPower:
    case CostSpec::Kind::NormPower:
      gc.A = 0.0;
      gc.B = cost.exponent() >= 1.0 ? std::pow(2.0, cost.exponent() - 1.0) : 1.0;
      gc.provenance = GrowthConstants::Provenance::Analytic;
      break;
    case CostSpec::Kind::FiniteMatrix: {
      const Matrix& v = cost.values();
      gc.A = 0.0;
      gc.B = exhaustive_ratio(v.rows(), [&](std::size_t i, std::size_t j) { return v(i, j); });
      gc.provenance = GrowthConstants::Provenance::Analytic;
      break;
    }
    case CostSpec::Kind::Custom: {
      const std::size_t dim = cost.custom_dimension();
      const Box box = default_box(options, dim);
      double best = 0.0;
      std::vector<double> w(dim);
      for (std::size_t s = 0; s < options.count; ++s) {
        const auto uv = halton_tuple(options.seed + s + 1, 2, box);
        const double den = cost.g(uv[0]) + cost.g(uv[1]);
        if (!(den > 0.0)) continue;
        for (double su : {1.0, -1.0})
          for (double sv : {1.0, -1.0}) {
            for (std::size_t k = 0; k < dim; ++k) w[k] = su * uv[0][k] + sv * uv[1][k];
            best = std::max(best, cost.g(w) / den);
          }
      }
      if (!(best <= options.ratio_cap))
        throw Error(ErrorCode::UnboundedRatio,
                    "sampled growth ratio " + std::to_string(best) + " exceeds cap " +
                        std::to_string(options.ratio_cap));
      gc.A = 0.0;
      gc.B = best;
      gc.provenance = GrowthConstants::Provenance::SampledLowerBound;
      break;
    }
  }
  if (gc.B < 1.0) {
    gc.B = 1.0;
    gc.clamped = true;
  }
  fill_exponents(gc);
  return apply_declared(cost, gc);
}

GrowthConstants growth_constants(const CostSpec& cost, const GroundSpace& space) {
  if (!space.is_finite()) return growth_constants(cost, SampleOptions{.box = std::nullopt, .dim = space.dimension()});
  check_cost_space(cost, space);
  GrowthConstants gc;
  gc.A = 0.0;
  gc.B = exhaustive_ratio(space.point_count(), [&](std::size_t i, std::size_t j) {
    return evaluate(cost, space, Point{double(i)}, Point{double(j)});
  });
  gc.provenance = GrowthConstants::Provenance::Analytic;
  if (gc.B < 1.0) {
    gc.B = 1.0;
    gc.clamped = true;
  }
  fill_exponents(gc);
  return apply_declared(cost, gc);
}

RelaxedConstants relaxed_constants(const CostSpec& cost, double epsilon, const GroundSpace& space,
                                   const SampleOptions& options) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  check_cost_space(cost, space);
  RelaxedConstants rc;
  rc.epsilon = epsilon;

  const auto c = [&](const Point& x, const Point& y) { return evaluate(cost, space, x, y); };
  const auto check = [&](const Point& x, const Point& y, const Point& z) {
    const double cxy = c(x, y);
    const double slack = 1e-9 * (1.0 + cxy);
    const double first = rc.A_eps + (1.0 + epsilon) * c(x, z) + rc.C_eps * c(y, z);
    const double second = rc.A_eps + (1.0 + epsilon) * c(z, y) + rc.C_eps * c(z, x);
    if (cxy > first + slack || cxy > second + slack)
      throw Error(ErrorCode::ConstructionFailed,
                  "relaxed inequality fails at x=" + format_point(x) + " y=" + format_point(y) +
                      " z=" + format_point(z));
    ++rc.triples_checked;
  };

  if (space.is_finite()) {
    // Exact constants by enumeration: the smallest C with A_eps = 0.
    const std::size_t n = space.point_count();
    double best = 0.0;
    bool any = false;
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t y = 0; y < n; ++y)
        for (std::size_t z = 0; z < n; ++z) {
          const Point px{double(x)}, py{double(y)}, pz{double(z)};
          const double cxy = c(px, py);
          if (const double cyz = c(py, pz); cyz > 0.0) {
            best = std::max(best, (cxy - (1.0 + epsilon) * c(px, pz)) / cyz);
            any = true;
          }
          if (const double czx = c(pz, px); czx > 0.0) {
            best = std::max(best, (cxy - (1.0 + epsilon) * c(pz, py)) / czx);
            any = true;
          }
        }
    rc.A_eps = 0.0;
    rc.C_eps = any && best > 0.0 ? best : 1.0;
    rc.k = 0;
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t y = 0; y < n; ++y)
        for (std::size_t z = 0; z < n; ++z) check(Point{double(x)}, Point{double(y)}, Point{double(z)});
    return rc;
  }

  // Doubling construction: with g(2^k y) <= (2B)^k g(y) and convexity,
  // g(x + y) <= (1 + 2^-k B) g(x) + B^(k+1) g(y); choose 2^-k B < eps.
  const GrowthConstants gc = growth_constants(cost, SampleOptions{.box = options.box,
                                                                  .dim = space.dimension(),
                                                                  .count = options.count,
                                                                  .seed = options.seed,
                                                                  .ratio_cap = options.ratio_cap});
  if (!std::isfinite(gc.B)) throw Error(ErrorCode::ConstructionFailed, "growth constant B is not finite");
  int k = 0;
  while (std::ldexp(gc.B, -k) >= epsilon) ++k;
  rc.k = k;
  rc.A_eps = gc.A;
  rc.C_eps = std::pow(gc.B, k + 1);

  const Box box = default_box(options, space.dimension());
  for (std::size_t s = 0; s < options.count; ++s) {
    const auto xyz = halton_tuple(options.seed + s + 1, 3, box);
    check(xyz[0], xyz[1], xyz[2]);
  }
  return rc;
}

ConsistencyReport consistency_check(const CostSpec& cost, const GroundSpace& space,
                                    std::span<const Point> sample) {
  if (sample.empty()) throw Error(ErrorCode::InvalidArgument, "consistency check needs a sample");
  ConsistencyReport report;
  const auto fail = [&](std::string what) {
    report.passed = false;
    report.witnesses.push_back(std::move(what));
  };

  for (const Point& x : sample)
    for (const Point& y : sample) {
      const double cxy = evaluate(cost, space, x, y);
      ++report.pairs_checked;
      if (cxy < 0.0) fail("negative cost at " + format_point(x) + "," + format_point(y));
      if (points_equal(x, y)) {
        if (std::abs(cxy) > kAtomTolerance) fail("c(x,x) != 0 at " + format_point(x));
      } else if (!(cxy > 0.0)) {
        fail("c(x,y) = 0 for distinct x=" + format_point(x) + " y=" + format_point(y));
      }
    }

  if (space.is_euclidean()) {
    constexpr int kSteps = 60;
    constexpr double kVanishingRatio = 1e-3;
    const std::size_t d = space.dimension();
    for (const Point& x : sample)
      for (std::size_t axis = 0; axis < d; ++axis)
        for (double sign : {1.0, -1.0}) {
          double prev_fwd = INFINITY;
          double prev_bwd = INFINITY;
          double first = 0.0;
          bool monotone = true;
          for (int m = 0; m <= kSteps; ++m) {
            Point y = x;
            y[axis] += sign * std::ldexp(1.0, -m);
            const double fwd = evaluate(cost, space, x, y);
            const double bwd = evaluate(cost, space, y, x);
            if (m == 0) first = std::max(fwd, bwd);
            if (fwd > prev_fwd * (1.0 + 1e-12) || bwd > prev_bwd * (1.0 + 1e-12)) monotone = false;
            prev_fwd = fwd;
            prev_bwd = bwd;
          }
          if (!monotone) fail("c(x, x+hu) not monotone as h -> 0 at " + format_point(x));
          if (std::max(prev_fwd, prev_bwd) > kVanishingRatio * first)
            fail("c(x, x+hu) does not vanish as h -> 0 at " + format_point(x));
        }
  }
  return report;
}

}  // namespace mkbary
