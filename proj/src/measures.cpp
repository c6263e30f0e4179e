#include "mkbary/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mkbary/costs.hpp"
#include "mkbary/error.hpp"

namespace mkbary {

bool points_equal(const Point& a, const Point& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > tol) return false;
  return true;
}

bool point_less(const Point& a, const Point& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

GroundSpace GroundSpace::euclidean(std::size_t dim) {
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "euclidean dimension must be >= 1");
  GroundSpace s;
  s.kind_ = Kind::Euclidean;
  s.dim_ = dim;
  return s;
}

GroundSpace GroundSpace::finite(const std::vector<std::vector<double>>& distances) {
  const std::size_t n = distances.size();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "finite space needs at least one point");
  auto rho = std::make_shared<std::vector<double>>(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    if (distances[i].size() != n)
      throw Error(ErrorCode::InvalidArgument, "distance matrix must be square");
    for (std::size_t j = 0; j < n; ++j) {
      const double d = distances[i][j];
      if (!std::isfinite(d) || d < 0.0)
        throw Error(ErrorCode::InvalidArgument, "distances must be finite and nonnegative");
      if ((i == j) != (d == 0.0))
        throw Error(ErrorCode::InvalidArgument, "distance must vanish exactly on the diagonal");
      (*rho)[i * n + j] = d;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double d = (*rho)[i * n + j];
      if (d != (*rho)[j * n + i])
        throw Error(ErrorCode::InvalidArgument, "distance matrix must be symmetric");
      for (std::size_t k = 0; k < n; ++k)
        if (d > (*rho)[i * n + k] + (*rho)[k * n + j] + 1e-12 * (1.0 + d))
          throw Error(ErrorCode::InvalidArgument,
                      "distance matrix violates the triangle inequality at (" + std::to_string(i) +
                          "," + std::to_string(j) + "," + std::to_string(k) + ")");
    }
  GroundSpace s;
  s.kind_ = Kind::Finite;
  s.dim_ = 1;
  s.n_ = n;
  s.rho_ = std::move(rho);
  return s;
}

bool GroundSpace::contains(const Point& x) const {
  if (x.size() != dim_) return false;
  if (is_euclidean()) return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
  const double v = x[0];
  return v >= 0.0 && v < static_cast<double>(n_) && v == std::floor(v);
}

std::size_t GroundSpace::index_of(const Point& x) const {
  if (!is_finite() || !contains(x))
    throw Error(ErrorCode::ImageOutsideSpace, "point is not an index of the finite space");
  return static_cast<std::size_t>(x[0]);
}

double GroundSpace::distance(const Point& x, const Point& y) const {
  if (is_finite()) return distance(index_of(x), index_of(y));
  double s = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s);
}

std::vector<std::vector<double>> GroundSpace::distance_matrix() const {
  std::vector<std::vector<double>> out(n_, std::vector<double>(n_));
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) out[i][j] = distance(i, j);
  return out;
}

bool operator==(const GroundSpace& a, const GroundSpace& b) {
  if (a.kind_ != b.kind_ || a.dim_ != b.dim_ || a.n_ != b.n_) return false;
  if (a.is_euclidean() || a.rho_ == b.rho_) return true;
  return *a.rho_ == *b.rho_;
}

DiscreteMeasure DiscreteMeasure::canonicalize(std::vector<Point> atoms, std::vector<double> weights,
                                              const GroundSpace& space) {
  if (atoms.empty()) throw Error(ErrorCode::EmptySupport, "measure has no atoms");
  if (atoms.size() != weights.size())
    throw Error(ErrorCode::InvalidArgument, "atom and weight counts differ");
  double total = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (!space.contains(atoms[i]))
      throw Error(ErrorCode::SpaceMismatch, "atom " + std::to_string(i) + " is not a point of the space");
    if (!std::isfinite(weights[i]))
      throw Error(ErrorCode::InvalidArgument, "weight " + std::to_string(i) + " is not finite");
    if (weights[i] < 0.0)
      throw Error(ErrorCode::NegativeWeight, "weight " + std::to_string(i) + " is negative");
    total += weights[i];
  }
  if (std::abs(total - 1.0) > kMassTolerance)
    throw Error(ErrorCode::MassNotOne, "total mass " + std::to_string(total));

  // Merge atoms equal within tolerance into the first occurrence.
  std::vector<Point> merged_atoms;
  std::vector<double> merged_weights;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (weights[i] == 0.0) continue;
    auto it = std::find_if(merged_atoms.begin(), merged_atoms.end(),
                           [&](const Point& p) { return points_equal(p, atoms[i]); });
    if (it == merged_atoms.end()) {
      merged_atoms.push_back(std::move(atoms[i]));
      merged_weights.push_back(weights[i]);
    } else {
      merged_weights[static_cast<std::size_t>(it - merged_atoms.begin())] += weights[i];
    }
  }
  if (merged_atoms.empty()) throw Error(ErrorCode::EmptySupport, "all weights are zero");

  std::vector<std::size_t> order(merged_atoms.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return point_less(merged_atoms[a], merged_atoms[b]); });

  const double mass = std::accumulate(merged_weights.begin(), merged_weights.end(), 0.0);
  std::vector<Point> out_atoms;
  std::vector<double> out_weights;
  out_atoms.reserve(order.size());
  out_weights.reserve(order.size());
  for (std::size_t idx : order) {
    out_atoms.push_back(std::move(merged_atoms[idx]));
    out_weights.push_back(merged_weights[idx] / mass);
  }
  return DiscreteMeasure(space, std::move(out_atoms), std::move(out_weights));
}

DiscreteMeasure DiscreteMeasure::dirac(Point x, const GroundSpace& space) {
  return canonicalize({std::move(x)}, {1.0}, space);
}

double DiscreteMeasure::integrate(const std::function<double(const Point&)>& f) const {
  double s = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) s += weights_[i] * f(atoms_[i]);
  return s;
}

bool approx_equal(const DiscreteMeasure& a, const DiscreteMeasure& b, double tol) {
  if (!(a.space() == b.space()) || a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!points_equal(a.atom(i), b.atom(i))) return false;
    if (std::abs(a.weight(i) - b.weight(i)) > tol) return false;
  }
  return true;
}

DiscreteMeasure pushforward(const DiscreteMeasure& measure,
                            const std::function<Point(const Point&)>& map) {
  std::vector<Point> images;
  images.reserve(measure.size());
  for (const Point& x : measure.atoms()) {
    Point y = map(x);
    if (!measure.space().contains(y))
      throw Error(ErrorCode::ImageOutsideSpace, "map sends an atom outside the ground space");
    images.push_back(std::move(y));
  }
  return DiscreteMeasure::canonicalize(std::move(images),
                                       {measure.weights().begin(), measure.weights().end()},
                                       measure.space());
}

Restriction restrict_and_mix(const DiscreteMeasure& measure,
                             const std::function<double(const Point&)>& density) {
  std::vector<Point> atoms;
  std::vector<double> weights;
  double mass = 0.0;
  for (std::size_t i = 0; i < measure.size(); ++i) {
    const double f = density(measure.atom(i));
    if (!(f >= 0.0 && f <= 1.0))
      throw Error(ErrorCode::InvalidArgument, "density value outside [0, 1]");
    const double w = f * measure.weight(i);
    if (w > 0.0) {
      atoms.push_back(measure.atom(i));
      weights.push_back(w);
      mass += w;
    }
  }
  Restriction out;
  out.mass = mass;
  if (mass > 0.0) {
    for (double& w : weights) w /= mass;
    out.measure = DiscreteMeasure::canonicalize(std::move(atoms), std::move(weights), measure.space());
  }
  return out;
}

DiscreteMeasure mixture(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1, double t) {
  if (!(mu0.space() == mu1.space()))
    throw Error(ErrorCode::SpaceMismatch, "mixture of measures on different spaces");
  if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::InvalidArgument, "mixture parameter outside [0, 1]");
  std::vector<Point> atoms(mu0.atoms());
  atoms.insert(atoms.end(), mu1.atoms().begin(), mu1.atoms().end());
  std::vector<double> weights;
  weights.reserve(atoms.size());
  for (double w : mu0.weights()) weights.push_back((1.0 - t) * w);
  for (double w : mu1.weights()) weights.push_back(t * w);
  return DiscreteMeasure::canonicalize(std::move(atoms), std::move(weights), mu0.space());
}

double ball_cutoff(const CostSpec& cost, const GroundSpace& space, const Point& x0, double radius,
                   const Point& x) {
  return std::clamp(radius + 1.0 - evaluate(cost, space, x0, x), 0.0, 1.0);
}

DiscreteMeasure truncate_to_ball(const DiscreteMeasure& nu, const Point& x0, double radius,
                                 const CostSpec& cost) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "radius must be positive");
  if (!nu.space().contains(x0)) throw Error(ErrorCode::SpaceMismatch, "center is not in the space");
  std::vector<Point> atoms;
  std::vector<double> weights;
  double displaced = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    const double f = ball_cutoff(cost, nu.space(), x0, radius, nu.atom(i));
    atoms.push_back(nu.atom(i));
    weights.push_back(f * nu.weight(i));
    displaced += (1.0 - f) * nu.weight(i);
  }
  atoms.push_back(x0);
  weights.push_back(displaced);
  return DiscreteMeasure::canonicalize(std::move(atoms), std::move(weights), nu.space());
}

double tail_cost(const DiscreteMeasure& nu, const Point& x0, double radius, const CostSpec& cost) {
  double s = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    if (evaluate(cost, nu.space(), x0, nu.atom(i)) > radius)
      s += evaluate(cost, nu.space(), nu.atom(i), x0) * nu.weight(i);
  }
  return s;
}

Box bounding_box(std::span<const DiscreteMeasure> measures) {
  if (measures.empty()) throw Error(ErrorCode::InvalidArgument, "bounding box of no measures");
  const GroundSpace& space = measures.front().space();
  if (!space.is_euclidean()) throw Error(ErrorCode::SpaceMismatch, "bounding box needs a euclidean space");
  const std::size_t d = space.dimension();
  Box box{std::vector<double>(d, INFINITY), std::vector<double>(d, -INFINITY)};
  for (const auto& m : measures)
    for (const auto& x : m.atoms())
      for (std::size_t k = 0; k < d; ++k) {
        box.lo[k] = std::min(box.lo[k], x[k]);
        box.hi[k] = std::max(box.hi[k], x[k]);
      }
  return box;
}

}  // namespace mkbary
