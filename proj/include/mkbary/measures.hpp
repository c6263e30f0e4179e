#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace mkbary {

class CostSpec;

/// A point of a ground space. Euclidean points carry their coordinates;
/// points of a finite space are one-element vectors holding the index.
using Point = std::vector<double>;

/// Coordinates closer than this are the same atom.
inline constexpr double kAtomTolerance = 1e-12;
/// Allowed deviation of the total mass from one on construction.
inline constexpr double kMassTolerance = 1e-9;

bool points_equal(const Point& a, const Point& b, double tol = kAtomTolerance);

/// Lexicographic order on coordinates.
bool point_less(const Point& a, const Point& b);

class GroundSpace {
 public:
  enum class Kind { Euclidean, Finite };

  static GroundSpace euclidean(std::size_t dim);
  /// `distances` must be a metric: symmetric, zero exactly on the diagonal,
  /// and satisfying the triangle inequality.
  static GroundSpace finite(const std::vector<std::vector<double>>& distances);

  Kind kind() const noexcept { return kind_; }
  bool is_euclidean() const noexcept { return kind_ == Kind::Euclidean; }
  bool is_finite() const noexcept { return kind_ == Kind::Finite; }

  /// Coordinate count of a point (1 for finite spaces).
  std::size_t dimension() const noexcept { return dim_; }
  /// Number of points of a finite space.
  std::size_t point_count() const noexcept { return n_; }

  bool contains(const Point& x) const;
  std::size_t index_of(const Point& x) const;
  /// Ground metric: Euclidean norm or the distance matrix.
  double distance(const Point& x, const Point& y) const;
  double distance(std::size_t i, std::size_t j) const { return (*rho_)[i * n_ + j]; }

  std::vector<std::vector<double>> distance_matrix() const;

  friend bool operator==(const GroundSpace& a, const GroundSpace& b);

 private:
  GroundSpace() = default;

  Kind kind_ = Kind::Euclidean;
  std::size_t dim_ = 1;
  std::size_t n_ = 0;
  std::shared_ptr<const std::vector<double>> rho_;
};

/// Finitely supported probability measure. Always canonical: atoms are
/// distinct, sorted lexicographically, and carry strictly positive weights
/// summing to one.
class DiscreteMeasure {
 public:
  /// Merges duplicate atoms, drops zero weights and renormalizes.
  /// Throws NegativeWeight, MassNotOne or EmptySupport.
  static DiscreteMeasure canonicalize(std::vector<Point> atoms, std::vector<double> weights,
                                      const GroundSpace& space);
  static DiscreteMeasure dirac(Point x, const GroundSpace& space);

  const GroundSpace& space() const noexcept { return space_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  const std::vector<Point>& atoms() const noexcept { return atoms_; }
  const Point& atom(std::size_t i) const { return atoms_[i]; }
  std::span<const double> weights() const noexcept { return weights_; }
  double weight(std::size_t i) const { return weights_[i]; }

  /// Integral of f against the measure.
  double integrate(const std::function<double(const Point&)>& f) const;

 private:
  DiscreteMeasure(GroundSpace space, std::vector<Point> atoms, std::vector<double> weights)
      : space_(std::move(space)), atoms_(std::move(atoms)), weights_(std::move(weights)) {}

  GroundSpace space_;
  std::vector<Point> atoms_;
  std::vector<double> weights_;
};

/// Same atoms (within kAtomTolerance) and weights within `tol`.
bool approx_equal(const DiscreteMeasure& a, const DiscreteMeasure& b, double tol = 1e-12);

DiscreteMeasure pushforward(const DiscreteMeasure& measure,
                            const std::function<Point(const Point&)>& map);

struct Restriction {
  double mass = 0.0;
  /// Normalized f⌊μ; empty when the mass vanishes.
  std::optional<DiscreteMeasure> measure;
};

/// Restriction f⌊μ of `measure` by a density with values in [0, 1].
Restriction restrict_and_mix(const DiscreteMeasure& measure,
                             const std::function<double(const Point&)>& density);

/// (1 - t) mu0 + t mu1.
DiscreteMeasure mixture(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1, double t);

/// Cutoff equal to 1 inside the cost ball of radius R about x0 and 0 beyond
/// radius R + 1, linear in between.
double ball_cutoff(const CostSpec& cost, const GroundSpace& space, const Point& x0, double radius,
                   const Point& x);

/// f_R⌊ν plus the displaced mass placed at x0.
DiscreteMeasure truncate_to_ball(const DiscreteMeasure& nu, const Point& x0, double radius,
                                 const CostSpec& cost);

/// Cost moment of ν about x0 carried by atoms with c(x0, x) > R.
double tail_cost(const DiscreteMeasure& nu, const Point& x0, double radius, const CostSpec& cost);

struct Box {
  std::vector<double> lo;
  std::vector<double> hi;
};

/// Coordinate-wise bounding box of all atoms. Euclidean measures only.
Box bounding_box(std::span<const DiscreteMeasure> measures);

}  // namespace mkbary
