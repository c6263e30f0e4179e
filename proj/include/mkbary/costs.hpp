#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mkbary/matrix.hpp"
#include "mkbary/measures.hpp"

namespace mkbary {

/// User-supplied structural constants. Any subset may be present.
struct DeclaredConstants {
  std::optional<double> A;
  std::optional<double> B;
  std::optional<double> q;
};

/// Ground cost c(x, y).
///
/// Built-in kinds:
///  - metric_power:  c = rho^p for the space's metric rho (any space).
///  - norm_power:    c = g(x - y) with g(u) = |u|^p, p >= 1 (Euclidean only).
///  - custom:        c = g(x - y) for a user function g (Euclidean only,
///                   programmatic interface only).
///  - finite_matrix: c = values[i][j] on a finite space.
class CostSpec {
 public:
  enum class Kind { MetricPower, NormPower, Custom, FiniteMatrix };
  using Function = std::function<double(std::span<const double>)>;

  static CostSpec metric_power(double p);
  static CostSpec norm_power(double p);
  /// `g` must satisfy g(0) = 0 and g(u) > 0 for u != 0; checked on a sample.
  static CostSpec custom(Function g, std::size_t dim, bool convex, std::string name = "custom");
  static CostSpec finite_matrix(const std::vector<std::vector<double>>& values);

  CostSpec with_declared(DeclaredConstants constants) const;

  Kind kind() const noexcept { return kind_; }
  double exponent() const noexcept { return p_; }
  const std::string& name() const noexcept { return name_; }
  const std::optional<DeclaredConstants>& declared() const noexcept { return declared_; }
  const Matrix& values() const noexcept { return values_; }
  std::size_t custom_dimension() const noexcept { return dim_; }

  /// True when c(x, y) = g(x - y) on `space`.
  bool is_translation_invariant(const GroundSpace& space) const;
  /// True when c(x, y) = g(x - y) with convex g on `space`.
  bool is_convex_translation(const GroundSpace& space) const;
  /// g(u) for translation-invariant costs.
  double g(std::span<const double> u) const;
  /// Whether c(x, y) = c(y, x) is guaranteed.
  bool is_symmetric() const;

 private:
  CostSpec() = default;

  Kind kind_ = Kind::MetricPower;
  double p_ = 1.0;
  Function g_;
  std::size_t dim_ = 0;
  bool convex_ = false;
  std::string name_;
  Matrix values_;
  std::optional<DeclaredConstants> declared_;
};

/// Throws SpaceMismatch when the cost is not defined on `space`.
void check_cost_space(const CostSpec& cost, const GroundSpace& space);

double evaluate(const CostSpec& cost, const GroundSpace& space, const Point& x, const Point& y);

/// Entry (i, j) = c(atom_i(mu), atom_j(nu)).
Matrix cost_matrix(const CostSpec& cost, const DiscreteMeasure& mu, const DiscreteMeasure& nu);

struct GrowthConstants {
  enum class Provenance { Analytic, Declared, SampledLowerBound };

  double A = 0.0;
  double B = 1.0;
  double q = 3.0;
  double q0 = 1.0;
  Provenance provenance = Provenance::Analytic;
  /// Set when a sampled B fell below 1 and was raised to 1.
  bool clamped = false;
};

std::string to_string(GrowthConstants::Provenance p);

/// Deterministic sample region for constant estimation and verification.
struct SampleOptions {
  std::optional<Box> box;  ///< defaults to [-1, 1]^dim
  std::size_t dim = 1;
  std::size_t count = 10000;
  std::uint64_t seed = 0;
  double ratio_cap = 1e6;
};

/// q0 = ln(2B) / ln 2 and q = max(3B, q0).
void fill_exponents(GrowthConstants& constants);

GrowthConstants growth_constants(const CostSpec& cost, const SampleOptions& options = {});

/// Exhaustive constants for a cost on a finite space (A = 0, exact B).
GrowthConstants growth_constants(const CostSpec& cost, const GroundSpace& space);

struct RelaxedConstants {
  double epsilon = 0.0;
  double A_eps = 0.0;
  double C_eps = 1.0;
  /// Doubling depth used by the construction (0 for exhaustive finite).
  int k = 0;
  std::size_t triples_checked = 0;
};

/// Constants with c(x,y) <= A_eps + (1+eps) c(x,z) + C_eps c(y,z) (and the
/// mirrored variant), verified on the sample grid. Throws ConstructionFailed
/// with a witness triple if the grid exposes a violation.
RelaxedConstants relaxed_constants(const CostSpec& cost, double epsilon, const GroundSpace& space,
                                   const SampleOptions& options = {});

struct ConsistencyReport {
  bool passed = true;
  std::size_t pairs_checked = 0;
  std::vector<std::string> witnesses;
};

/// Checks c(x,y) = 0 iff x = y on all sample pairs and that c(x, x+hu) and
/// c(x+hu, x) vanish monotonically as h decreases.
ConsistencyReport consistency_check(const CostSpec& cost, const GroundSpace& space,
                                    std::span<const Point> sample);

/// Point `index` of the Halton sequence in `dims` dimensions, in [0, 1)^dims.
std::vector<double> halton(std::size_t index, std::size_t dims);

}  // namespace mkbary
