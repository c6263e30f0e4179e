#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mkbary/barycenter.hpp"
#include "mkbary/costs.hpp"
#include "mkbary/matrix.hpp"
#include "mkbary/measures.hpp"

namespace mkbary {

/// Finitely supported distribution over measures.
class MetaDistribution {
 public:
  /// Merges measures equal within 1e-12, drops zero probabilities and
  /// renormalizes. Throws NegativeWeight, MassNotOne, EmptySupport or
  /// SpaceMismatch.
  MetaDistribution(std::vector<DiscreteMeasure> atoms, std::vector<double> probs);

  static MetaDistribution dirac(DiscreteMeasure mu);
  /// (1/n) sum of delta_{draw}, repeated draws grouped.
  static MetaDistribution empirical(std::span<const DiscreteMeasure> draws);
  static MetaDistribution uniform(std::vector<DiscreteMeasure> atoms);

  std::size_t size() const noexcept { return atoms_.size(); }
  const std::vector<DiscreteMeasure>& atoms() const noexcept { return atoms_; }
  const DiscreteMeasure& atom(std::size_t i) const { return atoms_[i]; }
  const std::vector<double>& probs() const noexcept { return probs_; }
  const GroundSpace& space() const noexcept { return atoms_.front().space(); }

 private:
  std::vector<DiscreteMeasure> atoms_;
  std::vector<double> probs_;
};

struct MetaTransport {
  double value = 0.0;
  Matrix ground;    ///< J(P_i, P'_j)
  Matrix coupling;  ///< optimal outer plan
  double gap = 0.0;
};

/// Outer transport between meta-distributions with J as ground cost.
MetaTransport meta_transport(const MetaDistribution& p, const MetaDistribution& q, const CostSpec& cost);
double meta_distance(const MetaDistribution& p, const MetaDistribution& q, const CostSpec& cost);

struct GeneratorSpec {
  Box box;
  std::size_t max_atoms = 5;
};

/// Atom count uniform in [1, max_atoms], atoms uniform in the box, flat
/// Dirichlet weights. Deterministic in `seed`.
DiscreteMeasure generate_random_measure(std::uint64_t seed, const GeneratorSpec& spec);

/// Uniform meta-distribution over `count` generated measures; measure i uses
/// derive_seed(seed, i).
MetaDistribution generate_population(std::size_t count, std::uint64_t seed, const GeneratorSpec& spec);

/// Tensor grid with points_per_axis[d] equispaced points per axis (endpoints
/// included; a single point sits at the midpoint).
std::vector<Point> lattice(const Box& box, const std::vector<std::size_t>& points_per_axis);

/// Constraint set the barycenters are taken over.
struct ConstraintSpec {
  BarycenterProblem::Constraint kind = BarycenterProblem::Constraint::SimplexOver;
  std::vector<Point> candidates;
  std::size_t atom_budget = 0;
  std::uint64_t init_seed = 0;
};

/// Barycenter of a meta-distribution: lambdas are its probabilities.
BarycenterResult barycenter_of(const MetaDistribution& p, const CostSpec& cost, const ConstraintSpec& constraint);

struct LlnConfig {
  MetaDistribution population;
  std::vector<std::size_t> n_grid;
  std::vector<std::uint64_t> seeds;
  ConstraintSpec constraint;
  CostSpec cost;
  /// Draw round(n p_i) copies of each atom instead of sampling; requires
  /// every n p_i to be an integer.
  bool stratified = false;
  std::size_t jobs = 1;
};

struct LlnRecord {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double J_bar = 0.0;  ///< J(empirical barycenter, population barycenter)
  double meta = 0.0;   ///< meta_distance(P_n, population)
  double runtime_seconds = 0.0;
  bool multiple_optima = false;
  std::string error;  ///< nonempty when this record failed
};

struct LlnSummaryRow {
  std::size_t n = 0;
  double median_J = 0.0;
  double median_meta = 0.0;
};

struct LlnReport {
  DiscreteMeasure population_barycenter;
  bool population_multiple_optima = false;
  /// Ordered by n_grid, then seeds.
  std::vector<LlnRecord> records;
  std::vector<LlnSummaryRow> summary;
  /// median_J at the largest n over median_J at the smallest; 0 when both
  /// medians vanish.
  double decay_ratio = 0.0;
  bool complete = true;
};

LlnReport lln_experiment(const LlnConfig& config);

struct PerturbationConfig {
  MetaDistribution population;
  std::vector<double> deltas;
  ConstraintSpec constraint;
  CostSpec cost;
  std::uint64_t seed = 0;
  /// Tolerance used to report the largest stable delta.
  double epsilon = 0.05;
};

struct PerturbationRow {
  double delta = 0.0;
  double meta = 0.0;    ///< meta_distance(P_delta, P)
  double J_bary = 0.0;  ///< J(nu_delta, nu*)
};

struct PerturbationReport {
  std::vector<PerturbationRow> rows;
  /// Largest delta such that J_bary <= epsilon for it and every smaller delta.
  std::optional<double> threshold;
};

/// Moves every atom of every population measure by delta * u, with u uniform
/// in [-1, 1]^d drawn once per atom so all deltas share the same noise.
MetaDistribution jitter(const MetaDistribution& p, double delta, std::uint64_t seed);

PerturbationReport perturbation_experiment(const PerturbationConfig& config);

}  // namespace mkbary
