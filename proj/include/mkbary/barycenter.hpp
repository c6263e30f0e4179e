#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mkbary/costs.hpp"
#include "mkbary/matrix.hpp"
#include "mkbary/measures.hpp"

namespace mkbary {

struct WeightedInput {
  DiscreteMeasure measure;
  double lambda = 1.0;
};

/// Weighted family of measures plus the set the barycenter is sought in.
class BarycenterProblem {
 public:
  enum class Constraint { Free, SimplexOver, Quantile1d };

  /// Normalizes the lambdas to sum to one. `candidates` is required for
  /// SimplexOver and must be duplicate-free; `atom_budget` is the k of Free.
  BarycenterProblem(std::vector<WeightedInput> inputs, CostSpec cost, Constraint constraint,
                    std::vector<Point> candidates = {}, std::size_t atom_budget = 0);

  const std::vector<WeightedInput>& inputs() const noexcept { return inputs_; }
  const CostSpec& cost() const noexcept { return cost_; }
  const GroundSpace& space() const noexcept { return inputs_.front().measure.space(); }
  Constraint constraint() const noexcept { return constraint_; }
  const std::vector<Point>& candidates() const noexcept { return candidates_; }
  std::size_t atom_budget() const noexcept { return atom_budget_; }

 private:
  std::vector<WeightedInput> inputs_;
  CostSpec cost_;
  Constraint constraint_;
  std::vector<Point> candidates_;
  std::size_t atom_budget_;
};

std::string to_string(BarycenterProblem::Constraint c);

struct Certificate {
  enum class Kind {
    LpOptimal,        ///< value = duality gap of the joint LP
    LocalStationary,  ///< value = last relative objective decrease
    QuantileExact,    ///< value = |formula objective - recomputed objective|
  };
  Kind kind = Kind::LpOptimal;
  double value = 0.0;
};

std::string to_string(Certificate::Kind k);

struct TraceEntry {
  std::size_t iteration = 0;
  double objective = 0.0;
};

struct BarycenterResult {
  DiscreteMeasure measure;
  double objective = 0.0;
  std::vector<TraceEntry> trace;
  Certificate certificate;
  /// A second optimal vertex with different weights was found.
  bool multiple_optima = false;
};

/// Sum of lambda_i J(mu_i, nu).
double objective(const DiscreteMeasure& nu, const BarycenterProblem& problem);

/// Optimal weights over a fixed candidate set, with the per-input plans.
struct FixedSupportSolution {
  std::vector<double> weights;
  /// plans[i](j, k): mass from atom j of input i to candidate k.
  std::vector<Matrix> plans;
  double objective = 0.0;
  double gap = 0.0;
  bool multiple_optima = false;
};

/// Joint LP: minimize sum_i lambda_i <C_i, gamma_i> over plans whose rows
/// match mu_i and whose columns all equal one shared weight vector w.
FixedSupportSolution solve_fixed_support(const std::vector<WeightedInput>& inputs, const CostSpec& cost,
                                         const std::vector<Point>& candidates);

/// Global optimum over measures supported on the problem's candidates.
BarycenterResult barycenter_fixed_support(const BarycenterProblem& problem);

/// Alternating minimization over atom positions and weights for convex
/// translation costs on a Euclidean space. Atoms that lose all mass are
/// dropped. Starts from farthest-point sampling of the pooled input atoms.
BarycenterResult barycenter_free_support(const BarycenterProblem& problem, std::uint64_t init_seed = 0);

/// Exact 1-D barycenter from quantile functions, for convex translation costs.
BarycenterResult barycenter_quantile_1d(const BarycenterProblem& problem);

/// argmin_m sum_i w_i g(x_i - m) on the line; weighted mean for u^2, weighted
/// median (midpoint of the argmin interval) for |u|, ternary search otherwise.
double scalar_argmin(const CostSpec& cost, const std::vector<double>& xs, const std::vector<double>& ws);

}  // namespace mkbary
