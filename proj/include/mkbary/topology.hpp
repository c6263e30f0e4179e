#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mkbary/costs.hpp"
#include "mkbary/measures.hpp"
#include "mkbary/transport.hpp"

namespace mkbary {

/// Transport cost under min(rho, 1), rho the ground metric. Metrizes weak
/// convergence on uniformly bounded families.
double weak_proxy_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

struct SequenceDiagnostics {
  enum class Verdict { ConsistentWithJConvergence, WeakOnly, Divergent };

  std::vector<double> n_values;
  std::vector<double> J_forward;    ///< J(limit, nu_n)
  std::vector<double> J_backward;   ///< J(nu_n, limit)
  std::vector<double> weak_proxy;   ///< weak_proxy_distance(nu_n, limit)
  std::vector<double> reference_J;  ///< J(reference, nu_n)
  double reference_limit = 0.0;     ///< J(reference, limit)
  Verdict verdict = Verdict::Divergent;
};

std::string to_string(SequenceDiagnostics::Verdict v);

/// Tracks for a finite stretch of a sequence. The verdict looks at the last
/// ceil(N/3) entries: both the proxy and |J(reference, nu_n) - J(reference,
/// limit)| below `tolerance` gives ConsistentWithJConvergence, the proxy alone
/// gives WeakOnly. `n_values` defaults to 1..N.
SequenceDiagnostics check_convergence(const std::vector<DiscreteMeasure>& sequence, const DiscreteMeasure& limit,
                                      const DiscreteMeasure& reference, const CostSpec& cost,
                                      std::vector<double> n_values = {}, double tolerance = 1e-6);

/// Columns n, J_forward, J_backward, weak_proxy, reference_J.
void write_diagnostics_csv(std::ostream& out, const SequenceDiagnostics& d);

/// (1 - 1/n) delta_0 + (1/n) delta_n on the line.
DiscreteMeasure escaping_mass(double n);

struct TruncatedPlan {
  DiscreteMeasure nu_tilde;
  /// Plan in Pi(nu_tilde, target of the input plan).
  TransportPlan plan;
  double truncated_cost = 0.0;  ///< K(f_R . gamma)
  double cost_drop = 0.0;       ///< K(gamma) - K(f_R . gamma) = K(plan)
};

/// Replaces the part of gamma near x0 by its collapse onto the diagonal of
/// the target: gamma~ = gamma - f_R gamma + (y, y)_# (f_R gamma), with
/// f_R(x, y) = ball_cutoff(x) ball_cutoff(y).
TruncatedPlan truncate_plan(const TransportPlan& gamma, const Point& x0, double radius, const CostSpec& cost);

/// Smallest R with max over the family of tail_cost(nu, x0, R) <= epsilon.
double uniform_tail_radius(std::span<const DiscreteMeasure> family, const Point& x0, double epsilon,
                           const CostSpec& cost);

}  // namespace mkbary
