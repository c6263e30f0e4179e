#include "mkbary/topology.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mkbary/error.hpp"

namespace mkbary {

double weak_proxy_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (!(mu.space() == nu.space())) throw Error(ErrorCode::SpaceMismatch, "measures live on different spaces");
  Matrix c(mu.size(), nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t j = 0; j < nu.size(); ++j) c(i, j) = std::min(mu.space().distance(mu.atom(i), nu.atom(j)), 1.0);
  return solve_transport_lp(mu.weights(), nu.weights(), c).objective;
}

std::string to_string(SequenceDiagnostics::Verdict v) {
  switch (v) {
    case SequenceDiagnostics::Verdict::ConsistentWithJConvergence: return "consistent_with_J_convergence";
    case SequenceDiagnostics::Verdict::WeakOnly: return "weak_only";
    case SequenceDiagnostics::Verdict::Divergent: return "divergent";
  }
  return "unknown";
}

SequenceDiagnostics check_convergence(const std::vector<DiscreteMeasure>& sequence, const DiscreteMeasure& limit,
                                      const DiscreteMeasure& reference, const CostSpec& cost,
                                      std::vector<double> n_values, double tolerance) {
  if (sequence.empty()) throw Error(ErrorCode::InvalidArgument, "sequence is empty");
  if (n_values.empty())
    for (std::size_t k = 0; k < sequence.size(); ++k) n_values.push_back(double(k + 1));
  if (n_values.size() != sequence.size())
    throw Error(ErrorCode::InvalidArgument, "n_values and sequence lengths differ");

  SequenceDiagnostics d;
  d.n_values = std::move(n_values);
  d.reference_limit = transport_cost(reference, limit, cost);
  for (const auto& nu : sequence) {
    d.J_forward.push_back(transport_cost(limit, nu, cost));
    d.J_backward.push_back(transport_cost(nu, limit, cost));
    d.weak_proxy.push_back(weak_proxy_distance(nu, limit));
    d.reference_J.push_back(transport_cost(reference, nu, cost));
  }

  const std::size_t tail = (sequence.size() + 2) / 3;
  bool weak = true, strong = true;
  for (std::size_t k = sequence.size() - tail; k < sequence.size(); ++k) {
    weak = weak && d.weak_proxy[k] <= tolerance;
    strong = strong && std::abs(d.reference_J[k] - d.reference_limit) <= tolerance;
  }
  d.verdict = weak && strong ? SequenceDiagnostics::Verdict::ConsistentWithJConvergence
              : weak         ? SequenceDiagnostics::Verdict::WeakOnly
                             : SequenceDiagnostics::Verdict::Divergent;
  return d;
}

void write_diagnostics_csv(std::ostream& out, const SequenceDiagnostics& d) {
  out << "n,J_forward,J_backward,weak_proxy,reference_J\n";
  char line[160];
  for (std::size_t k = 0; k < d.n_values.size(); ++k) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g\n", d.n_values[k], d.J_forward[k],
                  d.J_backward[k], d.weak_proxy[k], d.reference_J[k]);
    out << line;
  }
}

DiscreteMeasure escaping_mass(double n) {
  if (!(n >= 1.0)) throw Error(ErrorCode::InvalidArgument, "escaping-mass index must be >= 1");
  return DiscreteMeasure::canonicalize({{0.0}, {n}}, {1.0 - 1.0 / n, 1.0 / n}, GroundSpace::euclidean(1));
}

TruncatedPlan truncate_plan(const TransportPlan& gamma, const Point& x0, double radius, const CostSpec& cost) {
  const DiscreteMeasure& mu = gamma.source;
  const DiscreteMeasure& nu = gamma.target;
  if (!(mu.space() == nu.space())) throw Error(ErrorCode::SpaceMismatch, "plan marginals live on different spaces");
  const GroundSpace& space = nu.space();
  const std::size_t m = mu.size(), n = nu.size();

  std::vector<double> hx(m), hy(n);
  for (std::size_t i = 0; i < m; ++i) hx[i] = ball_cutoff(cost, space, x0, radius, mu.atom(i));
  for (std::size_t j = 0; j < n; ++j) hy[j] = ball_cutoff(cost, space, x0, radius, nu.atom(j));

  // kept(i, j) = gamma - lambda stays at (x_i, y_j); lambda(i, j) moves to (y_j, y_j).
  Matrix kept(m, n), lambda(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      lambda(i, j) = hx[i] * hy[j] * gamma.coupling(i, j);
      kept(i, j) = gamma.coupling(i, j) - lambda(i, j);
    }

  const Matrix c = cost_matrix(cost, mu, nu);
  TruncatedPlan out{mu, gamma, 0.0, 0.0};
  out.truncated_cost = plan_cost(lambda, c);

  std::vector<Point> atoms(mu.atoms());
  atoms.insert(atoms.end(), nu.atoms().begin(), nu.atoms().end());
  std::vector<double> weights(kept.row_sums());
  const auto moved = lambda.col_sums();
  weights.insert(weights.end(), moved.begin(), moved.end());
  double total = 0.0;
  for (double w : weights) total += w;
  for (double& w : weights) w /= total;
  DiscreteMeasure nu_tilde = DiscreteMeasure::canonicalize(atoms, weights, space);

  const auto index_in = [&](const Point& x) {
    for (std::size_t a = 0; a < nu_tilde.size(); ++a)
      if (points_equal(nu_tilde.atom(a), x)) return a;
    return nu_tilde.size();
  };
  Matrix coupling(nu_tilde.size(), n);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t row = index_in(mu.atom(i));
    for (std::size_t j = 0; j < n; ++j)
      if (kept(i, j) > 0.0) coupling(row, j) += kept(i, j);
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (moved[j] <= 0.0) continue;
    coupling(index_in(nu.atom(j)), j) += moved[j];
  }

  const double objective = plan_cost(coupling, cost_matrix(cost, nu_tilde, nu));
  out.plan = TransportPlan{nu_tilde, nu, std::move(coupling), objective, std::nullopt, 0.0};
  out.nu_tilde = std::move(nu_tilde);
  out.cost_drop = objective;
  return out;
}

double uniform_tail_radius(std::span<const DiscreteMeasure> family, const Point& x0, double epsilon,
                           const CostSpec& cost) {
  if (family.empty()) throw Error(ErrorCode::InvalidArgument, "family is empty");
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be nonnegative");
  // tail_cost only changes at the cost levels of the atoms.
  std::vector<double> levels{0.0};
  for (const auto& nu : family)
    for (const auto& x : nu.atoms()) levels.push_back(evaluate(cost, nu.space(), x0, x));
  std::sort(levels.begin(), levels.end());
  for (double r : levels) {
    double worst = 0.0;
    for (const auto& nu : family) worst = std::max(worst, tail_cost(nu, x0, std::max(r, 1e-300), cost));
    if (worst <= epsilon) return r;
  }
  return levels.back();
}

}  // namespace mkbary
