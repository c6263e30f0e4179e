#include "mkbary/consistency.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "mkbary/error.hpp"
#include "mkbary/parallel.hpp"
#include "mkbary/random.hpp"
#include "mkbary/transport.hpp"

namespace mkbary {

MetaDistribution::MetaDistribution(std::vector<DiscreteMeasure> atoms, std::vector<double> probs) {
  if (atoms.size() != probs.size()) throw Error(ErrorCode::InvalidArgument, "atoms and probabilities differ in length");
  if (atoms.empty()) throw Error(ErrorCode::EmptySupport, "meta-distribution has no atoms");
  double total = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0) throw Error(ErrorCode::NegativeWeight, "negative or non-finite probability");
    total += p;
  }
  if (std::abs(total - 1.0) > kMassTolerance) throw Error(ErrorCode::MassNotOne, "probabilities do not sum to one");
  for (const auto& mu : atoms)
    if (!(mu.space() == atoms.front().space()))
      throw Error(ErrorCode::SpaceMismatch, "meta-atoms live on different spaces");

  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    auto same = std::find_if(atoms_.begin(), atoms_.end(), [&](const auto& a) { return approx_equal(a, atoms[i]); });
    if (same != atoms_.end()) {
      probs_[std::size_t(same - atoms_.begin())] += probs[i];
    } else {
      atoms_.push_back(std::move(atoms[i]));
      probs_.push_back(probs[i]);
    }
  }
  if (atoms_.empty()) throw Error(ErrorCode::EmptySupport, "all probabilities are zero");
  for (double& p : probs_) p /= total;
}

MetaDistribution MetaDistribution::dirac(DiscreteMeasure mu) { return MetaDistribution({std::move(mu)}, {1.0}); }

MetaDistribution MetaDistribution::empirical(std::span<const DiscreteMeasure> draws) {
  const std::vector<DiscreteMeasure> atoms(draws.begin(), draws.end());
  return uniform(atoms);
}

MetaDistribution MetaDistribution::uniform(std::vector<DiscreteMeasure> atoms) {
  std::vector<double> probs(atoms.size(), atoms.empty() ? 0.0 : 1.0 / double(atoms.size()));
  return MetaDistribution(std::move(atoms), std::move(probs));
}

MetaTransport meta_transport(const MetaDistribution& p, const MetaDistribution& q, const CostSpec& cost) {
  if (!(p.space() == q.space())) throw Error(ErrorCode::SpaceMismatch, "meta-distributions live on different spaces");
  MetaTransport out;
  out.ground = Matrix(p.size(), q.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) out.ground(i, j) = transport_cost(p.atom(i), q.atom(j), cost);
  auto sol = solve_transport_lp(p.probs(), q.probs(), out.ground);
  out.value = sol.objective;
  out.coupling = std::move(sol.coupling);
  out.gap = sol.gap;
  return out;
}

double meta_distance(const MetaDistribution& p, const MetaDistribution& q, const CostSpec& cost) {
  return meta_transport(p, q, cost).value;
}

DiscreteMeasure generate_random_measure(std::uint64_t seed, const GeneratorSpec& spec) {
  const std::size_t dim = spec.box.lo.size();
  if (dim == 0 || spec.box.hi.size() != dim) throw Error(ErrorCode::InvalidArgument, "generator box is malformed");
  for (std::size_t d = 0; d < dim; ++d)
    if (!(spec.box.lo[d] <= spec.box.hi[d])) throw Error(ErrorCode::InvalidArgument, "generator box has lo > hi");
  if (spec.max_atoms == 0) throw Error(ErrorCode::InvalidArgument, "max_atoms must be positive");

  Rng rng(seed);
  const std::size_t k = rng.uniform_int(1, spec.max_atoms);
  std::vector<Point> atoms(k, Point(dim));
  std::vector<double> weights(k);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t d = 0; d < dim; ++d) atoms[i][d] = rng.uniform(spec.box.lo[d], spec.box.hi[d]);
    weights[i] = rng.exponential();
    total += weights[i];
  }
  for (double& w : weights) w /= total;
  return DiscreteMeasure::canonicalize(std::move(atoms), std::move(weights), GroundSpace::euclidean(dim));
}

MetaDistribution generate_population(std::size_t count, std::uint64_t seed, const GeneratorSpec& spec) {
  std::vector<DiscreteMeasure> atoms;
  for (std::size_t i = 0; i < count; ++i) atoms.push_back(generate_random_measure(derive_seed(seed, i), spec));
  return MetaDistribution::uniform(std::move(atoms));
}

std::vector<Point> lattice(const Box& box, const std::vector<std::size_t>& points_per_axis) {
  const std::size_t dim = box.lo.size();
  if (dim == 0 || box.hi.size() != dim || points_per_axis.size() != dim)
    throw Error(ErrorCode::InvalidArgument, "lattice box and axis counts disagree");
  std::vector<std::vector<double>> axes(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    const std::size_t k = points_per_axis[d];
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "lattice axis needs at least one point");
    for (std::size_t t = 0; t < k; ++t)
      axes[d].push_back(k == 1 ? 0.5 * (box.lo[d] + box.hi[d])
                               : box.lo[d] + (box.hi[d] - box.lo[d]) * double(t) / double(k - 1));
  }
  std::vector<Point> out;
  std::vector<std::size_t> idx(dim, 0);
  while (true) {
    Point p(dim);
    for (std::size_t d = 0; d < dim; ++d) p[d] = axes[d][idx[d]];
    out.push_back(std::move(p));
    std::size_t d = dim;
    while (d > 0) {
      --d;
      if (++idx[d] < axes[d].size()) break;
      idx[d] = 0;
      if (d == 0) return out;
    }
  }
}

BarycenterResult barycenter_of(const MetaDistribution& p, const CostSpec& cost, const ConstraintSpec& constraint) {
  std::vector<WeightedInput> inputs;
  for (std::size_t i = 0; i < p.size(); ++i) inputs.push_back({p.atom(i), p.probs()[i]});
  const BarycenterProblem problem(std::move(inputs), cost, constraint.kind, constraint.candidates,
                                  constraint.atom_budget);
  switch (constraint.kind) {
    case BarycenterProblem::Constraint::SimplexOver: return barycenter_fixed_support(problem);
    case BarycenterProblem::Constraint::Free: return barycenter_free_support(problem, constraint.init_seed);
    case BarycenterProblem::Constraint::Quantile1d: return barycenter_quantile_1d(problem);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown constraint");
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::vector<DiscreteMeasure> draw_sample(const MetaDistribution& population, std::size_t n, std::uint64_t seed,
                                         bool stratified) {
  std::vector<DiscreteMeasure> draws;
  if (stratified) {
    for (std::size_t i = 0; i < population.size(); ++i) {
      const double want = double(n) * population.probs()[i];
      const double copies = std::round(want);
      if (std::abs(want - copies) > 1e-9)
        throw Error(ErrorCode::InvalidArgument, "stratified sampling needs n * p_i to be integers");
      for (std::size_t c = 0; c < std::size_t(copies); ++c) draws.push_back(population.atom(i));
    }
    return draws;
  }
  Rng rng(seed);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t pick = population.size() - 1;
    for (std::size_t i = 0; i < population.size(); ++i) {
      acc += population.probs()[i];
      if (u < acc) {
        pick = i;
        break;
      }
    }
    draws.push_back(population.atom(pick));
  }
  return draws;
}

}  // namespace

LlnReport lln_experiment(const LlnConfig& config) {
  if (config.n_grid.empty() || config.seeds.empty())
    throw Error(ErrorCode::InvalidArgument, "n_grid and seeds must be nonempty");
  for (std::size_t n : config.n_grid)
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "sample sizes must be positive");

  const BarycenterResult target = barycenter_of(config.population, config.cost, config.constraint);
  LlnReport report{target.measure, target.multiple_optima, {}, {}, 0.0, true};

  const std::size_t runs = config.n_grid.size() * config.seeds.size();
  report.records.resize(runs);
  parallel_for(runs, config.jobs, [&](std::size_t r) {
    LlnRecord& rec = report.records[r];
    rec.n = config.n_grid[r / config.seeds.size()];
    rec.seed = config.seeds[r % config.seeds.size()];
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto draws = draw_sample(config.population, rec.n, derive_seed(rec.seed, rec.n), config.stratified);
      const auto empirical = MetaDistribution::empirical(draws);
      const BarycenterResult bary = barycenter_of(empirical, config.cost, config.constraint);
      rec.J_bar = transport_cost(bary.measure, target.measure, config.cost);
      rec.meta = meta_distance(empirical, config.population, config.cost);
      rec.multiple_optima = bary.multiple_optima;
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
    rec.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });

  for (std::size_t g = 0; g < config.n_grid.size(); ++g) {
    std::vector<double> js, metas;
    for (std::size_t s = 0; s < config.seeds.size(); ++s) {
      const LlnRecord& rec = report.records[g * config.seeds.size() + s];
      if (!rec.error.empty()) {
        report.complete = false;
        continue;
      }
      js.push_back(rec.J_bar);
      metas.push_back(rec.meta);
    }
    report.summary.push_back({config.n_grid[g], median(js), median(metas)});
  }
  const auto smallest = std::min_element(report.summary.begin(), report.summary.end(),
                                         [](const auto& a, const auto& b) { return a.n < b.n; });
  const auto largest = std::max_element(report.summary.begin(), report.summary.end(),
                                        [](const auto& a, const auto& b) { return a.n < b.n; });
  if (smallest->median_J > 0.0)
    report.decay_ratio = largest->median_J / smallest->median_J;
  else
    report.decay_ratio = largest->median_J > 0.0 ? INFINITY : 0.0;
  return report;
}

MetaDistribution jitter(const MetaDistribution& p, double delta, std::uint64_t seed) {
  if (!(delta >= 0.0)) throw Error(ErrorCode::InvalidArgument, "jitter scale must be nonnegative");
  if (!p.space().is_euclidean()) throw Error(ErrorCode::InvalidArgument, "jitter needs a Euclidean space");
  std::vector<DiscreteMeasure> moved;
  for (std::size_t i = 0; i < p.size(); ++i) {
    Rng rng(derive_seed(seed, i));
    const DiscreteMeasure& mu = p.atom(i);
    std::vector<Point> atoms(mu.atoms());
    for (auto& x : atoms)
      for (double& v : x) v += delta * rng.uniform(-1.0, 1.0);
    moved.push_back(DiscreteMeasure::canonicalize(std::move(atoms),
                                                  std::vector<double>(mu.weights().begin(), mu.weights().end()),
                                                  mu.space()));
  }
  return MetaDistribution(std::move(moved), p.probs());
}

PerturbationReport perturbation_experiment(const PerturbationConfig& config) {
  if (config.deltas.empty()) throw Error(ErrorCode::InvalidArgument, "delta grid is empty");
  const BarycenterResult target = barycenter_of(config.population, config.cost, config.constraint);

  std::vector<double> deltas = config.deltas;
  std::sort(deltas.begin(), deltas.end());
  PerturbationReport report;
  bool stable = true;
  for (double delta : deltas) {
    const MetaDistribution moved = jitter(config.population, delta, config.seed);
    const BarycenterResult bary = barycenter_of(moved, config.cost, config.constraint);
    PerturbationRow row{delta, meta_distance(moved, config.population, config.cost),
                        transport_cost(bary.measure, target.measure, config.cost)};
    stable = stable && row.J_bary <= config.epsilon;
    if (stable) report.threshold = delta;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace mkbary
