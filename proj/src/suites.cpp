#include "mkbary/suites.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "mkbary/error.hpp"
#include "mkbary/parallel.hpp"
#include "mkbary/random.hpp"
#include "mkbary/topology.hpp"

namespace mkbary {

std::size_t SuiteReport::failures() const {
  return std::size_t(std::count_if(rows.begin(), rows.end(), [](const CheckRow& r) { return !r.pass; }));
}

std::string SuiteReport::rows_csv() const {
  std::string out = "check,instance,lhs,rhs,pass,witness\n";
  for (const auto& r : rows) {
    out += csv_field(r.check) + ',' + std::to_string(r.instance) + ',' + format_exact(r.lhs) + ',' +
           format_exact(r.rhs) + ',' + (r.pass ? "1" : "0") + ',' + csv_field(r.witness) + '\n';
  }
  return out;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"convexity", "triangle", "q-triangle", "criterion", "lln", "perturb"};
  return names;
}

namespace {

const char* kDefaults = R"({
  "convexity": {
    "seed": 1, "instances": 200, "interpolation_instances": 100,
    "t_values": [0, 0.25, 0.5, 0.75, 1], "slack": 1e-9,
    "generator": {"box": {"lo": [-1, -1], "hi": [1, 1]}, "max_atoms": 4},
    "costs": [{"kind": "metric_power", "p": 1}, {"kind": "metric_power", "p": 2},
              {"kind": "metric_power", "p": 0.5}]
  },
  "triangle": {
    "seed": 2, "instances": 200, "slack": 1e-9,
    "generator": {"box": {"lo": [-1, -1], "hi": [1, 1]}, "max_atoms": 4},
    "cost": {"kind": "metric_power", "p": 2}
  },
  "q-triangle": {
    "seed": 3, "instances": 200, "slack": 1e-9,
    "generator": {"box": {"lo": [-1, -1], "hi": [1, 1]}, "max_atoms": 4},
    "costs": [{"kind": "norm_power", "p": 1}, {"kind": "norm_power", "p": 2}, {"kind": "norm_power", "p": 4}]
  },
  "criterion": {
    "seed": 5, "tolerance": 1e-6,
    "cost": {"kind": "metric_power", "p": 2},
    "n_values": [10, 100, 1000, 10000, 100000, 1000000, 10000000, 100000000, 1000000000],
    "truncation": {"families": 5, "radii": 30, "radius_step": 5,
                   "generator": {"box": {"lo": [-10], "hi": [10]}, "max_atoms": 5}}
  },
  "lln": {
    "population": {"generator": {"box": {"lo": [0, 0], "hi": [1, 1]}, "max_atoms": 4, "count": 4, "seed": 9}},
    "n_grid": [4, 16, 64],
    "seeds": [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20],
    "constraint": {"kind": "simplex_over", "grid": {"box": {"lo": [0, 0], "hi": [1, 1]}, "points": [9, 9]}},
    "cost": {"kind": "metric_power", "p": 2},
    "stratified": false, "max_decay_ratio": 0.5
  },
  "perturb": {
    "population": {"generator": {"box": {"lo": [0.2, 0.2], "hi": [0.8, 0.8]}, "max_atoms": 1, "count": 4, "seed": 11}},
    "deltas": [0, 0.01, 0.05, 0.1],
    "constraint": {"kind": "simplex_over", "grid": {"box": {"lo": [0, 0], "hi": [1, 1]}, "points": [9, 9]}},
    "cost": {"kind": "metric_power", "p": 2},
    "seed": 12, "epsilon": 0.05, "zero_tolerance": 1e-9
  }
})";

using RowFn = std::function<std::vector<CheckRow>(std::size_t)>;

std::vector<CheckRow> run_instances(std::size_t count, std::size_t jobs, const RowFn& fn) {
  std::vector<std::vector<CheckRow>> slots(count);
  parallel_for(count, jobs, [&](std::size_t i) { slots[i] = fn(i); });
  std::vector<CheckRow> rows;
  for (auto& s : slots)
    for (auto& r : s) rows.push_back(std::move(r));
  return rows;
}

CheckRow leq(std::string check, std::size_t instance, double lhs, double rhs, double slack,
             const std::function<Json()>& witness) {
  CheckRow row{std::move(check), instance, lhs, rhs, lhs <= rhs + slack * (1.0 + std::abs(rhs)), {}};
  if (!row.pass) row.witness = witness().dump();
  return row;
}

CheckRow flag(std::string check, std::size_t instance, bool ok, double lhs, double rhs,
              const std::function<Json()>& witness) {
  CheckRow row{std::move(check), instance, lhs, rhs, ok, {}};
  if (!ok) row.witness = witness().dump();
  return row;
}

GeneratorSpec generator_from(const Json& j) {
  return GeneratorSpec{box_from_json(j.at("box")), j.at("max_atoms").get<std::size_t>()};
}

Json measures_json(std::initializer_list<const DiscreteMeasure*> ms) {
  Json out = Json::array();
  for (const auto* m : ms) out.push_back(measure_to_json(*m));
  return out;
}

std::vector<DiscreteMeasure> draw_measures(std::uint64_t seed, std::size_t count, const GeneratorSpec& gen) {
  std::vector<DiscreteMeasure> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(generate_random_measure(derive_seed(seed, k), gen));
  return out;
}

std::string diagnostics_csv(const SequenceDiagnostics& d) {
  std::ostringstream out;
  write_diagnostics_csv(out, d);
  return out.str();
}

SuiteReport convexity_suite(Json config, const SuiteOptions& opt) {
  const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
  const std::size_t instances = config.at("instances").get<std::size_t>();
  const std::size_t interp = config.at("interpolation_instances").get<std::size_t>();
  const auto ts = config.at("t_values").get<std::vector<double>>();
  const double slack = config.at("slack").get<double>();
  const GeneratorSpec gen = generator_from(config.at("generator"));
  std::vector<CostSpec> costs;
  for (const auto& c : config.at("costs")) costs.push_back(cost_from_json(c));
  if (costs.empty()) throw Error(ErrorCode::ParseError, "costs must be nonempty");
  for (double t : ts)
    if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::ParseError, "t_values must lie in [0, 1]");

  SuiteReport report{"convexity", config, {}, {}};
  report.rows = run_instances(instances, opt.jobs, [&](std::size_t i) {
    const CostSpec& cost = costs[i % costs.size()];
    const auto m = draw_measures(derive_seed(seed, i), 4, gen);
    const double j0 = transport_cost(m[0], m[2], cost), j1 = transport_cost(m[1], m[3], cost);
    std::vector<CheckRow> rows;
    for (double t : ts) {
      const double lhs = transport_cost(mixture(m[0], m[1], t), mixture(m[2], m[3], t), cost);
      rows.push_back(leq("convexity", i, lhs, (1.0 - t) * j0 + t * j1, slack, [&] {
        return Json{{"cost", cost_to_json(cost)}, {"t", t}, {"measures", measures_json({&m[0], &m[1], &m[2], &m[3]})}};
      }));
    }
    return rows;
  });
  auto interp_rows = run_instances(interp, opt.jobs, [&](std::size_t i) {
    const CostSpec& cost = costs[i % costs.size()];
    const auto m = draw_measures(derive_seed(seed, instances + i), 2, gen);
    std::vector<CheckRow> rows;
    for (std::size_t a = 0; a < ts.size(); ++a)
      for (std::size_t b = 0; b < ts.size(); ++b) {
        if (!(ts[a] < ts[b])) continue;
        const auto r = interpolation_cost(m[0], m[1], ts[a], ts[b], cost);
        rows.push_back(leq("interpolation", i, r.cost, r.bound, slack, [&] {
          return Json{{"cost", cost_to_json(cost)}, {"t", ts[a]}, {"t_prime", ts[b]},
                      {"measures", measures_json({&m[0], &m[1]})}};
        }));
      }
    return rows;
  });
  std::move(interp_rows.begin(), interp_rows.end(), std::back_inserter(report.rows));
  return report;
}

SuiteReport triangle_suite(Json config, const SuiteOptions& opt) {
  const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
  const std::size_t instances = config.at("instances").get<std::size_t>();
  const double slack = config.at("slack").get<double>();
  const GeneratorSpec gen = generator_from(config.at("generator"));
  const CostSpec cost = cost_from_json(config.at("cost"));
  const GrowthConstants gc = growth_constants(cost, SampleOptions{.box = gen.box, .dim = gen.box.lo.size()});
  config["resolved_constants"] = constants_to_json(gc);

  SuiteReport report{"triangle", config, {}, {}};
  report.rows = run_instances(instances, opt.jobs, [&](std::size_t i) {
    const auto m = draw_measures(derive_seed(seed, i), 3, gen);
    const DiscreteMeasure& mu = m[0];
    const DiscreteMeasure& nu = m[1];
    const DiscreteMeasure& lambda = m[2];
    const TransportPlan g1 = solve_transport(mu, lambda, cost);
    const TransportPlan g2 = solve_transport(nu, lambda, cost);
    const ThreeCoupling sigma = glue(g1, g2);
    const double j = transport_cost(mu, nu, cost);
    const double k_xy = plan_cost(sigma.marginal_xy(), cost_matrix(cost, mu, nu));
    const double bound = gc.A + gc.B * (g1.objective + g2.objective);
    const auto witness = [&] { return Json{{"cost", cost_to_json(cost)}, {"measures", measures_json({&mu, &nu, &lambda})}}; };
    return std::vector<CheckRow>{leq("weak_triangle", i, j, bound, slack, witness),
                                 leq("glue_upper", i, j, k_xy, slack, witness),
                                 leq("glue_bound", i, k_xy, bound, slack, witness)};
  });
  return report;
}

SuiteReport q_triangle_suite(Json config, const SuiteOptions& opt) {
  const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
  const std::size_t instances = config.at("instances").get<std::size_t>();
  const double slack = config.at("slack").get<double>();
  const GeneratorSpec gen = generator_from(config.at("generator"));
  const std::size_t dim = gen.box.lo.size();
  std::vector<CostSpec> costs;
  for (const auto& c : config.at("costs")) costs.push_back(cost_from_json(c));

  Json resolved = Json::array();
  SuiteReport report{"q-triangle", {}, {}, {}};
  for (std::size_t ci = 0; ci < costs.size(); ++ci) {
    const CostSpec& cost = costs[ci];
    const GrowthConstants gc = growth_constants(cost, SampleOptions{.box = gen.box, .dim = dim});
    Json r = cost_to_json(cost);
    r["resolved_q"] = gc.q;
    resolved.push_back(r);
    const std::string name = "q_triangle[" + std::to_string(ci) + "]";
    const auto check = [&](std::size_t i, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                           const DiscreteMeasure& lambda) {
      const double lhs = std::pow(transport_cost(mu, nu, cost), 1.0 / gc.q);
      const double rhs =
          std::pow(transport_cost(mu, lambda, cost), 1.0 / gc.q) + std::pow(transport_cost(lambda, nu, cost), 1.0 / gc.q);
      return leq(name, i, lhs, rhs, slack, [&] {
        return Json{{"cost", cost_to_json(cost)}, {"q", gc.q}, {"measures", measures_json({&mu, &nu, &lambda})}};
      });
    };
    auto rows = run_instances(instances, opt.jobs, [&](std::size_t i) {
      const auto m = draw_measures(derive_seed(seed, ci * instances + i), 3, gen);
      return std::vector<CheckRow>{check(i, m[0], m[1], m[2])};
    });
    // Collinear Diracs with lambda at the midpoint: the tightest case for q near 1.
    const GroundSpace space = GroundSpace::euclidean(dim);
    Point a(dim, 0.0), b(dim, 0.0), c(dim, 0.0);
    b[0] = 2.0;
    c[0] = 1.0;
    rows.push_back(check(instances, DiscreteMeasure::dirac(a, space), DiscreteMeasure::dirac(b, space),
                         DiscreteMeasure::dirac(c, space)));
    std::move(rows.begin(), rows.end(), std::back_inserter(report.rows));
  }
  config["resolved"] = resolved;
  report.config = config;
  return report;
}

SuiteReport criterion_suite(Json config, const SuiteOptions& opt) {
  const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
  const double tol = config.at("tolerance").get<double>();
  const CostSpec cost = cost_from_json(config.at("cost"));
  const auto ns = config.at("n_values").get<std::vector<double>>();
  const Json& trunc = config.at("truncation");
  const std::size_t families = trunc.at("families").get<std::size_t>();
  const std::size_t radii = trunc.at("radii").get<std::size_t>();
  const double step = trunc.at("radius_step").get<double>();
  const GeneratorSpec gen = generator_from(trunc.at("generator"));
  if (ns.empty() || radii == 0 || !(step > 0.0)) throw Error(ErrorCode::ParseError, "n_values and radii must be nonempty");
  if (gen.box.lo.size() != 1) throw Error(ErrorCode::ParseError, "criterion suite runs on the line");

  SuiteReport report{"criterion", config, {}, {}};
  const auto strong_to_weak = [&](const std::string& family, const SequenceDiagnostics& d) {
    for (std::size_t k = 0; k < d.n_values.size(); ++k) {
      if (!(d.J_forward[k] < 1e-8)) continue;
      report.rows.push_back(leq("strong_to_weak[" + family + "]", k, d.weak_proxy[k], 1e-3, 0.0,
                                [&] { return Json{{"n", d.n_values[k]}, {"J_forward", d.J_forward[k]}}; }));
    }
  };

  const DiscreteMeasure origin = DiscreteMeasure::dirac({0.0}, GroundSpace::euclidean(1));
  std::vector<DiscreteMeasure> escaping;
  for (double n : ns) escaping.push_back(escaping_mass(n));
  const auto esc = check_convergence(escaping, origin, origin, cost, ns, tol);
  report.rows.push_back(flag("escaping_verdict", 0, esc.verdict == SequenceDiagnostics::Verdict::WeakOnly,
                             double(int(esc.verdict)), double(int(SequenceDiagnostics::Verdict::WeakOnly)),
                             [&] { return Json{{"verdict", to_string(esc.verdict)}}; }));
  for (std::size_t k = 0; k < ns.size(); ++k)
    report.rows.push_back(leq("escaping_reference_J", k, std::abs(esc.reference_J[k] - ns[k]), 1e-9 * (1.0 + ns[k]),
                              0.0, [&] { return Json{{"n", ns[k]}, {"reference_J", esc.reference_J[k]}}; }));
  strong_to_weak("escaping", esc);
  report.artifacts.push_back({"criterion_escaping.csv", diagnostics_csv(esc)});

  std::vector<std::optional<SequenceDiagnostics>> diags(families);
  std::vector<DiscreteMeasure> bases;
  for (std::size_t f = 0; f < families; ++f) bases.push_back(generate_random_measure(derive_seed(seed, f), gen));
  parallel_for(families, opt.jobs, [&](std::size_t f) {
    std::vector<DiscreteMeasure> seq;
    std::vector<double> rs;
    for (std::size_t r = 1; r <= radii; ++r) {
      rs.push_back(step * double(r));
      seq.push_back(truncate_to_ball(bases[f], {0.0}, rs.back(), cost));
    }
    diags[f] = check_convergence(seq, bases[f], origin, cost, rs, tol);
  });
  for (std::size_t f = 0; f < families; ++f) {
    const SequenceDiagnostics& d = *diags[f];
    const auto witness = [&] { return Json{{"verdict", to_string(d.verdict)}, {"measure", measure_to_json(bases[f])}}; };
    report.rows.push_back(flag("truncation_verdict", f,
                               d.verdict == SequenceDiagnostics::Verdict::ConsistentWithJConvergence,
                               double(int(d.verdict)),
                               double(int(SequenceDiagnostics::Verdict::ConsistentWithJConvergence)), witness));
    double worst = 0.0;
    for (std::size_t k = d.n_values.size() - (d.n_values.size() + 2) / 3; k < d.n_values.size(); ++k)
      worst = std::max({worst, d.J_forward[k], d.J_backward[k]});
    report.rows.push_back(leq("bounded_J_tracks", f, worst, tol, 0.0, witness));
    strong_to_weak("truncation_" + std::to_string(f), d);
    report.artifacts.push_back({"criterion_truncation_" + std::to_string(f) + ".csv", diagnostics_csv(d)});
  }
  return report;
}

ConstraintSpec constraint_for(const Json& config, const MetaDistribution& population) {
  return constraint_from_json(config.at("constraint"), population.space());
}

SuiteReport lln_suite(Json config, const SuiteOptions& opt) {
  if (opt.seed) {
    auto seeds = config.at("seeds").get<std::vector<std::uint64_t>>();
    for (std::size_t k = 0; k < seeds.size(); ++k) seeds[k] = *opt.seed + k;
    config["seeds"] = seeds;
  }
  const MetaDistribution population = meta_from_json(config.at("population"));
  LlnConfig lc{population,
               config.at("n_grid").get<std::vector<std::size_t>>(),
               config.at("seeds").get<std::vector<std::uint64_t>>(),
               constraint_for(config, population),
               cost_from_json(config.at("cost")),
               config.at("stratified").get<bool>(),
               opt.jobs};
  const double max_ratio = config.at("max_decay_ratio").get<double>();
  const LlnReport r = lln_experiment(lc);

  SuiteReport report{"lln", config, {}, {}};
  report.rows.push_back(flag("complete", 0, r.complete, r.complete ? 1.0 : 0.0, 1.0, [&] {
    Json errs = Json::array();
    for (const auto& rec : r.records)
      if (!rec.error.empty()) errs.push_back({{"n", rec.n}, {"seed", rec.seed}, {"error", rec.error}});
    return errs;
  }));
  const auto summary_json = [&] {
    Json s = Json::array();
    for (const auto& row : r.summary)
      s.push_back({{"n", row.n}, {"median_J", row.median_J}, {"median_meta", row.median_meta}});
    return s;
  };
  report.rows.push_back(leq("decay_ratio", 0, r.decay_ratio, max_ratio, 0.0, [&] { return summary_json(); }));
  std::vector<LlnSummaryRow> by_n = r.summary;
  std::stable_sort(by_n.begin(), by_n.end(), [](const auto& a, const auto& b) { return a.n < b.n; });
  for (std::size_t k = 1; k < by_n.size(); ++k)
    report.rows.push_back(flag("meta_median_decreasing", k, by_n[k].median_meta < by_n[k - 1].median_meta,
                               by_n[k].median_meta, by_n[k - 1].median_meta, [&] { return summary_json(); }));

  std::string csv = "n,seed,J_bar,meta,multiple_optima,error\n";
  for (const auto& rec : r.records)
    csv += std::to_string(rec.n) + ',' + std::to_string(rec.seed) + ',' + format_exact(rec.J_bar) + ',' +
           format_exact(rec.meta) + ',' + (rec.multiple_optima ? "1" : "0") + ',' + csv_field(rec.error) + '\n';
  report.artifacts.push_back({"lln_records.csv", csv});
  const Json summary{{"summary", summary_json()},
                     {"decay_ratio", r.decay_ratio},
                     {"complete", r.complete},
                     {"population_barycenter", measure_to_json(r.population_barycenter)},
                     {"population_multiple_optima", r.population_multiple_optima}};
  report.artifacts.push_back({"lln_summary.json", summary.dump(2) + "\n"});
  return report;
}

SuiteReport perturb_suite(Json config, const SuiteOptions& opt) {
  if (opt.seed) config["seed"] = *opt.seed;
  const MetaDistribution population = meta_from_json(config.at("population"));
  PerturbationConfig pc{population, config.at("deltas").get<std::vector<double>>(), constraint_for(config, population),
                        cost_from_json(config.at("cost"))};
  pc.seed = config.at("seed").get<std::uint64_t>();
  pc.epsilon = config.at("epsilon").get<double>();
  const double zero_tol = config.at("zero_tolerance").get<double>();
  const PerturbationReport r = perturbation_experiment(pc);

  SuiteReport report{"perturb", config, {}, {}};
  const auto tracks = [&] {
    Json t = Json::array();
    for (const auto& row : r.rows) t.push_back({{"delta", row.delta}, {"meta", row.meta}, {"J_bary", row.J_bary}});
    return t;
  };
  for (std::size_t k = 0; k < r.rows.size(); ++k) {
    const auto& row = r.rows[k];
    if (row.delta == 0.0) {
      report.rows.push_back(leq("zero_meta", k, row.meta, zero_tol, 0.0, tracks));
      report.rows.push_back(leq("zero_J", k, row.J_bary, zero_tol, 0.0, tracks));
    }
  }
  const bool dirac_population = std::all_of(population.atoms().begin(), population.atoms().end(),
                                            [](const DiscreteMeasure& m) { return m.size() == 1; });
  if (dirac_population)
    for (std::size_t k = 1; k < r.rows.size(); ++k)
      report.rows.push_back(leq("meta_nondecreasing", k, r.rows[k - 1].meta, r.rows[k].meta, 1e-12, tracks));

  std::string csv = "delta,meta,J_bary\n";
  for (const auto& row : r.rows)
    csv += format_exact(row.delta) + ',' + format_exact(row.meta) + ',' + format_exact(row.J_bary) + '\n';
  report.artifacts.push_back({"perturb_tracks.csv", csv});
  Json summary{{"epsilon", pc.epsilon}, {"threshold", nullptr}, {"dirac_population", dirac_population}};
  if (r.threshold) summary["threshold"] = *r.threshold;
  report.artifacts.push_back({"perturb_summary.json", summary.dump(2) + "\n"});
  return report;
}

}  // namespace

Json default_suite_config(const std::string& suite) {
  static const Json all = Json::parse(kDefaults);
  if (!all.contains(suite)) throw Error(ErrorCode::InvalidArgument, "unknown suite \"" + suite + "\"");
  return all.at(suite);
}

SuiteReport run_suite(const std::string& suite, const Json& overrides, const SuiteOptions& options) {
  Json config = default_suite_config(suite);
  if (!overrides.is_null()) {
    if (!overrides.is_object()) throw Error(ErrorCode::ParseError, "suite config must be a JSON object");
    config.merge_patch(overrides);
  }
  if (options.seed && config.contains("seed") && suite != "perturb") config["seed"] = *options.seed;
  try {
    if (suite == "convexity") return convexity_suite(config, options);
    if (suite == "triangle") return triangle_suite(config, options);
    if (suite == "q-triangle") return q_triangle_suite(config, options);
    if (suite == "criterion") return criterion_suite(config, options);
    if (suite == "lln") return lln_suite(config, options);
    return perturb_suite(config, options);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, "suite config: " + std::string(e.what()));
  }
}

}  // namespace mkbary
