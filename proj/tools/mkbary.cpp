// mkbary: transport costs, barycenters and property suites from JSON files.
//
// Exit codes: 0 success, 1 a verify suite failed, 2 unreadable or invalid
// input, 3 numerical failure, 4 usage error.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mkbary/barycenter.hpp"
#include "mkbary/error.hpp"
#include "mkbary/io.hpp"
#include "mkbary/suites.hpp"
#include "mkbary/transport.hpp"

namespace fs = std::filesystem;
using namespace mkbary;

namespace {

enum Exit { kOk = 0, kVerifyFailed = 1, kParse = 2, kNumeric = 3, kUsage = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::size_t jobs = 1;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
};

// Collects what one run read and wrote, then lands next to the outputs.
class Manifest {
 public:
  explicit Manifest(std::string subcommand) : subcommand_(std::move(subcommand)), start_(Clock::now()) {}

  void input(const fs::path& p) { inputs_.push_back(p.string()); }
  void output(const fs::path& p) { outputs_.push_back(p.string()); }
  void config(Json c) { config_ = std::move(c); }

  void write(const fs::path& dir) const {
    const double wall = std::chrono::duration<double>(Clock::now() - start_).count();
    char stamp[32];
    const std::time_t now = std::time(nullptr);
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    const Json j{{"subcommand", subcommand_},
                 {"inputs", inputs_},
                 {"outputs", outputs_},
                 {"config", config_},
                 {"versions",
                  {{"mkbary", MKBARY_VERSION}, {"compiler", __VERSION__}, {"cli11", CLI11_VERSION},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
                 {"finished_at", stamp},
                 {"wall_time_seconds", wall}};
    write_text_file(dir / (subcommand_ + ".manifest.json"), j.dump(2) + "\n");
  }

 private:
  using Clock = std::chrono::steady_clock;
  std::string subcommand_;
  std::vector<std::string> inputs_, outputs_;
  Json config_ = Json::object();
  Clock::time_point start_;
};

fs::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UsageError("cannot create output directory " + dir);
  return fs::path(dir);
}

int cmd_transport(const Globals& g, const std::string& mu_file, const std::string& nu_file,
                  const std::string& cost_file, const std::string& plan_file) {
  Manifest manifest("transport");
  const DiscreteMeasure mu = measure_from_json(read_json_file(mu_file));
  const DiscreteMeasure nu = measure_from_json(read_json_file(nu_file));
  const CostSpec cost = cost_from_json(read_json_file(cost_file));
  if (!(mu.space() == nu.space())) throw Error(ErrorCode::ParseError, "measures live on different spaces");
  try {
    check_cost_space(cost, mu.space());
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  for (const auto& f : {mu_file, nu_file, cost_file}) manifest.input(f);
  manifest.config({{"cost", cost_to_json(cost)}});
  const fs::path dir = prepare_out_dir(g.out_dir);

  const TransportPlan plan = solve_transport(mu, nu, cost);
  if (!plan_file.empty()) {
    write_text_file(plan_file, plan_to_json(plan).dump(2) + "\n");
    manifest.output(plan_file);
  }
  std::cout << format_short(plan.objective) << "\n";
  manifest.write(dir);
  return kOk;
}

int cmd_barycenter(const Globals& g, const std::string& problem_file, const std::string& method) {
  Manifest manifest("barycenter");
  const Json raw = read_json_file(problem_file);
  BarycenterProblem problem = problem_from_json(raw);
  using C = BarycenterProblem::Constraint;
  if (method == "fixed" && problem.constraint() != C::SimplexOver)
    throw UsageError("--method fixed needs a simplex_over constraint");
  if (method == "free" && problem.constraint() != C::Free) throw UsageError("--method free needs a free constraint");
  if (method == "quantile1d") {
    if (!problem.space().is_euclidean() || problem.space().dimension() != 1)
      throw UsageError("--method quantile1d needs one-dimensional inputs");
    problem = BarycenterProblem(problem.inputs(), problem.cost(), C::Quantile1d);
  }
  if (problem.constraint() != C::SimplexOver && !problem.cost().is_convex_translation(problem.space()))
    throw UsageError("this method needs a convex translation-invariant cost on a Euclidean space");
  if (problem.constraint() == C::Quantile1d && problem.space().dimension() != 1)
    throw UsageError("quantile_1d needs one-dimensional inputs");
  manifest.input(problem_file);
  manifest.config({{"method", to_string(problem.constraint())},
                   {"cost", cost_to_json(problem.cost())},
                   {"seed", g.seed.value_or(0)}});
  const fs::path dir = prepare_out_dir(g.out_dir);

  BarycenterResult result = [&] {
    switch (problem.constraint()) {
      case C::SimplexOver: return barycenter_fixed_support(problem);
      case C::Free: return barycenter_free_support(problem, g.seed.value_or(0));
      case C::Quantile1d: return barycenter_quantile_1d(problem);
    }
    throw UsageError("unknown method");
  }();

  Json trace = Json::array();
  for (const auto& t : result.trace) trace.push_back({{"iteration", t.iteration}, {"objective", t.objective}});
  const Json report{{"objective", result.objective},
                    {"certificate", {{"kind", to_string(result.certificate.kind)}, {"value", result.certificate.value}}},
                    {"multiple_optima", result.multiple_optima},
                    {"trace", trace}};
  write_text_file(dir / "barycenter.json", measure_to_json(result.measure).dump(2) + "\n");
  write_text_file(dir / "barycenter_report.json", report.dump(2) + "\n");
  manifest.output(dir / "barycenter.json");
  manifest.output(dir / "barycenter_report.json");
  std::cout << format_short(result.objective) << "\n";
  manifest.write(dir);
  return kOk;
}

int cmd_verify(const Globals& g, const std::string& suite, const std::string& config_file) {
  Manifest manifest("verify");
  const auto& names = suite_names();
  if (std::find(names.begin(), names.end(), suite) == names.end()) throw UsageError("unknown suite " + suite);
  Json overrides;
  if (!config_file.empty()) {
    overrides = read_json_file(config_file);
    manifest.input(config_file);
  }
  const fs::path dir = prepare_out_dir(g.out_dir);

  const SuiteReport report = run_suite(suite, overrides, SuiteOptions{g.jobs, g.seed});
  manifest.config({{"suite", suite}, {"effective", report.config}, {"jobs", g.jobs}});
  const fs::path csv = dir / (suite + ".csv");
  write_text_file(csv, report.rows_csv());
  manifest.output(csv);
  for (const auto& a : report.artifacts) {
    write_text_file(dir / a.filename, a.content);
    manifest.output(dir / a.filename);
  }
  const std::size_t failed = report.failures();
  std::cout << suite << ": " << (failed == 0 ? "PASS" : "FAIL") << " (" << report.rows.size() - failed << "/"
            << report.rows.size() << " checks)\n";
  manifest.write(dir);
  return failed == 0 ? kOk : kVerifyFailed;
}

int cmd_constants(const Globals& g, const std::string& cost_file, double box_half_width) {
  Manifest manifest("constants");
  const CostSpec cost = cost_from_json(read_json_file(cost_file));
  manifest.input(cost_file);
  const fs::path dir = prepare_out_dir(g.out_dir);

  SampleOptions options;
  options.dim = cost.kind() == CostSpec::Kind::Custom ? cost.custom_dimension() : 1;
  options.seed = g.seed.value_or(0);
  options.box = Box{std::vector<double>(options.dim, -box_half_width), std::vector<double>(options.dim, box_half_width)};
  const GrowthConstants gc = growth_constants(cost, options);
  manifest.config({{"cost", cost_to_json(cost)}, {"box_half_width", box_half_width}});
  std::cout << "A " << format_short(gc.A) << "\nB " << format_short(gc.B) << "\nq " << format_short(gc.q) << "\nq0 "
            << format_short(gc.q0) << "\nprovenance " << to_string(gc.provenance) << "\n";
  manifest.write(dir);
  return kOk;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::ParseError:
    case ErrorCode::NegativeWeight:
    case ErrorCode::MassNotOne:
    case ErrorCode::EmptySupport:
    case ErrorCode::SpaceMismatch:
      return kParse;
    case ErrorCode::NotOneDimensional:
    case ErrorCode::NotConvexCost:
      return kUsage;
    default:
      return kNumeric;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transport costs, barycenters and property suites for discrete measures."};
  app.set_version_flag("--version", MKBARY_VERSION);
  app.require_subcommand(1);
  Globals g;
  app.add_option("--jobs", g.jobs, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--seed", g.seed, "Seed override");
  app.add_option("--out-dir", g.out_dir, "Directory for outputs and the run manifest")->capture_default_str();

  std::string mu_file, nu_file, cost_file, plan_file;
  auto* transport = app.add_subcommand("transport", "Optimal transport cost J(mu, nu)");
  transport->add_option("mu", mu_file, "Source measure file")->required();
  transport->add_option("nu", nu_file, "Target measure file")->required();
  transport->add_option("cost", cost_file, "Cost file")->required();
  transport->add_option("--plan", plan_file, "Write the optimal plan here");

  std::string problem_file, method;
  auto* bary = app.add_subcommand("barycenter", "Barycenter of a weighted family of measures");
  bary->add_option("problem", problem_file, "Problem file")->required();
  bary->add_option("--method", method, "Solver; defaults to the problem's constraint")
      ->check(CLI::IsMember({"fixed", "free", "quantile1d"}));

  std::string suite, config_file;
  auto* verify = app.add_subcommand("verify", "Run a property suite");
  verify->add_option("suite", suite, "convexity | triangle | q-triangle | criterion | lln | perturb")->required();
  verify->add_option("config", config_file, "JSON overrides for the suite defaults");

  std::string constants_cost;
  double half_width = 1.0;
  auto* constants = app.add_subcommand("constants", "Growth constants A, B, q for a cost");
  constants->add_option("cost", constants_cost, "Cost file")->required();
  constants->add_option("--box", half_width, "Half-width of the sample cube for custom costs")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*transport) return cmd_transport(g, mu_file, nu_file, cost_file, plan_file);
    if (*bary) return cmd_barycenter(g, problem_file, method);
    if (*verify) return cmd_verify(g, suite, config_file);
    return cmd_constants(g, constants_cost, half_width);
  } catch (const UsageError& e) {
    std::cerr << "mkbary: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "mkbary: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "mkbary: " << e.what() << "\n";
    return kNumeric;
  }
}
