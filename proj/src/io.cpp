#include "mkbary/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mkbary/error.hpp"

namespace mkbary {

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

// Runs a reader, reporting any library or json failure as a parse error.
template <class F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) throw;
    fail(std::string(what) + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    fail(std::string(what) + ": " + e.what());
  }
}

const Json& require(const Json& j, const char* key) {
  if (!j.is_object()) fail(std::string("expected an object holding \"") + key + "\"");
  const auto it = j.find(key);
  if (it == j.end()) fail(std::string("missing key \"") + key + "\"");
  return *it;
}

double number(const Json& j, const char* what) {
  if (!j.is_number()) fail(std::string(what) + " must be a number");
  return j.get<double>();
}

std::vector<double> numbers(const Json& j, const char* what) {
  if (!j.is_array()) fail(std::string(what) + " must be an array");
  std::vector<double> out;
  for (const auto& x : j) out.push_back(number(x, what));
  return out;
}

std::vector<std::vector<double>> number_rows(const Json& j, const char* what) {
  if (!j.is_array()) fail(std::string(what) + " must be an array of arrays");
  std::vector<std::vector<double>> out;
  for (const auto& row : j) out.push_back(numbers(row, what));
  return out;
}

Point point_from_json(const Json& j, const GroundSpace& space) {
  if (space.is_finite() && j.is_number()) return Point{j.get<double>()};
  Point p = numbers(j, "atom");
  if (p.size() != space.dimension()) fail("atom has the wrong dimension");
  return p;
}

std::vector<Point> points_from_json(const Json& j, const GroundSpace& space) {
  if (!j.is_array()) fail("atoms must be an array");
  std::vector<Point> out;
  for (const auto& x : j) out.push_back(point_from_json(x, space));
  return out;
}

}  // namespace

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
}

GroundSpace space_from_json(const Json& j) {
  return guarded("space", [&] {
    const std::string kind = require(j, "kind").get<std::string>();
    if (kind == "euclidean") {
      const double dim = number(require(j, "dim"), "dim");
      if (!(dim >= 1.0) || dim != std::floor(dim)) fail("dim must be a positive integer");
      return GroundSpace::euclidean(std::size_t(dim));
    }
    if (kind == "finite") {
      auto rho = number_rows(require(j, "rho"), "rho");
      if (j.contains("n") && number(j["n"], "n") != double(rho.size())) fail("n does not match rho");
      return GroundSpace::finite(rho);
    }
    fail("unknown space kind \"" + kind + "\"");
  });
}

Json space_to_json(const GroundSpace& space) {
  if (space.is_finite())
    return Json{{"kind", "finite"}, {"n", space.point_count()}, {"rho", space.distance_matrix()}};
  return Json{{"kind", "euclidean"}, {"dim", space.dimension()}};
}

DiscreteMeasure measure_from_json(const Json& j) {
  return guarded("measure", [&] {
    const GroundSpace space = space_from_json(require(j, "space"));
    auto atoms = points_from_json(require(j, "atoms"), space);
    auto weights = numbers(require(j, "weights"), "weights");
    if (atoms.size() != weights.size()) fail("atoms and weights differ in length");
    for (const auto& x : atoms)
      if (!space.contains(x)) fail("atom outside the space");
    return DiscreteMeasure::canonicalize(std::move(atoms), std::move(weights), space);
  });
}

Json measure_to_json(const DiscreteMeasure& mu) {
  Json atoms = Json::array();
  for (const auto& x : mu.atoms()) atoms.push_back(x);
  return Json{{"space", space_to_json(mu.space())},
              {"atoms", std::move(atoms)},
              {"weights", std::vector<double>(mu.weights().begin(), mu.weights().end())}};
}

CostSpec cost_from_json(const Json& j) {
  return guarded("cost", [&] {
    const std::string kind = require(j, "kind").get<std::string>();
    CostSpec cost = [&] {
      if (kind == "metric_power") return CostSpec::metric_power(number(require(j, "p"), "p"));
      if (kind == "norm_power") return CostSpec::norm_power(number(require(j, "p"), "p"));
      if (kind == "finite_matrix") return CostSpec::finite_matrix(number_rows(require(j, "values"), "values"));
      fail("unknown cost kind \"" + kind + "\"");
    }();
    DeclaredConstants declared;
    if (j.contains("A")) declared.A = number(j["A"], "A");
    if (j.contains("B")) declared.B = number(j["B"], "B");
    if (j.contains("q")) declared.q = number(j["q"], "q");
    if (declared.A || declared.B || declared.q) cost = cost.with_declared(declared);
    return cost;
  });
}

Json cost_to_json(const CostSpec& cost) {
  Json j;
  switch (cost.kind()) {
    case CostSpec::Kind::MetricPower: j = {{"kind", "metric_power"}, {"p", cost.exponent()}}; break;
    case CostSpec::Kind::NormPower: j = {{"kind", "norm_power"}, {"p", cost.exponent()}}; break;
    case CostSpec::Kind::FiniteMatrix: j = {{"kind", "finite_matrix"}, {"values", cost.values().to_rows()}}; break;
    case CostSpec::Kind::Custom: j = {{"kind", "custom"}, {"name", cost.name()}}; break;
  }
  if (const auto& d = cost.declared()) {
    if (d->A) j["A"] = *d->A;
    if (d->B) j["B"] = *d->B;
    if (d->q) j["q"] = *d->q;
  }
  return j;
}

Json plan_to_json(const TransportPlan& plan) {
  Json j{{"coupling", plan.coupling.to_rows()}, {"objective", plan.objective}};
  if (plan.duals) j["duals"] = Json{{"u", plan.duals->u}, {"v", plan.duals->v}};
  j["gap"] = plan.gap;
  return j;
}

Json constants_to_json(const GrowthConstants& gc) {
  return Json{{"A", gc.A},   {"B", gc.B}, {"q", gc.q}, {"q0", gc.q0}, {"provenance", to_string(gc.provenance)},
              {"clamped", gc.clamped}};
}

Box box_from_json(const Json& j) {
  return guarded("box", [&] {
    Box box{numbers(require(j, "lo"), "lo"), numbers(require(j, "hi"), "hi")};
    if (box.lo.empty() || box.lo.size() != box.hi.size()) fail("box lo and hi must have one equal nonzero length");
    for (std::size_t d = 0; d < box.lo.size(); ++d)
      if (!(box.lo[d] <= box.hi[d])) fail("box has lo > hi");
    return box;
  });
}

Json box_to_json(const Box& box) { return Json{{"lo", box.lo}, {"hi", box.hi}}; }

ConstraintSpec constraint_from_json(const Json& j, const GroundSpace& space) {
  return guarded("constraint", [&] {
    const std::string kind = require(j, "kind").get<std::string>();
    ConstraintSpec spec;
    if (kind == "simplex_over" || kind == "fixed_support") {
      spec.kind = BarycenterProblem::Constraint::SimplexOver;
      if (j.contains("grid")) {
        const Json& g = j["grid"];
        std::vector<std::size_t> per_axis;
        for (double k : numbers(require(g, "points"), "points")) {
          if (!(k >= 1.0) || k != std::floor(k)) fail("grid points must be positive integers");
          per_axis.push_back(std::size_t(k));
        }
        spec.candidates = lattice(box_from_json(require(g, "box")), per_axis);
        for (const auto& x : spec.candidates)
          if (x.size() != space.dimension()) fail("grid dimension does not match the space");
      } else {
        spec.candidates = points_from_json(require(j, "atoms"), space);
      }
    } else if (kind == "free") {
      spec.kind = BarycenterProblem::Constraint::Free;
      const double k = number(require(j, "k"), "k");
      if (!(k >= 1.0) || k != std::floor(k)) fail("k must be a positive integer");
      spec.atom_budget = std::size_t(k);
      if (j.contains("init_seed")) spec.init_seed = j["init_seed"].get<std::uint64_t>();
    } else if (kind == "quantile_1d") {
      spec.kind = BarycenterProblem::Constraint::Quantile1d;
    } else {
      fail("unknown constraint kind \"" + kind + "\"");
    }
    return spec;
  });
}

BarycenterProblem problem_from_json(const Json& j) {
  return guarded("problem", [&] {
    const Json& raw = require(j, "inputs");
    if (!raw.is_array() || raw.empty()) fail("inputs must be a nonempty array");
    std::vector<WeightedInput> inputs;
    for (const auto& in : raw)
      inputs.push_back({measure_from_json(require(in, "measure")),
                        in.contains("lambda") ? number(in["lambda"], "lambda") : 1.0});
    const CostSpec cost = cost_from_json(require(j, "cost"));
    const ConstraintSpec c = constraint_from_json(require(j, "constraint"), inputs.front().measure.space());
    return BarycenterProblem(std::move(inputs), cost, c.kind, c.candidates, c.atom_budget);
  });
}

MetaDistribution meta_from_json(const Json& j) {
  return guarded("population", [&] {
    if (j.contains("generator")) {
      const Json& g = j["generator"];
      const double max_atoms = g.contains("max_atoms") ? number(g["max_atoms"], "max_atoms") : 5.0;
      const double count = number(require(g, "count"), "count");
      if (!(count >= 1.0) || !(max_atoms >= 1.0)) fail("count and max_atoms must be positive");
      const std::uint64_t seed = g.contains("seed") ? g["seed"].get<std::uint64_t>() : 0;
      return generate_population(std::size_t(count), seed,
                                 GeneratorSpec{box_from_json(require(g, "box")), std::size_t(max_atoms)});
    }
    const Json& raw = require(j, "measures");
    if (!raw.is_array()) fail("measures must be an array");
    std::vector<DiscreteMeasure> atoms;
    for (const auto& m : raw) atoms.push_back(measure_from_json(m));
    if (!j.contains("probs")) return MetaDistribution::uniform(std::move(atoms));
    return MetaDistribution(std::move(atoms), numbers(j["probs"], "probs"));
  });
}

std::string format_exact(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_short(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace mkbary
