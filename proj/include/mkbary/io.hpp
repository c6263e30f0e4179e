#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mkbary/barycenter.hpp"
#include "mkbary/consistency.hpp"
#include "mkbary/costs.hpp"
#include "mkbary/measures.hpp"
#include "mkbary/transport.hpp"

namespace mkbary {

using Json = nlohmann::ordered_json;

/// All readers throw Error(ParseError) on malformed or invalid input,
/// including semantic failures such as weights that do not sum to one.
Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

GroundSpace space_from_json(const Json& j);
Json space_to_json(const GroundSpace& space);

/// {"space": ..., "atoms": [[...], ...], "weights": [...]}. On finite spaces
/// an atom may be written as an index i or as [i].
DiscreteMeasure measure_from_json(const Json& j);
Json measure_to_json(const DiscreteMeasure& mu);

/// {"kind": "metric_power"|"norm_power", "p": x} or
/// {"kind": "finite_matrix", "values": [[...]]}; optional "A", "B", "q"
/// declare structural constants.
CostSpec cost_from_json(const Json& j);
Json cost_to_json(const CostSpec& cost);

Json plan_to_json(const TransportPlan& plan);
Json constants_to_json(const GrowthConstants& gc);

/// {"kind": "simplex_over", "atoms": [...]} (or a "grid": {"box", "points"}
/// shorthand), {"kind": "free", "k": n}, {"kind": "quantile_1d"}.
/// "fixed_support" is accepted for "simplex_over".
ConstraintSpec constraint_from_json(const Json& j, const GroundSpace& space);

/// {"inputs": [{"measure": ..., "lambda": x}, ...], "constraint": ..., "cost": ...}
BarycenterProblem problem_from_json(const Json& j);

Box box_from_json(const Json& j);
Json box_to_json(const Box& box);

/// {"measures": [...], "probs": [...]} or
/// {"generator": {"box": {"lo", "hi"}, "max_atoms", "count", "seed"}}.
MetaDistribution meta_from_json(const Json& j);

/// Fixed-precision decimal that round-trips doubles.
std::string format_exact(double x);
/// Twelve significant digits, for human-facing output.
std::string format_short(double x);

/// RFC 4180 quoting when the field holds a comma, quote or newline.
std::string csv_field(const std::string& s);

}  // namespace mkbary
