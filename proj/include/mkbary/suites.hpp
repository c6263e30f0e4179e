#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mkbary/io.hpp"

namespace mkbary {

/// One asserted inequality lhs <= rhs (or a flag stored as 0/1). `witness`
/// holds the offending inputs as JSON when the check fails.
struct CheckRow {
  std::string check;
  std::size_t instance = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = true;
  std::string witness;
};

struct SuiteArtifact {
  std::string filename;
  std::string content;
};

struct SuiteReport {
  std::string suite;
  Json config;  ///< effective configuration, defaults filled in
  std::vector<CheckRow> rows;
  std::vector<SuiteArtifact> artifacts;

  std::size_t failures() const;
  bool passed() const { return failures() == 0; }
  /// Columns check, instance, lhs, rhs, pass, witness.
  std::string rows_csv() const;
};

struct SuiteOptions {
  std::size_t jobs = 1;
  /// Replaces the configured base seed (for lln: the seed list becomes
  /// seed, seed + 1, ...).
  std::optional<std::uint64_t> seed;
};

/// convexity, triangle, q-triangle, criterion, lln, perturb.
const std::vector<std::string>& suite_names();

Json default_suite_config(const std::string& suite);

/// Merges `overrides` into the suite defaults (JSON merge patch) and runs
/// it. Throws InvalidArgument for an unknown suite and ParseError for a bad
/// configuration.
SuiteReport run_suite(const std::string& suite, const Json& overrides, const SuiteOptions& options = {});

}  // namespace mkbary
