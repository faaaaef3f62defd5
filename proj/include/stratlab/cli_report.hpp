#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "stratlab/model_spaces.hpp"

namespace stratlab {

/// Invalid experiment configuration (exit status 2).
struct ConfigError : Error {
  using Error::Error;
};

/// Batch experiment.
///
/// JSON layout (schema 1):
///   seed        required unsigned integer
///   model       model JSON, default for checks without their own "model"
///   checks      array of {"kind": ..., parameters..., "expect": "pass"|"fail",
///               "seed": override, "model": override}
///   samples     default Monte Carlo sample count (200000)
///   nodes       default graph size (4000)
///   scale       multiplies the sample and node counts of catalog checks (1)
///   workers     checks run concurrently on this many threads (1)
///   output      {"json": path, "csv": path}
///   tolerances  {"z_tol", "tol_factor", "band"}: positive overrides
///
/// Check kinds: classify {K, N}, alexandrov {k}, distance {p, q},
/// volume {center, r, expected?}, spectrum {count}, lichnerowicz {},
/// cutoff {eps}, catalog {}, and the catalog comparison kinds
/// (bishop_gromov, quadruple, laplacian, levy_gromov, bochner, mcp,
/// ae_convexity) with the parameters of CatalogCheck.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::optional<json> model;
  json checks = json::array();
  std::size_t samples = 200000;
  std::size_t nodes = 4000;
  double scale = 1.0;
  unsigned workers = 1;
  std::optional<std::string> json_path;
  std::optional<std::string> csv_path;
  std::map<std::string, double> tolerances;

  /// Throws ConfigError.
  static ExperimentConfig from_json(const json& j);
  json to_json() const;
};

/// One row of a report.
struct ReportRow {
  std::size_t index = 0;
  std::string kind;
  std::string model_id;
  std::string model_hash;
  std::uint64_t seed = 0;
  std::uint64_t samples = 0;
  double tolerance = 0.0;
  double margin = 0.0;
  bool pass = false;
  /// "pass", "fail" or "" when the check carries no expectation.
  std::string expected;
  /// Full CheckReport or verdict JSON.
  json result;
  /// classify/alexandrov rows: pass is the verdict, which is a result rather
  /// than a check unless an expectation is given.
  bool verdict = false;

  /// True when the row meets its expectation. Without one, checks must pass
  /// and verdicts always count as expected.
  bool as_expected() const {
    if (expected.empty()) return pass || verdict;
    return pass == (expected == "pass");
  }
};

struct RunResult {
  /// 0 all as expected, 1 some check off expectation, 2 invalid config,
  /// 3 numerical failure.
  int exit_code = 0;
  std::vector<ReportRow> rows;
  std::string message;

  json report_json() const;
  std::string report_csv() const;
};

/// Runs the checks in config order (or concurrently with workers > 1; the
/// rows keep config order either way) and writes the outputs atomically.
RunResult run(const ExperimentConfig& config);

/// Parses and runs; config errors become exit status 2 instead of throwing.
RunResult run_json(const json& config);

/// Config of the built-in catalog smoke run: every catalog check plus one
/// cross-consistency row per entry.
ExperimentConfig catalog_config(std::uint64_t seed, double scale = 1.0);

/// Writes `contents` to `path` through a temporary file and a rename.
void write_atomic(const std::string& path, const std::string& contents);

/// CSV header shared by every report.
std::string report_csv_header();

}  // namespace stratlab
