#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "stratlab/check_report.hpp"
#include "stratlab/model_spaces.hpp"

namespace stratlab {

struct AngleEntry {
  std::string stratum;
  double angle = 0.0;
  bool within_2pi = true;
};

/// Outcome of an RCD(K,N) or CBB(k) decision.
///
/// is_rcd is the verdict; for alexandrov_classify it means CBB(k). When a
/// curvature bound is unknown and no other clause fails, the verdict is
/// indeterminate (is_rcd = false, indeterminate = true).
struct CurvatureVerdict {
  bool is_rcd = false;
  bool indeterminate = false;
  double K = 0.0;
  double N = 0.0;
  std::vector<std::string> reasons;
  std::vector<AngleEntry> angle_report;
  bool dimension_check = true;
  /// Numeric Ricci lower estimate attached when K_reg is not analytic.
  std::optional<double> ricci_estimate;

  json to_json() const;
};

/// RCD(K,N) iff dim ≤ N, K_reg ≥ K and every codimension-2 angle is ≤ 2π.
/// Strata of higher codimension impose nothing. A clause that can be decided
/// and fails gives false even when K_reg is unknown.
CurvatureVerdict classify(const StratifiedModel& model, double K, double N);

/// CBB(k) iff the sectional curvature of the regular set is ≥ k and every
/// codimension-2 angle is ≤ 2π. N is reported as the dimension.
CurvatureVerdict alexandrov_classify(const StratifiedModel& model, double k);

/// One comparison check run against a catalog model.
///
/// kind: bishop_gromov, quadruple, laplacian, levy_gromov, bochner, mcp or
/// ae_convexity. params holds the arguments (points as JSON arrays) and
/// optionally z_tol, tol_factor or band to override a check's tolerance.
/// designated marks the checks that must detect an angle above 2π.
struct CatalogCheck {
  std::string kind;
  json params;
  bool expect_pass = true;
  bool designated = false;
};

struct CatalogQuery {
  double K = 0.0;
  double N = 0.0;
  bool expect_rcd = false;
  bool expect_indeterminate = false;
};

struct CatalogEntry {
  std::string name;
  StratifiedModel model;
  /// First query is (K_reg, n) or its nominal value when K_reg is unknown.
  std::vector<CatalogQuery> queries;
  double alexandrov_k = 0.0;
  bool expect_alexandrov = false;
  bool expect_alexandrov_indeterminate = false;
  std::vector<CatalogCheck> checks;
};

std::vector<CatalogEntry> catalog();

/// Markdown table: name, model, dimension, angles, expected verdicts, checks.
std::string catalog_markdown(const std::vector<CatalogEntry>& entries);

/// Runs one catalog check. `scale` multiplies sample, pair and node counts
/// (floored at small minimums) for quick runs.
CheckReport run_catalog_check(const StratifiedModel& model, const CatalogCheck& check, std::uint64_t seed,
                              double scale = 1.0);

/// Verdicts against expectations plus the invariant linking them to the
/// checks: a true verdict needs every check to pass, and a false verdict with
/// an angle reason needs a designated check to fail. Each check must also
/// match its expect_pass. `reports` follows entry.checks.
CheckReport cross_consistency(const CatalogEntry& entry, const std::vector<CheckReport>& reports);

}  // namespace stratlab
