#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace stratlab {

using nlohmann::json;

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  json values = json::object();
};

/// Runs the acceptance criteria 1..13 (all of them when `only` is empty).
/// A criterion that throws is reported as failed with the message as detail.
std::vector<CriterionResult> run_acceptance(std::uint64_t seed, const std::vector<int>& only = {});

/// "PASS [id] title: detail (Xs)" or "FAIL ...".
std::string acceptance_line(const CriterionResult& c);

/// Columns id,title,pass,seconds,detail.
std::string acceptance_csv(const std::vector<CriterionResult>& results);

}  // namespace stratlab
