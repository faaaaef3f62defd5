#include "stratlab/check_report.hpp"

#include <cmath>

namespace stratlab {

namespace {
nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }
}  // namespace

nlohmann::json CheckReport::to_json() const {
  nlohmann::json diag = nlohmann::json::object();
  for (const auto& [k, v] : diagnostics) diag[k] = number(v);
  nlohmann::json j = {{"check", name},          {"model", model_id},   {"model_hash", model_hash},
                      {"pass", pass},           {"margin", number(margin)}, {"tolerance", number(tolerance)},
                      {"samples", samples},     {"seed", seed},        {"diagnostics", diag}};
  if (!notes.empty()) j["notes"] = notes;
  return j;
}

}  // namespace stratlab
