#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "json.hpp"

namespace stratlab {

/// Outcome of one inequality or consistency check.
///
/// `pass` is always `margin >= -tolerance`; call decide() after filling the
/// margin. Diagnostics hold any extra numbers worth keeping next to the verdict.
struct CheckReport {
  std::string name;
  std::string model_id;
  std::string model_hash;
  bool pass = false;
  double margin = 0.0;
  double tolerance = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  std::map<std::string, double> diagnostics;
  std::map<std::string, std::string> notes;

  CheckReport& decide() {
    pass = margin >= -tolerance;
    return *this;
  }
  nlohmann::json to_json() const;
};

}  // namespace stratlab
