#pragma once

#include <string>

#include "json.hpp"

namespace stfm {

// Run summary with a canonical serialized form: key-sorted JSON text that
// is bit-identical across identical runs. Wall-clock time is kept out of
// the canonical text on purpose and reported separately.
struct Report {
  nlohmann::json body;
  double wall_clock_seconds = 0.0;

  std::string canonical_text() const { return body.dump(2) + "\n"; }
  void write(const std::string& path) const;
};

}  // namespace stfm
