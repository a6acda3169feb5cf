#include "stfm/report.hpp"

#include <fstream>

#include "stfm/errors.hpp"

namespace stfm {

void Report::write(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error::io("report: cannot open '" + path + "'");
  out << canonical_text();
  if (!out) throw Error::io("report: write failed for '" + path + "'");
}

}  // namespace stfm
