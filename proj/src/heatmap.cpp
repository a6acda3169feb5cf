#include "stfm/heatmap.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "stfm/errors.hpp"

namespace stfm {

void write_matrix_csv(const Tensor& m, const std::string& path) {
  if (m.rank() != 2)
    throw Error::dimension("write_matrix_csv: expected a matrix, got " + m.shape_str());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error::io("write_matrix_csv: cannot open '" + path + "'");
  char buf[40];
  for (std::size_t i = 0; i < m.dim(0); ++i) {
    auto row = m.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", row[j]);
      if (j) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw Error::io("write_matrix_csv: write failed for '" + path + "'");
}

void write_matrix_pgm(const Tensor& m, const std::string& path) {
  if (m.rank() != 2)
    throw Error::dimension("write_matrix_pgm: expected a matrix, got " + m.shape_str());
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  double lo = m.flat()[0], hi = m.flat()[0];
  for (double v : m.flat()) {
    lo = v < lo ? v : lo;
    hi = v > hi ? v : hi;
  }
  const double range = hi - lo;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error::io("write_matrix_pgm: cannot open '" + path + "'");
  out << "P5\n" << cols << ' ' << rows << "\n255\n";
  std::string bytes;
  bytes.reserve(rows * cols);
  for (double v : m.flat()) {
    unsigned value = 0;
    if (range > 0.0) value = static_cast<unsigned>(std::lround((v - lo) / range * 255.0));
    bytes.push_back(static_cast<char>(value));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error::io("write_matrix_pgm: write failed for '" + path + "'");
}

std::vector<std::string> dump_heatmaps(const SimilarityMatrix& h, const AttentionMap& sam,
                                       const std::string& prefix) {
  std::vector<std::string> paths = {prefix + "_h.csv", prefix + "_h.pgm",
                                    prefix + "_sam.csv", prefix + "_sam.pgm"};
  write_matrix_csv(h.values, paths[0]);
  write_matrix_pgm(h.values, paths[1]);
  write_matrix_csv(sam.values, paths[2]);
  write_matrix_pgm(sam.values, paths[3]);
  return paths;
}

}  // namespace stfm
