#pragma once

#include <string>
#include <vector>

#include "stfm/hstf.hpp"
#include "stfm/similarity.hpp"
#include "stfm/tensor.hpp"

namespace stfm {

// Full-precision CSV, one line per matrix row.
void write_matrix_csv(const Tensor& m, const std::string& path);

// Binary 8-bit PGM, min-max normalized per matrix; a constant matrix maps
// to gray value 0.
void write_matrix_pgm(const Tensor& m, const std::string& path);

// Writes <prefix>_h.{csv,pgm} and <prefix>_sam.{csv,pgm}; returns the paths.
std::vector<std::string> dump_heatmaps(const SimilarityMatrix& h, const AttentionMap& sam,
                                       const std::string& prefix);

}  // namespace stfm
