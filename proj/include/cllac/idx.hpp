#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "cllac/matrix.hpp"

namespace cllac::idx {

/// Labeled images with their original class ids, features in [0, 1].
struct LabeledPool {
  Matrix x;
  std::vector<int> y;
  std::size_t rows = 0;  // image height
  std::size_t cols = 0;  // image width

  std::size_t size() const { return x.rows(); }
};

// IDX layout, big-endian:
//   images: u32 0x00000803 | u32 n | u32 rows | u32 cols | n*rows*cols u8
//   labels: u32 0x00000801 | u32 n | n u8
// Labels above `max_label` (9 for the MNIST family) are rejected.
LabeledPool read_idx(std::istream& images, std::istream& labels, int max_label = 9);
LabeledPool ingest_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                       int max_label = 9);

/// Inverse of read_idx; features are rounded to the nearest byte.
void write_idx(std::ostream& images, std::ostream& labels, const LabeledPool& pool);

}  // namespace cllac::idx
