#include "cllac/idx.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "cllac/binary_io.hpp"
#include "cllac/errors.hpp"

namespace cllac::idx {
namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

void write_be_u32(std::ostream& os, std::uint32_t v) {
  const char buf[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                       static_cast<char>(v >> 8), static_cast<char>(v)};
  os.write(buf, 4);
}

std::ifstream open(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw InvalidInput("cannot open " + p.string());
  return f;
}

}  // namespace

LabeledPool read_idx(std::istream& images, std::istream& labels, int max_label) {
  binio::Reader ri(images);
  binio::Reader rl(labels);

  if (const auto m = ri.be_u32("image magic"); m != kImageMagic) {
    throw FormatError("bad image magic " + std::to_string(m), 0);
  }
  const std::uint32_t n = ri.be_u32("image count");
  const std::uint32_t rows = ri.be_u32("image rows");
  const std::uint32_t cols = ri.be_u32("image cols");

  if (const auto m = rl.be_u32("label magic"); m != kLabelMagic) {
    throw FormatError("bad label magic " + std::to_string(m), 0);
  }
  const std::uint32_t n_labels = rl.be_u32("label count");
  if (n_labels != n) {
    throw FormatError("label count " + std::to_string(n_labels) + " does not match image count " +
                          std::to_string(n),
                      4);
  }

  LabeledPool out;
  out.rows = rows;
  out.cols = cols;
  const std::size_t d = std::size_t{rows} * cols;
  out.x = Matrix(n, d);
  out.y.resize(n);

  std::vector<unsigned char> buf(d);
  for (std::size_t i = 0; i < n; ++i) {
    ri.bytes(reinterpret_cast<char*>(buf.data()), d, "image pixels");
    auto row = out.x.row(i);
    for (std::size_t j = 0; j < d; ++j) row[j] = buf[j] / 255.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    unsigned char b = 0;
    rl.bytes(reinterpret_cast<char*>(&b), 1, "labels");
    if (b > max_label) {
      throw FormatError("label " + std::to_string(b) + " exceeds " + std::to_string(max_label),
                        rl.offset() - 1);
    }
    out.y[i] = b;
  }
  return out;
}

LabeledPool ingest_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                       int max_label) {
  auto fi = open(images);
  auto fl = open(labels);
  return read_idx(fi, fl, max_label);
}

void write_idx(std::ostream& images, std::ostream& labels, const LabeledPool& pool) {
  if (pool.y.size() != pool.size()) throw InvalidInput("label count must match rows");
  if (pool.rows * pool.cols != pool.x.cols()) throw InvalidInput("rows * cols must equal d");
  const auto n = static_cast<std::uint32_t>(pool.size());
  write_be_u32(images, kImageMagic);
  write_be_u32(images, n);
  write_be_u32(images, static_cast<std::uint32_t>(pool.rows));
  write_be_u32(images, static_cast<std::uint32_t>(pool.cols));
  for (double v : pool.x.data()) {
    const double px = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
    images.put(static_cast<char>(static_cast<unsigned char>(px)));
  }
  write_be_u32(labels, kLabelMagic);
  write_be_u32(labels, n);
  for (int y : pool.y) {
    if (y < 0 || y > 255) throw InvalidInput("label does not fit in one byte");
    labels.put(static_cast<char>(static_cast<unsigned char>(y)));
  }
  if (!images || !labels) throw std::runtime_error("failed writing IDX files");
}

}  // namespace cllac::idx
