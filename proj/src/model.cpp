#include "cllac/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "cllac/binary_io.hpp"
#include "cllac/errors.hpp"
#include "cllac/rng.hpp"

namespace cllac::model {
namespace {

std::vector<std::size_t> layer_widths(const Arch& arch, std::size_t dim, std::size_t outputs) {
  std::vector<std::size_t> w{dim};
  if (arch.kind == ArchKind::mlp) {
    if (arch.hidden.empty() || arch.hidden.size() > 2) {
      throw InvalidInput("mlp needs one or two hidden layers");
    }
    for (std::size_t h : arch.hidden) {
      if (h == 0) throw InvalidInput("hidden layer width must be positive");
      w.push_back(h);
    }
  } else if (!arch.hidden.empty()) {
    throw InvalidInput("linear model takes no hidden layers");
  }
  w.push_back(outputs);
  return w;
}

void check_input(const OvrModel& model, std::span<const double> x) {
  if (x.size() != model.dim()) {
    throw InvalidInput("input has dimension " + std::to_string(x.size()) + ", model expects " +
                       std::to_string(model.dim()));
  }
}

// Forward pass; ws.activations[l] holds the post-activation output of layer l
// (activations[0] is the input).
void forward(const OvrModel& model, std::span<const double> x, Workspace& ws) {
  const auto& widths = model.widths();
  const std::size_t layers = widths.size() - 1;
  ws.activations.resize(widths.size());
  ws.activations[0].assign(x.begin(), x.end());
  const double* p = model.params().data();
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = widths[l];
    const std::size_t out = widths[l + 1];
    const auto& a = ws.activations[l];
    auto& z = ws.activations[l + 1];
    z.resize(out);
    const double* w = p;
    const double* b = p + in * out;
    for (std::size_t o = 0; o < out; ++o) {
      double acc = b[o];
      const double* wr = w + o * in;
      for (std::size_t i = 0; i < in; ++i) acc += wr[i] * a[i];
      z[o] = (l + 1 < layers) ? std::max(acc, 0.0) : acc;
    }
    p += in * out + out;
  }
}

}  // namespace

OvrModel::OvrModel(Arch arch, int classes, std::size_t dim, bool augmented_head)
    : arch_(std::move(arch)), classes_(classes), dim_(dim), augmented_head_(augmented_head) {
  if (classes < 2) throw InvalidInput("model needs K >= 2");
  if (dim < 1) throw InvalidInput("model needs d >= 1");
  widths_ = layer_widths(arch_, dim_, outputs());
  params_.assign(param_count(arch_, dim_, outputs()), 0.0);
}

std::size_t OvrModel::param_count(const Arch& arch, std::size_t dim, std::size_t outputs) {
  const auto w = layer_widths(arch, dim, outputs);
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) n += w[l] * w[l + 1] + w[l + 1];
  return n;
}

OvrModel init_model(const Arch& arch, int classes, std::size_t dim, std::uint64_t seed,
                    bool augmented_head) {
  OvrModel m(arch, classes, dim, augmented_head);
  if (arch.kind == ArchKind::linear) return m;
  CounterRng rng(seed, "init");
  const auto& w = m.widths();
  double* p = m.params().data();
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w[l]));
    const std::size_t nw = w[l] * w[l + 1];
    for (std::size_t i = 0; i < nw; ++i) p[i] = rng.uniform(-bound, bound);
    p += nw + w[l + 1];
  }
  return m;
}

void score_into(const OvrModel& model, std::span<const double> x, std::span<double> out,
                Workspace& ws) {
  check_input(model, x);
  if (out.size() != model.outputs()) throw InvalidInput("score buffer has wrong size");
  forward(model, x, ws);
  std::copy(ws.activations.back().begin(), ws.activations.back().end(), out.begin());
}

std::vector<double> score(const OvrModel& model, std::span<const double> x) {
  Workspace ws;
  std::vector<double> out(model.outputs());
  score_into(model, x, out, ws);
  return out;
}

int argmax(std::span<const double> scores) {
  if (scores.empty()) throw InvalidInput("argmax of empty score vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return static_cast<int>(best);
}

Prediction predict(const OvrModel& model, std::span<const double> x) {
  Prediction p;
  p.scores = score(model, x);
  p.label = argmax(p.scores);
  return p;
}

void accumulate_backprop(const OvrModel& model, std::span<const double> x,
                         std::span<const double> upstream, double weight,
                         std::span<double> grad, Workspace& ws) {
  check_input(model, x);
  if (upstream.size() != model.outputs()) throw InvalidInput("upstream has wrong size");
  if (grad.size() != model.params().size()) throw InvalidInput("gradient buffer has wrong size");
  forward(model, x, ws);

  const auto& widths = model.widths();
  const std::size_t layers = widths.size() - 1;
  std::vector<std::size_t> offsets(layers);
  std::size_t off = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    offsets[l] = off;
    off += widths[l] * widths[l + 1] + widths[l + 1];
  }

  ws.delta.assign(upstream.begin(), upstream.end());
  for (auto& v : ws.delta) v *= weight;
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t in = widths[l];
    const std::size_t out = widths[l + 1];
    const auto& a = ws.activations[l];
    const double* w = model.params().data() + offsets[l];
    double* gw = grad.data() + offsets[l];
    double* gb = gw + in * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double d = ws.delta[o];
      if (d == 0.0) continue;
      gb[o] += d;
      double* gr = gw + o * in;
      for (std::size_t i = 0; i < in; ++i) gr[i] += d * a[i];
    }
    if (l == 0) break;
    ws.delta_prev.assign(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = ws.delta[o];
      if (d == 0.0) continue;
      const double* wr = w + o * in;
      for (std::size_t i = 0; i < in; ++i) ws.delta_prev[i] += wr[i] * d;
    }
    // Rectifier derivative, taken as 0 at the kink.
    for (std::size_t i = 0; i < in; ++i) {
      if (!(a[i] > 0.0)) ws.delta_prev[i] = 0.0;
    }
    ws.delta.swap(ws.delta_prev);
  }
}

std::vector<double> backprop(const OvrModel& model, std::span<const double> x,
                             std::span<const double> upstream) {
  std::vector<double> grad(model.params().size(), 0.0);
  Workspace ws;
  accumulate_backprop(model, x, upstream, 1.0, grad, ws);
  return grad;
}

namespace {
constexpr char kMagic[7] = {'C', 'L', 'L', 'A', 'C', 'M', '1'};
}

void write_checkpoint(std::ostream& os, const OvrModel& model) {
  os.write(kMagic, sizeof(kMagic));
  std::uint8_t tag = model.arch().kind == ArchKind::linear ? 0 : 1;
  if (!model.augmented_head()) tag |= 0x80;
  binio::write_le<std::uint8_t>(os, tag);
  binio::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(model.classes()));
  binio::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(model.dim()));
  binio::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(model.arch().hidden.size()));
  for (std::size_t h : model.arch().hidden) binio::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(h));
  for (double v : model.params()) binio::write_le<double>(os, v);
  if (!os) throw std::runtime_error("failed writing checkpoint");
}

OvrModel read_checkpoint(std::istream& is) {
  binio::Reader in(is);
  char magic[7];
  in.bytes(magic, sizeof(magic), "magic");
  if (!std::equal(magic, magic + 7, kMagic)) throw FormatError("bad checkpoint magic", 0);
  const auto tag_at = in.offset();
  const auto tag = in.le<std::uint8_t>("arch tag");
  const std::uint8_t kind = tag & 0x7F;
  if (kind > 1) throw FormatError("unknown arch tag", tag_at);
  const auto k = in.le<std::uint32_t>("K");
  const auto d = in.le<std::uint32_t>("d");
  const auto nh_at = in.offset();
  const auto nh = in.le<std::uint32_t>("hidden count");
  if (nh > 2) throw FormatError("too many hidden layers", nh_at);
  Arch arch{kind == 0 ? ArchKind::linear : ArchKind::mlp, {}};
  for (std::uint32_t i = 0; i < nh; ++i) arch.hidden.push_back(in.le<std::uint32_t>("hidden size"));
  OvrModel m = [&] {
    try {
      return OvrModel(arch, static_cast<int>(k), d, (tag & 0x80) == 0);
    } catch (const InvalidInput& e) {
      throw FormatError(std::string("inconsistent checkpoint header: ") + e.what(), in.offset());
    }
  }();
  for (auto& v : m.params()) v = in.le<double>("params");
  return m;
}

void save_checkpoint(const std::filesystem::path& path, const OvrModel& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_checkpoint(os, model);
}

OvrModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidInput("cannot open " + path.string());
  return read_checkpoint(is);
}

std::string describe(const Arch& arch) {
  if (arch.kind == ArchKind::linear) return "linear";
  std::string s = "mlp(";
  for (std::size_t i = 0; i < arch.hidden.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(arch.hidden[i]);
  }
  return s + ")";
}

}  // namespace cllac::model
