#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace cllac::model {

enum class ArchKind { linear, mlp };

/// linear: F(x) = W x + b. mlp: dense layers with rectifier activations on
/// every hidden layer and a linear output layer.
struct Arch {
  ArchKind kind = ArchKind::linear;
  std::vector<std::size_t> hidden;

  static Arch linear() { return {ArchKind::linear, {}}; }
  static Arch mlp(std::vector<std::size_t> hidden) { return {ArchKind::mlp, std::move(hidden)}; }

  friend bool operator==(const Arch&, const Arch&) = default;
};

/// Scratch buffers for forward/backward passes. Reuse one per thread to avoid
/// reallocating in training loops.
struct Workspace {
  std::vector<std::vector<double>> activations;
  std::vector<double> delta;
  std::vector<double> delta_prev;
};

/// One-versus-rest scorer F = (f_1, ..., f_{K+1}). Component K (0-based) is
/// the augmented-class score. With augmented_head == false the model has only
/// the K known-class outputs and can never predict ac.
class OvrModel {
 public:
  OvrModel(Arch arch, int classes, std::size_t dim, bool augmented_head = true);

  const Arch& arch() const { return arch_; }
  int classes() const { return classes_; }
  std::size_t dim() const { return dim_; }
  bool augmented_head() const { return augmented_head_; }
  std::size_t outputs() const { return static_cast<std::size_t>(classes_) + (augmented_head_ ? 1 : 0); }

  /// Widths of every layer from input to output.
  const std::vector<std::size_t>& widths() const { return widths_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  static std::size_t param_count(const Arch& arch, std::size_t dim, std::size_t outputs);

  friend bool operator==(const OvrModel&, const OvrModel&) = default;

 private:
  Arch arch_;
  int classes_;
  std::size_t dim_;
  bool augmented_head_;
  std::vector<std::size_t> widths_;
  std::vector<double> params_;
};

/// Linear models start at zero; MLP weights are uniform in
/// [-1/sqrt(fan_in), 1/sqrt(fan_in)] with zero biases, drawn from `seed`.
OvrModel init_model(const Arch& arch, int classes, std::size_t dim, std::uint64_t seed,
                    bool augmented_head = true);

std::vector<double> score(const OvrModel& model, std::span<const double> x);
void score_into(const OvrModel& model, std::span<const double> x, std::span<double> out,
                Workspace& ws);

struct Prediction {
  int label = 0;  // 0..K-1 known, K == ac
  std::vector<double> scores;
};

/// Index of the largest score; ties go to the smallest index.
int argmax(std::span<const double> scores);

Prediction predict(const OvrModel& model, std::span<const double> x);

/// d loss / d params given d loss / d scores.
std::vector<double> backprop(const OvrModel& model, std::span<const double> x,
                             std::span<const double> upstream);

/// grad += weight * d loss / d params. Recomputes the forward pass in `ws`.
void accumulate_backprop(const OvrModel& model, std::span<const double> x,
                         std::span<const double> upstream, double weight,
                         std::span<double> grad, Workspace& ws);

// Checkpoint: "CLLACM1" | u8 arch tag (0 linear, 1 mlp; 0x80 set when the
// augmented head is absent) | u32 K | u32 d | u32 hidden count | u32 hidden
// sizes... | f64 params, all little-endian.
void write_checkpoint(std::ostream& os, const OvrModel& model);
OvrModel read_checkpoint(std::istream& is);
void save_checkpoint(const std::filesystem::path& path, const OvrModel& model);
OvrModel load_checkpoint(const std::filesystem::path& path);

std::string describe(const Arch& arch);

}  // namespace cllac::model
