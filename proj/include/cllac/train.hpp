#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "cllac/dists.hpp"
#include "cllac/kernels.hpp"
#include "cllac/model.hpp"
#include "cllac/risks.hpp"

namespace cllac::train {

enum class StepRule { fixed, momentum, adaptive };

struct StepConfig {
  StepRule rule = StepRule::adaptive;
  double lr = 0.5;
  double momentum = 0.9;  // momentum rule only
  // adaptive rule: per-parameter running averages of squared gradients and
  // squared updates (Adadelta recurrence)
  double decay = 0.95;
  double epsilon = 1e-6;
};

struct TrainConfig {
  risks::RiskForm form = risks::RiskForm::cllac_compact;
  risks::RiskContext ctx;
  std::size_t epochs = 20;
  std::size_t batch_size = 256;
  StepConfig step;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;
  bool standardize = true;
  kernels::ExecPolicy policy;
};

void validate(const TrainConfig& cfg);

/// Weight decay used when a config does not set one: 0 for the convex form, 1e-4 otherwise.
double default_weight_decay(risks::RiskForm form);

struct EpochRecord {
  std::size_t epoch = 0;
  double emp_risk = 0.0;
  double wall_ms = 0.0;
};

struct TrainResult {
  model::OvrModel model;
  double initial_risk = 0.0;
  std::vector<EpochRecord> history;
};

/// Raised when the full-data risk stops being finite. Carries the last model
/// whose risk was finite and the history up to that point.
class TrainingDivergence : public std::runtime_error {
 public:
  TrainingDivergence(const std::string& what, TrainResult last_finite)
      : std::runtime_error(what), last_finite_(std::move(last_finite)) {}

  const TrainResult& last_finite() const { return last_finite_; }

 private:
  TrainResult last_finite_;
};

/// Mini-batch minimisation of the configured empirical risk. Each step draws
/// a batch of complementary samples and a proportionally sized batch of
/// unlabeled samples; shuffles are keyed by cfg.seed. `data` may carry a
/// labeled set instead for supervised_ovr. The history records the full-data
/// risk after every epoch.
TrainResult train(model::OvrModel model, const risks::RiskData& data, const TrainConfig& cfg);

TrainResult train(model::OvrModel model, const dists::ComplementaryDataset& cl,
                  const dists::UnlabeledDataset& u, const TrainConfig& cfg);

void write_history_csv(std::ostream& os, const std::vector<EpochRecord>& history);

// ---------------------------------------------------------------------------

struct Metrics {
  double overall_accuracy = 0.0;
  std::vector<double> per_class_accuracy;  // K+1 entries, NaN where a class has no samples
  std::vector<std::size_t> per_class_count;
  double ac_recall = 0.0;  // NaN when the test set has no ac samples
  std::size_t samples = 0;
};

Metrics evaluate(const model::OvrModel& model, const dists::TestDataset& test,
                 const kernels::ExecPolicy& policy = {});

// ---------------------------------------------------------------------------

/// Per-feature affine map x -> (x - mean) / sqrt(max(var, 1e-8)).
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  void apply(Matrix& x) const;
};

/// Fits on the union of complementary and unlabeled features.
Standardizer fit_standardizer(const dists::ComplementaryDataset& cl,
                              const dists::UnlabeledDataset& u);
Standardizer fit_standardizer(const Matrix& pool);

}  // namespace cllac::train
