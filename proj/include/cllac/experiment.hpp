#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cllac/dists.hpp"
#include "cllac/idx.hpp"
#include "cllac/kernels.hpp"
#include "cllac/losses.hpp"
#include "cllac/model.hpp"
#include "cllac/train.hpp"

namespace cllac::experiment {

struct SyntheticClass {
  int id = 0;
  std::vector<double> mean;
  Matrix covariance;  // empty means sigma^2 * I
  double sigma = 1.0;
  double prior = 1.0;  // relative weight inside its group (known or augmented)
};

struct IdxPaths {
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path test_images;
  std::filesystem::path test_labels;
};

enum class DatasetKind { synthetic, idx };

struct DatasetConfig {
  DatasetKind kind = DatasetKind::synthetic;
  std::vector<SyntheticClass> classes;  // synthetic only
  IdxPaths idx;                         // idx only
};

/// Everything a run needs. Known classes are relabeled 0..K-1 in the order
/// given here; every augmented class maps to the single ac label K.
struct ExperimentConfig {
  DatasetConfig dataset;
  std::vector<int> known_classes;
  std::vector<int> augmented_classes;
  std::optional<double> theta;  // idx default: known share of the training pools
  double eta = 1.0;
  double mu = 1.0;
  std::size_t n_kcl = 0;  // 0: every known-class training sample (idx only)
  std::size_t n_u = 0;    // 0: same as n_kcl
  std::size_t n_te = 0;   // 0: largest test set the pools allow (idx), 2000 (synthetic)
  losses::SurrogateLoss loss{losses::LossKind::square, 1.0};
  model::Arch arch = model::Arch::linear();
  std::optional<bool> augmented_head;  // default: false for cl forms, true otherwise
  train::TrainConfig train;
  bool weight_decay_set = false;
  std::uint64_t seed = 0;
  std::size_t repeats = 1;
  std::size_t threads = 0;  // 0: sequential kernels

  int classes() const { return static_cast<int>(known_classes.size()); }
  bool has_augmented_head() const;
};

/// Throws ConfigError on structural problems (overlapping class sets, fewer
/// than two known classes, missing synthetic means, ...).
void validate(const ExperimentConfig& cfg);

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& cfg);

/// Labeled pools for idx datasets; empty for synthetic ones.
struct RawData {
  std::optional<idx::LabeledPool> train;
  std::optional<idx::LabeledPool> test;
};

RawData load_data(const ExperimentConfig& cfg);

/// Mixture over the synthetic classes with mixing proportion `theta`.
dists::MixtureSpec synthetic_spec(const ExperimentConfig& cfg, double theta);

struct TrainingSets {
  dists::ComplementaryDataset cl;
  std::vector<int> latent;  // true label behind every complementary label
  dists::UnlabeledDataset u;
  double theta = 0.0;  // mixing proportion the unlabeled set was drawn with
};

TrainingSets prepare_training(const RawData& raw, const ExperimentConfig& cfg,
                              std::uint64_t seed);

/// Test set from the mixture with the ac prior scaled by `mu`.
dists::TestDataset prepare_test(const RawData& raw, const ExperimentConfig& cfg, double theta,
                                double mu, std::uint64_t seed);

struct Prepared {
  TrainingSets training;
  dists::TestDataset test;
};

Prepared prepare(const RawData& raw, const ExperimentConfig& cfg, std::uint64_t seed);

/// Accuracy of the exact Bayes rule on `test` (synthetic datasets only).
double bayes_accuracy(const dists::MixtureSpec& spec, const dists::TestDataset& test);

struct Timings {
  double prepare_ms = 0.0;
  double train_ms = 0.0;
  double eval_ms = 0.0;
};

struct SeedRun {
  std::uint64_t seed = 0;
  double train_theta = 0.0;  // theta after the eta perturbation
  bool theta_clamped = false;
  train::Metrics metrics;
  std::optional<double> bayes_accuracy;
  train::TrainResult result;
  std::optional<train::Standardizer> standardizer;
  dists::TestDataset test;  // in the model's feature space
  Timings timings;
};

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for one repeat
};

Summary summarize(const std::vector<double>& values);

struct RunReport {
  ExperimentConfig config;
  std::vector<SeedRun> runs;  // seeds cfg.seed, cfg.seed + 1, ...
  Summary overall;
  Summary ac_recall;
};

/// prepare -> standardize -> train with eta * theta -> evaluate, once per repeat.
RunReport run(const RawData& raw, const ExperimentConfig& cfg);
RunReport run(const ExperimentConfig& cfg);

std::string report_to_json(const RunReport& report);

/// Writes report.json plus history, checkpoint and test container per seed.
void write_outputs(const RunReport& report, const std::filesystem::path& dir);

enum class SweepParam { eta, mu };

SweepParam sweep_param_from_string(std::string_view name);

struct SweepRow {
  double value = 0.0;
  double overall_accuracy = 0.0;
  double ac_recall = 0.0;
  std::vector<double> per_class_accuracy;  // K + 1 entries, ac last
};

/// eta: one full run per value. mu: one trained model per seed, evaluated on
/// a test set drawn for each value. Metrics are averaged over repeats.
std::vector<SweepRow> sweep(const RawData& raw, const ExperimentConfig& cfg, SweepParam param,
                            const std::vector<double>& values);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, int classes);

std::string metrics_to_json(const train::Metrics& m);

}  // namespace cllac::experiment
