#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cllac/dists.hpp"
#include "cllac/errors.hpp"
#include "cllac/experiment.hpp"
#include "cllac/idx.hpp"
#include "cllac/model.hpp"
#include "cllac/train.hpp"
#include "cllac/verify.hpp"

namespace fs = std::filesystem;
using namespace cllac;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t threads = 0;
};

experiment::ExperimentConfig load(const Common& c) {
  auto cfg = experiment::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.threads) cfg.threads = c.threads;
  return cfg;
}

int cmd_synth(const Common& c) {
  const auto cfg = load(c);
  const auto raw = experiment::load_data(cfg);
  const auto p = experiment::prepare(raw, cfg, cfg.seed);
  const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
  fs::create_directories(dir);
  dists::save_container(dir / "cl.bin", dists::to_container(p.training.cl));
  dists::save_container(dir / "u.bin", dists::to_container(p.training.u));
  dists::save_container(dir / "test.bin", dists::to_container(p.test));
  std::printf("cl %zu  u %zu  test %zu  d %zu  theta %.6g\n", p.training.cl.size(),
              p.training.u.size(), p.test.size(), p.test.x.cols(), p.training.theta);
  return 0;
}

int cmd_ingest(const std::string& images, const std::string& labels, const std::string& out) {
  const auto pool = idx::ingest_idx(images, labels);
  std::printf("%zu samples, %zux%zu\n", pool.size(), pool.rows, pool.cols);
  if (!out.empty()) dists::save_container(out, {pool.x, pool.y});
  return 0;
}

int cmd_run(const Common& c) {
  const auto cfg = load(c);
  const auto rep = experiment::run(cfg);
  if (!c.out.empty()) experiment::write_outputs(rep, c.out);
  for (const auto& r : rep.runs) {
    std::printf("seed %llu  overall %.4f  ac_recall %.4f  train %.0f ms\n",
                static_cast<unsigned long long>(r.seed), r.metrics.overall_accuracy,
                r.metrics.ac_recall, r.timings.train_ms);
  }
  std::printf("overall %.4f +- %.4f  ac_recall %.4f +- %.4f\n", rep.overall.mean,
              rep.overall.stddev, rep.ac_recall.mean, rep.ac_recall.stddev);
  return 0;
}

int cmd_sweep(const Common& c, const std::string& param, const std::vector<double>& values) {
  const auto cfg = load(c);
  const auto rows = experiment::sweep(experiment::load_data(cfg), cfg,
                                      experiment::sweep_param_from_string(param), values);
  if (c.out.empty()) {
    experiment::write_sweep_csv(std::cout, rows, cfg.classes());
  } else {
    fs::create_directories(c.out);
    std::ofstream f(fs::path(c.out) / ("sweep_" + param + ".csv"));
    experiment::write_sweep_csv(f, rows, cfg.classes());
  }
  return 0;
}

int cmd_verify(std::uint64_t seed, const std::string& out) {
  const auto reports = verify::run_all(seed);
  const std::string text = verify::to_json(reports);
  if (out.empty()) {
    std::cout << text << '\n';
  } else {
    std::ofstream(out) << text << '\n';
  }
  bool ok = true;
  for (const auto& r : reports) {
    std::fprintf(stderr, "%-34s %s  residual %.3g  tol %.3g\n", r.name.c_str(),
                 r.ok() ? "ok  " : "FAIL", r.max_abs_residual, r.tolerance);
    ok = ok && r.ok();
  }
  return ok ? 0 : static_cast<int>(ExitCode::verification);
}

int cmd_eval(const std::string& model_path, const std::string& data_path) {
  const auto m = model::load_checkpoint(model_path);
  const auto c = dists::load_container(data_path);
  if (!c.labels) throw InvalidInput("evaluation data has no labels");
  dists::TestDataset test{c.x, *c.labels, m.classes()};
  std::cout << experiment::metrics_to_json(train::evaluate(m, test)) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Complementary-label learning with augmented classes"};
  app.require_subcommand(1);

  Common common;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "Override the config seed");
    sub->add_option("--out", common.out, "Output directory");
    sub->add_option("--threads", common.threads, "OpenMP threads for the kernels (0: sequential)");
  };

  auto* synth = app.add_subcommand("synth", "Write CL, unlabeled and test containers for a config");
  add_common(synth);

  std::string images, labels, ingest_out;
  auto* ingest = app.add_subcommand("ingest", "Parse an IDX image/label pair");
  ingest->add_option("--images", images)->required();
  ingest->add_option("--labels", labels)->required();
  ingest->add_option("--out", ingest_out, "Write the samples as a container file");

  auto* run = app.add_subcommand("run", "Prepare, train and evaluate");
  add_common(run);

  std::string param;
  std::vector<double> values;
  auto* sweep = app.add_subcommand("sweep", "Metrics over eta or mu values");
  add_common(sweep);
  sweep->add_option("--param", param)->required()->check(CLI::IsMember({"eta", "mu"}));
  sweep->add_option("--values", values)->required()->delimiter(',');

  std::uint64_t verify_seed = 0;
  std::string verify_out;
  auto* verify = app.add_subcommand("verify", "Run the identity, unbiasedness and gradient checks");
  verify->add_option("--seed", verify_seed);
  verify->add_option("--out", verify_out, "Write the JSON report here instead of stdout");

  std::string model_path, data_path;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a labeled container");
  eval->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  eval->add_option("--data", data_path)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::usage);
  }

  try {
    if (*synth) return cmd_synth(common);
    if (*ingest) return cmd_ingest(images, labels, ingest_out);
    if (*run) return cmd_run(common);
    if (*sweep) return cmd_sweep(common, param, values);
    if (*verify) return cmd_verify(verify_seed, verify_out);
    if (*eval) return cmd_eval(model_path, data_path);
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::format);
  } catch (const train::TrainingDivergence& e) {
    std::cerr << "training diverged: " << e.what() << '\n';
    return static_cast<int>(ExitCode::divergence);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::usage);
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return static_cast<int>(ExitCode::usage);
  }
  return static_cast<int>(ExitCode::usage);
}
