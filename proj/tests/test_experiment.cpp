#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "cllac/errors.hpp"
#include "cllac/experiment.hpp"
#include "cllac/rng.hpp"

using namespace cllac;
using namespace cllac::experiment;

namespace {

const char* kSynthetic = R"({
  "dataset": {"kind": "synthetic", "classes": [
    {"id": 0, "mean": [3, 3]}, {"id": 1, "mean": [-3, 3]},
    {"id": 2, "mean": [-3, -3]}, {"id": 3, "mean": [3, -3]}]},
  "known_classes": [0, 1, 2],
  "augmented_classes": [3],
  "theta": 0.75,
  "n_kcl": 400, "n_u": 400, "n_te": 400,
  "loss": {"kind": "square", "scale": 1},
  "model": {"arch": "linear"},
  "train": {"form": "cllac_convex", "epochs": 3},
  "seed": 5
})";

// Ten classes of 6 x 6 images; class c lights up pixel c, plus noise.
RawData toy_pools(std::size_t per_class_train, std::size_t per_class_test) {
  CounterRng rng(1, "toy");
  const auto make = [&](std::size_t per_class) {
    idx::LabeledPool p;
    p.rows = p.cols = 6;
    for (int c = 0; c < 10; ++c) {
      for (std::size_t i = 0; i < per_class; ++i) {
        std::vector<double> row(36);
        for (auto& v : row) v = std::round(rng.uniform(0.0, 0.2) * 255.0) / 255.0;
        row[static_cast<std::size_t>(c)] = 1.0;
        p.x.append_row(row);
        p.y.push_back(c);
      }
    }
    return p;
  };
  RawData raw;
  raw.train = make(per_class_train);
  raw.test = make(per_class_test);
  return raw;
}

ExperimentConfig idx_config() {
  auto cfg = parse_config(R"({
    "dataset": {"kind": "idx", "train_images": "a", "train_labels": "b",
                "test_images": "c", "test_labels": "d"},
    "known_classes": [7, 8, 9], "augmented_classes": [1, 2],
    "model": {"arch": "mlp", "hidden": [8]},
    "train": {"form": "cllac_compact", "epochs": 2, "standardize": false},
    "seed": 3
  })");
  return cfg;
}

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("config parsing and echo") {
    const auto cfg = parse_config(kSynthetic);
    CHECK(cfg.classes() == 3);
    CHECK(*cfg.theta == 0.75);
    CHECK(cfg.train.form == risks::RiskForm::cllac_convex);
    CHECK(cfg.train.weight_decay == 0.0);
    CHECK(cfg.has_augmented_head());
    const auto again = parse_config(config_to_json(cfg));
    CHECK(config_to_json(again) == config_to_json(cfg));
  }

  TEST_CASE("config errors") {
    auto bad = [](const std::string& patch_from, const std::string& patch_to) {
      std::string text = kSynthetic;
      const auto at = text.find(patch_from);
      REQUIRE(at != std::string::npos);
      text.replace(at, patch_from.size(), patch_to);
      return text;
    };
    CHECK_THROWS_AS(parse_config("{"), ConfigError);
    CHECK_THROWS_AS(parse_config(bad("\"augmented_classes\": [3]", "\"augmented_classes\": [2]")), ConfigError);
    CHECK_THROWS_AS(parse_config(bad("[0, 1, 2]", "[0]")), ConfigError);
    CHECK_THROWS_AS(parse_config(bad("\"cllac_convex\"", "\"cllac_magic\"")), ConfigError);
    CHECK_THROWS_AS(parse_config(bad("\"kind\": \"square\", \"scale\": 1", "\"kind\": \"ramp\"")), ConfigError);
    CHECK_THROWS_AS(parse_config(bad("\"cllac_convex\"", "\"supervised_ovr\"")), ConfigError);
  }

  TEST_CASE("synthetic preparation") {
    const auto cfg = parse_config(kSynthetic);
    const auto p = prepare({}, cfg, cfg.seed);
    CHECK(p.training.cl.size() == 400);
    CHECK(p.training.u.size() == 400);
    CHECK(p.test.size() == 400);
    for (std::size_t i = 0; i < p.training.latent.size(); ++i) {
      CHECK(p.training.cl.ybar[i] != p.training.latent[i]);
    }
    const auto q = prepare({}, cfg, cfg.seed);
    CHECK(q.training.cl.x == p.training.cl.x);
    CHECK(q.test.y == p.test.y);
  }

  TEST_CASE("idx preparation relabels and collapses classes") {
    const auto raw = toy_pools(40, 20);
    auto cfg = idx_config();
    const auto p = prepare(raw, cfg, 3);
    CHECK(p.training.cl.classes == 3);
    // theta from pool sizes: 120 known vs 80 augmented
    CHECK(p.training.theta == doctest::Approx(0.6));
    CHECK(p.training.cl.size() == 120);
    CHECK(p.training.u.size() == 120);
    std::set<int> labels(p.test.y.begin(), p.test.y.end());
    CHECK(labels == std::set<int>{0, 1, 2, 3});
    for (std::size_t i = 0; i < p.test.size(); ++i) {
      // class id c lights pixel c: known 7, 8, 9 become 0, 1, 2; 1 and 2 become ac
      const int lit = p.test.x(i, 7) == 1.0 ? 0 : p.test.x(i, 8) == 1.0 ? 1 : p.test.x(i, 9) == 1.0 ? 2 : 3;
      CHECK(p.test.y[i] == lit);
    }
    for (std::size_t i = 0; i < p.training.cl.size(); ++i) {
      CHECK(p.training.cl.ybar[i] != p.training.latent[i]);
      CHECK(p.training.cl.x(i, 7 + static_cast<std::size_t>(p.training.latent[i])) == 1.0);
    }
  }

  TEST_CASE("theta = 1 leaves augmented images out of the unlabeled set") {
    const auto raw = toy_pools(30, 10);
    auto cfg = idx_config();
    cfg.theta = 1.0;
    const auto p = prepare(raw, cfg, 3);
    for (std::size_t i = 0; i < p.training.u.size(); ++i) {
      CHECK(p.training.u.x(i, 1) != 1.0);
      CHECK(p.training.u.x(i, 2) != 1.0);
    }
  }

  TEST_CASE("test set follows the shifted class prior") {
    const auto raw = toy_pools(30, 40);
    auto cfg = idx_config();
    cfg.theta = 0.5;
    for (double mu : {0.5, 1.0, 2.0}) {
      const auto t = prepare_test(raw, cfg, 0.5, mu, 3);
      std::size_t ac = 0;
      for (int y : t.y) ac += y == 3;
      const double expected = mu / (1.0 + mu);
      CHECK(std::abs(static_cast<double>(ac) / t.size() - expected) < 0.01);
    }
  }

  TEST_CASE("insufficient samples") {
    const auto raw = toy_pools(10, 5);
    auto cfg = idx_config();
    cfg.n_kcl = 31;
    CHECK_THROWS_AS(prepare(raw, cfg, 1), InvalidInput);
  }

  TEST_CASE("run is deterministic and eta = 1, mu = 1 is a plain run") {
    const auto cfg = parse_config(kSynthetic);
    const auto a = run({}, cfg);
    const auto b = run({}, cfg);
    CHECK(a.runs[0].result.model == b.runs[0].result.model);
    CHECK(a.runs[0].metrics.overall_accuracy == b.runs[0].metrics.overall_accuracy);
    CHECK(a.runs[0].bayes_accuracy.has_value());

    const auto rows = sweep({}, cfg, SweepParam::eta, {1.0});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].overall_accuracy == a.overall.mean);
    const auto mu_rows = sweep({}, cfg, SweepParam::mu, {1.0, 2.0});
    CHECK(mu_rows[0].overall_accuracy == a.overall.mean);
  }

  TEST_CASE("repeats report mean and spread") {
    auto cfg = parse_config(kSynthetic);
    cfg.repeats = 3;
    const auto r = run({}, cfg);
    REQUIRE(r.runs.size() == 3);
    CHECK(r.runs[2].seed == cfg.seed + 2);
    std::vector<double> v;
    for (const auto& x : r.runs) v.push_back(x.metrics.overall_accuracy);
    CHECK(r.overall.mean == doctest::Approx((v[0] + v[1] + v[2]) / 3.0));
  }

  TEST_CASE("report json schema and outputs") {
    const auto cfg = parse_config(kSynthetic);
    const auto r = run({}, cfg);
    const auto j = nlohmann::json::parse(report_to_json(r));
    CHECK(j.contains("config"));
    CHECK(j["metrics"].contains("overall"));
    CHECK(j["metrics"]["per_class"].size() == 4);
    CHECK(j["metrics"].contains("ac_recall"));
    CHECK(j.contains("timings"));
    // the echoed config reproduces the metrics
    const auto again = run({}, parse_config(j["config"].dump()));
    CHECK(again.overall.mean == r.overall.mean);

    const auto dir = std::filesystem::temp_directory_path() / "cllac_test_outputs";
    std::filesystem::remove_all(dir);
    write_outputs(r, dir);
    CHECK(std::filesystem::exists(dir / "report.json"));
    CHECK(std::filesystem::exists(dir / "history_5.csv"));
    CHECK(std::filesystem::exists(dir / "model_5.bin"));
    const auto m = model::load_checkpoint(dir / "model_5.bin");
    CHECK(m == r.runs[0].result.model);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("sweep csv") {
    std::ostringstream os;
    write_sweep_csv(os, {{0.5, 0.9, 0.8, {1.0, 0.75, std::nan(""), 0.8}}}, 3);
    CHECK(os.str() ==
          "value,overall_accuracy,ac_recall,class_1_accuracy,class_2_accuracy,class_3_accuracy,"
          "ac_accuracy\n0.5,0.9,0.8,1,0.75,,0.8\n");
  }
}
