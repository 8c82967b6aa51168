// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. Paths are relative to the repository root.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "cllac/experiment.hpp"
#include "cllac/risks.hpp"
#include "cllac/verify.hpp"

namespace {

using namespace cllac;
using risks::RiskForm;
using verify::VerificationReport;

struct Outcome {
  bool pass = false;
  std::string detail;
};

char buf[512];

template <class... A>
std::string fmt(const char* f, A... args) {
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string describe(const VerificationReport& r) {
  return fmt("%s residual %.3g tol %.3g", r.name.c_str(), r.max_abs_residual, r.tolerance);
}

Outcome timed(const std::string& id, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("error: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0 && s > limit_s) {
    o.pass = false;
    o.detail += fmt("; over time limit %.0f s", limit_s);
  }
  std::printf("%s %s  %s (%.2f s)\n", id.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str(), s);
  std::fflush(stdout);
  return o;
}

constexpr std::uint64_t kSeed = 20240611;

Outcome ac1() {
  const auto r = verify::verify_lemma1(200, kSeed);
  return {r.ok(), describe(r)};
}

Outcome ac2() {
  const auto r = verify::verify_rewrite_identity(200, kSeed);
  return {r.ok(), describe(r)};
}

Outcome ac3() {
  const auto r = verify::verify_cl_symmetric(100, kSeed);
  return {r.ok(), describe(r)};
}

Outcome ac4() {
  const auto f = verify::verify_compact_forms(200, kSeed);
  // The printed variant only agrees when every score is zero.
  auto inst = verify::random_instance(kSeed, 5, {losses::LossKind::square});
  std::fill(inst.model.params().begin(), inst.model.params().end(), 0.0);
  const risks::RiskContext ctx{inst.model.classes(), inst.spec.theta, inst.loss};
  const double zero_gap =
      std::abs(risks::exact_cllac_risk(RiskForm::cllac_compact_printed, inst.model, inst.spec, ctx) -
               risks::exact_cllac_risk(RiskForm::cllac_lemma1, inst.model, inst.spec, ctx));
  const bool ok = f.compact.ok() && f.convex.ok() && zero_gap <= 1e-12;
  return {ok, describe(f.compact) + "; " + describe(f.convex) +
                  fmt("; printed generic residual %.3g, at F=0 %.3g", f.printed.max_abs_residual,
                      zero_gap)};
}

Outcome ac5() {
  std::size_t trial = 2;
  auto inst = verify::random_instance(kSeed, trial, {losses::LossKind::square});
  while (inst.model.classes() != 3 || inst.spec.theta < 0.2 || inst.spec.theta > 0.8) {
    inst = verify::random_instance(kSeed, ++trial, {losses::LossKind::square});
  }
  const std::vector<std::size_t> ns{100, 1000, 10000};
  const auto good = verify::verify_unbiasedness(inst.spec, inst.model, inst.loss,
                                                RiskForm::cllac_lemma1, ns, 200, kSeed);
  const auto bad = verify::verify_unbiasedness(inst.spec, inst.model, inst.loss,
                                               RiskForm::cllac_lemma1, ns, 200, kSeed, true);
  std::string d = fmt("slope %.3f", good.log_rmse_slope);
  for (const auto& p : good.points) {
    d += fmt(", n=%zu bias %.2e (3SE %.2e)", p.n, p.mean - good.exact_risk,
             3 * p.stddev / std::sqrt(200.0));
  }
  d += fmt("; ablated estimator %s", bad.pass ? "passes (unexpected)" : "rejected");
  return {good.pass && !bad.pass, d};
}

Outcome ac6() {
  const auto r = verify::verify_gradients(
      {RiskForm::supervised_ovr, RiskForm::cl_symmetric, RiskForm::cl_general,
       RiskForm::cllac_lemma1, RiskForm::cllac_compact, RiskForm::cllac_compact_printed,
       RiskForm::cllac_convex},
      kSeed);
  return {r.ok(), describe(r)};
}

experiment::ExperimentConfig baseline_of(experiment::ExperimentConfig cfg) {
  cfg.train.form = RiskForm::cl_general;
  cfg.augmented_head = false;
  return cfg;
}

Outcome ac7() {
  const auto cfg = experiment::load_config("configs/synthetic_gauss.json");
  const auto raw = experiment::load_data(cfg);
  const auto rep = experiment::run(raw, cfg);
  const auto& m = rep.runs.front();
  const double bayes = m.bayes_accuracy.value_or(NAN);
  auto base_cfg = baseline_of(cfg);
  base_cfg.repeats = 1;
  const auto base = experiment::run(raw, base_cfg);
  const double base_ac = base.ac_recall.mean;
  const bool ok = rep.overall.mean >= 0.90 && rep.ac_recall.mean >= 0.90 &&
                  rep.overall.mean >= bayes - 0.06 && base_ac == 0.0;
  return {ok, fmt("overall %.4f ac_recall %.4f bayes %.4f; baseline ac_recall %.4f",
                  rep.overall.mean, rep.ac_recall.mean, bayes, base_ac)};
}

Outcome ac8() {
  const std::filesystem::path cfg_path = "configs/mnist_012_3.json";
  const auto cfg = experiment::load_config(cfg_path);
  if (!std::filesystem::exists(cfg.dataset.idx.train_images)) {
    return {false, "data/mnist-subset missing; run tools/fetch_mnist_subset.py"};
  }
  const auto raw = experiment::load_data(cfg);
  const auto rep = experiment::run(raw, cfg);
  auto base_cfg = baseline_of(cfg);
  base_cfg.repeats = 1;
  const auto base = experiment::run(raw, base_cfg);
  const double base_ac = base.ac_recall.mean;
  const bool ok = rep.runs.size() == 3 && rep.overall.mean >= 0.90 &&
                  rep.ac_recall.mean >= 0.90 && rep.ac_recall.mean > base_ac;
  return {ok, fmt("overall %.4f +- %.4f ac_recall %.4f +- %.4f over %zu seeds; baseline "
                  "ac_recall %.4f",
                  rep.overall.mean, rep.overall.stddev, rep.ac_recall.mean, rep.ac_recall.stddev,
                  rep.runs.size(), base_ac)};
}

Outcome ac9() {
  const auto cfg = experiment::load_config("configs/synthetic_gauss.json");
  const auto raw = experiment::load_data(cfg);
  const std::vector<double> etas{0.6, 1.0, 1.4, 1.8, 2.2, 2.6};
  const auto rows = experiment::sweep(raw, cfg, experiment::SweepParam::eta, etas);
  double best = 0.0, at1 = 0.0, worst_gap = 0.0;
  std::string d;
  for (const auto& r : rows) {
    best = std::max(best, r.overall_accuracy);
    if (r.value == 1.0) at1 = r.overall_accuracy;
    d += fmt("%g:%.3f ", r.value, r.overall_accuracy);
  }
  for (const auto& r : rows) {
    if (r.value >= 1.0) worst_gap = std::max(worst_gap, std::abs(r.overall_accuracy - at1));
  }
  const bool ok = best - at1 <= 0.02 && worst_gap <= 0.10;
  return {ok, d + fmt("; max - eta1 %.4f, worst gap on [1, 2.6] %.4f", best - at1, worst_gap)};
}

Outcome ac10() {
  const auto cfg = experiment::load_config("configs/synthetic_gauss.json");
  const auto raw = experiment::load_data(cfg);
  const auto rows = experiment::sweep(raw, cfg, experiment::SweepParam::mu, {0.5, 1, 2, 4});
  double lo = 1.0, hi = 0.0;
  std::string d;
  for (const auto& r : rows) {
    lo = std::min(lo, r.overall_accuracy);
    hi = std::max(hi, r.overall_accuracy);
    d += fmt("%g:%.4f ", r.value, r.overall_accuracy);
  }
  return {hi - lo <= 0.05, d + fmt("; spread %.4f", hi - lo)};
}

}  // namespace

int main() {
  const std::vector<Outcome> results{
      timed("AC-1", 2, ac1),   timed("AC-2", 1, ac2),  timed("AC-3", 0, ac3),
      timed("AC-4", 0, ac4),   timed("AC-5", 60, ac5), timed("AC-6", 0, ac6),
      timed("AC-7", 30, ac7),  timed("AC-8", 600, ac8), timed("AC-9", 0, ac9),
      timed("AC-10", 0, ac10),
  };
  const auto failed = std::count_if(results.begin(), results.end(), [](auto& o) { return !o.pass; });
  std::printf("%zu/%zu passed\n", results.size() - failed, results.size());
  return failed == 0 ? 0 : 1;
}
