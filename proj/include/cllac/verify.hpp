#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cllac/dists.hpp"
#include "cllac/losses.hpp"
#include "cllac/model.hpp"
#include "cllac/risks.hpp"

namespace cllac::verify {

enum class Expectation {
  must_pass,      // residual must be within tolerance
  must_fail,      // negative control: residual must exceed tolerance
  informational,  // reported only
};

struct VerificationReport {
  std::string name;
  std::size_t trials = 0;
  double max_abs_residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;  // max_abs_residual <= tolerance
  Expectation expectation = Expectation::must_pass;
  std::string notes;

  /// True when the outcome matches the expectation.
  bool ok() const;
};

VerificationReport make_report(std::string name, std::size_t trials, double residual,
                               double tolerance, Expectation expectation, std::string notes = {});

// Random finite instances. Everything below is reproducible from (seed, trial).
struct RandomInstance {
  dists::MixtureSpec spec;
  model::OvrModel model;
  losses::SurrogateLoss loss;
};

/// m <= 8 support points in [-1, 1]^2, K in {2, 3, 4}, probabilities from a
/// flat Dirichlet draw, theta uniform in [0, 1] (trials 0 and 1 use theta = 0
/// and 1), linear F with every score in [-2, 2].
RandomInstance random_instance(std::uint64_t seed, std::size_t trial,
                               std::vector<losses::LossKind> kinds);

/// Exact identity behind cllac_lemma1: the complementary/unlabeled rewrite equals the
/// supervised risk over the mixture. `theta_offset` corrupts the theta used
/// by the rewrite (negative control).
VerificationReport verify_lemma1(std::size_t trials, std::uint64_t seed, double tol = 1e-10,
                                 double theta_offset = 0.0);

/// E_pbar[-(K-1) l(ybar) + sum_j l(j)] == E_p[l(y)] for random tables.
VerificationReport verify_rewrite_identity(std::size_t trials, std::uint64_t seed,
                                           double tol = 1e-12);

/// cl_symmetric (ramp, sigmoid) and cl_general against their direct expectations.
VerificationReport verify_cl_symmetric(std::size_t trials, std::uint64_t seed, double tol = 1e-10);
VerificationReport verify_cl_general(std::size_t trials, std::uint64_t seed, double tol = 1e-10);

struct CompactFormReports {
  VerificationReport compact;  // cllac_compact vs cllac_lemma1
  VerificationReport printed;  // cllac_compact_printed vs cllac_lemma1 (informational)
  VerificationReport convex;   // cllac_convex vs cllac_lemma1, linear-odd losses
};

CompactFormReports verify_compact_forms(std::size_t trials, std::uint64_t seed);

struct UnbiasednessPoint {
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double rmse = 0.0;
  bool within_3se = false;
};

struct UnbiasednessReport {
  double exact_risk = 0.0;
  std::vector<UnbiasednessPoint> points;
  double log_rmse_slope = 0.0;  // NaN when every estimate is exact
  bool slope_ok = false;
  bool mean_ok = false;
  bool pass = false;
};

/// Monte-Carlo check of the empirical estimator. For each n, `repeats` pairs
/// of (complementary, unlabeled) datasets of size n are drawn from `spec`.
/// With `ablate_correction` the cllac_lemma1 estimator is computed without its
/// -theta * E_kcl[l(K+1)] term (negative control).
UnbiasednessReport verify_unbiasedness(const dists::MixtureSpec& spec,
                                       const model::OvrModel& model,
                                       const losses::SurrogateLoss& loss, risks::RiskForm form,
                                       const std::vector<std::size_t>& n_list,
                                       std::size_t repeats, std::uint64_t seed,
                                       bool ablate_correction = false);

/// Finite-difference check of emp_risk_grad on 20 random coordinates for each
/// form and both architectures. Residual is the worst relative error.
VerificationReport verify_gradients(const std::vector<risks::RiskForm>& forms, std::uint64_t seed,
                                    double tol = 1e-4);

struct BayesReference {
  std::vector<int> decision;  // per support point; -1 where p(x) == 0
  double risk = 0.0;          // sum_x p(x) (1 - max_c p(c | x))
  std::vector<std::size_t> skipped;
};

BayesReference bayes_reference(const dists::FiniteJoint& p_te);

/// 0-1 risk of the argmax decision given per-support scores.
double zero_one_risk(const dists::FiniteJoint& p_te, const Matrix& scores);

/// Tabular scores (one per support point and class) trained on the exact
/// cllac_lemma1 risk reach the Bayes 0-1 risk. Residual is the largest gap
/// over the fixtures.
VerificationReport verify_consistency(std::size_t fixtures, std::uint64_t seed, double tol = 0.01);

/// Every check the `verify` command runs, in order.
std::vector<VerificationReport> run_all(std::uint64_t seed);

std::string to_json(const std::vector<VerificationReport>& reports);

}  // namespace cllac::verify
