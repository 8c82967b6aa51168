#pragma once

#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "cllac/dists.hpp"
#include "cllac/kernels.hpp"
#include "cllac/losses.hpp"
#include "cllac/matrix.hpp"
#include "cllac/model.hpp"

namespace cllac::risks {

enum class RiskForm {
  supervised_ovr,         // E_te[l(y, F)], needs labeled data
  cl_symmetric,           // complementary-only, symmetric losses
  cl_general,             // complementary-only, any loss
  cllac_lemma1,           // canonical rewrite with the kcl-marginal correction
  cllac_compact,          // algebraic expansion of cllac_lemma1
  cllac_compact_printed,  // compact form without the sum over known classes
  cllac_convex,           // cllac_compact with phi(f) - phi(-f) = -f substituted
};

inline constexpr RiskForm kAllForms[] = {
    RiskForm::supervised_ovr,        RiskForm::cl_symmetric,  RiskForm::cl_general,
    RiskForm::cllac_lemma1,          RiskForm::cllac_compact, RiskForm::cllac_compact_printed,
    RiskForm::cllac_convex,
};

struct RiskContext {
  int classes = 0;  // K
  double theta = 1.0;
  losses::SurrogateLoss loss;
};

bool is_cllac(RiskForm form);
bool is_cl(RiskForm form);

/// Throws InvalidInput for bad K/theta and ConfigError when the loss does not
/// have the property the form relies on.
void check_form(RiskForm form, const RiskContext& ctx);

std::string_view to_string(RiskForm form);
RiskForm risk_form_from_string(std::string_view name);

// ---------------------------------------------------------------------------
// Per-label losses on one score vector.

/// l(j, F) = phi(f_j) + sum_{k != j} phi(-f_k) over every component of `scores`.
double ovr_loss(std::span<const double> scores, int label, const losses::SurrogateLoss& loss);

/// L(f, y) = phi(f_y) + 1/(K-1) sum_{y' != y} phi(-f_{y'}), K = scores.size().
double ova_normalized_loss(std::span<const double> scores, int label,
                           const losses::SurrogateLoss& loss);

/// Lbar(f, ybar) = 1/(K-1) sum_{y' != ybar} phi(f_{y'}) + phi(-f_ybar).
double ova_complementary_loss(std::span<const double> scores, int ybar,
                              const losses::SurrogateLoss& loss);

// ---------------------------------------------------------------------------
// Score-level evaluation.

/// Items that have already been scored. Empty `weights` means a plain
/// average (1/n); otherwise the weights are used as given.
struct ScoredSet {
  Matrix scores;
  std::vector<int> labels;
  std::vector<double> weights;

  std::size_t size() const { return scores.rows(); }
};

/// Weighted means of the pieces of a risk. For cllac forms
///   total = theta * (kcl - correction) + unlabeled
/// where `correction` is nonzero only for cllac_lemma1. For cl forms
///   total = kcl + constant; for supervised_ovr total = labeled.
struct RiskParts {
  double kcl = 0.0;
  double correction = 0.0;
  double unlabeled = 0.0;
  double labeled = 0.0;
  double constant = 0.0;
  double total = 0.0;
};

/// d total / d scores, one row per item of the corresponding set.
struct ScoreGradients {
  Matrix cl;
  Matrix u;
  Matrix labeled;
};

RiskParts risk_from_scores(RiskForm form, const RiskContext& ctx, const ScoredSet* cl,
                           const ScoredSet* u, const ScoredSet* labeled,
                           ScoreGradients* grads = nullptr,
                           const kernels::ExecPolicy& policy = {});

// ---------------------------------------------------------------------------
// Empirical evaluation.

/// Non-owning view of the datasets a form reads. Optional per-sample weights
/// replace the 1/n averages (used to evaluate expectations over an
/// enumerated support).
struct RiskData {
  const dists::ComplementaryDataset* cl = nullptr;
  const dists::UnlabeledDataset* u = nullptr;
  const dists::TestDataset* labeled = nullptr;
  std::vector<double> cl_weights;
  std::vector<double> u_weights;
  std::vector<double> labeled_weights;
};

RiskParts emp_risk_parts(RiskForm form, const model::OvrModel& model, const RiskData& data,
                         const RiskContext& ctx, const kernels::ExecPolicy& policy = {});

double emp_risk(RiskForm form, const model::OvrModel& model, const RiskData& data,
                const RiskContext& ctx, const kernels::ExecPolicy& policy = {});

std::vector<double> emp_risk_grad(RiskForm form, const model::OvrModel& model,
                                  const RiskData& data, const RiskContext& ctx,
                                  const kernels::ExecPolicy& policy = {});

/// Risk value and gradient from one forward pass; grad is overwritten.
double emp_risk_and_grad(RiskForm form, const model::OvrModel& model, const RiskData& data,
                         const RiskContext& ctx, std::span<double> grad,
                         const kernels::ExecPolicy& policy = {});

// ---------------------------------------------------------------------------
// Exact evaluation over finite distributions.

/// Maps a feature vector to its score vector.
using ScoreFn = std::function<void(std::span<const double> x, std::span<double> out)>;

ScoreFn scorer(const model::OvrModel& model);

/// Complementary items (x, ybar) with weights pbar(x, ybar) and unlabeled
/// items x with weights p_te(x), enumerated from a finite mixture spec.
struct EnumeratedCllac {
  dists::ComplementaryDataset cl;
  dists::UnlabeledDataset u;
  std::vector<double> cl_weights;
  std::vector<double> u_weights;

  RiskData view() const;
};

EnumeratedCllac enumerate_cllac(const dists::MixtureSpec& spec);

double exact_supervised_risk(const model::OvrModel& model, const dists::FiniteJoint& p_te,
                             const losses::SurrogateLoss& loss);
double exact_supervised_risk(const ScoreFn& scores, std::size_t outputs,
                             const dists::FiniteJoint& p_te, const losses::SurrogateLoss& loss);

/// E_{pbar}[-(K-1) l(ybar, x) + sum_j l(j, x)] with pbar = complementary_of(p_kcl);
/// l_table is support x K.
double rewrite_expectation(const Matrix& l_table, const dists::FiniteJoint& p_kcl);

RiskParts exact_cllac_parts(RiskForm form, const ScoreFn& scores, std::size_t outputs,
                            const dists::MixtureSpec& spec, const RiskContext& ctx);
double exact_cllac_risk(RiskForm form, const model::OvrModel& model,
                        const dists::MixtureSpec& spec, const RiskContext& ctx);
double exact_cllac_risk(RiskForm form, const ScoreFn& scores, std::size_t outputs,
                        const dists::MixtureSpec& spec, const RiskContext& ctx);

/// cl_general / cl_symmetric over pbar = complementary_of(p_kcl), using the
/// first K score components.
double exact_cl_risk(RiskForm form, const model::OvrModel& model,
                     const dists::FiniteJoint& p_kcl, const losses::SurrogateLoss& loss);
double exact_cl_risk(RiskForm form, const ScoreFn& scores, std::size_t outputs,
                     const dists::FiniteJoint& p_kcl, const losses::SurrogateLoss& loss);

}  // namespace cllac::risks
