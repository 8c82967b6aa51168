#include "cllac/risks.hpp"

#include <cmath>
#include <string>

#include "cllac/errors.hpp"
#include "cllac/summation.hpp"

namespace cllac::risks {
namespace {

using losses::SurrogateLoss;

// phi and phi' at +f and -f for every component of one score row.
struct PhiCache {
  std::vector<double> pos, neg, dpos, dneg;

  void fill(std::span<const double> f, std::size_t n, const SurrogateLoss& loss) {
    pos.resize(n);
    neg.resize(n);
    dpos.resize(n);
    dneg.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      pos[k] = losses::eval_loss(loss, f[k]);
      neg[k] = losses::eval_loss(loss, -f[k]);
      dpos[k] = losses::eval_loss_grad(loss, f[k]);
      dneg[k] = losses::eval_loss_grad(loss, -f[k]);
    }
  }
};

// sum_j c_j l(j, F) over n components, each l(j, F) evaluated term by term.
// d/df_k = c_k phi'(f_k) - (sum_j c_j - c_k) phi'(-f_k).
double ovr_combination(const PhiCache& phi, std::span<const double> c, std::span<double> grad) {
  const std::size_t n = c.size();
  double value = 0.0;
  double c_total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    c_total += c[j];
    if (c[j] == 0.0) continue;
    double l = phi.pos[j];
    for (std::size_t k = 0; k < n; ++k) {
      if (k != j) l += phi.neg[k];
    }
    value += c[j] * l;
  }
  if (!grad.empty()) {
    for (std::size_t k = 0; k < n; ++k) grad[k] = c[k] * phi.dpos[k] - (c_total - c[k]) * phi.dneg[k];
  }
  return value;
}

std::span<double> grad_row(Matrix* g, std::size_t i) {
  return g == nullptr ? std::span<double>{} : g->row(i);
}

// Complementary-item bracket of each cllac form; ac is component K.
double cllac_bracket(RiskForm form, const PhiCache& phi, std::span<const double> f, int ybar,
                     std::size_t k, std::vector<double>& coeff, std::span<double> grad) {
  const auto yb = static_cast<std::size_t>(ybar);
  const double km1 = static_cast<double>(k - 1);
  switch (form) {
    case RiskForm::cllac_lemma1: {
      coeff.assign(k + 1, 1.0);
      coeff[k] = 0.0;
      coeff[yb] -= km1;
      return ovr_combination(phi, coeff, grad);
    }
    case RiskForm::cllac_compact: {
      double v = 0.0;
      for (std::size_t j = 0; j < k; ++j) v += phi.pos[j] - phi.neg[j];
      v -= km1 * (phi.pos[yb] - phi.neg[yb]);
      v += phi.neg[k] - phi.pos[k];
      if (!grad.empty()) {
        for (std::size_t j = 0; j < k; ++j) grad[j] = phi.dpos[j] + phi.dneg[j];
        grad[yb] -= km1 * (phi.dpos[yb] + phi.dneg[yb]);
        grad[k] = -phi.dneg[k] - phi.dpos[k];
      }
      return v;
    }
    case RiskForm::cllac_compact_printed: {
      const double v = (phi.neg[k] - phi.pos[k]) + km1 * (phi.neg[yb] - phi.pos[yb]);
      if (!grad.empty()) {
        std::fill(grad.begin(), grad.end(), 0.0);
        grad[yb] = -km1 * (phi.dneg[yb] + phi.dpos[yb]);
        grad[k] = -phi.dneg[k] - phi.dpos[k];
      }
      return v;
    }
    case RiskForm::cllac_convex: {
      double v = 0.0;
      for (std::size_t j = 0; j < k; ++j) v -= f[j];
      v += km1 * f[yb] + f[k];
      if (!grad.empty()) {
        for (std::size_t j = 0; j < k; ++j) grad[j] = -1.0;
        grad[yb] += km1;
        grad[k] = 1.0;
      }
      return v;
    }
    default:
      throw std::logic_error("not a cllac form");
  }
}

// Weighted mean of per-item values: sum/n when weights are empty.
double mean_of(std::span<const double> values, std::span<const double> weights,
               const kernels::ExecPolicy& policy) {
  const double s = kernels::weighted_sum(values, weights, policy);
  return weights.empty() ? s / static_cast<double>(values.size()) : s;
}

double item_weight(const ScoredSet& set, std::size_t i) {
  return set.weights.empty() ? 1.0 / static_cast<double>(set.size()) : set.weights[i];
}

void check_set(const ScoredSet* set, const char* name, bool labeled, std::size_t width) {
  if (set == nullptr || set->size() == 0) {
    throw InvalidInput(std::string("risk form requires a non-empty ") + name + " set");
  }
  if (set->scores.cols() < width) throw InvalidInput(std::string(name) + " scores are too narrow");
  if (labeled && set->labels.size() != set->size()) {
    throw InvalidInput(std::string(name) + " labels do not match scores");
  }
  if (!set->weights.empty() && set->weights.size() != set->size()) {
    throw InvalidInput(std::string(name) + " weights do not match scores");
  }
}

void check_labels(const ScoredSet& set, int upper, const char* name) {
  for (int y : set.labels) {
    if (y < 0 || y >= upper) throw InvalidInput(std::string(name) + " label out of range");
  }
}

}  // namespace

bool is_cllac(RiskForm form) {
  return form == RiskForm::cllac_lemma1 || form == RiskForm::cllac_compact ||
         form == RiskForm::cllac_compact_printed || form == RiskForm::cllac_convex;
}

bool is_cl(RiskForm form) { return form == RiskForm::cl_general || form == RiskForm::cl_symmetric; }

void check_form(RiskForm form, const RiskContext& ctx) {
  if (ctx.classes < 2) throw InvalidInput("risk context needs K >= 2");
  if (!(ctx.theta >= 0.0 && ctx.theta <= 1.0)) throw InvalidInput("theta must lie in [0, 1]");
  if (!(ctx.loss.scale > 0.0)) throw InvalidInput("loss scale must be positive");
  if (form == RiskForm::cl_symmetric && !losses::is_symmetric(ctx.loss)) {
    throw ConfigError("cl_symmetric requires a symmetric loss, got " +
                      std::string(losses::to_string(ctx.loss.kind)));
  }
  if (form == RiskForm::cllac_convex && !losses::is_linear_odd(ctx.loss)) {
    throw ConfigError("cllac_convex requires a linear-odd loss, got " +
                      std::string(losses::to_string(ctx.loss.kind)) + " with scale " +
                      std::to_string(ctx.loss.scale));
  }
}

std::string_view to_string(RiskForm form) {
  switch (form) {
    case RiskForm::supervised_ovr: return "supervised_ovr";
    case RiskForm::cl_symmetric: return "cl_symmetric";
    case RiskForm::cl_general: return "cl_general";
    case RiskForm::cllac_lemma1: return "cllac_lemma1";
    case RiskForm::cllac_compact: return "cllac_compact";
    case RiskForm::cllac_compact_printed: return "cllac_compact_printed";
    case RiskForm::cllac_convex: return "cllac_convex";
  }
  return "?";
}

RiskForm risk_form_from_string(std::string_view name) {
  for (RiskForm f : kAllForms) {
    if (to_string(f) == name) return f;
  }
  throw InvalidInput("unknown risk form '" + std::string(name) + "'");
}

double ovr_loss(std::span<const double> scores, int label, const SurrogateLoss& loss) {
  if (label < 0 || static_cast<std::size_t>(label) >= scores.size()) {
    throw InvalidInput("label out of range for score vector");
  }
  double l = losses::eval_loss(loss, scores[static_cast<std::size_t>(label)]);
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (k != static_cast<std::size_t>(label)) l += losses::eval_loss(loss, -scores[k]);
  }
  return l;
}

double ova_normalized_loss(std::span<const double> scores, int label, const SurrogateLoss& loss) {
  const std::size_t k = scores.size();
  if (k < 2 || label < 0 || static_cast<std::size_t>(label) >= k) {
    throw InvalidInput("label out of range for score vector");
  }
  double rest = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (j != static_cast<std::size_t>(label)) rest += losses::eval_loss(loss, -scores[j]);
  }
  return losses::eval_loss(loss, scores[static_cast<std::size_t>(label)]) +
         rest / static_cast<double>(k - 1);
}

double ova_complementary_loss(std::span<const double> scores, int ybar, const SurrogateLoss& loss) {
  const std::size_t k = scores.size();
  if (k < 2 || ybar < 0 || static_cast<std::size_t>(ybar) >= k) {
    throw InvalidInput("label out of range for score vector");
  }
  double rest = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (j != static_cast<std::size_t>(ybar)) rest += losses::eval_loss(loss, scores[j]);
  }
  return rest / static_cast<double>(k - 1) +
         losses::eval_loss(loss, -scores[static_cast<std::size_t>(ybar)]);
}

RiskParts risk_from_scores(RiskForm form, const RiskContext& ctx, const ScoredSet* cl,
                           const ScoredSet* u, const ScoredSet* labeled, ScoreGradients* grads,
                           const kernels::ExecPolicy& policy) {
  check_form(form, ctx);
  const auto k = static_cast<std::size_t>(ctx.classes);
  const double km1 = static_cast<double>(k - 1);
  const double s = ctx.loss.scale;
  RiskParts parts;
  PhiCache phi;
  std::vector<double> coeff;

  if (form == RiskForm::supervised_ovr) {
    check_set(labeled, "labeled", true, k + 1);
    check_labels(*labeled, ctx.classes + 1, "labeled");
    const std::size_t n = labeled->size();
    Matrix* g = nullptr;
    if (grads) {
      grads->labeled = Matrix(n, labeled->scores.cols());
      g = &grads->labeled;
    }
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto f = labeled->scores.row(i);
      phi.fill(f, k + 1, ctx.loss);
      coeff.assign(k + 1, 0.0);
      coeff[static_cast<std::size_t>(labeled->labels[i])] = 1.0;
      auto gi = grad_row(g, i);
      values[i] = ovr_combination(phi, coeff, gi.empty() ? gi : gi.first(k + 1));
      if (!gi.empty()) {
        const double w = item_weight(*labeled, i);
        for (std::size_t c = 0; c <= k; ++c) gi[c] *= w;
      }
    }
    parts.labeled = mean_of(values, labeled->weights, policy);
    parts.total = parts.labeled;
    return parts;
  }

  if (is_cl(form)) {
    check_set(cl, "complementary", true, k);
    check_labels(*cl, ctx.classes, "complementary");
    const std::size_t n = cl->size();
    Matrix* g = nullptr;
    if (grads) {
      grads->cl = Matrix(n, cl->scores.cols());
      g = &grads->cl;
    }
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto f = cl->scores.row(i).first(k);
      const int yb = cl->labels[i];
      const auto ybu = static_cast<std::size_t>(yb);
      phi.fill(f, k, ctx.loss);
      auto gi = grad_row(g, i);
      if (form == RiskForm::cl_general) {
        coeff.assign(k, 1.0);
        coeff[ybu] -= km1;
        values[i] = ovr_combination(phi, coeff, gi.empty() ? gi : gi.first(k));
      } else {
        values[i] = km1 * ova_complementary_loss(f, yb, ctx.loss);
        if (!gi.empty()) {
          for (std::size_t j = 0; j < k; ++j) gi[j] = phi.dpos[j];
          gi[ybu] = -km1 * phi.dneg[ybu];
        }
      }
      if (!gi.empty()) {
        const double w = item_weight(*cl, i);
        for (std::size_t c = 0; c < k; ++c) gi[c] *= w;
      }
    }
    parts.kcl = mean_of(values, cl->weights, policy);
    // M1 = K * scale and M2 = 2 * scale for a symmetric loss with phi(z) + phi(-z) = scale.
    parts.constant = form == RiskForm::cl_symmetric ? -static_cast<double>(k) * s + 2.0 * s : 0.0;
    parts.total = parts.kcl + parts.constant;
    return parts;
  }

  // cllac forms
  check_set(cl, "complementary", true, k + 1);
  check_set(u, "unlabeled", false, k + 1);
  check_labels(*cl, ctx.classes, "complementary");
  const double theta = ctx.theta;
  const bool lemma1 = form == RiskForm::cllac_lemma1;

  {
    const std::size_t n = cl->size();
    Matrix* g = nullptr;
    if (grads) {
      grads->cl = Matrix(n, cl->scores.cols());
      g = &grads->cl;
    }
    std::vector<double> bracket(n);
    std::vector<double> correction(lemma1 ? n : 0);
    std::vector<double> gc(k + 1);
    for (std::size_t i = 0; i < n; ++i) {
      const auto f = cl->scores.row(i).first(k + 1);
      phi.fill(f, k + 1, ctx.loss);
      auto gi = grad_row(g, i);
      bracket[i] = cllac_bracket(form, phi, f, cl->labels[i], k, coeff,
                                 gi.empty() ? gi : gi.first(k + 1));
      if (lemma1) {
        coeff.assign(k + 1, 0.0);
        coeff[k] = 1.0;
        correction[i] = ovr_combination(phi, coeff, gi.empty() ? std::span<double>{} : std::span<double>(gc));
        if (!gi.empty()) {
          for (std::size_t c = 0; c <= k; ++c) gi[c] -= gc[c];
        }
      }
      if (!gi.empty()) {
        const double w = theta * item_weight(*cl, i);
        for (std::size_t c = 0; c <= k; ++c) gi[c] *= w;
      }
    }
    parts.kcl = mean_of(bracket, cl->weights, policy);
    if (lemma1) parts.correction = mean_of(correction, cl->weights, policy);
  }
  {
    const std::size_t n = u->size();
    Matrix* g = nullptr;
    if (grads) {
      grads->u = Matrix(n, u->scores.cols());
      g = &grads->u;
    }
    std::vector<double> values(n);
    coeff.assign(k + 1, 0.0);
    coeff[k] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto f = u->scores.row(i).first(k + 1);
      phi.fill(f, k + 1, ctx.loss);
      auto gi = grad_row(g, i);
      values[i] = ovr_combination(phi, coeff, gi.empty() ? gi : gi.first(k + 1));
      if (!gi.empty()) {
        const double w = item_weight(*u, i);
        for (std::size_t c = 0; c <= k; ++c) gi[c] *= w;
      }
    }
    parts.unlabeled = mean_of(values, u->weights, policy);
  }
  parts.total = theta * parts.kcl - theta * parts.correction + parts.unlabeled;
  return parts;
}

// ---------------------------------------------------------------------------

namespace {

void check_model(RiskForm form, const model::OvrModel& model, const RiskContext& ctx) {
  if (model.classes() != ctx.classes) throw InvalidInput("model K does not match risk context");
  if (!is_cl(form) && !model.augmented_head()) {
    throw InvalidInput("form needs the augmented-class output");
  }
}

ScoredSet score_set(const model::OvrModel& model, const Matrix& x, std::vector<int> labels,
                    const std::vector<double>& weights, const kernels::ExecPolicy& policy) {
  ScoredSet s;
  kernels::score_rows(model, x, s.scores, policy);
  s.labels = std::move(labels);
  s.weights = weights;
  return s;
}

struct ScoredData {
  std::optional<ScoredSet> cl, u, labeled;
};

ScoredData score_data(RiskForm form, const model::OvrModel& model, const RiskData& data,
                      const kernels::ExecPolicy& policy) {
  ScoredData out;
  const bool need_cl = form != RiskForm::supervised_ovr;
  const bool need_u = is_cllac(form);
  const bool need_labeled = form == RiskForm::supervised_ovr;
  if (need_cl) {
    if (data.cl == nullptr || data.cl->size() == 0) {
      throw InvalidInput("risk form requires a non-empty complementary dataset");
    }
    out.cl = score_set(model, data.cl->x, data.cl->ybar, data.cl_weights, policy);
  }
  if (need_u) {
    if (data.u == nullptr || data.u->size() == 0) {
      throw InvalidInput("risk form requires a non-empty unlabeled dataset");
    }
    out.u = score_set(model, data.u->x, {}, data.u_weights, policy);
  }
  if (need_labeled) {
    if (data.labeled == nullptr || data.labeled->size() == 0) {
      throw InvalidInput("risk form requires a non-empty labeled dataset");
    }
    out.labeled = score_set(model, data.labeled->x, data.labeled->y, data.labeled_weights, policy);
  }
  return out;
}

template <typename T>
const T* ptr(const std::optional<T>& o) {
  return o ? &*o : nullptr;
}

}  // namespace

RiskParts emp_risk_parts(RiskForm form, const model::OvrModel& model, const RiskData& data,
                         const RiskContext& ctx, const kernels::ExecPolicy& policy) {
  check_form(form, ctx);
  check_model(form, model, ctx);
  const ScoredData sd = score_data(form, model, data, policy);
  return risk_from_scores(form, ctx, ptr(sd.cl), ptr(sd.u), ptr(sd.labeled), nullptr, policy);
}

double emp_risk(RiskForm form, const model::OvrModel& model, const RiskData& data,
                const RiskContext& ctx, const kernels::ExecPolicy& policy) {
  return emp_risk_parts(form, model, data, ctx, policy).total;
}

double emp_risk_and_grad(RiskForm form, const model::OvrModel& model, const RiskData& data,
                         const RiskContext& ctx, std::span<double> grad,
                         const kernels::ExecPolicy& policy) {
  check_form(form, ctx);
  check_model(form, model, ctx);
  if (grad.size() != model.params().size()) throw InvalidInput("gradient buffer has wrong size");
  const ScoredData sd = score_data(form, model, data, policy);
  ScoreGradients g;
  const RiskParts parts =
      risk_from_scores(form, ctx, ptr(sd.cl), ptr(sd.u), ptr(sd.labeled), &g, policy);
  std::fill(grad.begin(), grad.end(), 0.0);
  if (sd.cl) kernels::backprop_rows(model, data.cl->x, g.cl, 1.0, grad, policy);
  if (sd.u) kernels::backprop_rows(model, data.u->x, g.u, 1.0, grad, policy);
  if (sd.labeled) kernels::backprop_rows(model, data.labeled->x, g.labeled, 1.0, grad, policy);
  return parts.total;
}

std::vector<double> emp_risk_grad(RiskForm form, const model::OvrModel& model,
                                  const RiskData& data, const RiskContext& ctx,
                                  const kernels::ExecPolicy& policy) {
  std::vector<double> grad(model.params().size(), 0.0);
  emp_risk_and_grad(form, model, data, ctx, grad, policy);
  return grad;
}

// ---------------------------------------------------------------------------

ScoreFn scorer(const model::OvrModel& model) {
  return [&model](std::span<const double> x, std::span<double> out) {
    model::Workspace ws;
    model::score_into(model, x, out, ws);
  };
}

RiskData EnumeratedCllac::view() const {
  RiskData d;
  d.cl = &cl;
  d.u = &u;
  d.cl_weights = cl_weights;
  d.u_weights = u_weights;
  return d;
}

EnumeratedCllac enumerate_cllac(const dists::MixtureSpec& spec) {
  const auto* kcl = std::get_if<dists::FiniteJoint>(&spec.kcl);
  if (kcl == nullptr) throw InvalidInput("exact risks need a finite known-class joint");
  const dists::FiniteJoint pbar = dists::complementary_of(*kcl);
  const dists::FiniteJoint te = dists::mixture(spec);
  const std::size_t k = pbar.labels();

  EnumeratedCllac e;
  e.cl.classes = static_cast<int>(k);
  e.cl.x = Matrix(0, pbar.dim());
  for (std::size_t i = 0; i < pbar.size(); ++i) {
    for (std::size_t yb = 0; yb < k; ++yb) {
      e.cl.x.append_row(pbar.support.row(i));
      e.cl.ybar.push_back(static_cast<int>(yb));
      e.cl_weights.push_back(pbar.prob(i, yb));
    }
  }
  e.u.x = te.support;
  e.u_weights = dists::marginal(te);
  return e;
}

namespace {

ScoredSet score_with(const ScoreFn& scores, std::size_t outputs, const Matrix& x) {
  ScoredSet s;
  s.scores = Matrix(x.rows(), outputs);
  for (std::size_t i = 0; i < x.rows(); ++i) scores(x.row(i), s.scores.row(i));
  return s;
}

}  // namespace

double exact_supervised_risk(const ScoreFn& scores, std::size_t outputs,
                             const dists::FiniteJoint& p_te, const SurrogateLoss& loss) {
  dists::validate(p_te);
  if (p_te.labels() != outputs) {
    throw InvalidInput("joint has " + std::to_string(p_te.labels()) + " labels but F has " +
                       std::to_string(outputs) + " outputs");
  }
  ScoredSet labeled;
  labeled.scores = Matrix(0, outputs);
  const ScoredSet support_scores = score_with(scores, outputs, p_te.support);
  for (std::size_t i = 0; i < p_te.size(); ++i) {
    for (std::size_t y = 0; y < outputs; ++y) {
      labeled.scores.append_row(support_scores.scores.row(i));
      labeled.labels.push_back(static_cast<int>(y));
      labeled.weights.push_back(p_te.prob(i, y));
    }
  }
  const RiskContext ctx{static_cast<int>(outputs) - 1, 1.0, loss};
  return risk_from_scores(RiskForm::supervised_ovr, ctx, nullptr, nullptr, &labeled).total;
}

double exact_supervised_risk(const model::OvrModel& model, const dists::FiniteJoint& p_te,
                             const SurrogateLoss& loss) {
  if (!model.augmented_head()) throw InvalidInput("supervised risk needs the augmented output");
  return exact_supervised_risk(scorer(model), model.outputs(), p_te, loss);
}

double rewrite_expectation(const Matrix& l_table, const dists::FiniteJoint& p_kcl) {
  const dists::FiniteJoint pbar = dists::complementary_of(p_kcl);
  const std::size_t k = pbar.labels();
  if (l_table.rows() != pbar.size() || l_table.cols() != k) {
    throw InvalidInput("loss table must be support x K");
  }
  CompensatedSum total;
  for (std::size_t i = 0; i < pbar.size(); ++i) {
    CompensatedSum row_sum;
    for (std::size_t j = 0; j < k; ++j) row_sum += l_table(i, j);
    for (std::size_t yb = 0; yb < k; ++yb) {
      const double term = -static_cast<double>(k - 1) * l_table(i, yb) + row_sum.value();
      total += pbar.prob(i, yb) * term;
    }
  }
  return total.value();
}

RiskParts exact_cllac_parts(RiskForm form, const ScoreFn& scores, std::size_t outputs,
                            const dists::MixtureSpec& spec, const RiskContext& ctx) {
  if (!is_cllac(form)) throw InvalidInput("exact_cllac_risk takes a cllac form");
  check_form(form, ctx);
  if (static_cast<int>(spec.known_classes()) != ctx.classes) {
    throw InvalidInput("spec K does not match risk context");
  }
  if (outputs != static_cast<std::size_t>(ctx.classes) + 1) {
    throw InvalidInput("cllac forms need K+1 score components");
  }
  const EnumeratedCllac e = enumerate_cllac(spec);
  ScoredSet cl = score_with(scores, outputs, e.cl.x);
  cl.labels = e.cl.ybar;
  cl.weights = e.cl_weights;
  ScoredSet u = score_with(scores, outputs, e.u.x);
  u.weights = e.u_weights;
  return risk_from_scores(form, ctx, &cl, &u, nullptr);
}

double exact_cllac_risk(RiskForm form, const ScoreFn& scores, std::size_t outputs,
                        const dists::MixtureSpec& spec, const RiskContext& ctx) {
  return exact_cllac_parts(form, scores, outputs, spec, ctx).total;
}

double exact_cllac_risk(RiskForm form, const model::OvrModel& model,
                        const dists::MixtureSpec& spec, const RiskContext& ctx) {
  check_model(form, model, ctx);
  return exact_cllac_risk(form, scorer(model), model.outputs(), spec, ctx);
}

double exact_cl_risk(RiskForm form, const ScoreFn& scores, std::size_t outputs,
                     const dists::FiniteJoint& p_kcl, const SurrogateLoss& loss) {
  if (!is_cl(form)) throw InvalidInput("exact_cl_risk takes cl_general or cl_symmetric");
  const dists::FiniteJoint pbar = dists::complementary_of(p_kcl);
  const std::size_t k = pbar.labels();
  if (outputs < k) throw InvalidInput("F has fewer outputs than classes");
  const RiskContext ctx{static_cast<int>(k), 1.0, loss};
  check_form(form, ctx);
  ScoredSet cl;
  cl.scores = Matrix(0, outputs);
  const ScoredSet support_scores = score_with(scores, outputs, pbar.support);
  for (std::size_t i = 0; i < pbar.size(); ++i) {
    for (std::size_t yb = 0; yb < k; ++yb) {
      cl.scores.append_row(support_scores.scores.row(i));
      cl.labels.push_back(static_cast<int>(yb));
      cl.weights.push_back(pbar.prob(i, yb));
    }
  }
  return risk_from_scores(form, ctx, &cl, nullptr, nullptr).total;
}

double exact_cl_risk(RiskForm form, const model::OvrModel& model,
                     const dists::FiniteJoint& p_kcl, const SurrogateLoss& loss) {
  if (model.classes() != static_cast<int>(p_kcl.labels())) {
    throw InvalidInput("model K does not match joint");
  }
  return exact_cl_risk(form, scorer(model), model.outputs(), p_kcl, loss);
}

}  // namespace cllac::risks
