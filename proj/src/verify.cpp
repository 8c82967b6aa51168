#include "cllac/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "json.hpp"

#include "cllac/errors.hpp"
#include "cllac/rng.hpp"
#include "cllac/summation.hpp"

namespace cllac::verify {
namespace {

using dists::FiniteJoint;
using dists::MixtureSpec;
using losses::LossKind;
using losses::SurrogateLoss;
using risks::RiskContext;
using risks::RiskForm;

// Flat Dirichlet draw over `n` cells.
std::vector<double> simplex(CounterRng& rng, std::size_t n) {
  std::vector<double> w(n);
  CompensatedSum total;
  for (auto& v : w) {
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    v = -std::log(u);
    total += v;
  }
  for (auto& v : w) v /= total.value();
  return w;
}

FiniteJoint random_joint(CounterRng& rng, std::size_t m, std::size_t labels, std::size_t d) {
  FiniteJoint j{Matrix(m, d), Matrix(m, labels)};
  for (auto& v : j.support.data()) v = rng.uniform(-1.0, 1.0);
  j.prob.data() = simplex(rng, m * labels);
  return j;
}

void randomize(model::OvrModel& m, CounterRng& rng, double bound) {
  for (auto& p : m.params()) p = rng.uniform(-bound, bound);
}

double direct_expectation(const Matrix& table, const FiniteJoint& p) {
  CompensatedSum s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t y = 0; y < p.labels(); ++y) s += p.prob(i, y) * table(i, y);
  }
  return s.value();
}

std::size_t index_of(const std::map<std::vector<double>, std::size_t>& index,
                     std::span<const double> x) {
  return index.at(std::vector<double>(x.begin(), x.end()));
}

}  // namespace

bool VerificationReport::ok() const {
  switch (expectation) {
    case Expectation::must_pass: return pass;
    case Expectation::must_fail: return !pass;
    case Expectation::informational: return true;
  }
  return false;
}

VerificationReport make_report(std::string name, std::size_t trials, double residual,
                               double tolerance, Expectation expectation, std::string notes) {
  VerificationReport r;
  r.name = std::move(name);
  r.trials = trials;
  r.max_abs_residual = residual;
  r.tolerance = tolerance;
  r.pass = residual <= tolerance;
  r.expectation = expectation;
  r.notes = std::move(notes);
  return r;
}

RandomInstance random_instance(std::uint64_t seed, std::size_t trial, std::vector<LossKind> kinds) {
  if (kinds.empty()) throw InvalidInput("random_instance needs at least one loss kind");
  CounterRng rng = CounterRng(seed, "instance").split(std::to_string(trial));
  const std::size_t d = 2;
  const std::size_t k = 2 + rng.index(3);
  const std::size_t m = 1 + rng.index(8);
  const std::size_t m_ac = 1 + rng.index(8);

  FiniteJoint kcl = random_joint(rng, m, k, d);
  FiniteJoint ac = random_joint(rng, m_ac, 1, d);
  // Some augmented points coincide with known-class points so the mixture
  // has support points carrying both kinds of mass.
  for (std::size_t i = 0; i < m_ac; ++i) {
    if (rng.uniform() < 0.3) {
      const auto src = kcl.support.row(rng.index(m));
      std::copy(src.begin(), src.end(), ac.support.row(i).begin());
    }
  }
  double theta = rng.uniform();
  if (trial == 0) theta = 0.0;
  if (trial == 1) theta = 1.0;

  model::OvrModel f(model::Arch::linear(), static_cast<int>(k), d);
  randomize(f, rng, 0.6);  // |score| <= 0.6 * (|x1| + |x2| + 1) <= 1.8
  return {MixtureSpec{theta, std::move(kcl), std::move(ac)}, std::move(f),
          SurrogateLoss{kinds[trial % kinds.size()], 1.0}};
}

VerificationReport verify_lemma1(std::size_t trials, std::uint64_t seed, double tol,
                                 double theta_offset) {
  if (trials < 1) throw InvalidInput("trials must be >= 1");
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto inst = random_instance(seed, t, {LossKind::square, LossKind::logistic});
    const double supervised =
        risks::exact_supervised_risk(inst.model, dists::mixture(inst.spec), inst.loss);
    double theta = inst.spec.theta;
    if (theta_offset != 0.0) theta = theta + theta_offset <= 1.0 ? theta + theta_offset : theta - theta_offset;
    const RiskContext ctx{inst.model.classes(), theta, inst.loss};
    const double rewritten =
        risks::exact_cllac_risk(RiskForm::cllac_lemma1, inst.model, inst.spec, ctx);
    worst = std::max(worst, std::abs(rewritten - supervised));
  }
  const bool control = theta_offset != 0.0;
  return make_report(control ? "lemma1_corrupted_theta" : "lemma1_identity", trials, worst, tol,
                     control ? Expectation::must_fail : Expectation::must_pass,
                     control ? "theta in the rewrite shifted by " + std::to_string(theta_offset)
                             : "|R_supervised - R_lemma1| over random finite instances");
}

VerificationReport verify_rewrite_identity(std::size_t trials, std::uint64_t seed, double tol) {
  if (trials < 1) throw InvalidInput("trials must be >= 1");
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    CounterRng rng = CounterRng(seed, "rewrite").split(std::to_string(t));
    const std::size_t k = 2 + rng.index(4);
    const std::size_t m = 1 + rng.index(8);
    const FiniteJoint p = random_joint(rng, m, k, 2);
    Matrix table(m, k);
    for (auto& v : table.data()) v = rng.uniform(-3.0, 3.0);
    worst = std::max(worst, std::abs(risks::rewrite_expectation(table, p) - direct_expectation(table, p)));
  }
  return make_report("rewrite_identity", trials, worst, tol, Expectation::must_pass,
                     "E_pbar[-(K-1) l(ybar) + sum_j l(j)] vs E_p[l(y)]");
}

namespace {

// Shared driver for the complementary-only identities: `direct` is the
// per-label loss whose p-expectation the form must reproduce.
template <typename Direct>
double cl_identity_residual(RiskForm form, std::size_t trials, std::uint64_t seed,
                            std::vector<LossKind> kinds, const char* tag, Direct direct) {
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    CounterRng rng = CounterRng(seed, tag).split(std::to_string(t));
    const std::size_t k = 2 + rng.index(3);
    const std::size_t m = 1 + rng.index(8);
    const FiniteJoint p = random_joint(rng, m, k, 2);
    model::OvrModel f(model::Arch::linear(), static_cast<int>(k), 2, false);
    randomize(f, rng, 0.6);
    const SurrogateLoss loss{kinds[t % kinds.size()], 1.0};
    Matrix table(m, k);
    for (std::size_t i = 0; i < m; ++i) {
      const auto s = model::score(f, p.support.row(i));
      for (std::size_t y = 0; y < k; ++y) table(i, y) = direct(s, static_cast<int>(y), loss);
    }
    const double expected = direct_expectation(table, p);
    worst = std::max(worst, std::abs(risks::exact_cl_risk(form, f, p, loss) - expected));
  }
  return worst;
}

}  // namespace

VerificationReport verify_cl_symmetric(std::size_t trials, std::uint64_t seed, double tol) {
  if (trials < 1) throw InvalidInput("trials must be >= 1");
  const double worst = cl_identity_residual(
      RiskForm::cl_symmetric, trials, seed, {LossKind::ramp, LossKind::sigmoid}, "cl-symmetric",
      [](std::span<const double> s, int y, const SurrogateLoss& loss) {
        return risks::ova_normalized_loss(s, y, loss);
      });
  return make_report("cl_symmetric_identity", trials, worst, tol, Expectation::must_pass,
                     "(K-1) E_pbar[Lbar] - M1 + M2 vs E_p[L] with M1 = K, M2 = 2 (scale 1)");
}

VerificationReport verify_cl_general(std::size_t trials, std::uint64_t seed, double tol) {
  if (trials < 1) throw InvalidInput("trials must be >= 1");
  const double worst = cl_identity_residual(
      RiskForm::cl_general, trials, seed,
      {LossKind::square, LossKind::logistic, LossKind::ramp, LossKind::sigmoid}, "cl-general",
      [](std::span<const double> s, int y, const SurrogateLoss& loss) {
        return risks::ovr_loss(s, y, loss);
      });
  return make_report("cl_general_identity", trials, worst, tol, Expectation::must_pass,
                     "E_pbar[-(K-1) L(ybar) + sum_y L(y)] vs E_p[L(y)]");
}

CompactFormReports verify_compact_forms(std::size_t trials, std::uint64_t seed) {
  if (trials < 1) throw InvalidInput("trials must be >= 1");
  double compact = 0.0;
  double printed = 0.0;
  double convex = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto inst = random_instance(
        seed, t, {LossKind::square, LossKind::logistic, LossKind::sigmoid, LossKind::ramp});
    const RiskContext ctx{inst.model.classes(), inst.spec.theta, inst.loss};
    const auto eval = [&](RiskForm form, const RiskContext& c) {
      return risks::exact_cllac_risk(form, inst.model, inst.spec, c);
    };
    const double base = eval(RiskForm::cllac_lemma1, ctx);
    compact = std::max(compact, std::abs(eval(RiskForm::cllac_compact, ctx) - base));
    printed = std::max(printed, std::abs(eval(RiskForm::cllac_compact_printed, ctx) - base));
    if (losses::is_linear_odd(inst.loss)) {
      convex = std::max(convex, std::abs(eval(RiskForm::cllac_convex, ctx) - base));
    }
  }
  return {
      make_report("compact_vs_lemma1", trials, compact, 1e-12, Expectation::must_pass),
      make_report("compact_printed_vs_lemma1", trials, printed, 1e-12, Expectation::informational,
                  "printed compact form drops sum_j (phi(f_j) - phi(-f_j)); nonzero residual "
                  "measures that gap"),
      make_report("convex_vs_lemma1", trials, convex, 1e-10, Expectation::must_pass,
                  "square and logistic trials only"),
  };
}

UnbiasednessReport verify_unbiasedness(const MixtureSpec& spec, const model::OvrModel& model,
                                       const SurrogateLoss& loss, RiskForm form,
                                       const std::vector<std::size_t>& n_list,
                                       std::size_t repeats, std::uint64_t seed,
                                       bool ablate_correction) {
  if (n_list.empty()) throw InvalidInput("n_list must not be empty");
  for (std::size_t n : n_list) {
    if (n == 0) throw InvalidInput("n_list entries must be >= 1");
  }
  if (repeats < 2) throw InvalidInput("repeats must be >= 2");
  if (!risks::is_cllac(form)) throw InvalidInput("unbiasedness check takes a cllac form");
  if (ablate_correction && form != RiskForm::cllac_lemma1) {
    throw InvalidInput("the correction ablation applies to cllac_lemma1 only");
  }
  const RiskContext ctx{model.classes(), spec.theta, loss};
  const auto total_of = [&](const risks::RiskParts& p) {
    return ablate_correction ? p.total + ctx.theta * p.correction : p.total;
  };

  UnbiasednessReport rep;
  rep.exact_risk = risks::exact_cllac_risk(form, model, spec, ctx);
  CounterRng seeds(seed, "unbiasedness");
  // Absolute floor so an estimator that is exact up to rounding still passes.
  constexpr double kFloor = 1e-12;

  rep.mean_ok = true;
  for (std::size_t n : n_list) {
    std::vector<double> values(repeats);
    for (std::size_t r = 0; r < repeats; ++r) {
      const auto cl = dists::sample_complementary(spec.kcl, n, seeds.next_u64());
      const auto u = dists::sample_unlabeled(spec, n, seeds.next_u64());
      risks::RiskData data;
      data.cl = &cl;
      data.u = &u;
      values[r] = total_of(risks::emp_risk_parts(form, model, data, ctx));
    }
    CompensatedSum sum;
    for (double v : values) sum += v;
    const double mean = sum.value() / static_cast<double>(repeats);
    CompensatedSum sq;
    CompensatedSum err;
    for (double v : values) {
      sq += (v - mean) * (v - mean);
      err += (v - rep.exact_risk) * (v - rep.exact_risk);
    }
    UnbiasednessPoint pt;
    pt.n = n;
    pt.mean = mean;
    pt.stddev = std::sqrt(sq.value() / static_cast<double>(repeats - 1));
    pt.rmse = std::sqrt(err.value() / static_cast<double>(repeats));
    const double se = pt.stddev / std::sqrt(static_cast<double>(repeats));
    pt.within_3se = std::abs(mean - rep.exact_risk) <= 3.0 * se + kFloor;
    rep.mean_ok = rep.mean_ok && pt.within_3se;
    rep.points.push_back(pt);
  }

  // Least-squares slope of log(rmse) against log(n).
  bool all_exact = true;
  for (const auto& p : rep.points) all_exact = all_exact && p.rmse <= kFloor;
  if (all_exact || rep.points.size() < 2) {
    rep.log_rmse_slope = std::numeric_limits<double>::quiet_NaN();
    rep.slope_ok = all_exact;
  } else {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto cnt = static_cast<double>(rep.points.size());
    for (const auto& p : rep.points) {
      const double lx = std::log(static_cast<double>(p.n));
      const double ly = std::log(std::max(p.rmse, kFloor));
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    rep.log_rmse_slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    rep.slope_ok = rep.log_rmse_slope >= -0.6 && rep.log_rmse_slope <= -0.4;
  }
  rep.pass = rep.mean_ok && rep.slope_ok;
  return rep;
}

VerificationReport verify_gradients(const std::vector<RiskForm>& forms, std::uint64_t seed,
                                    double tol) {
  constexpr std::size_t kCoords = 20;
  constexpr double kStep = 1e-6;
  const std::size_t k = 3;
  const std::size_t d = 3;
  const std::size_t n = 24;
  double worst = 0.0;
  std::size_t checks = 0;
  std::string notes;

  for (RiskForm form : forms) {
    for (const auto& arch : {model::Arch::linear(), model::Arch::mlp({5})}) {
      CounterRng rng = CounterRng(seed, "gradients")
                           .split(std::string(risks::to_string(form)) + "/" + model::describe(arch));
      dists::ComplementaryDataset cl{Matrix(n, d), std::vector<int>(n), static_cast<int>(k)};
      dists::UnlabeledDataset u{Matrix(n, d)};
      dists::TestDataset labeled{Matrix(n, d), std::vector<int>(n), static_cast<int>(k)};
      for (auto& v : cl.x.data()) v = rng.uniform(-1.5, 1.5);
      for (auto& v : u.x.data()) v = rng.uniform(-1.5, 1.5);
      for (auto& v : labeled.x.data()) v = rng.uniform(-1.5, 1.5);
      for (auto& y : cl.ybar) y = static_cast<int>(rng.index(k));
      for (auto& y : labeled.y) y = static_cast<int>(rng.index(k + 1));

      model::OvrModel m = model::init_model(arch, static_cast<int>(k), d, rng.next_u64());
      randomize(m, rng, 0.8);

      SurrogateLoss loss{LossKind::logistic, 1.0};
      if (form == RiskForm::cl_symmetric) loss = {LossKind::sigmoid, 1.0};
      if (form == RiskForm::cllac_convex) loss = {LossKind::square, 1.0};
      const RiskContext ctx{static_cast<int>(k), 0.6, loss};
      risks::RiskData data;
      data.cl = &cl;
      data.u = &u;
      data.labeled = &labeled;

      const auto grad = risks::emp_risk_grad(form, m, data, ctx);
      double local = 0.0;
      for (std::size_t c = 0; c < kCoords; ++c) {
        const std::size_t j = rng.index(m.params().size());
        model::OvrModel plus = m;
        model::OvrModel minus = m;
        plus.params()[j] += kStep;
        minus.params()[j] -= kStep;
        const double fd =
            (risks::emp_risk(form, plus, data, ctx) - risks::emp_risk(form, minus, data, ctx)) /
            (2.0 * kStep);
        const double denom = std::max({std::abs(grad[j]), std::abs(fd), 1e-7});
        local = std::max(local, std::abs(grad[j] - fd) / denom);
        ++checks;
      }
      worst = std::max(worst, local);
    }
  }
  return make_report("gradients", checks, worst, tol, Expectation::must_pass,
                     "worst relative error, central differences with step 1e-6");
}

BayesReference bayes_reference(const FiniteJoint& p_te) {
  dists::validate(p_te);
  BayesReference out;
  out.decision.assign(p_te.size(), -1);
  CompensatedSum risk;
  for (std::size_t i = 0; i < p_te.size(); ++i) {
    const auto row = p_te.prob.row(i);
    CompensatedSum px;
    for (double p : row) px += p;
    if (px.value() <= 0.0) {
      out.skipped.push_back(i);
      continue;
    }
    const int best = model::argmax(row);
    out.decision[i] = best;
    risk += px.value() - row[static_cast<std::size_t>(best)];
  }
  out.risk = risk.value();
  return out;
}

double zero_one_risk(const FiniteJoint& p_te, const Matrix& scores) {
  if (scores.rows() != p_te.size() || scores.cols() != p_te.labels()) {
    throw InvalidInput("score table must be support x labels");
  }
  CompensatedSum risk;
  for (std::size_t i = 0; i < p_te.size(); ++i) {
    const auto c = static_cast<std::size_t>(model::argmax(scores.row(i)));
    for (std::size_t y = 0; y < p_te.labels(); ++y) {
      if (y != c) risk += p_te.prob(i, y);
    }
  }
  return risk.value();
}

VerificationReport verify_consistency(std::size_t fixtures, std::uint64_t seed, double tol) {
  if (fixtures < 1) throw InvalidInput("fixtures must be >= 1");
  double worst = 0.0;
  for (std::size_t f = 0; f < fixtures; ++f) {
    CounterRng rng = CounterRng(seed, "consistency").split(std::to_string(f));
    const std::size_t k = 3;
    const std::size_t m = 6;
    FiniteJoint kcl = random_joint(rng, m, k, 2);
    FiniteJoint ac = random_joint(rng, 4, 1, 2);
    // Half the augmented points share a location with known-class points.
    for (std::size_t i = 0; i < 2; ++i) {
      const auto src = kcl.support.row(i);
      std::copy(src.begin(), src.end(), ac.support.row(i).begin());
    }
    const MixtureSpec spec{0.2 + 0.6 * rng.uniform(), kcl, ac};
    const FiniteJoint te = dists::mixture(spec);
    const std::vector<double> px = dists::marginal(te);

    std::map<std::vector<double>, std::size_t> index;
    for (std::size_t i = 0; i < te.size(); ++i) {
      const auto r = te.support.row(i);
      index.emplace(std::vector<double>(r.begin(), r.end()), i);
    }

    const risks::EnumeratedCllac e = risks::enumerate_cllac(spec);
    std::vector<std::size_t> cl_at(e.cl.size());
    std::vector<std::size_t> u_at(e.u.size());
    for (std::size_t i = 0; i < e.cl.size(); ++i) cl_at[i] = index_of(index, e.cl.x.row(i));
    for (std::size_t i = 0; i < e.u.size(); ++i) u_at[i] = index_of(index, e.u.x.row(i));

    const RiskContext ctx{static_cast<int>(k), spec.theta, SurrogateLoss{LossKind::square, 1.0}};
    Matrix table(te.size(), k + 1);
    for (auto& v : table.data()) v = rng.uniform(-0.1, 0.1);

    risks::ScoredSet cl;
    cl.labels = e.cl.ybar;
    cl.weights = e.cl_weights;
    risks::ScoredSet u;
    u.weights = e.u_weights;
    risks::ScoreGradients g;
    // Gradient descent on the table, each row preconditioned by 1/p(x) so
    // low-mass support points converge at the same rate.
    for (int it = 0; it < 400; ++it) {
      cl.scores = Matrix(e.cl.size(), k + 1);
      u.scores = Matrix(e.u.size(), k + 1);
      for (std::size_t i = 0; i < e.cl.size(); ++i) {
        const auto r = table.row(cl_at[i]);
        std::copy(r.begin(), r.end(), cl.scores.row(i).begin());
      }
      for (std::size_t i = 0; i < e.u.size(); ++i) {
        const auto r = table.row(u_at[i]);
        std::copy(r.begin(), r.end(), u.scores.row(i).begin());
      }
      risks::risk_from_scores(RiskForm::cllac_lemma1, ctx, &cl, &u, nullptr, &g);
      Matrix step(te.size(), k + 1);
      for (std::size_t i = 0; i < e.cl.size(); ++i) {
        for (std::size_t c = 0; c <= k; ++c) step(cl_at[i], c) += g.cl(i, c);
      }
      for (std::size_t i = 0; i < e.u.size(); ++i) {
        for (std::size_t c = 0; c <= k; ++c) step(u_at[i], c) += g.u(i, c);
      }
      for (std::size_t i = 0; i < te.size(); ++i) {
        for (std::size_t c = 0; c <= k; ++c) table(i, c) -= step(i, c) / px[i];
      }
    }
    const double gap = zero_one_risk(te, table) - bayes_reference(te).risk;
    worst = std::max(worst, std::abs(gap));
  }
  return make_report("bayes_consistency", fixtures, worst, tol, Expectation::must_pass,
                     "tabular scores trained on exact cllac_lemma1 risk; 0-1 risk minus Bayes risk");
}

std::vector<VerificationReport> run_all(std::uint64_t seed) {
  std::vector<VerificationReport> out;
  out.push_back(verify_lemma1(200, seed));
  out.push_back(verify_lemma1(200, seed, 1e-10, 0.1));
  out.push_back(verify_rewrite_identity(200, seed));
  out.push_back(verify_cl_symmetric(100, seed));
  out.push_back(verify_cl_general(100, seed));
  auto compact = verify_compact_forms(200, seed);
  out.push_back(compact.compact);
  out.push_back(compact.printed);
  out.push_back(compact.convex);

  // Unbiasedness on one fixed random instance with K = 3.
  std::size_t trial = 2;
  RandomInstance inst = random_instance(seed, trial, {LossKind::square});
  while (inst.model.classes() != 3 || inst.spec.theta < 0.2 || inst.spec.theta > 0.8) {
    inst = random_instance(seed, ++trial, {LossKind::square});
  }
  const std::vector<std::size_t> n_list{100, 1000, 10000};
  for (bool ablate : {false, true}) {
    const auto rep = verify_unbiasedness(inst.spec, inst.model, inst.loss, RiskForm::cllac_lemma1,
                                         n_list, 200, seed, ablate);
    double worst = 0.0;
    for (const auto& p : rep.points) {
      const double se = p.stddev / std::sqrt(200.0);
      worst = std::max(worst, std::abs(p.mean - rep.exact_risk) / std::max(3.0 * se, 1e-300));
    }
    std::string notes = "max |mean - exact| / (3 SE) over n in {1e2, 1e3, 1e4}; log-rmse slope " +
                        std::to_string(rep.log_rmse_slope);
    if (ablate) {
      out.push_back(make_report("unbiasedness_ablated_correction", 3, worst, 1.0,
                                Expectation::must_fail, notes));
    } else {
      out.push_back(make_report("unbiasedness_mean", 3, worst, 1.0, Expectation::must_pass, notes));
      const double slope_gap = rep.slope_ok ? 0.0
                               : std::isnan(rep.log_rmse_slope)
                                   ? std::numeric_limits<double>::infinity()
                                   : std::min(std::abs(rep.log_rmse_slope + 0.6),
                                              std::abs(rep.log_rmse_slope + 0.4));
      out.push_back(make_report("unbiasedness_rate", 3, slope_gap, 0.0, Expectation::must_pass,
                                "distance of log-rmse slope from [-0.6, -0.4]; slope " +
                                    std::to_string(rep.log_rmse_slope)));
    }
  }

  out.push_back(verify_gradients(
      {RiskForm::supervised_ovr, RiskForm::cl_symmetric, RiskForm::cl_general,
       RiskForm::cllac_lemma1, RiskForm::cllac_compact, RiskForm::cllac_compact_printed,
       RiskForm::cllac_convex},
      seed));
  out.push_back(verify_consistency(5, seed));
  return out;
}

std::string to_json(const std::vector<VerificationReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) {
    const char* exp = r.expectation == Expectation::must_pass   ? "must_pass"
                      : r.expectation == Expectation::must_fail ? "must_fail"
                                                                : "informational";
    nlohmann::json j{{"name", r.name},
                     {"trials", r.trials},
                     {"tolerance", r.tolerance},
                     {"pass", r.pass},
                     {"expectation", exp},
                     {"ok", r.ok()},
                     {"notes", r.notes}};
    // JSON has no infinity; report it as null.
    j["max_abs_residual"] = std::isfinite(r.max_abs_residual) ? nlohmann::json(r.max_abs_residual)
                                                              : nlohmann::json(nullptr);
    arr.push_back(std::move(j));
  }
  return arr.dump(2);
}

}  // namespace cllac::verify
