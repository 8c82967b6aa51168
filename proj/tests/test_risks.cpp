#include "doctest.h"

#include <cmath>

#include "cllac/dists.hpp"
#include "cllac/errors.hpp"
#include "cllac/risks.hpp"
#include "cllac/rng.hpp"

using namespace cllac;
using namespace cllac::risks;
using losses::LossKind;
using losses::SurrogateLoss;

namespace {

const SurrogateLoss kSquare{LossKind::square, 1.0};
constexpr RiskForm kCllacForms[] = {RiskForm::cllac_lemma1, RiskForm::cllac_compact,
                                    RiskForm::cllac_compact_printed, RiskForm::cllac_convex};

dists::FiniteJoint random_joint(CounterRng& rng, std::size_t m, std::size_t labels) {
  dists::FiniteJoint j{Matrix(m, 2), Matrix(m, labels)};
  for (auto& v : j.support.data()) v = rng.uniform(-1, 1);
  double total = 0.0;
  for (auto& v : j.prob.data()) total += (v = rng.uniform(0.01, 1.0));
  for (auto& v : j.prob.data()) v /= total;
  return j;
}

// FIX-A: four support points, K = 3, plus a two-point ac component.
dists::MixtureSpec fix_a() {
  CounterRng rng(2024, "fix-a");
  return {0.6, random_joint(rng, 4, 3), random_joint(rng, 2, 1)};
}

model::OvrModel random_linear(int k, std::uint64_t seed, bool head = true) {
  CounterRng rng(seed, "model");
  model::OvrModel m(model::Arch::linear(), k, 2, head);
  for (auto& p : m.params()) p = rng.uniform(-0.7, 0.7);
  return m;
}

// Nested-sum oracle for the one-versus-rest loss, written out independently.
double phi_sq(double z) { return (1.0 - z) * (1.0 - z) / 4.0; }

double oracle_supervised(const model::OvrModel& m, const dists::FiniteJoint& p) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto f = model::score(m, p.support.row(i));
    for (std::size_t y = 0; y < p.labels(); ++y) {
      double l = phi_sq(f[y]);
      for (std::size_t k = 0; k < f.size(); ++k) {
        if (k != y) l += phi_sq(-f[k]);
      }
      total += p.prob(i, y) * l;
    }
  }
  return total;
}

// One complementary item and one unlabeled item with K = 2, d = 1.
struct Golden {
  dists::ComplementaryDataset cl{Matrix(1, 1, 1.0), {0}, 2};
  dists::UnlabeledDataset u{Matrix(1, 1, 2.0)};
  dists::TestDataset labeled{Matrix(1, 1, 1.0), {0}, 2};
  model::OvrModel m{model::Arch::linear(), 2, 1};
  Golden() {
    // W = (1, -1, 0.5)^T, b = 0
    m.params()[0] = 1.0;
    m.params()[1] = -1.0;
    m.params()[2] = 0.5;
  }
  RiskData data() const {
    RiskData d;
    d.cl = &cl;
    d.u = &u;
    d.labeled = &labeled;
    return d;
  }
};

}  // namespace

TEST_SUITE("risks") {
  TEST_CASE("per-label losses at zero scores") {
    const std::vector<double> zero(4, 0.0);
    CHECK(ovr_loss(zero, 0, kSquare) == 1.0);
    const SurrogateLoss sig{LossKind::sigmoid, 1.0};
    CHECK(ova_normalized_loss(std::vector<double>(3, 0.0), 1, sig) == 1.0);
    CHECK(ova_complementary_loss(std::vector<double>(3, 0.0), 1, sig) == 1.0);
  }

  TEST_CASE("exact supervised risk") {
    const auto spec = fix_a();
    const auto te = dists::mixture(spec);
    const model::OvrModel zero(model::Arch::linear(), 3, 2);
    CHECK(exact_supervised_risk(zero, te, kSquare) == 1.0);

    const auto m = random_linear(3, 1);
    CHECK(std::abs(exact_supervised_risk(m, te, kSquare) - oracle_supervised(m, te)) <= 1e-14);

    // point mass at label 0 with perfect margins
    dists::FiniteJoint pm{Matrix(1, 1, 0.0), Matrix(1, 4)};
    pm.prob(0, 0) = 1.0;
    const ScoreFn perfect = [](std::span<const double>, std::span<double> out) {
      out[0] = 1;
      out[1] = out[2] = out[3] = -1;
    };
    CHECK(exact_supervised_risk(perfect, 4, pm, kSquare) == 0.0);
    // K = 2 joint (three label columns) against a K = 3 model
    CounterRng rng(1, "mismatch");
    const auto small = dists::mixture({0.5, random_joint(rng, 2, 2), spec.ac});
    CHECK_THROWS_AS(exact_supervised_risk(m, small, kSquare), InvalidInput);
  }

  TEST_CASE("rewrite expectation") {
    CounterRng rng(7, "rewrite");
    const auto p = random_joint(rng, 5, 3);
    CHECK(rewrite_expectation(Matrix(5, 3, 2.5), p) == doctest::Approx(2.5).epsilon(1e-15));

    dists::FiniteJoint det{Matrix(3, 2), Matrix(3, 3)};
    for (std::size_t i = 0; i < 3; ++i) det.prob(i, 0) = 1.0 / 3.0;
    Matrix ind(3, 3);
    for (std::size_t i = 0; i < 3; ++i) ind(i, 0) = 1.0;
    CHECK(std::abs(rewrite_expectation(ind, det) - 1.0) <= 1e-15);

    for (int t = 0; t < 50; ++t) {
      const auto q = random_joint(rng, 1 + rng.index(8), 2 + rng.index(3));
      Matrix table(q.size(), q.labels());
      for (auto& v : table.data()) v = rng.uniform(-5, 5);
      double direct = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i) {
        for (std::size_t y = 0; y < q.labels(); ++y) direct += q.prob(i, y) * table(i, y);
      }
      CHECK(std::abs(rewrite_expectation(table, q) - direct) <= 1e-12);
    }
    CHECK_THROWS_AS(rewrite_expectation(Matrix(4, 3), p), InvalidInput);
  }

  TEST_CASE("cllac forms at F = 0") {
    const auto spec = fix_a();
    const model::OvrModel zero(model::Arch::linear(), 3, 2);
    const RiskContext ctx{3, spec.theta, kSquare};
    for (auto form : kCllacForms) CHECK(exact_cllac_risk(form, zero, spec, ctx) == 1.0);
  }

  TEST_CASE("cllac forms on FIX-A") {
    const auto spec = fix_a();
    const auto m = random_linear(3, 3);
    const RiskContext ctx{3, spec.theta, kSquare};
    const double truth = oracle_supervised(m, dists::mixture(spec));
    const double lemma1 = exact_cllac_risk(RiskForm::cllac_lemma1, m, spec, ctx);
    CHECK(std::abs(lemma1 - truth) <= 1e-12);
    CHECK(std::abs(exact_cllac_risk(RiskForm::cllac_compact, m, spec, ctx) - lemma1) <= 1e-12);
    CHECK(std::abs(exact_cllac_risk(RiskForm::cllac_convex, m, spec, ctx) - lemma1) <= 1e-10);
    CHECK(std::abs(exact_cllac_risk(RiskForm::cllac_compact_printed, m, spec, ctx) - lemma1) > 1e-6);
  }

  TEST_CASE("theta = 0 leaves the unlabeled term only") {
    auto spec = fix_a();
    spec.theta = 0.0;
    const auto m = random_linear(3, 4);
    const RiskContext ctx{3, 0.0, kSquare};
    const double ac_only = oracle_supervised(m, dists::mixture(spec));
    for (auto form : kCllacForms) {
      CHECK(std::abs(exact_cllac_risk(form, m, spec, ctx) - ac_only) <= 1e-12);
    }
  }

  TEST_CASE("complementary-only forms") {
    dists::FiniteJoint p;
    CounterRng rng(8, "cl");
    p = random_joint(rng, 3, 3);
    const model::OvrModel zero(model::Arch::linear(), 3, 2, false);
    CHECK(exact_cl_risk(RiskForm::cl_general, zero, p, kSquare) == doctest::Approx(0.75).epsilon(1e-15));
    const SurrogateLoss sig{LossKind::sigmoid, 1.0};
    CHECK(exact_cl_risk(RiskForm::cl_symmetric, zero, p, sig) == doctest::Approx(1.0).epsilon(1e-15));

    const auto m = random_linear(3, 5, false);
    for (auto loss : {sig, SurrogateLoss{LossKind::ramp, 1.0}}) {
      double direct = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        const auto f = model::score(m, p.support.row(i));
        for (std::size_t y = 0; y < 3; ++y) {
          double l = losses::eval_loss(loss, f[y]);
          for (std::size_t k = 0; k < 3; ++k) {
            if (k != y) l += losses::eval_loss(loss, -f[k]) / 2.0;
          }
          direct += p.prob(i, y) * l;
        }
      }
      CHECK(std::abs(exact_cl_risk(RiskForm::cl_symmetric, m, p, loss) - direct) <= 1e-12);
    }
  }

  TEST_CASE("form and loss pairing") {
    CHECK_THROWS_AS(check_form(RiskForm::cl_symmetric, {3, 1.0, kSquare}), ConfigError);
    CHECK_THROWS_AS(check_form(RiskForm::cllac_convex, {3, 0.5, {LossKind::ramp, 1.0}}), ConfigError);
    CHECK_THROWS_AS(check_form(RiskForm::cllac_convex, {3, 0.5, {LossKind::square, 4.0}}), ConfigError);
    CHECK_NOTHROW(check_form(RiskForm::cllac_convex, {3, 0.5, {LossKind::logistic, 1.0}}));
    CHECK_THROWS_AS(check_form(RiskForm::cllac_lemma1, {1, 0.5, kSquare}), InvalidInput);
    CHECK_THROWS_AS(check_form(RiskForm::cllac_lemma1, {3, 1.5, kSquare}), InvalidInput);
    for (auto f : kAllForms) CHECK(risk_form_from_string(to_string(f)) == f);
  }

  TEST_CASE("empirical risk at F = 0") {
    CounterRng rng(9, "emp0");
    dists::ComplementaryDataset cl{Matrix(5, 2), {0, 1, 2, 1, 0}, 3};
    dists::UnlabeledDataset u{Matrix(7, 2)};
    for (auto& v : cl.x.data()) v = rng.uniform(-3, 3);
    for (auto& v : u.x.data()) v = rng.uniform(-3, 3);
    RiskData d;
    d.cl = &cl;
    d.u = &u;
    const model::OvrModel zero(model::Arch::linear(), 3, 2);
    for (auto form : kCllacForms) CHECK(emp_risk(form, zero, d, {3, 0.4, kSquare}) == 1.0);
  }

  TEST_CASE("single-sample golden values") {
    // Scores: cl item f = (1, -1, 0.5) with ybar = 0; unlabeled item f = (2, -2, 1).
    // lemma1: 0.5 * (-l(0) + l(0) + l(1)) - 0.5 * l(2) + l_u(2)
    //       = 0.5 * 2.5625 - 0.5 * 1.0625 + 2.5 = 3.25; the other forms agree here.
    Golden g;
    const RiskContext ctx{2, 0.5, kSquare};
    for (auto form : kCllacForms) CHECK(emp_risk(form, g.m, g.data(), ctx) == 3.25);
    CHECK(emp_risk(RiskForm::supervised_ovr, g.m, g.data(), ctx) == 0.5625);

    const auto parts = emp_risk_parts(RiskForm::cllac_lemma1, g.m, g.data(), ctx);
    CHECK(parts.kcl == 2.5625);
    CHECK(parts.correction == 1.0625);
    CHECK(parts.unlabeled == 2.5);

    // K-way model: f = (1, -1), L(0) = 0, L(1) = 2, risk = -L(0) + L(0) + L(1) = 2
    model::OvrModel kway(model::Arch::linear(), 2, 1, false);
    kway.params()[0] = 1.0;
    kway.params()[1] = -1.0;
    CHECK(emp_risk(RiskForm::cl_general, kway, g.data(), ctx) == 2.0);
  }

  TEST_CASE("missing datasets") {
    Golden g;
    RiskData d;
    d.cl = &g.cl;
    CHECK_THROWS_AS(emp_risk(RiskForm::cllac_compact, g.m, d, {2, 0.5, kSquare}), InvalidInput);
    CHECK_THROWS_AS(emp_risk(RiskForm::supervised_ovr, g.m, d, {2, 0.5, kSquare}), InvalidInput);
    model::OvrModel kway(model::Arch::linear(), 2, 1, false);
    CHECK_THROWS_AS(emp_risk(RiskForm::cllac_compact, kway, g.data(), {2, 0.5, kSquare}), InvalidInput);
  }

  TEST_CASE("gradient by hand at F = 0") {
    // K = 3, one cl item with ybar = 0 at x = 0, one unlabeled item at x = 0,
    // cllac_convex + square, theta = 0.6. Bias gradients:
    //   class 0: theta * (-1 + 2) + 0.5 = 1.1
    //   class 1: theta * (-1) + 0.5 = -0.1
    //   ac:      theta * 1 - 0.5 = 0.1
    dists::ComplementaryDataset cl{Matrix(1, 2), {0}, 3};
    dists::UnlabeledDataset u{Matrix(1, 2)};
    RiskData d;
    d.cl = &cl;
    d.u = &u;
    const model::OvrModel zero(model::Arch::linear(), 3, 2);
    const auto g = emp_risk_grad(RiskForm::cllac_convex, zero, d, {3, 0.6, kSquare});
    CHECK(g[8] == doctest::Approx(1.1).epsilon(1e-15));
    CHECK(g[9] == doctest::Approx(-0.1).epsilon(1e-14));
    CHECK(g[10] == doctest::Approx(-0.1).epsilon(1e-14));
    CHECK(g[11] == doctest::Approx(0.1).epsilon(1e-14));
  }

  TEST_CASE("gradient is affine in theta") {
    CounterRng rng(10, "theta-lin");
    dists::ComplementaryDataset cl{Matrix(6, 2), {0, 1, 2, 2, 1, 0}, 3};
    dists::UnlabeledDataset u{Matrix(4, 2)};
    for (auto& v : cl.x.data()) v = rng.uniform(-1, 1);
    for (auto& v : u.x.data()) v = rng.uniform(-1, 1);
    RiskData d;
    d.cl = &cl;
    d.u = &u;
    const auto m = random_linear(3, 11);
    for (auto form : kCllacForms) {
      const auto g0 = emp_risk_grad(form, m, d, {3, 0.0, kSquare});
      const auto g3 = emp_risk_grad(form, m, d, {3, 0.3, kSquare});
      const auto g6 = emp_risk_grad(form, m, d, {3, 0.6, kSquare});
      for (std::size_t i = 0; i < g0.size(); ++i) {
        CHECK(g6[i] - g0[i] == doctest::Approx(2.0 * (g3[i] - g0[i])).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("weighted enumeration reproduces the exact risk") {
    const auto spec = fix_a();
    const auto m = random_linear(3, 12);
    const RiskContext ctx{3, spec.theta, kSquare};
    const auto e = enumerate_cllac(spec);
    for (auto form : kCllacForms) {
      CHECK(emp_risk(form, m, e.view(), ctx) == exact_cllac_risk(form, m, spec, ctx));
    }
  }

  TEST_CASE("convex form is convex along segments") {
    CounterRng rng(13, "convex");
    dists::ComplementaryDataset cl{Matrix(20, 2), std::vector<int>(20), 3};
    dists::UnlabeledDataset u{Matrix(20, 2)};
    for (auto& v : cl.x.data()) v = rng.uniform(-2, 2);
    for (auto& v : u.x.data()) v = rng.uniform(-2, 2);
    for (auto& y : cl.ybar) y = static_cast<int>(rng.index(3));
    RiskData d;
    d.cl = &cl;
    d.u = &u;
    const RiskContext ctx{3, 0.7, kSquare};
    for (int t = 0; t < 100; ++t) {
      auto p1 = random_linear(3, 100 + t);
      auto p2 = random_linear(3, 1000 + t);
      for (auto& v : p2.params()) v *= 3.0;
      const double s = rng.uniform();
      auto mid = p1;
      for (std::size_t i = 0; i < mid.params().size(); ++i) {
        mid.params()[i] = s * p1.params()[i] + (1 - s) * p2.params()[i];
      }
      const double lhs = emp_risk(RiskForm::cllac_convex, mid, d, ctx);
      const double rhs = s * emp_risk(RiskForm::cllac_convex, p1, d, ctx) +
                         (1 - s) * emp_risk(RiskForm::cllac_convex, p2, d, ctx);
      CHECK(lhs <= rhs + 1e-9);
    }
  }

  TEST_CASE("risk and gradient agree with the separate calls") {
    Golden g;
    const RiskContext ctx{2, 0.5, kSquare};
    std::vector<double> grad(g.m.params().size());
    const double r = emp_risk_and_grad(RiskForm::cllac_compact, g.m, g.data(), ctx, grad);
    CHECK(r == emp_risk(RiskForm::cllac_compact, g.m, g.data(), ctx));
    CHECK(grad == emp_risk_grad(RiskForm::cllac_compact, g.m, g.data(), ctx));
  }
}
