#include "doctest.h"

#include <cmath>
#include <sstream>

#include "cllac/dists.hpp"
#include "cllac/errors.hpp"

using namespace cllac;
using namespace cllac::dists;

namespace {

FiniteJoint joint(std::vector<std::vector<double>> support, std::vector<std::vector<double>> prob) {
  FiniteJoint j;
  for (const auto& r : support) j.support.append_row(r);
  for (const auto& r : prob) j.prob.append_row(r);
  return j;
}

GaussMixSpec one_gaussian(std::vector<double> mean) {
  Matrix cov(mean.size(), mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) cov(i, i) = 1.0;
  return {{{std::move(mean), cov, 1.0}}};
}

}  // namespace

TEST_SUITE("dists") {
  TEST_CASE("complementary channel") {
    auto c = complementary_of(joint({{0.0}}, {{1, 0, 0}}));
    CHECK(c.prob(0, 0) == 0.0);
    CHECK(c.prob(0, 1) == 0.5);
    CHECK(c.prob(0, 2) == 0.5);

    c = complementary_of(joint({{0.0}}, {{0.3, 0.7}}));
    CHECK(c.prob(0, 0) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(c.prob(0, 1) == doctest::Approx(0.3).epsilon(1e-15));

    c = complementary_of(joint({{0.0}}, {{0.25, 0.25, 0.25, 0.25}}));
    for (int y = 0; y < 4; ++y) CHECK(c.prob(0, y) == 0.25);

    CHECK_THROWS_AS(complementary_of(joint({{0.0}}, {{1.0}})), InvalidInput);
  }

  TEST_CASE("complementary channel preserves the marginal") {
    const auto p = joint({{0.0}, {1.0}, {2.0}}, {{0.1, 0.2, 0.05}, {0.0, 0.3, 0.1}, {0.15, 0.0, 0.1}});
    const auto c = complementary_of(p);
    const auto mp = marginal(p);
    const auto mc = marginal(c);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(mp[i] - mc[i]) <= 1e-15);
  }

  TEST_CASE("validate") {
    CHECK_NOTHROW(validate(joint({{0.0}}, {{0.5, 0.5}})));
    CHECK_THROWS_AS(validate(joint({{0.0}}, {{0.5, 0.6}})), InvalidInput);
    CHECK_THROWS_AS(validate(joint({{0.0}}, {{1.5, -0.5}})), InvalidInput);
  }

  TEST_CASE("mixture boundaries and merging") {
    const auto kcl = joint({{0.0}}, {{0.4, 0.6}});
    const auto ac = joint({{1.0}}, {{1.0}});
    auto m = mixture({1.0, kcl, ac});
    CHECK(m.labels() == 3);
    CHECK(m.prob(0, 0) == 0.4);
    CHECK(m.prob(0, 2) == 0.0);

    m = mixture({0.0, kcl, ac});
    double ac_mass = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) ac_mass += m.prob(i, 2);
    CHECK(ac_mass == 1.0);

    m = mixture({0.5, joint({{7.0}}, {{1.0, 0.0}}), joint({{9.0}}, {{1.0}})});
    const auto px = marginal(m);
    REQUIRE(px.size() == 2);
    CHECK(px[0] == 0.5);
    CHECK(px[1] == 0.5);

    // Shared support point carries both kinds of mass.
    m = mixture({0.5, joint({{7.0}}, {{1.0, 0.0}}), joint({{7.0}}, {{1.0}})});
    REQUIRE(m.size() == 1);
    CHECK(m.prob(0, 0) == 0.5);
    CHECK(m.prob(0, 2) == 0.5);

    CHECK_THROWS_AS(mixture({1.5, kcl, ac}), InvalidInput);
  }

  TEST_CASE("complementary sampler") {
    // K = 2: the complement is forced.
    const auto s2 = sample_complementary_latent(joint({{0.0}, {1.0}}, {{0.3, 0.2}, {0.1, 0.4}}), 500, 5);
    for (std::size_t i = 0; i < 500; ++i) CHECK(s2.data.ybar[i] == 1 - s2.latent[i]);

    // K = 3 point mass on label 0: complements split evenly over {1, 2}.
    const auto s3 = sample_complementary(joint({{0.0}}, {{1.0, 0.0, 0.0}}), 60000, 9);
    std::size_t ones = 0;
    for (int y : s3.ybar) {
      REQUIRE(y != 0);
      ones += y == 1;
    }
    CHECK(std::abs(ones / 60000.0 - 0.5) <= 0.01);

    GaussMixSpec two = one_gaussian({0.0, 0.0});
    two.classes.push_back(two.classes[0]);
    two.classes[0].prior = two.classes[1].prior = 0.5;
    const auto a = sample_complementary(two, 10, 1);
    const auto b = sample_complementary(two, 10, 1);
    CHECK(a.x == b.x);
    CHECK_THROWS_AS(sample_complementary(joint({{0.0}}, {{1.0, 0.0}}), 0, 1), InvalidInput);
  }

  TEST_CASE("complementary labels never equal the latent label") {
    GaussMixSpec g = one_gaussian({0.0});
    g.classes.push_back(g.classes[0]);
    g.classes.push_back(g.classes[0]);
    for (auto& c : g.classes) c.prior = 1.0 / 3.0;
    g.classes[2].prior = 1.0 - 2.0 / 3.0;
    const auto s = sample_complementary_latent(g, 3000, 4);
    for (std::size_t i = 0; i < s.latent.size(); ++i) CHECK(s.data.ybar[i] != s.latent[i]);
  }

  TEST_CASE("test and unlabeled samplers") {
    const MixtureSpec half{0.5, joint({{0.0}}, {{0.5, 0.5}}), joint({{1.0}}, {{1.0}})};
    auto t = sample_test(half, 10000, 2);
    std::size_t ac = 0;
    for (int y : t.y) ac += y == t.ac_label();
    CHECK(std::abs(ac / 10000.0 - 0.5) <= 0.02);

    t = sample_test({1.0, half.kcl, half.ac}, 500, 2);
    for (int y : t.y) CHECK(y != t.ac_label());
    t = sample_test({0.0, half.kcl, half.ac}, 500, 2);
    for (int y : t.y) CHECK(y == t.ac_label());

    const auto u = sample_unlabeled({1.0, half.kcl, half.ac}, 200, 3);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(u.x(i, 0) == 0.0);
    CHECK(sample_unlabeled(half, 50, 3).x == sample_unlabeled(half, 50, 3).x);
  }

  TEST_CASE("gaussian sampler moments") {
    GaussMixSpec kcl = one_gaussian({2.0, -1.0});
    kcl.classes.push_back(kcl.classes[0]);
    kcl.classes[0].prior = kcl.classes[1].prior = 0.5;
    const auto t = sample_test({1.0, kcl, one_gaussian({0.0, 0.0})}, 20000, 8);
    double m0 = 0, m1 = 0, v0 = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      m0 += t.x(i, 0);
      m1 += t.x(i, 1);
    }
    m0 /= 20000;
    m1 /= 20000;
    for (std::size_t i = 0; i < t.size(); ++i) v0 += (t.x(i, 0) - m0) * (t.x(i, 0) - m0);
    v0 /= 20000;
    CHECK(std::abs(m0 - 2.0) < 0.05);
    CHECK(std::abs(m1 + 1.0) < 0.05);
    CHECK(std::abs(v0 - 1.0) < 0.05);
  }

  TEST_CASE("gaussian density") {
    const auto g = one_gaussian({0.0, 0.0}).classes[0];
    const std::vector<double> x{0.0, 0.0};
    CHECK(gaussian_density(g, x) == doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-14));
  }

  TEST_CASE("perturbations") {
    CHECK(perturb_theta(0.3, 1.0).value == 0.3);
    CHECK(perturb_theta(0.3, 2.6).value == doctest::Approx(0.78).epsilon(1e-15));
    CHECK_FALSE(perturb_theta(0.3, 2.6).clamped);
    CHECK(perturb_theta(0.5, 2.6).value == 1.0);
    CHECK(perturb_theta(0.5, 2.6).clamped);
    CHECK_THROWS_AS(perturb_theta(0.5, 0.0), InvalidInput);

    const MixtureSpec s{0.5, joint({{0.0}}, {{1.0, 0.0}}), joint({{1.0}}, {{1.0}})};
    CHECK(perturb_test_priors(s, 1.0).theta == 0.5);
    CHECK(perturb_test_priors(s, 3.0).theta == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(perturb_test_priors(s, 1e-12).theta == doctest::Approx(1.0));
    CHECK_THROWS_AS(perturb_test_priors(s, -1.0), InvalidInput);
  }

  TEST_CASE("container round trip") {
    TestDataset t;
    t.classes = 3;
    t.x = Matrix(3, 2);
    t.x(0, 0) = 0.5;
    t.x(2, 1) = -1.25;
    t.y = {0, 3, 2};
    std::stringstream ss;
    write_container(ss, to_container(t));
    const auto back = read_container(ss);
    CHECK(back.x == t.x);
    REQUIRE(back.labels);
    CHECK(*back.labels == t.y);

    UnlabeledDataset u{t.x};
    std::stringstream su;
    write_container(su, to_container(u));
    CHECK_FALSE(read_container(su).labels);
  }

  TEST_CASE("container format errors") {
    std::stringstream bad("CLLACX........");
    CHECK_THROWS_AS(read_container(bad), FormatError);

    std::stringstream ss;
    write_container(ss, to_container(UnlabeledDataset{Matrix(4, 3, 1.0)}));
    std::string bytes = ss.str();
    bytes.resize(bytes.size() - 5);
    std::stringstream truncated(bytes);
    try {
      read_container(truncated);
      FAIL("expected a format error");
    } catch (const FormatError& e) {
      CHECK(e.offset() > 0);
    }
  }
}
