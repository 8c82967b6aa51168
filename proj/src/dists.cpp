#include "cllac/dists.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>

#include "cllac/binary_io.hpp"
#include "cllac/errors.hpp"
#include "cllac/rng.hpp"
#include "cllac/summation.hpp"

namespace cllac::dists {
namespace {

constexpr double kSumTolerance = 1e-12;

// Lower Cholesky factor; throws if the matrix is not symmetric positive-definite.
Matrix cholesky(const Matrix& a) {
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      if (std::abs(a(i, j) - a(j, i)) > 1e-12 * (1.0 + std::abs(a(i, j)))) {
        throw InvalidInput("covariance must be symmetric");
      }
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (!(s > 0.0)) throw InvalidInput("covariance must be positive-definite");
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

// Draws cells of a FiniteJoint by inverse CDF over the flattened table.
class JointSampler {
 public:
  explicit JointSampler(const FiniteJoint& joint) : joint_(joint) {
    CompensatedSum acc;
    cdf_.reserve(joint.prob.data().size());
    for (double p : joint.prob.data()) {
      acc += p;
      cdf_.push_back(acc.value());
    }
  }

  // Returns (support row, label).
  std::pair<std::size_t, int> draw(CounterRng& rng) const {
    const double u = rng.uniform() * cdf_.back();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    auto cell = static_cast<std::size_t>(it - cdf_.begin());
    if (it == cdf_.end()) {
      cell = cdf_.size() - 1;
      while (cell > 0 && joint_.prob.data()[cell] == 0.0) --cell;
    }
    const std::size_t labels = joint_.labels();
    return {cell / labels, static_cast<int>(cell % labels)};
  }

  std::span<const double> point(std::size_t row) const { return joint_.support.row(row); }

 private:
  const FiniteJoint& joint_;
  std::vector<double> cdf_;
};

class GaussSampler {
 public:
  explicit GaussSampler(const GaussMixSpec& spec) : spec_(spec) {
    CompensatedSum acc;
    for (const auto& cls : spec.classes) {
      factors_.push_back(cholesky(cls.covariance));
      acc += cls.prior;
      cum_prior_.push_back(acc.value());
    }
  }

  int draw(CounterRng& rng, std::span<double> x) const {
    const double u = rng.uniform() * cum_prior_.back();
    auto it = std::upper_bound(cum_prior_.begin(), cum_prior_.end(), u);
    if (it == cum_prior_.end()) --it;
    const auto c = static_cast<std::size_t>(it - cum_prior_.begin());
    const auto& mean = spec_.classes[c].mean;
    const Matrix& l = factors_[c];
    const std::size_t d = mean.size();
    std::vector<double> z(d);
    for (auto& zi : z) zi = rng.normal();
    for (std::size_t i = 0; i < d; ++i) {
      double v = mean[i];
      for (std::size_t k = 0; k <= i; ++k) v += l(i, k) * z[k];
      x[i] = v;
    }
    return static_cast<int>(c);
  }

 private:
  const GaussMixSpec& spec_;
  std::vector<Matrix> factors_;
  std::vector<double> cum_prior_;
};

// Uniform interface over both source kinds.
class SourceSampler {
 public:
  explicit SourceSampler(const Source& source) {
    if (const auto* j = std::get_if<FiniteJoint>(&source)) {
      validate(*j);
      joint_.emplace(*j);
    } else {
      const auto& g = std::get<GaussMixSpec>(source);
      validate(g);
      gauss_.emplace(g);
    }
  }

  int draw(CounterRng& rng, std::span<double> x) const {
    if (joint_) {
      const auto [row, label] = joint_->draw(rng);
      const auto p = joint_->point(row);
      std::copy(p.begin(), p.end(), x.begin());
      return label;
    }
    return gauss_->draw(rng, x);
  }

 private:
  std::optional<JointSampler> joint_;
  std::optional<GaussSampler> gauss_;
};

void require_count(std::size_t n) {
  if (n == 0) throw InvalidInput("sample size must be at least 1");
}

void require_theta(double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw InvalidInput("theta must lie in [0, 1]");
}

// Known-class mass of an augmented-only joint must be exactly zero.
void validate_ac(const FiniteJoint& ac, std::size_t known) {
  validate(ac);
  if (ac.labels() == 1) return;
  if (ac.labels() != known + 1) {
    throw InvalidInput("augmented joint must have 1 or K+1 label columns");
  }
  for (std::size_t i = 0; i < ac.size(); ++i) {
    for (std::size_t k = 0; k < known; ++k) {
      if (ac.prob(i, k) != 0.0) throw InvalidInput("augmented joint has mass on a known label");
    }
  }
}

double ac_mass(const FiniteJoint& ac, std::size_t row) { return ac.prob(row, ac.labels() - 1); }

}  // namespace

void validate(const FiniteJoint& joint) {
  if (joint.size() == 0) throw InvalidInput("finite joint has empty support");
  if (joint.prob.rows() != joint.size()) throw InvalidInput("prob rows must match support size");
  if (joint.labels() == 0) throw InvalidInput("finite joint needs at least one label");
  CompensatedSum total;
  for (double p : joint.prob.data()) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidInput("probabilities must be finite and >= 0");
    total += p;
  }
  if (std::abs(total.value() - 1.0) > kSumTolerance) {
    throw InvalidInput("probabilities must sum to 1");
  }
}

std::vector<double> marginal(const FiniteJoint& joint) {
  std::vector<double> out(joint.size());
  for (std::size_t i = 0; i < joint.size(); ++i) {
    CompensatedSum s;
    for (double p : joint.prob.row(i)) s += p;
    out[i] = s.value();
  }
  return out;
}

FiniteJoint complementary_of(const FiniteJoint& joint) {
  validate(joint);
  const std::size_t k = joint.labels();
  if (k < 2) throw InvalidInput("complementary labels need K >= 2");
  FiniteJoint out{joint.support, Matrix(joint.size(), k)};
  const double inv = 1.0 / static_cast<double>(k - 1);
  for (std::size_t i = 0; i < joint.size(); ++i) {
    const auto row = joint.prob.row(i);
    for (std::size_t yb = 0; yb < k; ++yb) {
      CompensatedSum s;
      for (std::size_t y = 0; y < k; ++y) {
        if (y != yb) s += row[y];
      }
      out.prob(i, yb) = s.value() * inv;
    }
  }
  return out;
}

void validate(const GaussMixSpec& spec) {
  if (spec.classes.empty()) throw InvalidInput("gaussian mixture needs at least one class");
  const std::size_t d = spec.dim();
  if (d == 0) throw InvalidInput("gaussian mean must have dimension >= 1");
  CompensatedSum priors;
  for (const auto& cls : spec.classes) {
    if (cls.mean.size() != d) throw InvalidInput("gaussian means differ in dimension");
    if (cls.covariance.rows() != d || cls.covariance.cols() != d) {
      throw InvalidInput("covariance must be d x d");
    }
    if (!(cls.prior > 0.0)) throw InvalidInput("class priors must be positive");
    priors += cls.prior;
    cholesky(cls.covariance);
  }
  if (std::abs(priors.value() - 1.0) > kSumTolerance) {
    throw InvalidInput("class priors must sum to 1");
  }
}

double gaussian_density(const GaussianClass& cls, std::span<const double> x) {
  const std::size_t d = cls.mean.size();
  if (x.size() != d) throw InvalidInput("point dimension does not match gaussian");
  const Matrix l = cholesky(cls.covariance);
  // Solve L z = x - mean; quadratic form is |z|^2.
  std::vector<double> z(d);
  double log_det = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double v = x[i] - cls.mean[i];
    for (std::size_t k = 0; k < i; ++k) v -= l(i, k) * z[k];
    z[i] = v / l(i, i);
    log_det += std::log(l(i, i));
  }
  double q = 0.0;
  for (double zi : z) q += zi * zi;
  const double log_norm = 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi) + log_det;
  return std::exp(-0.5 * q - log_norm);
}

std::size_t label_count(const Source& source) {
  if (const auto* j = std::get_if<FiniteJoint>(&source)) return j->labels();
  return std::get<GaussMixSpec>(source).classes.size();
}

std::size_t dimension(const Source& source) {
  if (const auto* j = std::get_if<FiniteJoint>(&source)) return j->dim();
  return std::get<GaussMixSpec>(source).dim();
}

void validate(const MixtureSpec& spec) {
  require_theta(spec.theta);
  if (const auto* j = std::get_if<FiniteJoint>(&spec.kcl)) {
    validate(*j);
  } else {
    validate(std::get<GaussMixSpec>(spec.kcl));
  }
  if (spec.known_classes() < 2) throw InvalidInput("need at least two known classes");
  if (const auto* j = std::get_if<FiniteJoint>(&spec.ac)) {
    validate_ac(*j, spec.known_classes());
  } else {
    validate(std::get<GaussMixSpec>(spec.ac));
  }
  if (dimension(spec.kcl) != dimension(spec.ac)) {
    throw InvalidInput("known and augmented sources differ in dimension");
  }
}

FiniteJoint mixture(const MixtureSpec& spec) {
  require_theta(spec.theta);
  const auto* kcl = std::get_if<FiniteJoint>(&spec.kcl);
  const auto* ac = std::get_if<FiniteJoint>(&spec.ac);
  if (kcl == nullptr || ac == nullptr) {
    throw InvalidInput("mixture needs finite sources; sample generative specs instead");
  }
  validate(spec);
  const std::size_t k = kcl->labels();

  FiniteJoint out{Matrix(0, kcl->dim()), Matrix(0, k + 1)};
  std::map<std::vector<double>, std::size_t> index;
  auto row_for = [&](std::span<const double> x) {
    std::vector<double> key(x.begin(), x.end());
    auto [it, inserted] = index.emplace(std::move(key), out.size());
    if (inserted) {
      out.support.append_row(x);
      std::vector<double> zeros(k + 1, 0.0);
      out.prob.append_row(zeros);
    }
    return it->second;
  };
  for (std::size_t i = 0; i < kcl->size(); ++i) {
    const std::size_t r = row_for(kcl->support.row(i));
    for (std::size_t y = 0; y < k; ++y) out.prob(r, y) += spec.theta * kcl->prob(i, y);
  }
  for (std::size_t i = 0; i < ac->size(); ++i) {
    const std::size_t r = row_for(ac->support.row(i));
    out.prob(r, k) += (1.0 - spec.theta) * ac_mass(*ac, i);
  }
  return out;
}

ComplementarySample sample_complementary_latent(const Source& source, std::size_t n,
                                                std::uint64_t seed) {
  require_count(n);
  const std::size_t k = label_count(source);
  if (k < 2) throw InvalidInput("complementary labels need K >= 2");
  const SourceSampler sampler(source);
  CounterRng rng(seed, "complementary");

  ComplementarySample out;
  out.data.classes = static_cast<int>(k);
  out.data.x = Matrix(n, dimension(source));
  out.data.ybar.resize(n);
  out.latent.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = sampler.draw(rng, out.data.x.row(i));
    auto yb = static_cast<int>(rng.index(k - 1));
    if (yb >= y) ++yb;
    if (yb == y) throw std::logic_error("complementary label equals the true label");
    out.data.ybar[i] = yb;
    out.latent[i] = y;
  }
  return out;
}

ComplementaryDataset sample_complementary(const Source& source, std::size_t n,
                                          std::uint64_t seed) {
  return sample_complementary_latent(source, n, seed).data;
}

UnlabeledDataset sample_unlabeled(const MixtureSpec& spec, std::size_t n, std::uint64_t seed) {
  require_count(n);
  validate(spec);
  const SourceSampler known(spec.kcl);
  const SourceSampler augmented(spec.ac);
  CounterRng rng(seed, "unlabeled");
  UnlabeledDataset out{Matrix(n, dimension(spec.kcl))};
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.uniform() < spec.theta) {
      known.draw(rng, out.x.row(i));
    } else {
      augmented.draw(rng, out.x.row(i));
    }
  }
  return out;
}

TestDataset sample_test(const MixtureSpec& spec, std::size_t n, std::uint64_t seed) {
  require_count(n);
  validate(spec);
  const SourceSampler known(spec.kcl);
  const SourceSampler augmented(spec.ac);
  CounterRng rng(seed, "test");
  TestDataset out;
  out.classes = static_cast<int>(spec.known_classes());
  out.x = Matrix(n, dimension(spec.kcl));
  out.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.uniform() < spec.theta) {
      out.y[i] = known.draw(rng, out.x.row(i));
    } else {
      augmented.draw(rng, out.x.row(i));
      out.y[i] = out.classes;
    }
  }
  return out;
}

PerturbedTheta perturb_theta(double theta, double eta) {
  require_theta(theta);
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidInput("eta must be positive");
  const double v = eta * theta;
  if (v > 1.0) return {1.0, true};
  return {v, false};
}

MixtureSpec perturb_test_priors(const MixtureSpec& spec, double mu) {
  require_theta(spec.theta);
  if (!(mu > 0.0) || !std::isfinite(mu)) throw InvalidInput("mu must be positive");
  MixtureSpec out = spec;
  if (mu == 1.0) return out;
  const double ac = (1.0 - spec.theta) * mu;
  out.theta = spec.theta / (spec.theta + ac);
  return out;
}

// --- container -------------------------------------------------------------

namespace {
constexpr char kMagic[6] = {'C', 'L', 'L', 'A', 'C', '1'};
}

void write_container(std::ostream& os, const Container& c) {
  os.write(kMagic, sizeof(kMagic));
  binio::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(c.x.cols()));
  binio::write_le<std::uint64_t>(os, c.x.rows());
  binio::write_le<std::uint8_t>(os, c.labels ? 1 : 0);
  for (double v : c.x.data()) binio::write_le<float>(os, static_cast<float>(v));
  if (c.labels) {
    if (c.labels->size() != c.x.rows()) throw InvalidInput("label count must match rows");
    for (int y : *c.labels) {
      if (y < 0 || y > 254) throw InvalidInput("label does not fit in one byte");
      binio::write_le<std::uint8_t>(os, static_cast<std::uint8_t>(y + 1));
    }
  }
  if (!os) throw std::runtime_error("failed writing dataset container");
}

Container read_container(std::istream& is) {
  binio::Reader in(is);
  char magic[6];
  in.bytes(magic, sizeof(magic), "magic");
  if (!std::equal(magic, magic + 6, kMagic)) throw FormatError("bad dataset magic", 0);
  const auto d = in.le<std::uint32_t>("dimension");
  const auto n = in.le<std::uint64_t>("count");
  const auto width_at = in.offset();
  const auto width = in.le<std::uint8_t>("label width");
  if (width > 1) throw FormatError("unsupported label width", width_at);
  Container c;
  c.x = Matrix(n, d);
  for (auto& v : c.x.data()) v = static_cast<double>(in.le<float>("features"));
  if (width == 1) {
    std::vector<int> labels(n);
    for (auto& y : labels) {
      const auto at = in.offset();
      const auto b = in.le<std::uint8_t>("labels");
      if (b == 0) throw FormatError("label byte 0 is reserved", at);
      y = static_cast<int>(b) - 1;
    }
    c.labels = std::move(labels);
  }
  return c;
}

void save_container(const std::filesystem::path& path, const Container& c) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_container(os, c);
}

Container load_container(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidInput("cannot open " + path.string());
  return read_container(is);
}

Container to_container(const ComplementaryDataset& ds) { return {ds.x, ds.ybar}; }
Container to_container(const UnlabeledDataset& ds) { return {ds.x, std::nullopt}; }
Container to_container(const TestDataset& ds) { return {ds.x, ds.y}; }

}  // namespace cllac::dists
