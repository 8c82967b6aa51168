#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <variant>
#include <vector>

#include "cllac/matrix.hpp"

namespace cllac::dists {

/// Exact discrete joint over a finite feature support.
/// support: m x d, prob: m x labels; entries >= 0 and summing to 1.
struct FiniteJoint {
  Matrix support;
  Matrix prob;

  std::size_t size() const { return support.rows(); }
  std::size_t dim() const { return support.cols(); }
  std::size_t labels() const { return prob.cols(); }
};

/// Throws InvalidInput unless the joint is well-formed (non-negative, sums to 1 within 1e-12).
void validate(const FiniteJoint& joint);

/// Feature marginal p(x) per support point.
std::vector<double> marginal(const FiniteJoint& joint);

/// Unbiased complementary channel: pbar(x, ybar) = 1/(K-1) sum_{y != ybar} p(x, y).
FiniteJoint complementary_of(const FiniteJoint& joint);

struct GaussianClass {
  std::vector<double> mean;
  Matrix covariance;  // d x d, symmetric positive-definite
  double prior = 1.0;
};

/// Generative spec: one Gaussian per class. When used as the augmented source
/// every component is collapsed to the single ac label.
struct GaussMixSpec {
  std::vector<GaussianClass> classes;

  std::size_t dim() const { return classes.empty() ? 0 : classes.front().mean.size(); }
};

void validate(const GaussMixSpec& spec);

/// Class-conditional density N(x; mean_c, cov_c), without the prior.
double gaussian_density(const GaussianClass& cls, std::span<const double> x);

using Source = std::variant<FiniteJoint, GaussMixSpec>;

std::size_t label_count(const Source& source);
std::size_t dimension(const Source& source);

/// Test density p_te = theta * p_kcl + (1 - theta) * p_ac.
struct MixtureSpec {
  double theta = 1.0;
  Source kcl;
  Source ac;

  std::size_t known_classes() const { return label_count(kcl); }
};

void validate(const MixtureSpec& spec);

/// Joint over K+1 labels (last column = ac). Both sources must be FiniteJoint.
/// Supports are merged by exact feature equality, kcl points first.
FiniteJoint mixture(const MixtureSpec& spec);

// ---------------------------------------------------------------------------
// Datasets. Labels are 0-based: known classes 0..K-1, ac == K.

struct ComplementaryDataset {
  Matrix x;
  std::vector<int> ybar;
  int classes = 0;  // K

  std::size_t size() const { return x.rows(); }
};

struct UnlabeledDataset {
  Matrix x;

  std::size_t size() const { return x.rows(); }
};

struct TestDataset {
  Matrix x;
  std::vector<int> y;
  int classes = 0;  // K; label K means ac

  std::size_t size() const { return x.rows(); }
  int ac_label() const { return classes; }
};

struct ComplementarySample {
  ComplementaryDataset data;
  std::vector<int> latent;  // the true label each complementary label was drawn against
};

/// Draws (x, y) from the known-class source then ybar uniform over the K-1 other labels.
ComplementarySample sample_complementary_latent(const Source& source, std::size_t n,
                                                std::uint64_t seed);
ComplementaryDataset sample_complementary(const Source& source, std::size_t n,
                                          std::uint64_t seed);
UnlabeledDataset sample_unlabeled(const MixtureSpec& spec, std::size_t n, std::uint64_t seed);
TestDataset sample_test(const MixtureSpec& spec, std::size_t n, std::uint64_t seed);

struct PerturbedTheta {
  double value = 0.0;
  bool clamped = false;
};

/// eta * theta, clamped to [0, 1].
PerturbedTheta perturb_theta(double theta, double eta);

/// Scales the ac prior by mu and renormalizes the class prior; class
/// conditionals are untouched, so only theta changes.
MixtureSpec perturb_test_priors(const MixtureSpec& spec, double mu);

// ---------------------------------------------------------------------------
// Flat binary container:
//   "CLLAC1" | u32 d | u64 n | u8 label_width (0 or 1)
//   n*d float32 features (row-major) | n label bytes (if label_width == 1)
// All multi-byte fields little-endian. Label bytes hold label + 1, so ac is K+1.

struct Container {
  Matrix x;
  std::optional<std::vector<int>> labels;
};

void write_container(std::ostream& os, const Container& c);
Container read_container(std::istream& is);
void save_container(const std::filesystem::path& path, const Container& c);
Container load_container(const std::filesystem::path& path);

Container to_container(const ComplementaryDataset& ds);
Container to_container(const UnlabeledDataset& ds);
Container to_container(const TestDataset& ds);

}  // namespace cllac::dists
