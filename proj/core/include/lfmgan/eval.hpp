#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "lfmgan/tensor.hpp"

namespace lfmgan {

struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // unbiased, symmetrized
  int64_t n = 0;
};

// Sample mean and covariance of rows (n x d); requires n >= 2.
GaussianStats compute_stats(const Eigen::MatrixXd& rows);

// Frechet distance between two Gaussians:
//   |mu_a - mu_b|^2 + tr(cov_a + cov_b - 2 (cov_a^1/2 cov_b cov_a^1/2)^1/2).
// Matrix square roots go through symmetric eigendecompositions; eigenvalues
// in [-1e-10, 0) are clipped to zero, anything more negative is an error.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

// Maps a batch of model outputs to rows of feature vectors. Extraction is
// per-sample: splitting a batch never changes a sample's features.
class FeatureExtractor {
 public:
  using Fn = std::function<Eigen::MatrixXd(const Tensor<float>&)>;

  // Flattens each sample.
  static FeatureExtractor identity();

  // A small frozen convolution stack (three stride-2 3x3 convs, leaky ReLU,
  // global average pool, 64 features) with N(0, 1/sqrt(fan_in)) weights
  // drawn from the seed. Input must be (N, 3, S, S).
  static FeatureExtractor random_cnn(uint64_t seed);

  static FeatureExtractor custom(std::string tag, Fn fn);

  Eigen::MatrixXd extract(const Tensor<float>& batch) const { return fn_(batch); }
  const std::string& tag() const { return tag_; }

 private:
  FeatureExtractor(std::string tag, Fn fn) : tag_(std::move(tag)), fn_(std::move(fn)) {}
  std::string tag_;
  Fn fn_;
};

GaussianStats feature_stats(const Tensor<float>& batch, const FeatureExtractor& extractor);

struct ModeSpec {
  std::vector<std::array<double, 2>> centers;
  double sigma = 0.05;
  int64_t count_threshold = 1;  // high-quality samples needed to count a mode as covered
};

struct Coverage {
  int64_t modes_covered = 0;
  double high_quality_fraction = 0.0;
};

// A sample is high quality when it lies within 3 sigma of its nearest
// center; a mode is covered when at least count_threshold high-quality
// samples land nearest to it.
Coverage mode_coverage(const std::vector<std::array<double, 2>>& samples, const ModeSpec& spec);

// Reference statistics cached on disk, tagged with the extractor that
// produced them so mismatched comparisons fail loudly.
void save_stats(const std::filesystem::path& path, const GaussianStats& stats, const std::string& extractor_tag);

struct LoadedStats {
  GaussianStats stats;
  std::string extractor_tag;
};
LoadedStats load_stats(const std::filesystem::path& path);

}  // namespace lfmgan
