#include "lfmgan/eval.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "lfmgan/checkpoint.hpp"
#include "lfmgan/ops.hpp"
#include "lfmgan/rng.hpp"

namespace lfmgan {

namespace {

constexpr double kEigClip = 1e-10;

// Eigenvalue square roots with the documented clipping rule.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error(std::string("frechet_distance: eigendecomposition failed for ") + what);
  }
  Eigen::VectorXd lam = es.eigenvalues();
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam[i] < -kEigClip) {
      throw std::runtime_error(std::string("frechet_distance: matrix is not PSD (eigenvalue ") +
                               std::to_string(lam[i]) + ") in " + what);
    }
    lam[i] = lam[i] < 0.0 ? 0.0 : std::sqrt(lam[i]);
  }
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

GaussianStats compute_stats(const Eigen::MatrixXd& rows) {
  const Eigen::Index n = rows.rows();
  if (n < 2) throw std::invalid_argument("compute_stats: need at least 2 samples, got " + std::to_string(n));
  GaussianStats s;
  s.n = static_cast<int64_t>(n);
  s.mean = rows.colwise().mean();
  Eigen::MatrixXd centered = rows.rowwise() - s.mean.transpose();
  s.cov = centered.transpose() * centered / static_cast<double>(n - 1);
  s.cov = 0.5 * (s.cov + s.cov.transpose()).eval();
  return s;
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  if (a.mean.size() != b.mean.size()) {
    throw std::invalid_argument("frechet_distance: dimension mismatch " + std::to_string(a.mean.size()) + " vs " +
                                std::to_string(b.mean.size()));
  }
  const Eigen::MatrixXd sqrt_a = psd_sqrt(a.cov, "cov_a");
  Eigen::MatrixXd inner = sqrt_a * b.cov * sqrt_a;
  inner = 0.5 * (inner + inner.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner);
  if (es.info() != Eigen::Success) throw std::runtime_error("frechet_distance: eigendecomposition failed");
  double tr_sqrt = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double lam = es.eigenvalues()[i];
    if (lam < -kEigClip) {
      throw std::runtime_error("frechet_distance: product matrix is not PSD (eigenvalue " + std::to_string(lam) +
                               ")");
    }
    if (lam > 0.0) tr_sqrt += std::sqrt(lam);
  }
  const double dmu = (a.mean - b.mean).squaredNorm();
  return dmu + a.cov.trace() + b.cov.trace() - 2.0 * tr_sqrt;
}

FeatureExtractor FeatureExtractor::identity() {
  return FeatureExtractor("identity", [](const Tensor<float>& batch) {
    if (batch.rank() < 2) throw std::invalid_argument("identity extractor: expected at least rank-2 batch");
    const int64_t n = batch.dim(0);
    const int64_t d = batch.numel() / n;
    Eigen::MatrixXd rows(n, d);
    const float* p = batch.data();
    for (int64_t i = 0; i < n; ++i) {
      for (int64_t j = 0; j < d; ++j) rows(i, j) = static_cast<double>(p[i * d + j]);
    }
    return rows;
  });
}

FeatureExtractor FeatureExtractor::random_cnn(uint64_t seed) {
  struct Frozen {
    std::vector<Tensor<float>> weights;
  };
  auto frozen = std::make_shared<Frozen>();
  const int64_t chans[4] = {3, 16, 32, 64};
  Rng rng(seed);
  for (int i = 0; i < 3; ++i) {
    Tensor<float> w(Shape{chans[i + 1], chans[i], 3, 3});
    const double stddev = 1.0 / std::sqrt(static_cast<double>(chans[i] * 9));
    float* p = w.data();
    for (int64_t j = 0; j < w.numel(); ++j) p[j] = static_cast<float>(stddev * rng.normal());
    frozen->weights.push_back(w);
  }
  return FeatureExtractor("random_cnn:" + std::to_string(seed), [frozen](const Tensor<float>& batch) {
    if (batch.rank() != 4 || batch.dim(1) != 3) {
      throw std::invalid_argument("random_cnn extractor: expected (N,3,S,S), got " + shape_str(batch.shape()));
    }
    Tensor<float> h = batch;
    for (const Tensor<float>& w : frozen->weights) {
      h = ops::conv2d<float>(nullptr, h, w, nullptr, 2, 1);
      h = ops::leaky_relu<float>(nullptr, h, 0.2f);
    }
    const int64_t n = h.dim(0), c = h.dim(1), spatial = h.dim(2) * h.dim(3);
    Eigen::MatrixXd rows(n, c);
    const float* p = h.data();
    for (int64_t i = 0; i < n; ++i) {
      for (int64_t ci = 0; ci < c; ++ci) {
        double acc = 0.0;
        const float* plane = p + (i * c + ci) * spatial;
        for (int64_t s = 0; s < spatial; ++s) acc += static_cast<double>(plane[s]);
        rows(i, ci) = acc / static_cast<double>(spatial);
      }
    }
    return rows;
  });
}

FeatureExtractor FeatureExtractor::custom(std::string tag, Fn fn) {
  return FeatureExtractor(std::move(tag), std::move(fn));
}

GaussianStats feature_stats(const Tensor<float>& batch, const FeatureExtractor& extractor) {
  return compute_stats(extractor.extract(batch));
}

Coverage mode_coverage(const std::vector<std::array<double, 2>>& samples, const ModeSpec& spec) {
  if (spec.centers.empty()) throw std::invalid_argument("mode_coverage: no centers");
  if (spec.sigma <= 0.0) throw std::invalid_argument("mode_coverage: sigma must be positive");
  Coverage cov;
  if (samples.empty()) return cov;
  std::vector<int64_t> hq_count(spec.centers.size(), 0);
  int64_t hq_total = 0;
  const double hq_radius = 3.0 * spec.sigma;
  for (const auto& s : samples) {
    size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < spec.centers.size(); ++c) {
      const double dx = s[0] - spec.centers[c][0];
      const double dy = s[1] - spec.centers[c][1];
      const double d2 = dx * dx + dy * dy;
      if (d2 < best_d2) {
        best_d2 = d2;
        best = c;
      }
    }
    if (best_d2 <= hq_radius * hq_radius) {
      ++hq_count[best];
      ++hq_total;
    }
  }
  for (int64_t c : hq_count) {
    if (c >= spec.count_threshold) ++cov.modes_covered;
  }
  cov.high_quality_fraction = static_cast<double>(hq_total) / static_cast<double>(samples.size());
  return cov;
}

void save_stats(const std::filesystem::path& path, const GaussianStats& stats, const std::string& extractor_tag) {
  const int64_t d = static_cast<int64_t>(stats.mean.size());
  std::vector<double> mean(stats.mean.data(), stats.mean.data() + d);
  std::vector<double> cov(static_cast<size_t>(d) * d);
  for (int64_t r = 0; r < d; ++r) {
    for (int64_t c = 0; c < d; ++c) cov[static_cast<size_t>(r * d + c)] = stats.cov(r, c);
  }
  container::File file;
  file.config_text = "kind = stats\n";
  file.records.push_back(container::from_doubles("mean", {d}, mean));
  file.records.push_back(container::from_doubles("cov", {d, d}, cov));
  file.records.push_back(container::from_i64("n", stats.n));
  file.records.push_back(container::from_string("extractor", extractor_tag));
  container::write(path, file);
}

LoadedStats load_stats(const std::filesystem::path& path) {
  container::File file = container::read(path);
  if (file.config_text != "kind = stats\n") {
    throw std::runtime_error("load_stats: '" + path.string() + "' is not a statistics file");
  }
  const container::Record& mean_rec = file.find("mean");
  const container::Record& cov_rec = file.find("cov");
  const std::vector<double> mean = container::to_doubles(mean_rec);
  const std::vector<double> cov = container::to_doubles(cov_rec);
  const int64_t d = mean_rec.extents.at(0);
  if (cov_rec.extents != Shape{d, d}) throw std::runtime_error("load_stats: covariance shape mismatch");
  LoadedStats out;
  out.stats.n = container::to_i64(file.find("n"));
  out.stats.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), d);
  out.stats.cov.resize(d, d);
  for (int64_t r = 0; r < d; ++r) {
    for (int64_t c = 0; c < d; ++c) out.stats.cov(r, c) = cov[static_cast<size_t>(r * d + c)];
  }
  out.extractor_tag = container::to_string(file.find("extractor"));
  return out;
}

}  // namespace lfmgan
