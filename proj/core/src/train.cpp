#include "lfmgan/train.hpp"

#include <memory>

namespace lfmgan {

namespace {

template <typename Fn>
auto dispatch(const TrainConfig& cfg, Fn&& fn) {
  if (cfg.uses_mlp()) {
    if (cfg.precision == Precision::F32) {
      return fn(static_cast<TrainSession<float, MlpModel<float>>*>(nullptr));
    }
    return fn(static_cast<TrainSession<double, MlpModel<double>>*>(nullptr));
  }
  if (cfg.precision == Precision::F32) {
    return fn(static_cast<TrainSession<float, ConvModel<float>>*>(nullptr));
  }
  return fn(static_cast<TrainSession<double, ConvModel<double>>*>(nullptr));
}

}  // namespace

RunResult run_training(const TrainConfig& cfg, const std::filesystem::path& out_dir, const EvalCallback& cb) {
  cfg.validate();
  return dispatch(cfg, [&]<typename S>(S*) {
    S session{cfg};
    return session.run(out_dir, cb);
  });
}

TrainConfig read_checkpoint_config(const std::filesystem::path& checkpoint) {
  container::File file = container::read(checkpoint);
  TrainConfig cfg = parse_config_text(file.config_text);
  cfg.validate();
  return cfg;
}

RunResult resume_training(const std::filesystem::path& checkpoint, const std::filesystem::path& out_dir,
                          std::optional<int64_t> iterations_override, const EvalCallback& cb) {
  const TrainConfig cfg = read_checkpoint_config(checkpoint);
  return dispatch(cfg, [&]<typename S>(S*) {
    S session = S::from_checkpoint(checkpoint, iterations_override);
    return session.run(out_dir, cb);
  });
}

SampleResult sample_checkpoint(const std::filesystem::path& checkpoint, int64_t n, uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_checkpoint: n must be positive");
  const TrainConfig cfg = read_checkpoint_config(checkpoint);
  return dispatch(cfg, [&]<typename S>(S*) {
    S session = S::from_checkpoint(checkpoint);
    Rng rng(seed);
    SampleResult out;
    out.samples = session.eval_samples(n, rng);
    out.is_image = !cfg.uses_mlp();
    return out;
  });
}

FeatureExtractor make_df_extractor(const std::filesystem::path& checkpoint) {
  const TrainConfig cfg = read_checkpoint_config(checkpoint);
  return dispatch(cfg, [&]<typename S>(S*) {
    auto session = std::make_shared<S>(S::from_checkpoint(checkpoint));
    return FeatureExtractor::custom("trained_df", [session](const Tensor<float>& batch) {
      using T = typename S::value_type;
      Tensor<T> x(batch.shape());
      const float* src = batch.data();
      T* dst = x.data();
      for (int64_t i = 0; i < batch.numel(); ++i) dst[i] = static_cast<T>(src[i]);
      Tensor<T> f = session->model().disc_feature(nullptr, x, ops::BnMode::EvalRunning);
      const int64_t n = f.dim(0);
      const int64_t d = f.numel() / n;
      Eigen::MatrixXd rows(n, d);
      const T* p = f.data();
      for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = 0; j < d; ++j) rows(i, j) = static_cast<double>(p[i * d + j]);
      }
      return rows;
    });
  });
}

}  // namespace lfmgan
