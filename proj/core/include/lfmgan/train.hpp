#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lfmgan/adam.hpp"
#include "lfmgan/checkpoint.hpp"
#include "lfmgan/config.hpp"
#include "lfmgan/data.hpp"
#include "lfmgan/eval.hpp"
#include "lfmgan/latent.hpp"
#include "lfmgan/lfm.hpp"
#include "lfmgan/nets.hpp"
#include "lfmgan/rng.hpp"

namespace lfmgan {

struct StepMetrics {
  int64_t iteration = 0;
  double loss_d = 0.0;
  double loss_g = 0.0;
  double lfm_value = 0.0;
  double d_real_mean = 0.0;
  double d_fake_mean = 0.0;
};

// Non-finite loss detected; the CLI maps this to exit code 3.
struct TrainAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunResult {
  std::filesystem::path metrics_csv;
  std::vector<std::filesystem::path> checkpoints;
  StepMetrics last;
  double last_fid = std::numeric_limits<double>::quiet_NaN();
};

using EvalCallback = std::function<void(int64_t iteration, double fid, const Tensor<float>& samples)>;

template <typename T>
Tensor<float> to_float_tensor(const Tensor<T>& t) {
  Tensor<float> out(t.shape());
  const T* src = t.data();
  float* dst = out.data();
  const int64_t n = t.numel();
  for (int64_t i = 0; i < n; ++i) dst[i] = static_cast<float>(src[i]);
  return out;
}

// Model adapters give the training loop one surface over the MLP pair and
// the convolutional pair: generation, split discriminator heads, the F map,
// and named parameters (g./d. prefixes).

template <typename T>
struct ModelHeads {
  Tensor<T> score;
  Tensor<T> feature_raw;
};

template <typename T>
class MlpModel {
 public:
  explicit MlpModel(const TrainConfig& cfg)
      : pair_(build_mlp_gan<T>(cfg.z_dim, cfg.mlp_hidden, cfg.feature_dim, cfg.lfm_mode,
                               derive_seed(cfg.seed, 0))) {}

  Tensor<T> generate(Tape<T>* tape, const LatentBatch& z, ops::BnMode) {
    return pair_.g.forward(tape, z.template to_tensor<T>());
  }
  Tensor<T> disc_score(Tape<T>* tape, const Tensor<T>& x, ops::BnMode) {
    return pair_.d.forward_score(tape, x);
  }
  ModelHeads<T> disc_heads(Tape<T>* tape, const Tensor<T>& x, ops::BnMode) {
    Tensor<T> h = pair_.d.backbone(tape, x);
    return {pair_.d.score_from(tape, h), pair_.d.feature_from(tape, h)};
  }
  Tensor<T> apply_f(Tape<T>* tape, const Tensor<T>& feature) { return pair_.d.apply_f(tape, feature); }
  Tensor<T> disc_feature(Tape<T>* tape, const Tensor<T>& x, ops::BnMode) {
    return pair_.d.feature_from(tape, pair_.d.backbone(tape, x));
  }

  std::vector<Tensor<T>> params_g() const { return pair_.g.parameters(); }
  std::vector<Tensor<T>> params_d() const { return pair_.d.parameters(); }
  std::vector<NamedTensor<T>> named_g() const { return prefixed("g.", pair_.g.named_tensors()); }
  std::vector<NamedTensor<T>> named_d() const { return prefixed("d.", pair_.d.named_tensors()); }

  MlpGanPair<T>& nets() { return pair_; }

 private:
  static std::vector<NamedTensor<T>> prefixed(const std::string& p, std::vector<NamedTensor<T>> v) {
    for (auto& nt : v) nt.name = p + nt.name;
    return v;
  }
  MlpGanPair<T> pair_;
};

template <typename T>
class ConvModel {
 public:
  explicit ConvModel(const TrainConfig& cfg)
      : g_(build_generator<T>(cfg.z_dim, cfg.image_size, cfg.base_channels)),
        d_(build_discriminator<T>(cfg.image_size, cfg.feature_dim, cfg.lfm_mode, cfg.base_channels)) {
    init_weights(g_, derive_seed(cfg.seed, 0));
    init_weights(d_, derive_seed(cfg.seed, 1));
  }

  Tensor<T> generate(Tape<T>* tape, const LatentBatch& z, ops::BnMode bn) {
    return g_.forward(tape, z.template to_tensor_4d<T>(), bn);
  }
  Tensor<T> disc_score(Tape<T>* tape, const Tensor<T>& x, ops::BnMode bn) {
    return d_.forward_score(tape, x, bn);
  }
  ModelHeads<T> disc_heads(Tape<T>* tape, const Tensor<T>& x, ops::BnMode bn) {
    Tensor<T> h = d_.backbone(tape, x, bn);
    return {d_.score_from(tape, h), d_.feature_from(tape, h)};
  }
  Tensor<T> apply_f(Tape<T>* tape, const Tensor<T>& feature) { return d_.apply_f(tape, feature); }
  Tensor<T> disc_feature(Tape<T>* tape, const Tensor<T>& x, ops::BnMode bn) {
    return d_.feature_from(tape, d_.backbone(tape, x, bn));
  }

  std::vector<Tensor<T>> params_g() const { return g_.parameters(); }
  std::vector<Tensor<T>> params_d() const { return d_.parameters(); }
  std::vector<NamedTensor<T>> named_g() const { return prefixed("g.", g_.named_tensors()); }
  std::vector<NamedTensor<T>> named_d() const { return prefixed("d.", d_.named_tensors()); }

  GeneratorNet<T>& generator() { return g_; }
  DiscriminatorNet<T>& discriminator() { return d_; }

 private:
  static std::vector<NamedTensor<T>> prefixed(const std::string& p, std::vector<NamedTensor<T>> v) {
    for (auto& nt : v) nt.name = p + nt.name;
    return v;
  }
  GeneratorNet<T> g_;
  DiscriminatorNet<T> d_;
};

// One training run: alternating D/G steps, metrics CSV, periodic
// checkpoints, Frechet evaluation against reference statistics.
//
// Random streams: the main stream drives real-batch sampling (ring data) and
// latent draws, in that order within a step, so a checkpointed rng state
// replays exactly. Evaluation, reference statistics, initialization, and
// epoch shuffles use seeds derived from (seed, purpose) and never touch the
// main stream.
template <typename T, typename Model>
class TrainSession {
 public:
  using value_type = T;

  explicit TrainSession(TrainConfig cfg)
      : cfg_(std::move(cfg)),
        model_(cfg_),
        rng_(cfg_.seed),
        opt_g_(model_.params_g(), {cfg_.lr, cfg_.beta1, cfg_.beta2, cfg_.adam_eps}),
        opt_d_(model_.params_d(), {cfg_.lr, cfg_.beta1, cfg_.beta2, cfg_.adam_eps}),
        extractor_(FeatureExtractor::identity()) {
    cfg_.validate();
    if ((cfg_.precision == Precision::F32) != (sizeof(T) == 4)) {
      throw std::invalid_argument("TrainSession: instantiated precision does not match config");
    }
    load_data();
    init_eval();
  }

  static TrainSession from_checkpoint(const std::filesystem::path& path,
                                      std::optional<int64_t> iterations_override = std::nullopt) {
    container::File file = container::read(path);
    TrainConfig cfg = parse_config_text(file.config_text);
    if (iterations_override) cfg.iterations = *iterations_override;
    TrainSession session(std::move(cfg));
    session.load_state(file);
    return session;
  }

  const TrainConfig& config() const { return cfg_; }
  int64_t iteration() const { return iteration_; }
  Model& model() { return model_; }
  Rng& rng() { return rng_; }
  const GaussianStats& reference_stats() const { return ref_stats_; }
  const FeatureExtractor& extractor() const { return extractor_; }

  // One alternating iteration: D update on real plus detached fakes, then G
  // update on fresh latents through the frozen-parameter D.
  StepMetrics step() {
    const LfmConfig lfm_cfg = cfg_.lfm();
    Tensor<T> real = next_real_batch();
    Tape<T> tape;

    // D sub-step; fakes are generated off-tape, so no gradient can reach G.
    opt_d_.zero_grad();
    LatentBatch z_d = draw_latents();
    Tensor<T> fakes = model_.generate(nullptr, z_d, ops::BnMode::Train);
    Tensor<T> score_real = model_.disc_score(&tape, real, ops::BnMode::Train);
    Tensor<T> score_fake;
    Tensor<T> loss_d;
    if (lfm_cfg.mode == LfmMode::Full && lfm_cfg.lambda_d > 0.0) {
      ModelHeads<T> heads = model_.disc_heads(&tape, fakes, ops::BnMode::Train);
      score_fake = heads.score;
      Tensor<T> f_in =
          cfg_.lfm_d_scope == LfmDScope::FOnly ? heads.feature_raw.detach() : heads.feature_raw;
      Tensor<T> feature = model_.apply_f(&tape, f_in);
      loss_d = d_total_loss(&tape, score_real, score_fake, feature, lfm_cfg);
    } else {
      score_fake = model_.disc_score(&tape, fakes, ops::BnMode::Train);
      loss_d = d_total_loss(&tape, score_real, score_fake, Tensor<T>(), lfm_cfg);
    }
    StepMetrics m;
    m.loss_d = static_cast<double>(loss_d.item());
    m.d_real_mean = mean_value(score_real);
    m.d_fake_mean = mean_value(score_fake);
    abort_if_bad(m.loss_d, "loss_d");
    tape.backward(loss_d);
    opt_d_.step();
    tape.clear();

    // G sub-step. D participates in the graph (its grads are polluted and
    // zeroed at the next D sub-step) but only opt_g_ applies an update.
    opt_g_.zero_grad();
    LatentBatch z_g = draw_latents();
    Tensor<T> fakes_g = model_.generate(&tape, z_g, ops::BnMode::Train);
    Tensor<T> loss_g;
    if (lfm_cfg.mode != LfmMode::Off && lfm_cfg.lambda_g > 0.0) {
      ModelHeads<T> heads = model_.disc_heads(&tape, fakes_g, ops::BnMode::Train);
      Tensor<T> feature = model_.apply_f(&tape, heads.feature_raw);
      loss_g = g_total_loss(&tape, heads.score, feature, lfm_cfg, cfg_.saturating);
      m.lfm_value = static_cast<double>(lfm_base<T>(nullptr, feature).item());
    } else {
      Tensor<T> score = model_.disc_score(&tape, fakes_g, ops::BnMode::Train);
      loss_g = g_total_loss(&tape, score, Tensor<T>(), lfm_cfg, cfg_.saturating);
    }
    m.loss_g = static_cast<double>(loss_g.item());
    abort_if_bad(m.loss_g, "loss_g");
    tape.backward(loss_g);
    opt_g_.step();

    ++iteration_;
    m.iteration = iteration_;
    return m;
  }

  // Plain-random evaluation samples; batchnorm per cfg.bn_eval without
  // touching running statistics or the training rng.
  Tensor<float> eval_samples(int64_t n, Rng& eval_rng) {
    LatentBatch z = sample_gaussian(n, cfg_.z_dim, eval_rng);
    const ops::BnMode bn =
        cfg_.bn_eval == BnEvalMode::Batch ? ops::BnMode::EvalBatch : ops::BnMode::EvalRunning;
    return to_float_tensor(model_.generate(nullptr, z, bn));
  }

  double eval_fid(const EvalCallback& cb = {}) {
    Rng erng(derive_seed(cfg_.seed, 0xe7a10000ULL + static_cast<uint64_t>(iteration_)));
    Tensor<float> samples = eval_samples(cfg_.eval_n, erng);
    const double fid = frechet_distance(compute_stats(extractor_.extract(samples)), ref_stats_);
    if (cb) cb(iteration_, fid, samples);
    return fid;
  }

  RunResult run(const std::filesystem::path& out_dir, const EvalCallback& cb = {}) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    RunResult result;
    result.metrics_csv = out_dir / "metrics.csv";
    std::ofstream csv(result.metrics_csv, std::ios::trunc);
    if (!csv) throw std::runtime_error("train: cannot open '" + result.metrics_csv.string() + "'");
    csv << "iteration,loss_d,loss_g,lfm_value,d_real_mean,d_fake_mean,fid,wall_ms\n";
    while (iteration_ < cfg_.iterations) {
      const auto t0 = std::chrono::steady_clock::now();
      StepMetrics m;
      try {
        m = step();
      } catch (const TrainAbort& e) {
        write_abort_dump(out_dir, e.what());
        throw;
      }
      double fid = std::numeric_limits<double>::quiet_NaN();
      bool has_fid = false;
      if (cfg_.eval_every > 0 && iteration_ % cfg_.eval_every == 0) {
        fid = eval_fid(cb);
        has_fid = true;
        result.last_fid = fid;
      }
      const double wall_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      write_row(csv, m, has_fid, fid, wall_ms);
      csv.flush();
      result.last = m;
      if (cfg_.checkpoint_every > 0 && iteration_ % cfg_.checkpoint_every == 0) {
        char name[64];
        std::snprintf(name, sizeof(name), "checkpoint_%08lld.lfmg", static_cast<long long>(iteration_));
        const fs::path p = out_dir / name;
        save(p);
        result.checkpoints.push_back(p);
      }
    }
    const fs::path final_path = out_dir / "checkpoint_final.lfmg";
    save(final_path);
    result.checkpoints.push_back(final_path);
    return result;
  }

  void save(const std::filesystem::path& path) const {
    container::File file;
    file.config_text = cfg_.canonical_text();
    file.records.push_back(container::from_i64("train.iteration", iteration_));
    file.records.push_back(container::from_string("rng", rng_.serialize()));
    for (const NamedTensor<T>& nt : model_.named_g()) {
      file.records.push_back(container::from_tensor(nt.name, nt.tensor));
    }
    for (const NamedTensor<T>& nt : model_.named_d()) {
      file.records.push_back(container::from_tensor(nt.name, nt.tensor));
    }
    append_adam(file, "adam_g", opt_g_, named_params(model_.named_g()));
    append_adam(file, "adam_d", opt_d_, named_params(model_.named_d()));
    container::write(path, file);
  }

  void load_state(const container::File& file) {
    iteration_ = container::to_i64(file.find("train.iteration"));
    rng_ = Rng::deserialize(container::to_string(file.find("rng")));
    for (NamedTensor<T> nt : model_.named_g()) restore_tensor(file, nt);
    for (NamedTensor<T> nt : model_.named_d()) restore_tensor(file, nt);
    restore_adam(file, "adam_g", opt_g_, named_params(model_.named_g()));
    restore_adam(file, "adam_d", opt_d_, named_params(model_.named_d()));
  }

 private:
  static std::vector<NamedTensor<T>> named_params(std::vector<NamedTensor<T>> v) {
    std::vector<NamedTensor<T>> out;
    for (auto& nt : v) {
      if (nt.is_param) out.push_back(std::move(nt));
    }
    return out;
  }

  static double mean_value(const Tensor<T>& t) {
    const T* p = t.data();
    double acc = 0.0;
    for (int64_t i = 0; i < t.numel(); ++i) acc += static_cast<double>(p[i]);
    return acc / static_cast<double>(t.numel());
  }

  void abort_if_bad(double v, const char* what) const {
    if (!std::isfinite(v)) {
      throw TrainAbort("non-finite " + std::string(what) + " at iteration " + std::to_string(iteration_ + 1));
    }
  }

  void write_abort_dump(const std::filesystem::path& out_dir, const std::string& reason) const {
    std::ofstream dump(out_dir / "abort_dump.txt", std::ios::trunc);
    dump << "reason: " << reason << "\n";
    dump << "iteration: " << iteration_ << "\n";
    dump << "config:\n" << cfg_.canonical_text();
  }

  static void write_row(std::ofstream& csv, const StepMetrics& m, bool has_fid, double fid, double wall_ms) {
    char buf[512];
    auto num = [](double v) {
      char b[64];
      std::snprintf(b, sizeof(b), "%.17g", v);
      return std::string(b);
    };
    std::snprintf(buf, sizeof(buf), "%lld,%s,%s,%s,%s,%s,%s,%.3f\n", static_cast<long long>(m.iteration),
                  num(m.loss_d).c_str(), num(m.loss_g).c_str(), num(m.lfm_value).c_str(),
                  num(m.d_real_mean).c_str(), num(m.d_fake_mean).c_str(), has_fid ? num(fid).c_str() : "",
                  wall_ms);
    csv << buf;
  }

  LatentBatch draw_latents() {
    if (cfg_.lfm_mode == LfmMode::Off) return sample_gaussian(cfg_.batch_size, cfg_.z_dim, rng_);
    return orthogonal_pairs(cfg_.batch_size, cfg_.z_dim, cfg_.pair_variant, rng_);
  }

  RingSpec ring_spec() const { return RingSpec{cfg_.ring_modes, cfg_.ring_radius, cfg_.ring_sigma}; }

  void load_data() {
    if (cfg_.dataset == DatasetKind::Ring) return;
    if (cfg_.dataset == DatasetKind::Folder) {
      dataset_ = load_image_folder(cfg_.data_path, cfg_.image_size, cfg_.subset_n);
    } else {
      dataset_ = load_raw_dataset(cfg_.data_path);
      if (dataset_.image_size != cfg_.image_size) {
        throw std::runtime_error("train: dataset image size " + std::to_string(dataset_.image_size) +
                                 " does not match configured " + std::to_string(cfg_.image_size));
      }
      if (cfg_.subset_n > 0 && dataset_.size() > cfg_.subset_n) {
        Tensor<float> trimmed(Shape{cfg_.subset_n, 3, cfg_.image_size, cfg_.image_size});
        std::copy(dataset_.images.data(), dataset_.images.data() + trimmed.numel(), trimmed.data());
        dataset_.images = trimmed;
      }
    }
  }

  void init_eval() {
    if (cfg_.dataset == DatasetKind::Ring) {
      extractor_ = FeatureExtractor::identity();
      Rng ref_rng(derive_seed(cfg_.seed, 0x3ef));
      Tensor<float> ref = ring_sample_tensor<float>(ring_spec(), ref_rng, cfg_.ring_n);
      ref_stats_ = feature_stats(ref, extractor_);
    } else {
      // Fixed extractor seed: feature space stays comparable across run seeds.
      extractor_ = cfg_.eval_extractor == EvalExtractorKind::Identity ? FeatureExtractor::identity()
                                                                      : FeatureExtractor::random_cnn(7);
      ref_stats_ = feature_stats(dataset_.images, extractor_);
    }
  }

  // Ring batches consume the main rng; image batches index a per-epoch
  // shuffle derived from (seed, epoch), so resume needs no replay of past
  // epochs.
  Tensor<T> next_real_batch() {
    if (cfg_.dataset == DatasetKind::Ring) {
      return ring_sample_tensor<T>(ring_spec(), rng_, cfg_.batch_size);
    }
    const int64_t n = dataset_.size();
    const int64_t b = cfg_.batch_size;
    const int64_t per = 3 * cfg_.image_size * cfg_.image_size;
    Tensor<T> out(Shape{b, 3, cfg_.image_size, cfg_.image_size});
    for (int64_t j = 0; j < b; ++j) {
      const int64_t global = iteration_ * b + j;
      const int64_t epoch = global / n;
      if (epoch != perm_epoch_) build_perm(epoch, n);
      const int64_t idx = perm_[static_cast<size_t>(global % n)];
      const float* src = dataset_.images.data() + idx * per;
      T* dst = out.data() + j * per;
      for (int64_t i = 0; i < per; ++i) dst[i] = static_cast<T>(src[i]);
    }
    return out;
  }

  void build_perm(int64_t epoch, int64_t n) {
    perm_.resize(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) perm_[static_cast<size_t>(i)] = i;
    Rng prng(derive_seed(cfg_.seed, 0x5e000000ULL + static_cast<uint64_t>(epoch)));
    for (int64_t i = n - 1; i >= 1; --i) {
      const int64_t j = prng.uniform_int(i + 1);
      std::swap(perm_[static_cast<size_t>(i)], perm_[static_cast<size_t>(j)]);
    }
    perm_epoch_ = epoch;
  }

  void append_adam(container::File& file, const std::string& prefix, const Adam<T>& opt,
                   const std::vector<NamedTensor<T>>& params) const {
    file.records.push_back(container::from_i64(prefix + ".t", opt.step_count()));
    for (size_t i = 0; i < params.size(); ++i) {
      Tensor<T> m(params[i].tensor.shape());
      Tensor<T> v(params[i].tensor.shape());
      std::copy(opt.moment1(i).begin(), opt.moment1(i).end(), m.data());
      std::copy(opt.moment2(i).begin(), opt.moment2(i).end(), v.data());
      file.records.push_back(container::from_tensor(prefix + ".m." + params[i].name, m));
      file.records.push_back(container::from_tensor(prefix + ".v." + params[i].name, v));
    }
  }

  void restore_adam(const container::File& file, const std::string& prefix, Adam<T>& opt,
                    const std::vector<NamedTensor<T>>& params) {
    opt.set_step_count(container::to_i64(file.find(prefix + ".t")));
    for (size_t i = 0; i < params.size(); ++i) {
      Tensor<T> m = container::to_tensor<T>(file.find(prefix + ".m." + params[i].name));
      Tensor<T> v = container::to_tensor<T>(file.find(prefix + ".v." + params[i].name));
      if (m.shape() != params[i].tensor.shape() || v.shape() != params[i].tensor.shape()) {
        throw std::runtime_error("checkpoint: moment shape mismatch for '" + params[i].name + "'");
      }
      std::copy(m.data(), m.data() + m.numel(), opt.moment1(i).begin());
      std::copy(v.data(), v.data() + v.numel(), opt.moment2(i).begin());
    }
  }

  void restore_tensor(const container::File& file, NamedTensor<T>& nt) {
    Tensor<T> loaded = container::to_tensor<T>(file.find(nt.name));
    if (loaded.shape() != nt.tensor.shape()) {
      throw std::runtime_error("checkpoint: shape mismatch for '" + nt.name + "': file has " +
                               shape_str(loaded.shape()) + ", model has " + shape_str(nt.tensor.shape()));
    }
    std::copy(loaded.data(), loaded.data() + loaded.numel(), nt.tensor.data());
  }

  TrainConfig cfg_;
  Model model_;
  Rng rng_;
  Adam<T> opt_g_;
  Adam<T> opt_d_;
  int64_t iteration_ = 0;

  ImageDataset dataset_;
  std::vector<int64_t> perm_;
  int64_t perm_epoch_ = -1;

  FeatureExtractor extractor_;
  GaussianStats ref_stats_;
};

// Precision/model dispatch used by the CLI; implemented in train.cpp.
RunResult run_training(const TrainConfig& cfg, const std::filesystem::path& out_dir, const EvalCallback& cb = {});
RunResult resume_training(const std::filesystem::path& checkpoint, const std::filesystem::path& out_dir,
                          std::optional<int64_t> iterations_override = std::nullopt, const EvalCallback& cb = {});

TrainConfig read_checkpoint_config(const std::filesystem::path& checkpoint);

struct SampleResult {
  Tensor<float> samples;  // (N,3,S,S) images or (N,2) points
  bool is_image = false;
};
SampleResult sample_checkpoint(const std::filesystem::path& checkpoint, int64_t n, uint64_t seed);

// Feature extractor that runs the checkpointed discriminator's feature head
// (running batchnorm statistics, so features are per-sample deterministic).
FeatureExtractor make_df_extractor(const std::filesystem::path& checkpoint);

}  // namespace lfmgan
