#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "lfmgan/latent.hpp"
#include "lfmgan/lfm.hpp"

namespace lfmgan {

// Raised on malformed config text, unknown keys, or invalid values. The CLI
// maps it to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class DatasetKind { Ring, Folder, Raw };
enum class Precision { F32, F64 };
enum class LfmDScope { Full, FOnly };
enum class BnEvalMode { Batch, Running };
enum class EvalExtractorKind { Auto, Identity, RandomCnn };

struct TrainConfig {
  DatasetKind dataset = DatasetKind::Ring;
  std::string data_path;

  int64_t image_size = 64;
  int64_t z_dim = 100;
  int64_t batch_size = 128;
  int64_t iterations = 1000;

  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  double lambda_d = 1.0;
  double lambda_g = 1.0;
  double c_max = 100.0;
  int64_t feature_dim = 100;
  LfmMode lfm_mode = LfmMode::Full;
  PairVariant pair_variant = PairVariant::Abs;
  LfmDScope lfm_d_scope = LfmDScope::Full;
  bool saturating = false;

  BnEvalMode bn_eval = BnEvalMode::Batch;
  int64_t mlp_hidden = 64;
  int64_t base_channels = 64;

  int64_t ring_modes = 8;
  double ring_radius = 2.0;
  double ring_sigma = 0.05;
  int64_t ring_n = 8192;  // reference-statistics sample count
  int64_t subset_n = 0;   // 0 = whole folder

  int64_t eval_every = 100;  // 0 = never
  int64_t eval_n = 128;
  EvalExtractorKind eval_extractor = EvalExtractorKind::Auto;
  int64_t checkpoint_every = 0;  // 0 = final only

  uint64_t seed = 1;
  Precision precision = Precision::F32;

  // True for ring data: the 2-D MLP pair instead of the image networks.
  bool uses_mlp() const { return dataset == DatasetKind::Ring; }

  LfmConfig lfm() const {
    LfmConfig c;
    c.mode = lfm_mode;
    c.lambda_d = lambda_d;
    c.lambda_g = lambda_g;
    c.c_max = c_max;
    c.feature_dim = feature_dim;
    return c;
  }

  // Canonical `key = value` text, fixed key order, %.17g floats. Checkpoints
  // store exactly this text, which makes save-load-save byte-identical.
  std::string canonical_text() const;

  void set(const std::string& key, const std::string& value);  // ConfigError on unknown key/bad value
  void validate() const;                                       // ConfigError on inconsistent fields
};

// Line-oriented `key = value` with '#' comments and blank lines.
TrainConfig parse_config_text(const std::string& text, TrainConfig base = {});
TrainConfig parse_config_file(const std::filesystem::path& path, TrainConfig base = {});

std::string to_string(DatasetKind v);
std::string to_string(Precision v);
std::string to_string(LfmMode v);
std::string to_string(PairVariant v);
std::string to_string(LfmDScope v);
std::string to_string(BnEvalMode v);
std::string to_string(EvalExtractorKind v);

}  // namespace lfmgan
