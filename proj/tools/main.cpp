#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lfmgan/checkpoint.hpp"
#include "lfmgan/config.hpp"
#include "lfmgan/data.hpp"
#include "lfmgan/eval.hpp"
#include "lfmgan/latent.hpp"
#include "lfmgan/rng.hpp"
#include "lfmgan/train.hpp"
#include "manifest.hpp"
#include "svg.hpp"

namespace fs = std::filesystem;
using namespace lfmgan;

namespace {

std::chrono::system_clock::time_point now() { return std::chrono::system_clock::now(); }

uint64_t parse_u64(const std::string& s, const std::string& what) {
  try {
    size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(what + " must be an unsigned integer, got '" + s + "'");
  }
}

// LFM_SEED fills in when no --seed flag was given. Flags still win.
uint64_t env_seed_or(uint64_t fallback) {
  const char* env = std::getenv("LFM_SEED");
  if (!env || !*env) return fallback;
  return parse_u64(env, "LFM_SEED");
}

PairVariant parse_variant(const std::string& s) {
  if (s == "abs") return PairVariant::Abs;
  if (s == "no_abs") return PairVariant::NoAbs;
  throw ConfigError("variant must be abs or no_abs, got '" + s + "'");
}

// Container files all share one on-disk format; the config text tells the
// kinds apart.
std::string container_kind(const fs::path& path) {
  const container::File file = container::read(path);
  if (file.config_text.find("kind = raw_dataset") != std::string::npos) return "raw_dataset";
  if (file.config_text.find("kind = stats") != std::string::npos) return "stats";
  return "checkpoint";
}

FeatureExtractor extractor_from_spec(const std::string& spec, bool images) {
  if (spec == "auto") return images ? FeatureExtractor::random_cnn(7) : FeatureExtractor::identity();
  if (spec == "identity") return FeatureExtractor::identity();
  if (spec == "random_cnn") return FeatureExtractor::random_cnn(7);
  if (spec.rfind("random_cnn:", 0) == 0) {
    return FeatureExtractor::random_cnn(parse_u64(spec.substr(11), "random_cnn seed"));
  }
  if (spec.rfind("df:", 0) == 0) return make_df_extractor(spec.substr(3));
  throw ConfigError("unknown extractor '" + spec + "' (identity, random_cnn[:seed], df:<checkpoint>)");
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// ---------------------------------------------------------------------------
// train

const std::vector<std::string> kConfigKeys = {
    "dataset",      "data_path",    "image_size",   "z_dim",         "batch_size",
    "iterations",   "lr",           "beta1",        "beta2",         "adam_eps",
    "lambda_d",     "lambda_g",     "c_max",        "feature_dim",   "lfm_mode",
    "pair_variant", "lfm_d_scope",  "saturating",   "bn_eval",       "mlp_hidden",
    "base_channels", "ring_modes",  "ring_radius",  "ring_sigma",    "ring_n",
    "subset_n",     "eval_every",   "eval_n",       "eval_extractor", "checkpoint_every",
    "seed",         "precision"};

std::string kebab(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

struct TrainArgs {
  std::string config_path;
  std::string out_dir = "run";
  std::string resume;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
};

int cmd_train(const TrainArgs& a) {
  const auto started = now();
  TrainConfig cfg;
  RunResult result;
  if (!a.resume.empty()) {
    for (const auto& [key, opt] : a.options) {
      if (opt->count() > 0 && key != "iterations") {
        throw ConfigError("--resume takes its settings from the checkpoint; only --iterations may override (got --" +
                          kebab(key) + ")");
      }
    }
    if (!a.config_path.empty()) throw ConfigError("--resume and --config are mutually exclusive");
    std::optional<int64_t> iters;
    if (a.options.at("iterations")->count() > 0) {
      iters = static_cast<int64_t>(parse_u64(a.values.at("iterations"), "--iterations"));
    }
    cfg = read_checkpoint_config(a.resume);
    if (iters) cfg.iterations = *iters;
    result = resume_training(a.resume, a.out_dir, iters);
  } else {
    TrainConfig base;
    base.seed = env_seed_or(base.seed);
    cfg = a.config_path.empty() ? base : parse_config_file(a.config_path, base);
    for (const std::string& key : kConfigKeys) {
      if (a.options.at(key)->count() > 0) cfg.set(key, a.values.at(key));
    }
    cfg.validate();
    result = run_training(cfg, a.out_dir);
  }

  cli::RunManifest m;
  m.command = "train";
  m.seed = cfg.seed;
  m.config_text = cfg.canonical_text();
  m.started = started;
  m.finished = now();
  m.files.push_back(result.metrics_csv);
  for (const fs::path& p : result.checkpoints) m.files.push_back(p);
  const fs::path manifest_path = fs::path(a.out_dir) / "manifest.txt";
  cli::write_manifest(manifest_path, m);

  std::printf("train: finished iteration %lld loss_d=%.6g loss_g=%.6g\n",
              static_cast<long long>(result.last.iteration), result.last.loss_d, result.last.loss_g);
  if (std::isfinite(result.last_fid)) std::printf("fid = %.17g\n", result.last_fid);
  std::printf("manifest = %s\n", manifest_path.string().c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// pairs

struct PairsArgs {
  int64_t z_dim = 100;
  int64_t count = 64;
  std::string variant = "abs";
  uint64_t seed = 1;
  std::string out = "pairs.csv";
  int64_t probe_trials = 100000;
};

int cmd_pairs(const PairsArgs& a) {
  const auto started = now();
  if (a.count < 1) throw ConfigError("--count must be >= 1");
  if (a.z_dim < 2) throw ConfigError("--z-dim must be >= 2");
  const PairVariant variant = parse_variant(a.variant);

  Rng rng(a.seed);
  const LatentBatch batch = orthogonal_pairs(2 * a.count, a.z_dim, variant, rng);

  std::ofstream csv(a.out, std::ios::trunc);
  if (!csv) throw std::runtime_error("pairs: cannot open '" + a.out + "'");
  csv << "index";
  for (int64_t d = 0; d < a.z_dim; ++d) csv << ",z" << d;
  csv << "\n";
  char buf[64];
  for (int64_t r = 0; r < batch.batch; ++r) {
    csv << r;
    const double* row = batch.row(r);
    for (int64_t d = 0; d < a.z_dim; ++d) {
      std::snprintf(buf, sizeof(buf), ",%.17g", row[d]);
      csv << buf;
    }
    csv << "\n";
  }
  csv.close();
  if (!csv) throw std::runtime_error("pairs: write failed on '" + a.out + "'");

  std::printf("pairs: wrote %lld vectors (%lld pairs, z_dim=%lld) to %s\n",
              static_cast<long long>(batch.batch), static_cast<long long>(a.count),
              static_cast<long long>(a.z_dim), a.out.c_str());
  if (a.probe_trials > 0) {
    const RejectionEstimate est = rejection_rate(variant, a.z_dim, a.probe_trials, rng);
    std::printf("rejection variant=%s z_dim=%lld trials=%lld rate=%.17g ci95_half=%.17g\n",
                a.variant.c_str(), static_cast<long long>(a.z_dim),
                static_cast<long long>(est.trials), est.rate, est.ci95_half);
  }

  cli::RunManifest m;
  m.command = "pairs";
  m.seed = a.seed;
  m.started = started;
  m.finished = now();
  m.files.push_back(a.out);
  cli::write_manifest(a.out + ".manifest", m);
  return 0;
}

// ---------------------------------------------------------------------------
// fid

struct FidArgs {
  std::string input;
  std::string ref;
  std::string extractor = "auto";
  int64_t n = 128;
  uint64_t seed = 1;
  std::string csv = "fid.csv";
};

int cmd_fid(const FidArgs& a) {
  Tensor<float> samples;
  bool images = false;
  const std::string in_kind = container_kind(a.input);
  if (in_kind == "raw_dataset") {
    samples = load_raw_dataset(a.input).images;
    images = true;
  } else if (in_kind == "stats") {
    throw ConfigError("fid input must be a sample set or checkpoint, got a statistics file: " + a.input);
  } else {
    const SampleResult s = sample_checkpoint(a.input, a.n, a.seed);
    samples = s.samples;
    images = s.is_image;
  }

  FeatureExtractor ex = FeatureExtractor::identity();
  GaussianStats ref;
  if (fs::is_directory(a.ref)) {
    if (!images) throw ConfigError("fid: folder reference needs image samples on the input side");
    ex = extractor_from_spec(a.extractor, images);
    ref = feature_stats(load_image_folder(a.ref, samples.dim(2)).images, ex);
  } else {
    const std::string ref_kind = container_kind(a.ref);
    if (ref_kind == "stats") {
      const LoadedStats loaded = load_stats(a.ref);
      ex = a.extractor == "auto" ? extractor_from_spec(loaded.extractor_tag, images)
                                 : extractor_from_spec(a.extractor, images);
      if (ex.tag() != loaded.extractor_tag) {
        throw ConfigError("fid: extractor '" + ex.tag() + "' does not match the statistics file tag '" +
                          loaded.extractor_tag + "'");
      }
      ref = loaded.stats;
    } else if (ref_kind == "raw_dataset") {
      ex = extractor_from_spec(a.extractor, images);
      ref = feature_stats(load_raw_dataset(a.ref).images, ex);
    } else {
      throw ConfigError("fid reference must be a dataset, folder or statistics file: " + a.ref);
    }
  }

  const double fid = frechet_distance(feature_stats(samples, ex), ref);
  std::printf("fid = %.17g\n", fid);

  const bool fresh = !fs::exists(a.csv) || fs::file_size(a.csv) == 0;
  std::ofstream out(a.csv, std::ios::app);
  if (!out) throw std::runtime_error("fid: cannot open '" + a.csv + "'");
  if (fresh) out << "input,ref,extractor,n,fid\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", fid);
  out << a.input << "," << a.ref << "," << ex.tag() << "," << a.n << "," << buf << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// sample

struct SampleArgs {
  std::string checkpoint;
  int64_t n = 16;
  uint64_t seed = 1;
  std::string out = "samples";
};

int cmd_sample(const SampleArgs& a) {
  const auto started = now();
  const SampleResult r = sample_checkpoint(a.checkpoint, a.n, a.seed);
  fs::create_directories(a.out);

  std::vector<fs::path> files;
  if (r.is_image) {
    const int64_t s = r.samples.dim(2);
    const int64_t per = 3 * s * s;
    for (int64_t i = 0; i < r.samples.dim(0); ++i) {
      Tensor<float> img(Shape{3, s, s});
      std::copy(r.samples.data() + i * per, r.samples.data() + (i + 1) * per, img.data());
      char name[32];
      std::snprintf(name, sizeof(name), "sample_%04lld.ppm", static_cast<long long>(i));
      const fs::path p = fs::path(a.out) / name;
      write_ppm(p, img);
      files.push_back(p);
    }
    std::printf("sample: wrote %lld images to %s\n", static_cast<long long>(r.samples.dim(0)),
                a.out.c_str());
  } else {
    const fs::path p = fs::path(a.out) / "points.csv";
    std::ofstream csv(p, std::ios::trunc);
    if (!csv) throw std::runtime_error("sample: cannot open '" + p.string() + "'");
    csv << "x,y\n";
    char buf[80];
    for (int64_t i = 0; i < r.samples.dim(0); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", static_cast<double>(r.samples.at(i * 2)),
                    static_cast<double>(r.samples.at(i * 2 + 1)));
      csv << buf;
    }
    csv.close();
    if (!csv) throw std::runtime_error("sample: write failed on '" + p.string() + "'");
    files.push_back(p);
    std::printf("sample: wrote %lld points to %s\n", static_cast<long long>(r.samples.dim(0)),
                p.string().c_str());
  }

  cli::RunManifest m;
  m.command = "sample";
  m.seed = a.seed;
  m.started = started;
  m.finished = now();
  m.files = files;
  cli::write_manifest(fs::path(a.out) / "manifest.txt", m);
  return 0;
}

// ---------------------------------------------------------------------------
// stats

struct StatsArgs {
  std::string data;
  std::string out = "stats.lfmg";
  std::string extractor = "auto";
  int64_t image_size = 64;
  int64_t subset_n = 0;
  int64_t n = 8192;
  uint64_t seed = 1;
  int64_t ring_modes = 8;
  double ring_radius = 2.0;
  double ring_sigma = 0.05;
};

int cmd_stats(const StatsArgs& a) {
  const auto started = now();
  Tensor<float> samples;
  bool images = false;
  if (a.data == "ring") {
    Rng rng(a.seed);
    samples = ring_sample_tensor<float>(RingSpec{a.ring_modes, a.ring_radius, a.ring_sigma}, rng, a.n);
  } else if (fs::is_directory(a.data)) {
    samples = load_image_folder(a.data, a.image_size, a.subset_n).images;
    images = true;
  } else {
    const std::string kind = container_kind(a.data);
    if (kind != "raw_dataset") throw ConfigError("stats: data must be 'ring', a folder or a raw dataset: " + a.data);
    samples = load_raw_dataset(a.data).images;
    images = true;
  }

  const FeatureExtractor ex = extractor_from_spec(a.extractor, images);
  const GaussianStats stats = feature_stats(samples, ex);
  save_stats(a.out, stats, ex.tag());
  std::printf("stats: %lld samples, feature dim %lld, extractor %s -> %s\n",
              static_cast<long long>(samples.dim(0)), static_cast<long long>(stats.mean.size()),
              ex.tag().c_str(), a.out.c_str());

  cli::RunManifest m;
  m.command = "stats";
  m.seed = a.seed;
  m.started = started;
  m.finished = now();
  m.files.push_back(a.out);
  cli::write_manifest(a.out + ".manifest", m);
  return 0;
}

// ---------------------------------------------------------------------------
// bench2d

struct BenchArgs {
  std::vector<uint64_t> seeds{1, 2, 3};
  std::vector<std::string> arms{"off", "full"};
  int64_t steps = 5000;
  std::string out = "bench2d";
  int64_t eval_every = 250;
  int64_t eval_n = 512;
  int64_t batch_size = 64;
  int64_t z_dim = 16;
  int64_t hidden = 64;
  int64_t feature_dim = 16;
  double lr = 1e-3;
  double lambda_d = 1.0;
  double lambda_g = 1.0;
};

struct CurveRow {
  std::string arm;
  uint64_t seed;
  int64_t iteration;
  double fid;
  int64_t coverage;
  double hq_fraction;
};

LfmMode parse_arm(const std::string& s) {
  if (s == "off") return LfmMode::Off;
  if (s == "full") return LfmMode::Full;
  if (s == "g_only") return LfmMode::GOnly;
  throw ConfigError("arm must be off, full or g_only, got '" + s + "'");
}

std::string arm_color(const std::string& arm) {
  if (arm == "off") return "#1f77b4";
  if (arm == "full") return "#d62728";
  if (arm == "g_only") return "#2ca02c";
  return "#9467bd";
}

int cmd_bench2d(const BenchArgs& a) {
  const auto started = now();
  if (a.seeds.empty()) throw ConfigError("--seeds must list at least one seed");
  for (const std::string& arm : a.arms) parse_arm(arm);
  if (a.steps < 1) throw ConfigError("--steps must be >= 1");

  const RingSpec ring{8, 2.0, 0.05};
  ModeSpec mode_spec;
  mode_spec.centers = ring_centers(ring);
  mode_spec.sigma = ring.sigma;
  // A mode counts as covered with at least a tenth of its uniform share.
  mode_spec.count_threshold = std::max<int64_t>(1, a.eval_n / (10 * ring.modes));

  fs::create_directories(a.out);
  std::vector<CurveRow> curve;
  struct Summary {
    std::string arm;
    uint64_t seed;
    double min_fid = std::numeric_limits<double>::infinity();
    double final_fid = std::numeric_limits<double>::quiet_NaN();
    int64_t final_coverage = 0;
    double final_hq = 0.0;
  };
  std::vector<Summary> summaries;
  std::vector<fs::path> files;

  for (const std::string& arm : a.arms) {
    for (const uint64_t seed : a.seeds) {
      TrainConfig cfg;
      cfg.dataset = DatasetKind::Ring;
      cfg.ring_modes = ring.modes;
      cfg.ring_radius = ring.radius;
      cfg.ring_sigma = ring.sigma;
      cfg.z_dim = a.z_dim;
      cfg.batch_size = a.batch_size;
      cfg.mlp_hidden = a.hidden;
      cfg.feature_dim = a.feature_dim;
      cfg.c_max = static_cast<double>(a.feature_dim);
      cfg.lfm_mode = parse_arm(arm);
      cfg.lambda_d = arm == "full" ? a.lambda_d : 0.0;
      cfg.lambda_g = arm == "off" ? 0.0 : a.lambda_g;
      cfg.lr = a.lr;
      cfg.beta1 = 0.5;
      cfg.iterations = a.steps;
      cfg.eval_every = a.eval_every;
      cfg.eval_n = a.eval_n;
      cfg.checkpoint_every = 0;
      cfg.seed = seed;
      cfg.precision = Precision::F32;

      Summary s;
      s.arm = arm;
      s.seed = seed;
      const auto run_t0 = std::chrono::steady_clock::now();
      const fs::path dir = fs::path(a.out) / ("run_" + arm + "_s" + std::to_string(seed));
      const RunResult r = run_training(cfg, dir, [&](int64_t iter, double fid, const Tensor<float>& samples) {
        std::vector<std::array<double, 2>> pts(static_cast<size_t>(samples.dim(0)));
        for (int64_t i = 0; i < samples.dim(0); ++i) {
          pts[static_cast<size_t>(i)] = std::array<double, 2>{
              static_cast<double>(samples.at(i * 2)), static_cast<double>(samples.at(i * 2 + 1))};
        }
        const Coverage cov = mode_coverage(pts, mode_spec);
        curve.push_back({arm, seed, iter, fid, cov.modes_covered, cov.high_quality_fraction});
        s.min_fid = std::min(s.min_fid, fid);
        s.final_fid = fid;
        s.final_coverage = cov.modes_covered;
        s.final_hq = cov.high_quality_fraction;
      });
      summaries.push_back(s);
      files.push_back(r.metrics_csv);
      for (const fs::path& p : r.checkpoints) files.push_back(p);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - run_t0).count();
      std::printf("bench2d: arm=%s seed=%llu done in %.1fs final_coverage=%lld min_fid=%.6g\n",
                  arm.c_str(), static_cast<unsigned long long>(seed), secs,
                  static_cast<long long>(s.final_coverage), s.min_fid);
      std::fflush(stdout);
    }
  }

  const fs::path curves_path = fs::path(a.out) / "curves.csv";
  {
    std::ofstream csv(curves_path, std::ios::trunc);
    if (!csv) throw std::runtime_error("bench2d: cannot open '" + curves_path.string() + "'");
    csv << "arm,seed,iteration,fid,coverage,high_quality_fraction\n";
    char buf[128];
    for (const CurveRow& r : curve) {
      std::snprintf(buf, sizeof(buf), "%s,%llu,%lld,%.17g,%lld,%.17g\n", r.arm.c_str(),
                    static_cast<unsigned long long>(r.seed), static_cast<long long>(r.iteration), r.fid,
                    static_cast<long long>(r.coverage), r.hq_fraction);
      csv << buf;
    }
  }
  files.push_back(curves_path);

  const fs::path summary_path = fs::path(a.out) / "summary.csv";
  {
    std::ofstream csv(summary_path, std::ios::trunc);
    if (!csv) throw std::runtime_error("bench2d: cannot open '" + summary_path.string() + "'");
    csv << "arm,seed,min_fid,final_fid,final_coverage,final_high_quality_fraction\n";
    char buf[160];
    for (const Summary& s : summaries) {
      std::snprintf(buf, sizeof(buf), "%s,%llu,%.17g,%.17g,%lld,%.17g\n", s.arm.c_str(),
                    static_cast<unsigned long long>(s.seed), s.min_fid, s.final_fid,
                    static_cast<long long>(s.final_coverage), s.final_hq);
      csv << buf;
    }
  }
  files.push_back(summary_path);

  std::vector<cli::Series> fid_series, cov_series;
  for (const std::string& arm : a.arms) {
    for (const uint64_t seed : a.seeds) {
      cli::Series f{arm, arm_color(arm), {}};
      cli::Series c{arm, arm_color(arm), {}};
      for (const CurveRow& r : curve) {
        if (r.arm != arm || r.seed != seed) continue;
        f.points.push_back({static_cast<double>(r.iteration), r.fid});
        c.points.push_back({static_cast<double>(r.iteration), static_cast<double>(r.coverage)});
      }
      fid_series.push_back(std::move(f));
      cov_series.push_back(std::move(c));
    }
  }
  const fs::path fid_svg = fs::path(a.out) / "bench_fid.svg";
  const fs::path cov_svg = fs::path(a.out) / "bench_coverage.svg";
  cli::write_line_chart(fid_svg, "Frechet distance, 8-mode ring", "iteration", "frechet distance",
                        fid_series);
  cli::write_line_chart(cov_svg, "Mode coverage, 8-mode ring", "iteration", "modes covered", cov_series);
  files.push_back(fid_svg);
  files.push_back(cov_svg);

  for (const std::string& arm : a.arms) {
    std::vector<double> final_cov, min_fids;
    for (const Summary& s : summaries) {
      if (s.arm != arm) continue;
      final_cov.push_back(static_cast<double>(s.final_coverage));
      min_fids.push_back(s.min_fid);
    }
    std::printf("arm=%s median_final_coverage=%g min_fid=%.17g\n", arm.c_str(), median(final_cov),
                *std::min_element(min_fids.begin(), min_fids.end()));
  }

  cli::RunManifest m;
  m.command = "bench2d";
  m.seed = a.seeds.front();
  m.started = started;
  m.finished = now();
  m.files = files;
  cli::write_manifest(fs::path(a.out) / "manifest.txt", m);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GAN training toolkit with latent feature maximization"};
  app.require_subcommand(1);
  int rc = 0;

  // train
  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Run or resume a training session");
  train->add_option("--config", train_args.config_path, "key = value config file");
  train->add_option("--out", train_args.out_dir, "output directory (default run)");
  train->add_option("--resume", train_args.resume, "checkpoint to resume from");
  for (const std::string& key : kConfigKeys) {
    train_args.values[key] = {};
    train_args.options[key] =
        train->add_option("--" + kebab(key), train_args.values[key], "override config key " + key);
  }
  train->callback([&]() { rc = cmd_train(train_args); });

  // pairs
  PairsArgs pairs_args;
  CLI::App* pairs = app.add_subcommand("pairs", "Generate orthogonal latent pairs and probe the rejection rate");
  pairs->add_option("--z-dim", pairs_args.z_dim, "latent dimension (default 100)");
  pairs->add_option("--count", pairs_args.count, "number of pairs (default 64)");
  pairs->add_option("--variant", pairs_args.variant, "abs or no_abs (default abs)");
  auto* pairs_seed = pairs->add_option("--seed", pairs_args.seed, "rng seed");
  pairs->add_option("--out", pairs_args.out, "CSV path (default pairs.csv)");
  pairs->add_option("--probe-trials", pairs_args.probe_trials,
                    "Monte-Carlo trials for the rejection estimate, 0 skips (default 100000)");
  pairs->callback([&]() {
    if (pairs_seed->count() == 0) pairs_args.seed = env_seed_or(pairs_args.seed);
    rc = cmd_pairs(pairs_args);
  });

  // fid
  FidArgs fid_args;
  CLI::App* fid = app.add_subcommand("fid", "Frechet distance of samples against reference statistics");
  fid->add_option("--input", fid_args.input, "sample dataset or checkpoint")->required();
  fid->add_option("--ref", fid_args.ref, "reference dataset, folder or statistics file")->required();
  fid->add_option("--extractor", fid_args.extractor, "identity, random_cnn[:seed], df:<checkpoint> (default auto)");
  fid->add_option("--n", fid_args.n, "samples drawn from a checkpoint input (default 128)");
  auto* fid_seed = fid->add_option("--seed", fid_args.seed, "sampling seed for checkpoint inputs");
  fid->add_option("--csv", fid_args.csv, "append the result row here (default fid.csv)");
  fid->callback([&]() {
    if (fid_seed->count() == 0) fid_args.seed = env_seed_or(fid_args.seed);
    rc = cmd_fid(fid_args);
  });

  // sample
  SampleArgs sample_args;
  CLI::App* sample = app.add_subcommand("sample", "Generate samples from a checkpoint");
  sample->add_option("--checkpoint", sample_args.checkpoint, "trained checkpoint")->required();
  sample->add_option("--n", sample_args.n, "sample count (default 16)");
  auto* sample_seed = sample->add_option("--seed", sample_args.seed, "sampling seed");
  sample->add_option("--out", sample_args.out, "output directory (default samples)");
  sample->callback([&]() {
    if (sample_seed->count() == 0) sample_args.seed = env_seed_or(sample_args.seed);
    rc = cmd_sample(sample_args);
  });

  // stats
  StatsArgs stats_args;
  CLI::App* stats = app.add_subcommand("stats", "Compute reference feature statistics for a dataset");
  stats->add_option("--data", stats_args.data, "'ring', an image folder or a raw dataset")->required();
  stats->add_option("--out", stats_args.out, "statistics file (default stats.lfmg)");
  stats->add_option("--extractor", stats_args.extractor, "identity, random_cnn[:seed], df:<checkpoint> (default auto)");
  stats->add_option("--image-size", stats_args.image_size, "folder ingestion size (default 64)");
  stats->add_option("--subset-n", stats_args.subset_n, "keep only the first n folder images (default all)");
  stats->add_option("--n", stats_args.n, "ring sample count (default 8192)");
  auto* stats_seed = stats->add_option("--seed", stats_args.seed, "ring sampling seed");
  stats->add_option("--ring-modes", stats_args.ring_modes, "ring mode count (default 8)");
  stats->add_option("--ring-radius", stats_args.ring_radius, "ring radius (default 2)");
  stats->add_option("--ring-sigma", stats_args.ring_sigma, "ring noise sigma (default 0.05)");
  stats->callback([&]() {
    if (stats_seed->count() == 0) stats_args.seed = env_seed_or(stats_args.seed);
    rc = cmd_stats(stats_args);
  });

  // bench2d
  BenchArgs bench_args;
  CLI::App* bench = app.add_subcommand("bench2d", "Baseline-vs-regularized sweep on the 8-mode ring");
  bench->add_option("--seeds", bench_args.seeds, "comma-separated seeds (default 1,2,3)")->delimiter(',');
  bench->add_option("--arms", bench_args.arms, "subset of off,full,g_only (default off,full)")->delimiter(',');
  bench->add_option("--steps", bench_args.steps, "iterations per run (default 5000)");
  bench->add_option("--out", bench_args.out, "output directory (default bench2d)");
  bench->add_option("--eval-every", bench_args.eval_every, "evaluation cadence (default 250)");
  bench->add_option("--eval-n", bench_args.eval_n, "samples per evaluation (default 512)");
  bench->add_option("--batch-size", bench_args.batch_size, "batch size (default 64)");
  bench->add_option("--z-dim", bench_args.z_dim, "latent dimension (default 16)");
  bench->add_option("--hidden", bench_args.hidden, "MLP hidden width (default 64)");
  bench->add_option("--feature-dim", bench_args.feature_dim, "feature head width (default 16)");
  bench->add_option("--lr", bench_args.lr, "learning rate (default 1e-3)");
  bench->add_option("--lambda-d", bench_args.lambda_d, "discriminator-side weight in the full arm (default 1)");
  bench->add_option("--lambda-g", bench_args.lambda_g, "generator-side weight (default 1)");
  bench->callback([&]() { rc = cmd_bench2d(bench_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const TrainAbort& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return rc;
}
