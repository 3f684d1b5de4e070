#include "lfmgan/config.hpp"

#include <cctype>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace lfmgan {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

int64_t parse_i64(const std::string& key, const std::string& value) {
  size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != value.size() || value.empty()) {
    throw ConfigError("config: key '" + key + "' needs an integer, got '" + value + "'");
  }
  return static_cast<int64_t>(v);
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
  size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != value.size() || value.empty()) {
    throw ConfigError("config: key '" + key + "' needs a non-negative integer, got '" + value + "'");
  }
  return static_cast<uint64_t>(v);
}

double parse_f64(const std::string& key, const std::string& value) {
  size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != value.size() || value.empty()) {
    throw ConfigError("config: key '" + key + "' needs a number, got '" + value + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw ConfigError("config: key '" + key + "' needs true or false, got '" + value + "'");
}

template <typename E>
E parse_enum(const std::string& key, const std::string& value,
             std::initializer_list<std::pair<const char*, E>> options) {
  std::string allowed;
  for (const auto& [name, e] : options) {
    if (value == name) return e;
    if (!allowed.empty()) allowed += "|";
    allowed += name;
  }
  throw ConfigError("config: key '" + key + "' must be one of " + allowed + ", got '" + value + "'");
}

}  // namespace

std::string to_string(DatasetKind v) {
  switch (v) {
    case DatasetKind::Ring: return "ring";
    case DatasetKind::Folder: return "folder";
    case DatasetKind::Raw: return "raw";
  }
  return "?";
}
std::string to_string(Precision v) { return v == Precision::F32 ? "f32" : "f64"; }
std::string to_string(LfmMode v) {
  switch (v) {
    case LfmMode::Full: return "full";
    case LfmMode::GOnly: return "g_only";
    case LfmMode::Off: return "off";
  }
  return "?";
}
std::string to_string(PairVariant v) { return v == PairVariant::Abs ? "abs" : "no_abs"; }
std::string to_string(LfmDScope v) { return v == LfmDScope::Full ? "full" : "f_only"; }
std::string to_string(BnEvalMode v) { return v == BnEvalMode::Batch ? "batch" : "running"; }
std::string to_string(EvalExtractorKind v) {
  switch (v) {
    case EvalExtractorKind::Auto: return "auto";
    case EvalExtractorKind::Identity: return "identity";
    case EvalExtractorKind::RandomCnn: return "random_cnn";
  }
  return "?";
}

std::string TrainConfig::canonical_text() const {
  std::ostringstream os;
  os << "dataset = " << to_string(dataset) << "\n";
  os << "data_path = " << data_path << "\n";
  os << "image_size = " << image_size << "\n";
  os << "z_dim = " << z_dim << "\n";
  os << "batch_size = " << batch_size << "\n";
  os << "iterations = " << iterations << "\n";
  os << "lr = " << fmt_double(lr) << "\n";
  os << "beta1 = " << fmt_double(beta1) << "\n";
  os << "beta2 = " << fmt_double(beta2) << "\n";
  os << "adam_eps = " << fmt_double(adam_eps) << "\n";
  os << "lambda_d = " << fmt_double(lambda_d) << "\n";
  os << "lambda_g = " << fmt_double(lambda_g) << "\n";
  os << "c_max = " << fmt_double(c_max) << "\n";
  os << "feature_dim = " << feature_dim << "\n";
  os << "lfm_mode = " << to_string(lfm_mode) << "\n";
  os << "pair_variant = " << to_string(pair_variant) << "\n";
  os << "lfm_d_scope = " << to_string(lfm_d_scope) << "\n";
  os << "saturating = " << (saturating ? "true" : "false") << "\n";
  os << "bn_eval = " << to_string(bn_eval) << "\n";
  os << "mlp_hidden = " << mlp_hidden << "\n";
  os << "base_channels = " << base_channels << "\n";
  os << "ring_modes = " << ring_modes << "\n";
  os << "ring_radius = " << fmt_double(ring_radius) << "\n";
  os << "ring_sigma = " << fmt_double(ring_sigma) << "\n";
  os << "ring_n = " << ring_n << "\n";
  os << "subset_n = " << subset_n << "\n";
  os << "eval_every = " << eval_every << "\n";
  os << "eval_n = " << eval_n << "\n";
  os << "eval_extractor = " << to_string(eval_extractor) << "\n";
  os << "checkpoint_every = " << checkpoint_every << "\n";
  os << "seed = " << seed << "\n";
  os << "precision = " << to_string(precision) << "\n";
  return os.str();
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  if (key == "dataset") {
    dataset = parse_enum<DatasetKind>(key, value,
                                      {{"ring", DatasetKind::Ring},
                                       {"folder", DatasetKind::Folder},
                                       {"raw", DatasetKind::Raw}});
  } else if (key == "data_path") {
    data_path = value;
  } else if (key == "image_size") {
    image_size = parse_i64(key, value);
  } else if (key == "z_dim") {
    z_dim = parse_i64(key, value);
  } else if (key == "batch_size") {
    batch_size = parse_i64(key, value);
  } else if (key == "iterations") {
    iterations = parse_i64(key, value);
  } else if (key == "lr") {
    lr = parse_f64(key, value);
  } else if (key == "beta1") {
    beta1 = parse_f64(key, value);
  } else if (key == "beta2") {
    beta2 = parse_f64(key, value);
  } else if (key == "adam_eps") {
    adam_eps = parse_f64(key, value);
  } else if (key == "lambda_d") {
    lambda_d = parse_f64(key, value);
  } else if (key == "lambda_g") {
    lambda_g = parse_f64(key, value);
  } else if (key == "c_max") {
    c_max = parse_f64(key, value);
  } else if (key == "feature_dim") {
    feature_dim = parse_i64(key, value);
  } else if (key == "lfm_mode") {
    lfm_mode = parse_enum<LfmMode>(
        key, value, {{"full", LfmMode::Full}, {"g_only", LfmMode::GOnly}, {"off", LfmMode::Off}});
  } else if (key == "pair_variant") {
    pair_variant =
        parse_enum<PairVariant>(key, value, {{"abs", PairVariant::Abs}, {"no_abs", PairVariant::NoAbs}});
  } else if (key == "lfm_d_scope") {
    lfm_d_scope =
        parse_enum<LfmDScope>(key, value, {{"full", LfmDScope::Full}, {"f_only", LfmDScope::FOnly}});
  } else if (key == "saturating") {
    saturating = parse_bool(key, value);
  } else if (key == "bn_eval") {
    bn_eval = parse_enum<BnEvalMode>(key, value, {{"batch", BnEvalMode::Batch}, {"running", BnEvalMode::Running}});
  } else if (key == "mlp_hidden") {
    mlp_hidden = parse_i64(key, value);
  } else if (key == "base_channels") {
    base_channels = parse_i64(key, value);
  } else if (key == "ring_modes") {
    ring_modes = parse_i64(key, value);
  } else if (key == "ring_radius") {
    ring_radius = parse_f64(key, value);
  } else if (key == "ring_sigma") {
    ring_sigma = parse_f64(key, value);
  } else if (key == "ring_n") {
    ring_n = parse_i64(key, value);
  } else if (key == "subset_n") {
    subset_n = parse_i64(key, value);
  } else if (key == "eval_every") {
    eval_every = parse_i64(key, value);
  } else if (key == "eval_n") {
    eval_n = parse_i64(key, value);
  } else if (key == "eval_extractor") {
    eval_extractor = parse_enum<EvalExtractorKind>(key, value,
                                                   {{"auto", EvalExtractorKind::Auto},
                                                    {"identity", EvalExtractorKind::Identity},
                                                    {"random_cnn", EvalExtractorKind::RandomCnn}});
  } else if (key == "checkpoint_every") {
    checkpoint_every = parse_i64(key, value);
  } else if (key == "seed") {
    seed = parse_u64(key, value);
  } else if (key == "precision") {
    precision = parse_enum<Precision>(key, value, {{"f32", Precision::F32}, {"f64", Precision::F64}});
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

void TrainConfig::validate() const {
  if (iterations < 0) throw ConfigError("config: iterations must be >= 0");
  if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (lfm_mode != LfmMode::Off && batch_size % 2 != 0) {
    throw ConfigError("config: batch_size must be even when lfm_mode is not off");
  }
  if (z_dim < 1 || (lfm_mode != LfmMode::Off && z_dim < 2)) {
    throw ConfigError("config: z_dim must be >= 2 when latent pairs are in use");
  }
  if (lr <= 0.0) throw ConfigError("config: lr must be > 0");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw ConfigError("config: betas must lie in [0, 1)");
  }
  if (adam_eps <= 0.0) throw ConfigError("config: adam_eps must be > 0");
  if (lambda_d < 0.0 || lambda_g < 0.0) throw ConfigError("config: lambdas must be >= 0");
  if (feature_dim < 1) throw ConfigError("config: feature_dim must be >= 1");
  if (lfm_mode == LfmMode::Full && c_max < static_cast<double>(feature_dim) / 2.0) {
    throw ConfigError("config: c_max must be >= feature_dim/2 in full mode");
  }
  if (dataset != DatasetKind::Ring) {
    if (data_path.empty()) throw ConfigError("config: data_path required for image datasets");
    if (image_size != 16 && image_size != 32 && image_size != 64) {
      throw ConfigError("config: image_size must be 16, 32 or 64");
    }
    if (base_channels < 1) throw ConfigError("config: base_channels must be >= 1");
  } else {
    if (ring_modes < 1) throw ConfigError("config: ring_modes must be >= 1");
    if (ring_sigma <= 0.0) throw ConfigError("config: ring_sigma must be > 0");
    if (ring_n < 2) throw ConfigError("config: ring_n must be >= 2");
    if (mlp_hidden < 1) throw ConfigError("config: mlp_hidden must be >= 1");
  }
  if (subset_n < 0) throw ConfigError("config: subset_n must be >= 0");
  if (eval_every < 0 || checkpoint_every < 0) {
    throw ConfigError("config: eval_every and checkpoint_every must be >= 0");
  }
  if (eval_n < 2) throw ConfigError("config: eval_n must be >= 2");
}

TrainConfig parse_config_text(const std::string& text, TrainConfig base) {
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(lineno) + " is not 'key = value': '" + stripped + "'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) throw ConfigError("config: empty key on line " + std::to_string(lineno));
    base.set(key, value);
  }
  return base;
}

TrainConfig parse_config_file(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str(), std::move(base));
}

}  // namespace lfmgan
