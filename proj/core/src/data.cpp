#include "lfmgan/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "lfmgan/checkpoint.hpp"

namespace lfmgan {

namespace {

// Skips whitespace and '#' comment lines between PPM header tokens.
std::string next_token(std::istream& is) {
  std::string tok;
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty()) throw std::runtime_error("read_ppm: unexpected end of header");
  return tok;
}

int64_t parse_dim(const std::string& tok, const char* what) {
  size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(tok, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != tok.size() || v <= 0) {
    throw std::runtime_error(std::string("read_ppm: bad ") + what + " '" + tok + "'");
  }
  return static_cast<int64_t>(v);
}

}  // namespace

Tensor<float> read_ppm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_ppm: cannot open '" + path.string() + "'");
  if (next_token(is) != "P6") throw std::runtime_error("read_ppm: '" + path.string() + "' is not binary PPM (P6)");
  const int64_t w = parse_dim(next_token(is), "width");
  const int64_t h = parse_dim(next_token(is), "height");
  const int64_t maxval = parse_dim(next_token(is), "maxval");
  if (maxval != 255) throw std::runtime_error("read_ppm: only maxval 255 is supported");
  // header ends with exactly one whitespace byte, already consumed by next_token
  std::vector<uint8_t> raw(static_cast<size_t>(w * h * 3));
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (is.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw std::runtime_error("read_ppm: truncated pixel data in '" + path.string() + "'");
  }
  Tensor<float> img(Shape{3, h, w});
  float* p = img.data();
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      for (int64_t c = 0; c < 3; ++c) {
        p[c * h * w + y * w + x] = static_cast<float>(raw[(y * w + x) * 3 + c]) / 127.5f - 1.0f;
      }
    }
  }
  return img;
}

void write_ppm(const std::filesystem::path& path, const Tensor<float>& image) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw std::invalid_argument("write_ppm: expected (3,H,W), got " + shape_str(image.shape()));
  }
  const int64_t h = image.dim(1), w = image.dim(2);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("write_ppm: cannot open '" + path.string() + "'");
  os << "P6\n" << w << " " << h << "\n255\n";
  std::vector<uint8_t> raw(static_cast<size_t>(w * h * 3));
  const float* p = image.data();
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      for (int64_t c = 0; c < 3; ++c) {
        const float v = (p[c * h * w + y * w + x] + 1.0f) * 127.5f;
        const float r = std::round(v);
        raw[(y * w + x) * 3 + c] = static_cast<uint8_t>(r < 0.0f ? 0.0f : (r > 255.0f ? 255.0f : r));
      }
    }
  }
  os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!os) throw std::runtime_error("write_ppm: write failed on '" + path.string() + "'");
}

Tensor<float> center_crop_resize(const Tensor<float>& image, int64_t target) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw std::invalid_argument("center_crop_resize: expected (3,H,W), got " + shape_str(image.shape()));
  }
  if (target < 1) throw std::invalid_argument("center_crop_resize: target must be positive");
  const int64_t h = image.dim(1), w = image.dim(2);
  const int64_t side = std::min(h, w);
  const int64_t off_y = (h - side) / 2;
  const int64_t off_x = (w - side) / 2;
  Tensor<float> out(Shape{3, target, target});
  const float* src = image.data();
  float* dst = out.data();
  const double scale = static_cast<double>(side) / static_cast<double>(target);
  for (int64_t c = 0; c < 3; ++c) {
    const float* plane = src + c * h * w;
    for (int64_t y = 0; y < target; ++y) {
      // center-aligned source coordinate within the crop
      const double sy = (static_cast<double>(y) + 0.5) * scale - 0.5;
      const double syc = sy < 0.0 ? 0.0 : (sy > static_cast<double>(side - 1) ? static_cast<double>(side - 1) : sy);
      const int64_t y0 = static_cast<int64_t>(syc);
      const int64_t y1 = std::min(y0 + 1, side - 1);
      const double fy = syc - static_cast<double>(y0);
      for (int64_t x = 0; x < target; ++x) {
        const double sx = (static_cast<double>(x) + 0.5) * scale - 0.5;
        const double sxc =
            sx < 0.0 ? 0.0 : (sx > static_cast<double>(side - 1) ? static_cast<double>(side - 1) : sx);
        const int64_t x0 = static_cast<int64_t>(sxc);
        const int64_t x1 = std::min(x0 + 1, side - 1);
        const double fx = sxc - static_cast<double>(x0);
        auto at = [&](int64_t yy, int64_t xx) {
          return static_cast<double>(plane[(off_y + yy) * w + (off_x + xx)]);
        };
        const double top = at(y0, x0) * (1.0 - fx) + at(y0, x1) * fx;
        const double bot = at(y1, x0) * (1.0 - fx) + at(y1, x1) * fx;
        dst[c * target * target + y * target + x] = static_cast<float>(top * (1.0 - fy) + bot * fy);
      }
    }
  }
  return out;
}

ImageDataset load_image_folder(const std::filesystem::path& dir, int64_t image_size, int64_t subset_n) {
  if (!std::filesystem::is_directory(dir)) {
    throw std::runtime_error("load_image_folder: '" + dir.string() + "' is not a directory");
  }
  std::vector<std::string> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
      files.push_back(entry.path().filename().string());
    }
  }
  std::sort(files.begin(), files.end());
  if (subset_n > 0 && static_cast<int64_t>(files.size()) > subset_n) {
    files.resize(static_cast<size_t>(subset_n));
  }
  if (files.empty()) throw std::runtime_error("load_image_folder: no .ppm files in '" + dir.string() + "'");
  ImageDataset ds;
  ds.image_size = image_size;
  ds.files = files;
  const int64_t n = static_cast<int64_t>(files.size());
  ds.images = Tensor<float>(Shape{n, 3, image_size, image_size});
  const int64_t per = 3 * image_size * image_size;
  for (int64_t i = 0; i < n; ++i) {
    Tensor<float> img = center_crop_resize(read_ppm(dir / files[static_cast<size_t>(i)]), image_size);
    std::memcpy(ds.images.data() + i * per, img.data(), static_cast<size_t>(per) * sizeof(float));
  }
  return ds;
}

ImageDataset load_raw_dataset(const std::filesystem::path& path) {
  container::File file = container::read(path);
  if (file.config_text != "kind = raw_dataset\n") {
    throw std::runtime_error("load_raw_dataset: '" + path.string() + "' is not a raw dataset file");
  }
  const container::Record& rec = file.find("images");
  if (rec.dtype != container::kF32 || rec.extents.size() != 4 || rec.extents[1] != 3 ||
      rec.extents[2] != rec.extents[3]) {
    throw std::runtime_error("load_raw_dataset: images record must be f32 (N,3,S,S)");
  }
  ImageDataset ds;
  ds.image_size = rec.extents[2];
  ds.images = container::to_tensor<float>(rec);
  return ds;
}

void save_raw_dataset(const std::filesystem::path& path, const ImageDataset& dataset) {
  if (!dataset.images.defined() || dataset.images.rank() != 4) {
    throw std::invalid_argument("save_raw_dataset: dataset has no (N,3,S,S) images");
  }
  container::File file;
  file.config_text = "kind = raw_dataset\n";
  file.records.push_back(container::from_tensor("images", dataset.images));
  container::write(path, file);
}

std::vector<std::array<double, 2>> ring_centers(const RingSpec& spec) {
  if (spec.modes < 1) throw std::invalid_argument("ring_centers: modes must be positive");
  std::vector<std::array<double, 2>> centers;
  centers.reserve(static_cast<size_t>(spec.modes));
  for (int64_t k = 0; k < spec.modes; ++k) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(spec.modes);
    centers.push_back({spec.radius * std::cos(angle), spec.radius * std::sin(angle)});
  }
  return centers;
}

void ring_sample(const RingSpec& spec, Rng& rng, int64_t count, double* out_xy) {
  const auto centers = ring_centers(spec);
  if (spec.sigma <= 0.0) throw std::invalid_argument("ring_sample: sigma must be positive");
  for (int64_t i = 0; i < count; ++i) {
    const int64_t k = rng.uniform_int(spec.modes);
    out_xy[2 * i] = centers[static_cast<size_t>(k)][0] + spec.sigma * rng.normal();
    out_xy[2 * i + 1] = centers[static_cast<size_t>(k)][1] + spec.sigma * rng.normal();
  }
}

}  // namespace lfmgan
