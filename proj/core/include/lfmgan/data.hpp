#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lfmgan/rng.hpp"
#include "lfmgan/tensor.hpp"

namespace lfmgan {

// Binary PPM (P6, maxval 255) decoded to (3, H, W) floats in [-1, 1] via
// v / 127.5 - 1.
Tensor<float> read_ppm(const std::filesystem::path& path);

// Inverse mapping with rounding and clamping to [0, 255].
void write_ppm(const std::filesystem::path& path, const Tensor<float>& image);

// Center crop to the largest square, then bilinear resize to target x target
// with center-aligned sampling and edge clamping.
Tensor<float> center_crop_resize(const Tensor<float>& image, int64_t target);

struct ImageDataset {
  int64_t image_size = 0;
  std::vector<std::string> files;  // empty for raw tensor datasets
  Tensor<float> images;            // (N, 3, S, S)

  int64_t size() const { return images.defined() ? images.dim(0) : 0; }
};

// Loads every .ppm under dir (sorted by filename), cropped and resized.
// subset_n > 0 keeps only the first subset_n files of the sorted order.
ImageDataset load_image_folder(const std::filesystem::path& dir, int64_t image_size, int64_t subset_n = 0);

// Preprocessed dataset container with a single (N, 3, S, S) f32 record.
ImageDataset load_raw_dataset(const std::filesystem::path& path);
void save_raw_dataset(const std::filesystem::path& path, const ImageDataset& dataset);

// Mixture of K equal-weight Gaussians on a circle. Centers sit at
// (radius cos(2 pi k / K), radius sin(2 pi k / K)).
struct RingSpec {
  int64_t modes = 8;
  double radius = 2.0;
  double sigma = 0.05;
};

std::vector<std::array<double, 2>> ring_centers(const RingSpec& spec);

// count points, each drawn as (mode index, two normals); 2*count doubles out.
void ring_sample(const RingSpec& spec, Rng& rng, int64_t count, double* out_xy);

template <typename T>
Tensor<T> ring_sample_tensor(const RingSpec& spec, Rng& rng, int64_t count) {
  std::vector<double> xy(static_cast<size_t>(2 * count));
  ring_sample(spec, rng, count, xy.data());
  Tensor<T> t(Shape{count, 2});
  T* p = t.data();
  for (size_t i = 0; i < xy.size(); ++i) p[i] = static_cast<T>(xy[i]);
  return t;
}

}  // namespace lfmgan
