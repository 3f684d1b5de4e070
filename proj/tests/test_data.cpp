#include <lfmgan/data.hpp>
#include <lfmgan/eval.hpp>
#include <lfmgan/rng.hpp>

#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <vector>

using lfmgan::center_crop_resize;
using lfmgan::ImageDataset;
using lfmgan::read_ppm;
using lfmgan::RingSpec;
using lfmgan::Rng;
using lfmgan::Shape;
using lfmgan::Tensor;
using lfmgan::write_ppm;
namespace fs = std::filesystem;

namespace {

fs::path test_dir() {
  fs::path p = fs::temp_directory_path() / "lfmgan_data_test";
  fs::create_directories(p);
  return p;
}

void write_raw_ppm(const fs::path& path, int64_t w, int64_t h, const std::vector<uint8_t>& rgb,
                   const std::string& header_extra = "") {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os << "P6\n" << header_extra << w << " " << h << "\n255\n";
  os.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
}

}  // namespace

TEST_CASE("ppm: byte values map onto the symmetric unit range") {
  const fs::path p = test_dir() / "gray.ppm";
  write_raw_ppm(p, 2, 1, {128, 128, 128, 0, 255, 64});

  auto img = read_ppm(p);
  CHECK(img.shape() == Shape{3, 1, 2});
  // channel-major layout: (c, y, x)
  CHECK(img.at(0 * 2 + 0) == doctest::Approx(128.0 / 127.5 - 1.0).epsilon(1e-6));
  CHECK(img.at(0 * 2 + 1) == -1.0f);
  CHECK(img.at(1 * 2 + 1) == 1.0f);
  CHECK(img.at(2 * 2 + 1) == doctest::Approx(64.0 / 127.5 - 1.0).epsilon(1e-6));
}

TEST_CASE("ppm: write/read round trip is exact on the quantized grid") {
  Rng rng(1);
  Tensor<float> img(Shape{3, 5, 7});
  for (int64_t i = 0; i < img.numel(); ++i) {
    const auto byte = static_cast<uint8_t>(rng.uniform_int(256));
    img.data()[i] = static_cast<float>(byte) / 127.5f - 1.0f;
  }
  const fs::path p = test_dir() / "roundtrip.ppm";
  write_ppm(p, img);
  auto back = read_ppm(p);
  REQUIRE(back.shape() == img.shape());
  for (int64_t i = 0; i < img.numel(); ++i) CHECK(back.at(i) == img.at(i));
}

TEST_CASE("ppm: out-of-range floats clamp to the byte limits") {
  auto img = Tensor<float>::from({3, 1, 1}, {2.5f, -3.0f, 0.0f});
  const fs::path p = test_dir() / "clamp.ppm";
  write_ppm(p, img);
  auto back = read_ppm(p);
  CHECK(back.at(0) == 1.0f);
  CHECK(back.at(1) == -1.0f);
  CHECK(back.at(2) == doctest::Approx(128.0 / 127.5 - 1.0).epsilon(1e-6));  // 0 rounds up to byte 128
}

TEST_CASE("ppm: header parsing accepts comments and rejects junk") {
  const fs::path ok = test_dir() / "comment.ppm";
  {
    std::ofstream os(ok, std::ios::binary);
    os << "P6\n# a comment line\n 1 # trailing\n1\n255\n";
    os.write("\x10\x20\x30", 3);
  }
  auto img = read_ppm(ok);
  CHECK(img.shape() == Shape{3, 1, 1});
  CHECK(img.at(0) == doctest::Approx(16.0 / 127.5 - 1.0).epsilon(1e-6));

  const fs::path bad_magic = test_dir() / "bad_magic.ppm";
  std::ofstream(bad_magic, std::ios::binary) << "P5\n1 1\n255\n x";
  CHECK_THROWS_AS(read_ppm(bad_magic), std::runtime_error);

  const fs::path truncated = test_dir() / "short.ppm";
  write_raw_ppm(truncated, 2, 2, {1, 2, 3});
  CHECK_THROWS_AS(read_ppm(truncated), std::runtime_error);

  const fs::path maxval = test_dir() / "maxval.ppm";
  std::ofstream(maxval, std::ios::binary) << "P6\n1 1\n65535\n xx";
  CHECK_THROWS_AS(read_ppm(maxval), std::runtime_error);

  CHECK_THROWS_AS(read_ppm(test_dir() / "missing.ppm"), std::runtime_error);
  CHECK_THROWS_AS(write_ppm(test_dir() / "bad.ppm", Tensor<float>::full({1, 2, 2}, 0.f)),
                  std::invalid_argument);
}

TEST_CASE("resize: equal side and target copies the center crop") {
  // 4x6 image whose value encodes the column; crop keeps columns 1..4
  Tensor<float> img(Shape{3, 4, 6});
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t y = 0; y < 4; ++y)
      for (int64_t x = 0; x < 6; ++x) img.data()[c * 24 + y * 6 + x] = static_cast<float>(x) / 10.0f;

  auto out = center_crop_resize(img, 4);
  CHECK(out.shape() == Shape{3, 4, 4});
  for (int64_t x = 0; x < 4; ++x) CHECK(out.at(x) == doctest::Approx((1.0 + x) / 10.0).epsilon(1e-6));
}

TEST_CASE("resize: two-by-two block averages down to one pixel") {
  auto img = Tensor<float>::from({3, 2, 2}, {0.1f, 0.2f, 0.3f, 0.4f,  //
                                             0.0f, 0.0f, 0.0f, 0.0f,  //
                                             -0.4f, 0.4f, -0.4f, 0.4f});
  auto out = center_crop_resize(img, 1);
  CHECK(out.shape() == Shape{3, 1, 1});
  CHECK(out.at(0) == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(out.at(1) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(out.at(2) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("resize: upscaling clamps at the edges") {
  auto img = Tensor<float>::from({3, 1, 1}, {0.5f, -0.5f, 0.25f});
  auto out = center_crop_resize(img, 3);
  CHECK(out.shape() == Shape{3, 3, 3});
  for (int64_t i = 0; i < 9; ++i) CHECK(out.at(i) == 0.5f);
  for (int64_t i = 0; i < 9; ++i) CHECK(out.at(9 + i) == -0.5f);
  CHECK_THROWS_AS(center_crop_resize(img, 0), std::invalid_argument);
}

TEST_CASE("folder loading: sorted order and subset prefix") {
  const fs::path dir = test_dir() / "folder";
  fs::create_directories(dir);
  // written out of order on purpose; loading must sort by filename
  write_raw_ppm(dir / "b.ppm", 2, 2, std::vector<uint8_t>(12, 100));
  write_raw_ppm(dir / "a.ppm", 2, 2, std::vector<uint8_t>(12, 50));
  write_raw_ppm(dir / "c.ppm", 2, 2, std::vector<uint8_t>(12, 200));
  std::ofstream(dir / "notes.txt") << "ignored";

  auto ds = lfmgan::load_image_folder(dir, 2);
  CHECK(ds.size() == 3);
  CHECK(ds.files == std::vector<std::string>{"a.ppm", "b.ppm", "c.ppm"});
  CHECK(ds.images.shape() == Shape{3, 3, 2, 2});
  CHECK(ds.images.at(0) == doctest::Approx(50.0 / 127.5 - 1.0).epsilon(1e-6));
  CHECK(ds.images.at(12) == doctest::Approx(100.0 / 127.5 - 1.0).epsilon(1e-6));

  auto subset = lfmgan::load_image_folder(dir, 2, 2);
  CHECK(subset.size() == 2);
  CHECK(subset.files == std::vector<std::string>{"a.ppm", "b.ppm"});

  auto resized = lfmgan::load_image_folder(dir, 4);
  CHECK(resized.images.shape() == Shape{3, 3, 4, 4});

  CHECK_THROWS_AS(lfmgan::load_image_folder(dir / "nope", 2), std::runtime_error);
  const fs::path empty = test_dir() / "empty";
  fs::create_directories(empty);
  CHECK_THROWS_AS(lfmgan::load_image_folder(empty, 2), std::runtime_error);
}

TEST_CASE("raw dataset: container round trip") {
  Rng rng(3);
  ImageDataset ds;
  ds.image_size = 4;
  ds.images = Tensor<float>(Shape{5, 3, 4, 4});
  for (int64_t i = 0; i < ds.images.numel(); ++i) ds.images.data()[i] = static_cast<float>(rng.normal());

  const fs::path p = test_dir() / "raw.bin";
  lfmgan::save_raw_dataset(p, ds);
  auto back = lfmgan::load_raw_dataset(p);
  CHECK(back.image_size == 4);
  CHECK(back.size() == 5);
  for (int64_t i = 0; i < ds.images.numel(); ++i) CHECK(back.images.at(i) == ds.images.at(i));

  // a stats container is a different kind of file and must be rejected
  lfmgan::GaussianStats s;
  s.mean = Eigen::VectorXd::Zero(2);
  s.cov = Eigen::MatrixXd::Identity(2, 2);
  s.n = 4;
  const fs::path wrong = test_dir() / "stats.bin";
  lfmgan::save_stats(wrong, s, "identity");
  CHECK_THROWS_AS(lfmgan::load_raw_dataset(wrong), std::runtime_error);
}

TEST_CASE("ring: centers sit on the circle at equal angles") {
  RingSpec spec;
  spec.modes = 8;
  spec.radius = 2.0;
  auto centers = lfmgan::ring_centers(spec);
  REQUIRE(centers.size() == 8);
  CHECK(centers[0][0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(centers[0][1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(centers[2][0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(centers[2][1] == doctest::Approx(2.0).epsilon(1e-12));
  for (const auto& c : centers) {
    CHECK(std::hypot(c[0], c[1]) == doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("ring: samples split evenly across modes within binomial bounds") {
  RingSpec spec;
  Rng rng(1234);
  const int64_t n = 4000;
  std::vector<double> xy(static_cast<size_t>(2 * n));
  lfmgan::ring_sample(spec, rng, n, xy.data());

  auto centers = lfmgan::ring_centers(spec);
  std::vector<int64_t> counts(8, 0);
  for (int64_t i = 0; i < n; ++i) {
    size_t best = 0;
    double best_d = 1e18;
    for (size_t c = 0; c < 8; ++c) {
      const double d = std::hypot(xy[2 * i] - centers[c][0], xy[2 * i + 1] - centers[c][1]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    CHECK(best_d < 6.0 * spec.sigma);
    ++counts[best];
  }
  for (int64_t c : counts) {
    CHECK(c > 350);
    CHECK(c < 650);
  }
}

TEST_CASE("ring: deterministic stream consuming three draws per point") {
  RingSpec spec;
  Rng a(55), b(55);
  auto t = lfmgan::ring_sample_tensor<double>(spec, a, 10);
  CHECK(t.shape() == Shape{10, 2});

  auto centers = lfmgan::ring_centers(spec);
  for (int64_t i = 0; i < 10; ++i) {
    const int64_t k = b.uniform_int(spec.modes);
    const double x = centers[static_cast<size_t>(k)][0] + spec.sigma * b.normal();
    const double y = centers[static_cast<size_t>(k)][1] + spec.sigma * b.normal();
    CHECK(t.at(2 * i) == x);
    CHECK(t.at(2 * i + 1) == y);
  }

  RingSpec bad;
  bad.sigma = 0.0;
  double buf[2];
  CHECK_THROWS_AS(lfmgan::ring_sample(bad, a, 1, buf), std::invalid_argument);
}

TEST_CASE("cleanup") { fs::remove_all(test_dir()); }
