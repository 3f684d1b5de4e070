#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lfmgan/tensor.hpp"

namespace lfmgan {

// Binary container: magic "LFMG", u32 version, length-prefixed config text,
// a run of named tensor records, and a trailing CRC32 over everything before
// it. Records carry (u32 name length, name bytes, u8 dtype tag, u32 rank,
// i64 extents, little-endian payload). Dtype tags: 1 = f32, 2 = f64,
// 3 = i64, 4 = byte blob. Readers validate magic, version and CRC before
// exposing any record, so a truncated or corrupted file never yields
// partial state.
namespace container {

constexpr uint32_t kVersion = 1;
constexpr uint8_t kF32 = 1;
constexpr uint8_t kF64 = 2;
constexpr uint8_t kI64 = 3;
constexpr uint8_t kBytes = 4;

struct Record {
  std::string name;
  uint8_t dtype = kBytes;
  Shape extents;
  std::vector<uint8_t> payload;
};

struct File {
  uint32_t version = kVersion;
  std::string config_text;
  std::vector<Record> records;

  const Record& find(const std::string& name) const;
  const Record* find_opt(const std::string& name) const;
};

void write(const std::filesystem::path& path, const File& file);
File read(const std::filesystem::path& path);

template <typename T>
Record from_tensor(std::string name, const Tensor<T>& t);

template <typename T>
Tensor<T> to_tensor(const Record& rec);

Record from_i64(std::string name, int64_t value);
int64_t to_i64(const Record& rec);

Record from_string(std::string name, const std::string& text);
std::string to_string(const Record& rec);

Record from_doubles(std::string name, Shape extents, const std::vector<double>& values);
std::vector<double> to_doubles(const Record& rec);

}  // namespace container

}  // namespace lfmgan
