#include "lfmgan/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little, "container payloads are little-endian");

namespace lfmgan::container {

namespace {

void append_u32(std::vector<uint8_t>& buf, uint32_t v) {
  const size_t off = buf.size();
  buf.resize(off + 4);
  std::memcpy(buf.data() + off, &v, 4);
}

void append_i64(std::vector<uint8_t>& buf, int64_t v) {
  const size_t off = buf.size();
  buf.resize(off + 8);
  std::memcpy(buf.data() + off, &v, 8);
}

void append_bytes(std::vector<uint8_t>& buf, const void* p, size_t n) {
  const size_t off = buf.size();
  buf.resize(off + n);
  std::memcpy(buf.data() + off, p, n);
}

class Reader {
 public:
  Reader(const uint8_t* p, size_t n) : p_(p), n_(n) {}

  uint32_t u32() {
    uint32_t v;
    take(&v, 4);
    return v;
  }
  int64_t i64() {
    int64_t v;
    take(&v, 8);
    return v;
  }
  uint8_t u8() {
    uint8_t v;
    take(&v, 1);
    return v;
  }
  std::string str(size_t n) {
    std::string s(n, '\0');
    take(s.data(), n);
    return s;
  }
  std::vector<uint8_t> bytes(size_t n) {
    std::vector<uint8_t> b(n);
    take(b.data(), n);
    return b;
  }
  size_t remaining() const { return n_ - off_; }

 private:
  void take(void* dst, size_t n) {
    if (off_ + n > n_) throw std::runtime_error("container: truncated file");
    std::memcpy(dst, p_ + off_, n);
    off_ += n;
  }
  const uint8_t* p_;
  size_t n_;
  size_t off_ = 0;
};

size_t dtype_size(uint8_t dtype) {
  switch (dtype) {
    case kF32: return 4;
    case kF64: return 8;
    case kI64: return 8;
    case kBytes: return 1;
    default: throw std::runtime_error("container: unknown dtype tag " + std::to_string(dtype));
  }
}

}  // namespace

const Record& File::find(const std::string& name) const {
  const Record* r = find_opt(name);
  if (!r) throw std::runtime_error("container: missing record '" + name + "'");
  return *r;
}

const Record* File::find_opt(const std::string& name) const {
  for (const Record& r : records) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

void write(const std::filesystem::path& path, const File& file) {
  std::vector<uint8_t> buf;
  append_bytes(buf, "LFMG", 4);
  append_u32(buf, file.version);
  append_u32(buf, static_cast<uint32_t>(file.config_text.size()));
  append_bytes(buf, file.config_text.data(), file.config_text.size());
  for (const Record& r : file.records) {
    append_u32(buf, static_cast<uint32_t>(r.name.size()));
    append_bytes(buf, r.name.data(), r.name.size());
    buf.push_back(r.dtype);
    append_u32(buf, static_cast<uint32_t>(r.extents.size()));
    for (int64_t e : r.extents) append_i64(buf, e);
    const size_t expected = static_cast<size_t>(numel_of(r.extents)) * dtype_size(r.dtype);
    if (r.payload.size() != expected) {
      throw std::runtime_error("container: record '" + r.name + "' payload size mismatch");
    }
    append_bytes(buf, r.payload.data(), r.payload.size());
  }
  const uint32_t crc = static_cast<uint32_t>(crc32(0L, buf.data(), static_cast<uInt>(buf.size())));
  append_u32(buf, crc);

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("container: cannot open '" + path.string() + "' for writing");
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!os) throw std::runtime_error("container: write failed on '" + path.string() + "'");
}

File read(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary | std::ios::ate);
  if (!is) throw std::runtime_error("container: cannot open '" + path.string() + "'");
  const std::streamsize size = is.tellg();
  if (size < 16) throw std::runtime_error("container: '" + path.string() + "' is too short");
  std::vector<uint8_t> buf(static_cast<size_t>(size));
  is.seekg(0);
  is.read(reinterpret_cast<char*>(buf.data()), size);
  if (!is) throw std::runtime_error("container: read failed on '" + path.string() + "'");

  uint32_t stored_crc;
  std::memcpy(&stored_crc, buf.data() + buf.size() - 4, 4);
  const uint32_t actual_crc =
      static_cast<uint32_t>(crc32(0L, buf.data(), static_cast<uInt>(buf.size() - 4)));
  if (stored_crc != actual_crc) {
    throw std::runtime_error("container: CRC mismatch in '" + path.string() + "'");
  }

  Reader rd(buf.data(), buf.size() - 4);
  if (rd.str(4) != "LFMG") throw std::runtime_error("container: bad magic in '" + path.string() + "'");
  File file;
  file.version = rd.u32();
  if (file.version != kVersion) {
    throw std::runtime_error("container: unsupported version " + std::to_string(file.version));
  }
  file.config_text = rd.str(rd.u32());
  while (rd.remaining() > 0) {
    Record r;
    r.name = rd.str(rd.u32());
    r.dtype = rd.u8();
    const uint32_t rank = rd.u32();
    for (uint32_t i = 0; i < rank; ++i) r.extents.push_back(rd.i64());
    for (int64_t e : r.extents) {
      if (e < 0) throw std::runtime_error("container: negative extent in record '" + r.name + "'");
    }
    r.payload = rd.bytes(static_cast<size_t>(numel_of(r.extents)) * dtype_size(r.dtype));
    file.records.push_back(std::move(r));
  }
  return file;
}

template <typename T>
Record from_tensor(std::string name, const Tensor<T>& t) {
  Record r;
  r.name = std::move(name);
  r.dtype = sizeof(T) == 4 ? kF32 : kF64;
  r.extents = t.shape();
  r.payload.resize(static_cast<size_t>(t.numel()) * sizeof(T));
  std::memcpy(r.payload.data(), t.data(), r.payload.size());
  return r;
}

template <typename T>
Tensor<T> to_tensor(const Record& rec) {
  const uint8_t want = sizeof(T) == 4 ? kF32 : kF64;
  if (rec.dtype != want) {
    throw std::runtime_error("container: record '" + rec.name + "' has dtype tag " + std::to_string(rec.dtype) +
                             ", expected " + std::to_string(want));
  }
  Tensor<T> t(rec.extents);
  std::memcpy(t.data(), rec.payload.data(), rec.payload.size());
  return t;
}

template Record from_tensor<float>(std::string, const Tensor<float>&);
template Record from_tensor<double>(std::string, const Tensor<double>&);
template Tensor<float> to_tensor<float>(const Record&);
template Tensor<double> to_tensor<double>(const Record&);

Record from_i64(std::string name, int64_t value) {
  Record r;
  r.name = std::move(name);
  r.dtype = kI64;
  r.extents = {};
  r.payload.resize(8);
  std::memcpy(r.payload.data(), &value, 8);
  return r;
}

int64_t to_i64(const Record& rec) {
  if (rec.dtype != kI64 || rec.payload.size() != 8) {
    throw std::runtime_error("container: record '" + rec.name + "' is not a scalar i64");
  }
  int64_t v;
  std::memcpy(&v, rec.payload.data(), 8);
  return v;
}

Record from_string(std::string name, const std::string& text) {
  Record r;
  r.name = std::move(name);
  r.dtype = kBytes;
  r.extents = {static_cast<int64_t>(text.size())};
  r.payload.assign(text.begin(), text.end());
  return r;
}

std::string to_string(const Record& rec) {
  if (rec.dtype != kBytes) throw std::runtime_error("container: record '" + rec.name + "' is not a byte blob");
  return std::string(rec.payload.begin(), rec.payload.end());
}

Record from_doubles(std::string name, Shape extents, const std::vector<double>& values) {
  if (numel_of(extents) != static_cast<int64_t>(values.size())) {
    throw std::invalid_argument("container: extents do not match value count for '" + name + "'");
  }
  Record r;
  r.name = std::move(name);
  r.dtype = kF64;
  r.extents = std::move(extents);
  r.payload.resize(values.size() * 8);
  std::memcpy(r.payload.data(), values.data(), r.payload.size());
  return r;
}

std::vector<double> to_doubles(const Record& rec) {
  if (rec.dtype != kF64) throw std::runtime_error("container: record '" + rec.name + "' is not f64");
  std::vector<double> v(rec.payload.size() / 8);
  std::memcpy(v.data(), rec.payload.data(), rec.payload.size());
  return v;
}

}  // namespace lfmgan::container
