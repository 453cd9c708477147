#include "coopsc/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "coopsc/error.hpp"

namespace coopsc {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  void need(std::size_t n, const char* what) const {
    if (in_.size() - pos_ < n)
      throw Error(ErrorKind::kTruncated, std::string("weights file truncated while reading ") + what);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return in_[pos_++];
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = static_cast<std::uint16_t>(in_[pos_] | (in_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_weights(std::span<const NamedArray> arrays) {
  Writer w;
  w.bytes(kWeightsMagic, 4);
  w.u32(kWeightsVersion);
  w.u32(static_cast<std::uint32_t>(arrays.size()));
  for (const auto& a : arrays) {
    if (a.name.size() > std::numeric_limits<std::uint16_t>::max())
      throw Error(ErrorKind::kFormat, "array name too long: " + a.name.substr(0, 32) + "...");
    if (a.dims.empty() || a.dims.size() > 255)
      throw Error(ErrorKind::kFormat, "array " + a.name + " has unsupported rank");
    if (element_count(a.dims) != a.values.size())
      throw Error(ErrorKind::kShape, "array " + a.name + " dims do not match its value count");
    w.u16(static_cast<std::uint16_t>(a.name.size()));
    w.bytes(a.name.data(), a.name.size());
    w.u8(static_cast<std::uint8_t>(a.dims.size()));
    for (auto d : a.dims) {
      if (d > std::numeric_limits<std::uint32_t>::max())
        throw Error(ErrorKind::kFormat, "array " + a.name + " dimension exceeds u32");
      w.u32(static_cast<std::uint32_t>(d));
    }
    for (double v : a.values) w.f32(static_cast<float>(v));
  }
  return w.take();
}

std::vector<NamedArray> decode_weights(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const std::string magic = r.str(4, "magic");
  if (std::memcmp(magic.data(), kWeightsMagic, 4) != 0)
    throw Error(ErrorKind::kFormat, "not a SEMW weights file (bad magic)");
  const std::uint32_t version = r.u32("version");
  if (version != kWeightsVersion)
    throw Error(ErrorKind::kVersion, "unsupported SEMW version " + std::to_string(version));
  const std::uint32_t count = r.u32("array count");

  std::vector<NamedArray> arrays;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    const std::uint16_t name_len = r.u16("name length");
    a.name = r.str(name_len, "name");
    const std::uint8_t rank = r.u8("rank");
    if (rank == 0) throw Error(ErrorKind::kFormat, "array " + a.name + " has rank 0");
    for (std::uint8_t d = 0; d < rank; ++d) a.dims.push_back(r.u32("dims"));
    const std::size_t n = element_count(a.dims);
    r.need(n * 4, "payload");
    a.values.resize(n);
    for (std::size_t j = 0; j < n; ++j) a.values[j] = r.f32("payload");
    arrays.push_back(std::move(a));
  }
  if (!r.at_end()) throw Error(ErrorKind::kFormat, "trailing bytes after last SEMW array");
  return arrays;
}

void write_weights_file(const std::filesystem::path& path, std::span<const NamedArray> arrays) {
  const auto bytes = encode_weights(arrays);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + path.string());
}

std::vector<NamedArray> read_weights_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_weights(bytes);
}

const NamedArray& find_array(std::span<const NamedArray> arrays, const std::string& name) {
  for (const auto& a : arrays)
    if (a.name == name) return a;
  throw Error(ErrorKind::kFormat, "weights file has no array named " + name);
}

void round_to_f32(std::span<double> values) {
  for (auto& v : values) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace coopsc
