#include "coopsc/data_io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "coopsc/error.hpp"

namespace coopsc {

namespace {

void put_number(std::ostream& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  out.write(buf, res.ptr - buf);
}

double parse_number(std::string_view field, std::size_t line) {
  double v = 0.0;
  while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.remove_suffix(1);
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size())
    throw Error(ErrorKind::kFormat, "accel CSV line " + std::to_string(line) + ": bad number '" +
                                        std::string(field) + "'");
  return v;
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

}  // namespace

void write_accel_csv(std::ostream& out, std::span<const AccelSample> samples) {
  out << "t_sec,ax,ay,az\n";
  for (const auto& s : samples) {
    put_number(out, s.t);
    for (double v : s.a) {
      out << ',';
      put_number(out, v);
    }
    out << '\n';
  }
}

void write_accel_csv(const std::filesystem::path& path, std::span<const AccelSample> samples) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  write_accel_csv(out, samples);
}

std::vector<AccelSample> read_accel_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::kFormat, "accel CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t_sec,ax,ay,az") throw Error(ErrorKind::kFormat, "accel CSV header must be t_sec,ax,ay,az");
  std::vector<AccelSample> out;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line == "\r") continue;
    std::string_view rest(line);
    double fields[4];
    for (int i = 0; i < 4; ++i) {
      const auto comma = rest.find(',');
      if ((i < 3) != (comma != std::string_view::npos))
        throw Error(ErrorKind::kFormat, "accel CSV line " + std::to_string(n) + ": expected 4 fields");
      fields[i] = parse_number(rest.substr(0, comma), n);
      if (i < 3) rest.remove_prefix(comma + 1);
    }
    out.push_back({fields[0], {fields[1], fields[2], fields[3]}});
  }
  return out;
}

std::vector<AccelSample> read_accel_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return read_accel_csv(in);
}

std::vector<std::uint8_t> encode_frames(const FramesFile& file) {
  const std::size_t frame_bytes = static_cast<std::size_t>(file.height) * file.width * 3;
  std::vector<std::uint8_t> out(kFramesMagic, kFramesMagic + 4);
  put_u32(out, kFramesVersion);
  put_u32(out, static_cast<std::uint32_t>(file.frames.size()));
  put_u16(out, file.height);
  put_u16(out, file.width);
  out.reserve(out.size() + frame_bytes * file.frames.size());
  for (const auto& f : file.frames) {
    if (f.size() != frame_bytes) throw Error(ErrorKind::kShape, "frame size does not match header dims");
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

FramesFile decode_frames(std::span<const std::uint8_t> bytes) {
  constexpr std::size_t kHeader = 16;
  if (bytes.size() < 4) throw Error(ErrorKind::kTruncated, "frames file truncated in magic");
  if (std::memcmp(bytes.data(), kFramesMagic, 4) != 0)
    throw Error(ErrorKind::kFormat, "not a SEMF frames file (bad magic)");
  if (bytes.size() < kHeader) throw Error(ErrorKind::kTruncated, "frames file truncated in header");
  auto u32 = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[at + i]) << (8 * i);
    return v;
  };
  auto u16 = [&](std::size_t at) { return static_cast<std::uint16_t>(bytes[at] | (bytes[at + 1] << 8)); };
  if (u32(4) != kFramesVersion)
    throw Error(ErrorKind::kVersion, "unsupported SEMF version " + std::to_string(u32(4)));
  FramesFile file;
  const std::uint32_t count = u32(8);
  file.height = u16(12);
  file.width = u16(14);
  const std::size_t frame_bytes = static_cast<std::size_t>(file.height) * file.width * 3;
  const std::size_t need = kHeader + frame_bytes * count;
  if (bytes.size() < need) throw Error(ErrorKind::kTruncated, "frames file truncated in frame data");
  if (bytes.size() > need) throw Error(ErrorKind::kFormat, "trailing bytes after last frame");
  file.frames.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto* p = bytes.data() + kHeader + i * frame_bytes;
    file.frames.emplace_back(p, p + frame_bytes);
  }
  return file;
}

void write_frames_file(const std::filesystem::path& path, const FramesFile& file) {
  const auto bytes = encode_frames(file);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

FramesFile read_frames_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_frames(bytes);
}

}  // namespace coopsc
