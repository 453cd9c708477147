#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "coopsc/codec.hpp"
#include "coopsc/posture.hpp"

namespace coopsc {

// Accelerometer trace CSV: header "t_sec,ax,ay,az", one sample per row, g units.
void write_accel_csv(std::ostream& out, std::span<const AccelSample> samples);
void write_accel_csv(const std::filesystem::path& path, std::span<const AccelSample> samples);
/// Throws kFormat on a bad header or row (the message carries the line number).
std::vector<AccelSample> read_accel_csv(std::istream& in);
std::vector<AccelSample> read_accel_csv(const std::filesystem::path& path);

inline constexpr char kFramesMagic[4] = {'S', 'E', 'M', 'F'};
inline constexpr std::uint32_t kFramesVersion = 1;

struct FramesFile {
  std::uint16_t height = kFrameSide;
  std::uint16_t width = kFrameSide;
  std::vector<Frame> frames;  // 8-bit RGB, row-major, channels interleaved
};

/// "SEMF", u32 version, u32 frame count, u16 height, u16 width, then the
/// frames back to back. Little-endian.
std::vector<std::uint8_t> encode_frames(const FramesFile& file);
FramesFile decode_frames(std::span<const std::uint8_t> bytes);
void write_frames_file(const std::filesystem::path& path, const FramesFile& file);
FramesFile read_frames_file(const std::filesystem::path& path);

}  // namespace coopsc
