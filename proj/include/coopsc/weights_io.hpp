#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "coopsc/tensor.hpp"

namespace coopsc {

/// One entry of a "SEMW" weights container.
struct NamedArray {
  std::string name;
  Shape dims;
  std::vector<double> values;  // stored on disk as little-endian float32
};

inline constexpr char kWeightsMagic[4] = {'S', 'E', 'M', 'W'};
inline constexpr std::uint32_t kWeightsVersion = 1;

/// Layout: magic "SEMW", u32 version, u32 array count; then per array
/// u16 name length, name bytes, u8 rank, rank x u32 dims, f32 payload.
/// All integers little-endian.
std::vector<std::uint8_t> encode_weights(std::span<const NamedArray> arrays);

/// Throws Error with kFormat (bad magic or malformed entry), kVersion, or
/// kTruncated (input ends early).
std::vector<NamedArray> decode_weights(std::span<const std::uint8_t> bytes);

void write_weights_file(const std::filesystem::path& path, std::span<const NamedArray> arrays);
std::vector<NamedArray> read_weights_file(const std::filesystem::path& path);

/// Finds an array by name; throws kFormat when missing.
const NamedArray& find_array(std::span<const NamedArray> arrays, const std::string& name);

/// Rounds every element to the nearest float32 value, the precision the
/// container stores.
void round_to_f32(std::span<double> values);

}  // namespace coopsc
