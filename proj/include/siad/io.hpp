#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "siad/cvae.hpp"
#include "siad/tensor.hpp"

namespace siad::io {

inline constexpr std::uint32_t kImageVersion = 1;
inline constexpr std::uint32_t kWeightsVersion = 1;

using Bytes = std::vector<std::uint8_t>;

// "SIIM" | u32 version | u32 H | u32 W | H*W little-endian f64.
Bytes encode_image(const Tensor& image);
Tensor decode_image(std::span<const std::uint8_t> bytes);  // (1, H, W)

// "SIAD" | u32 version | architecture u32s | parameters as f64 in declaration order.
Bytes encode_weights(const ModelWeights& w);
ModelWeights decode_weights(std::span<const std::uint8_t> bytes);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

Tensor read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Tensor& image);
ModelWeights read_weights(const std::filesystem::path& path);
void write_weights(const std::filesystem::path& path, const ModelWeights& w);

// Cohort manifest row. `region_path` is empty except for diseased subjects.
struct ManifestRow {
  std::string id;
  std::string role;  // train | test | inference | variance | diseased
  std::string path;
  double age = 0.0;
  double time_gap = 0.0;
  int label = 0;  // 0 healthy, 1 diseased
  std::string region_path;
};

inline constexpr const char* kManifestHeader = "id,role,path,age,time_gap,label,region_path";

std::string format_manifest(std::span<const ManifestRow> rows);
std::vector<ManifestRow> parse_manifest(const std::string& text);
void write_manifest(const std::filesystem::path& path, std::span<const ManifestRow> rows);
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace siad::io
