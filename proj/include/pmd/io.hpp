#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pmd/apps.hpp"
#include "pmd/core.hpp"
#include "pmd/samplers.hpp"
#include "pmd/solver.hpp"
#include "json.hpp"

namespace pmd::io {

// "PMDP" depth container: magic, u32 version=1, u32 H, u32 W, u8 has-mask,
// H*W little-endian f32 values, then H*W mask bytes when has-mask is set.
std::vector<std::uint8_t> encode_depth(const DepthMap& z);
DepthMap decode_depth(std::span<const std::uint8_t> bytes);
void save_depth(const DepthMap& z, const std::filesystem::path& path);
DepthMap load_depth(const std::filesystem::path& path);

/// Masks travel as depth files; any non-zero value is set.
BinaryMask mask_from_depth(const DepthMap& z);
DepthMap depth_from_mask(const BinaryMask& m);

/// "row,col,depth" CSV. Throws FormatError with the byte offset of the bad line.
SparseMeasurements parse_measurements(const std::string& text, std::size_t height, std::size_t width,
                                      MeasurementPattern pattern);
SparseMeasurements load_measurements(const std::filesystem::path& path, std::size_t height, std::size_t width,
                                     MeasurementPattern pattern);
std::string format_measurements(const SparseMeasurements& m);
/// "row,col" CSV of point locations.
std::string format_points(const std::vector<Pixel>& points);

/// One relation per line under a "relation" header: '<' (A closer), '=' or '>' (B closer).
std::vector<Ordinal> parse_ordinals(const std::string& text);
std::string format_ordinals(const std::vector<Ordinal>& v);
char ordinal_symbol(Ordinal o);

// JSON documents.
SceneSpec scene_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SceneSpec& s);
SamplerConfig sampler_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SamplerConfig& c);

/// Solver settings plus the cost weight, optional ramp and spreading mode.
struct SolverDocument {
  SolverOptions options;
  double lambda = 1.0;
  std::optional<LambdaRamp> ramp;
  std::optional<SpreadMode> mode;
};
SolverDocument solver_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SolverDocument& d);

nlohmann::json read_json(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace pmd::io
