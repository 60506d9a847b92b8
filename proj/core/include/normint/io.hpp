#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "normint/geometry.hpp"
#include "normint/graph.hpp"
#include "normint/pipeline.hpp"

namespace normint::io {

/// Float image in top-down row-major order with interleaved channels.
struct FloatImage {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<float> data;

  friend bool operator==(const FloatImage&, const FloatImage&) = default;
};

/// PFM ("PF" 3-channel, "Pf" 1-channel). Rows are stored bottom-up; the
/// sign of the scale field selects the byte order.
FloatImage read_pfm(const std::filesystem::path& path);
FloatImage read_pfm(std::istream& in);
/// Writes little-endian with scale -1.
void write_pfm(const std::filesystem::path& path, const FloatImage& image);
void write_pfm(std::ostream& out, const FloatImage& image);

/// 3-channel float image -> normal map. Zero or non-finite pixels are invalid;
/// `mask`, if non-empty, further restricts validity.
NormalMap normals_from_image(const FloatImage& image, std::span<const std::uint8_t> mask = {});
FloatImage image_from_normals(const NormalMap& nmap);

FloatImage image_from_depth(const DepthMap& depth);
/// Non-finite or non-positive pixels become invalid.
DepthMap depth_from_image(const FloatImage& image);

/// 16-bit RGB(A) PNG with channels mapped by v / 65535 * 2 - 1. Raw all-zero
/// pixels are invalid. `flip_z` negates the decoded z component.
NormalMap read_png16_normals(const std::filesystem::path& path, bool flip_z = false,
                             std::span<const std::uint8_t> mask = {});
void write_png16_normals(const std::filesystem::path& path, const NormalMap& nmap);

/// 8- or 16-bit PNG of any channel count; a pixel is valid if any channel is
/// nonzero.
std::vector<std::uint8_t> read_mask_png(const std::filesystem::path& path, int& width,
                                        int& height);
void write_mask_png(const std::filesystem::path& path, int width, int height,
                    std::span<const std::uint8_t> mask);

/// Loads a normal map by extension (.pfm or 16-bit .png), optionally
/// restricted by a mask PNG.
NormalMap read_normals(const std::filesystem::path& path,
                       const std::filesystem::path& mask_path = {});

CameraIntrinsics read_intrinsics(const std::filesystem::path& path);
void write_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& intr);

inline constexpr std::uint32_t kInvalidLabel = 0xFFFFFFFFu;

/// Per-pixel component labels (kInvalidLabel on masked pixels).
std::vector<std::uint32_t> label_image(const PixelGraph& graph, const Partition& partition);

/// Raw labels: u32 width, u32 height, then width*height u32 labels, all
/// little-endian, row-major.
void write_labels_raw(const std::filesystem::path& path, int width, int height,
                      std::span<const std::uint32_t> labels);
std::vector<std::uint32_t> read_labels_raw(const std::filesystem::path& path, int& width,
                                           int& height);

/// Deterministic label -> RGB color; black for kInvalidLabel.
std::array<std::uint8_t, 3> label_color(std::uint32_t label) noexcept;
void write_labels_png(const std::filesystem::path& path, int width, int height,
                      std::span<const std::uint32_t> labels);

/// One JSON object per line: {t, E_t, component_count, merge_performed,
/// wall_ms, cg_iterations}.
std::string diagnostics_line(const IterationRecord& record);
void write_diagnostics(const std::filesystem::path& path,
                       std::span<const IterationRecord> records);

}  // namespace normint::io
