#include "normint/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include "json.hpp"

#include "normint/error.hpp"

namespace normint::io {

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open file for reading: " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open file for writing: " + path.string());
  return out;
}

std::uint32_t byteswap32(std::uint32_t x) noexcept {
  return (x >> 24) | ((x >> 8) & 0xFF00u) | ((x << 8) & 0xFF0000u) | (x << 24);
}

void put_u32_le(std::ostream& out, std::uint32_t x) {
  const unsigned char b[4] = {static_cast<unsigned char>(x), static_cast<unsigned char>(x >> 8),
                              static_cast<unsigned char>(x >> 16),
                              static_cast<unsigned char>(x >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32_le(const unsigned char* b) noexcept {
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
         (std::uint32_t(b[3]) << 24);
}

// ---- PNG -----------------------------------------------------------------

struct RawPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint16_t> samples;  // row-major, interleaved
};

struct FileCloser {
  void operator()(FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

RawPng read_png_raw(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) throw Error(ErrorCode::Io, "cannot open file for reading: " + path.string());
  png_byte signature[8];
  if (std::fread(signature, 1, 8, file.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
    throw Error(ErrorCode::MalformedHeader, "not a PNG file: " + path.string());
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::Io, "libpng initialization failed");
  }
  RawPng raw;
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::TruncatedPayload, "corrupt PNG data: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(png);
    depth = 8;
  }
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
    depth = 8;
  }
  png_read_update_info(png, info);
  raw.width = static_cast<int>(png_get_image_width(png, info));
  raw.height = static_cast<int>(png_get_image_height(png, info));
  raw.channels = png_get_channels(png, info);
  raw.bit_depth = depth;
  const std::size_t stride = png_get_rowbytes(png, info);
  buffer.resize(stride * raw.height);
  rows.resize(raw.height);
  for (int y = 0; y < raw.height; ++y) rows[y] = buffer.data() + stride * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t per_row = static_cast<std::size_t>(raw.width) * raw.channels;
  raw.samples.resize(per_row * raw.height);
  for (int y = 0; y < raw.height; ++y) {
    const png_byte* src = rows[y];
    std::uint16_t* dst = raw.samples.data() + per_row * y;
    for (std::size_t i = 0; i < per_row; ++i) {
      dst[i] = depth == 16 ? static_cast<std::uint16_t>((src[2 * i] << 8) | src[2 * i + 1])
                           : src[i];
    }
  }
  return raw;
}

void write_png_raw(const std::filesystem::path& path, const RawPng& raw) {
  FilePtr file(std::fopen(path.string().c_str(), "wb"));
  if (!file) throw Error(ErrorCode::Io, "cannot open file for writing: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::Io, "libpng initialization failed");
  }
  const int bytes = raw.bit_depth == 16 ? 2 : 1;
  const std::size_t per_row = static_cast<std::size_t>(raw.width) * raw.channels;
  std::vector<png_byte> buffer(per_row * bytes * raw.height);
  for (std::size_t i = 0; i < raw.samples.size(); ++i) {
    if (bytes == 2) {
      buffer[2 * i] = static_cast<png_byte>(raw.samples[i] >> 8);
      buffer[2 * i + 1] = static_cast<png_byte>(raw.samples[i] & 0xFF);
    } else {
      buffer[i] = static_cast<png_byte>(raw.samples[i]);
    }
  }
  std::vector<png_bytep> rows(raw.height);
  for (int y = 0; y < raw.height; ++y) rows[y] = buffer.data() + per_row * bytes * y;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::Io, "failed to write PNG: " + path.string());
  }
  int color = PNG_COLOR_TYPE_GRAY;
  if (raw.channels == 3) color = PNG_COLOR_TYPE_RGB;
  if (raw.channels == 4) color = PNG_COLOR_TYPE_RGB_ALPHA;
  png_init_io(png, file.get());
  png_set_IHDR(png, info, raw.width, raw.height, raw.bit_depth, color, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Bytes left in a seekable stream, or max() if the stream cannot seek. Lets
// readers reject absurd headers before allocating.
std::uintmax_t remaining_bytes(std::istream& in) {
  const auto here = in.tellg();
  if (here == std::istream::pos_type(-1)) return std::numeric_limits<std::uintmax_t>::max();
  in.seekg(0, std::ios::end);
  const auto end = in.tellg();
  in.seekg(here);
  if (end == std::istream::pos_type(-1)) return std::numeric_limits<std::uintmax_t>::max();
  return static_cast<std::uintmax_t>(end - here);
}

}  // namespace

// ---- PFM -------------------------------------------------------------------

FloatImage read_pfm(std::istream& in) {
  std::string magic;
  FloatImage img;
  double scale = 0.0;
  if (!(in >> magic) || (magic != "PF" && magic != "Pf")) {
    throw Error(ErrorCode::MalformedHeader, "PFM: missing PF/Pf magic");
  }
  if (!(in >> img.width >> img.height >> scale) || img.width <= 0 || img.height <= 0 ||
      scale == 0.0 || !std::isfinite(scale)) {
    throw Error(ErrorCode::MalformedHeader, "PFM: invalid size or scale");
  }
  const int sep = in.get();
  if (sep != '\n' && sep != ' ' && sep != '\r' && sep != '\t') {
    throw Error(ErrorCode::MalformedHeader, "PFM: missing separator after header");
  }
  if (sep == '\r' && in.peek() == '\n') in.get();
  img.channels = magic == "PF" ? 3 : 1;
  const std::size_t row_len = static_cast<std::size_t>(img.width) * img.channels;
  const std::size_t count = row_len * img.height;
  if (remaining_bytes(in) / 4 < count) {
    throw Error(ErrorCode::TruncatedPayload, "PFM: payload shorter than header declares");
  }
  std::vector<std::uint32_t> words(count);
  in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(count * 4));
  if (static_cast<std::size_t>(in.gcount()) != count * 4) {
    throw Error(ErrorCode::TruncatedPayload, "PFM: payload shorter than header declares");
  }
  const bool file_little = scale < 0.0;
  const bool host_little = std::endian::native == std::endian::little;
  img.data.resize(count);
  for (int row = 0; row < img.height; ++row) {
    // File rows run bottom-up.
    const std::uint32_t* src = words.data() + row_len * (img.height - 1 - row);
    float* dst = img.data.data() + row_len * row;
    for (std::size_t i = 0; i < row_len; ++i) {
      const std::uint32_t w = file_little == host_little ? src[i] : byteswap32(src[i]);
      dst[i] = std::bit_cast<float>(w);
    }
  }
  return img;
}

FloatImage read_pfm(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_pfm(in);
  } catch (const Error& e) {
    throw Error(e.code(), std::string(e.what()) + " (" + path.string() + ")");
  }
}

void write_pfm(std::ostream& out, const FloatImage& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw Error(ErrorCode::InvalidArgument, "PFM supports 1 or 3 channels");
  }
  const std::size_t row_len = static_cast<std::size_t>(image.width) * image.channels;
  if (image.data.size() != row_len * image.height) {
    throw Error(ErrorCode::InvalidArgument, "PFM: buffer does not match image size");
  }
  out << (image.channels == 3 ? "PF" : "Pf") << '\n'
      << image.width << ' ' << image.height << '\n'
      << "-1.0\n";
  for (int row = image.height - 1; row >= 0; --row) {
    for (std::size_t i = 0; i < row_len; ++i) {
      put_u32_le(out, std::bit_cast<std::uint32_t>(image.data[row_len * row + i]));
    }
  }
  if (!out) throw Error(ErrorCode::Io, "PFM: write failed");
}

void write_pfm(const std::filesystem::path& path, const FloatImage& image) {
  auto out = open_out(path);
  write_pfm(out, image);
}

NormalMap normals_from_image(const FloatImage& image, std::span<const std::uint8_t> mask) {
  if (image.channels != 3) {
    throw Error(ErrorCode::InvalidArgument, "normal maps need 3 channels");
  }
  const std::size_t n = static_cast<std::size_t>(image.width) * image.height;
  if (!mask.empty() && mask.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "mask size does not match the normal map");
  }
  std::vector<Vec3> normals(n, Vec3::Zero());
  std::vector<std::uint8_t> valid(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 v(image.data[3 * i], image.data[3 * i + 1], image.data[3 * i + 2]);
    if (!v.allFinite() || v.isZero(0.0)) continue;
    if (!mask.empty() && !mask[i]) continue;
    normals[i] = v;
    valid[i] = 1;
  }
  return NormalMap(image.width, image.height, std::move(normals), std::move(valid));
}

FloatImage image_from_normals(const NormalMap& nmap) {
  FloatImage img{nmap.width(), nmap.height(), 3, {}};
  img.data.reserve(3 * nmap.normals().size());
  for (const Vec3& n : nmap.normals()) {
    for (int c = 0; c < 3; ++c) img.data.push_back(static_cast<float>(n[c]));
  }
  return img;
}

FloatImage image_from_depth(const DepthMap& depth) {
  FloatImage img{depth.width(), depth.height(), 1, {}};
  img.data.resize(depth.size());
  for (std::size_t i = 0; i < depth.size(); ++i) {
    img.data[i] = depth.mask()[i] ? static_cast<float>(depth.values()[i]) : 0.0f;
  }
  return img;
}

DepthMap depth_from_image(const FloatImage& image) {
  if (image.channels != 1) throw Error(ErrorCode::InvalidArgument, "depth maps need 1 channel");
  DepthMap out(image.width, image.height);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double z = image.data[i];
    if (std::isfinite(z) && z > 0.0) {
      out.values()[i] = z;
      out.mask()[i] = 1;
    }
  }
  return out;
}

// ---- PNG-backed formats ----------------------------------------------------

NormalMap read_png16_normals(const std::filesystem::path& path, bool flip_z,
                             std::span<const std::uint8_t> mask) {
  const RawPng raw = read_png_raw(path);
  if (raw.bit_depth != 16) {
    throw Error(ErrorCode::UnsupportedBitDepth,
                "normal PNG must be 16-bit: " + path.string() + " has " +
                    std::to_string(raw.bit_depth) + " bits");
  }
  if (raw.channels < 3) {
    throw Error(ErrorCode::InvalidArgument, "normal PNG must have RGB channels: " + path.string());
  }
  const std::size_t n = static_cast<std::size_t>(raw.width) * raw.height;
  if (!mask.empty() && mask.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "mask size does not match the normal map");
  }
  std::vector<Vec3> normals(n, Vec3::Zero());
  std::vector<std::uint8_t> valid(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint16_t* px = raw.samples.data() + i * raw.channels;
    if (px[0] == 0 && px[1] == 0 && px[2] == 0) continue;
    if (!mask.empty() && !mask[i]) continue;
    Vec3 v;
    for (int c = 0; c < 3; ++c) v[c] = px[c] / 65535.0 * 2.0 - 1.0;
    if (flip_z) v.z() = -v.z();
    const double norm = v.norm();
    if (!(norm > 0.0)) continue;
    normals[i] = v / norm;
    valid[i] = 1;
  }
  return NormalMap(raw.width, raw.height, std::move(normals), std::move(valid));
}

void write_png16_normals(const std::filesystem::path& path, const NormalMap& nmap) {
  RawPng raw{nmap.width(), nmap.height(), 3, 16, {}};
  raw.samples.resize(3 * nmap.normals().size(), 0);
  for (std::size_t i = 0; i < nmap.normals().size(); ++i) {
    if (!nmap.mask()[i]) continue;
    for (int c = 0; c < 3; ++c) {
      const double q = std::round((nmap.normals()[i][c] + 1.0) * 0.5 * 65535.0);
      raw.samples[3 * i + c] = static_cast<std::uint16_t>(std::clamp(q, 0.0, 65535.0));
    }
  }
  write_png_raw(path, raw);
}

std::vector<std::uint8_t> read_mask_png(const std::filesystem::path& path, int& width,
                                        int& height) {
  const RawPng raw = read_png_raw(path);
  width = raw.width;
  height = raw.height;
  const std::size_t n = static_cast<std::size_t>(raw.width) * raw.height;
  std::vector<std::uint8_t> mask(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < raw.channels; ++c) {
      if (raw.samples[i * raw.channels + c] != 0) mask[i] = 1;
    }
  }
  return mask;
}

void write_mask_png(const std::filesystem::path& path, int width, int height,
                    std::span<const std::uint8_t> mask) {
  RawPng raw{width, height, 1, 8, {}};
  raw.samples.resize(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) raw.samples[i] = mask[i] ? 255 : 0;
  write_png_raw(path, raw);
}

NormalMap read_normals(const std::filesystem::path& path, const std::filesystem::path& mask_path) {
  std::vector<std::uint8_t> mask;
  int mw = 0;
  int mh = 0;
  if (!mask_path.empty()) mask = read_mask_png(mask_path, mw, mh);
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return read_png16_normals(path, false, mask);
  if (ext == ".pfm") return normals_from_image(read_pfm(path), mask);
  throw Error(ErrorCode::InvalidArgument, "unsupported normal map format: " + path.string());
}

// ---- JSON --------------------------------------------------------------------

CameraIntrinsics read_intrinsics(const std::filesystem::path& path) {
  auto in = open_in(path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedHeader,
                "intrinsics file is not valid JSON: " + path.string() + ": " + e.what());
  }
  CameraIntrinsics intr;
  for (auto [key, field] : {std::pair{"fx", &intr.fx}, std::pair{"fy", &intr.fy},
                            std::pair{"cx", &intr.cx}, std::pair{"cy", &intr.cy}}) {
    if (!doc.is_object() || !doc.contains(key) || !doc[key].is_number()) {
      throw Error(ErrorCode::MalformedHeader, std::string("intrinsics file lacks numeric key '") +
                                                  key + "': " + path.string());
    }
    *field = doc[key].get<double>();
  }
  intr.validate();
  return intr;
}

void write_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& intr) {
  nlohmann::ordered_json doc;
  doc["fx"] = intr.fx;
  doc["fy"] = intr.fy;
  doc["cx"] = intr.cx;
  doc["cy"] = intr.cy;
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
}

// ---- Labels ------------------------------------------------------------------

std::vector<std::uint32_t> label_image(const PixelGraph& graph, const Partition& partition) {
  std::vector<std::uint32_t> labels(static_cast<std::size_t>(graph.width()) * graph.height(),
                                    kInvalidLabel);
  for (VertexId v = 0; v < graph.vertex_count(); ++v) {
    const Pixel p = graph.pixel(v);
    labels[static_cast<std::size_t>(p.v) * graph.width() + p.u] = partition.label(v);
  }
  return labels;
}

void write_labels_raw(const std::filesystem::path& path, int width, int height,
                      std::span<const std::uint32_t> labels) {
  if (labels.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::InvalidArgument, "label buffer does not match image size");
  }
  auto out = open_out(path);
  put_u32_le(out, static_cast<std::uint32_t>(width));
  put_u32_le(out, static_cast<std::uint32_t>(height));
  for (std::uint32_t l : labels) put_u32_le(out, l);
  if (!out) throw Error(ErrorCode::Io, "failed to write labels: " + path.string());
}

std::vector<std::uint32_t> read_labels_raw(const std::filesystem::path& path, int& width,
                                           int& height) {
  auto in = open_in(path);
  unsigned char header[8];
  in.read(reinterpret_cast<char*>(header), 8);
  if (in.gcount() != 8) throw Error(ErrorCode::MalformedHeader, "label file header truncated");
  width = static_cast<int>(get_u32_le(header));
  height = static_cast<int>(get_u32_le(header + 4));
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (remaining_bytes(in) / 4 < n) {
    throw Error(ErrorCode::TruncatedPayload, "label payload truncated: " + path.string());
  }
  std::vector<unsigned char> bytes(4 * n);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
    throw Error(ErrorCode::TruncatedPayload, "label payload truncated: " + path.string());
  }
  std::vector<std::uint32_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = get_u32_le(bytes.data() + 4 * i);
  return labels;
}

std::array<std::uint8_t, 3> label_color(std::uint32_t label) noexcept {
  if (label == kInvalidLabel) return {0, 0, 0};
  std::uint64_t h = label + 0x9E3779B97F4A7C15ull;  // splitmix64
  h = (h ^ (h >> 30)) * 0xBF58476D1CE4E5B9ull;
  h = (h ^ (h >> 27)) * 0x94D049BB133111EBull;
  h ^= h >> 31;
  return {static_cast<std::uint8_t>(48 + (h & 0xFF) % 208),
          static_cast<std::uint8_t>(48 + ((h >> 8) & 0xFF) % 208),
          static_cast<std::uint8_t>(48 + ((h >> 16) & 0xFF) % 208)};
}

void write_labels_png(const std::filesystem::path& path, int width, int height,
                      std::span<const std::uint32_t> labels) {
  RawPng raw{width, height, 3, 8, {}};
  raw.samples.resize(3 * labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto rgb = label_color(labels[i]);
    for (int c = 0; c < 3; ++c) raw.samples[3 * i + c] = rgb[c];
  }
  write_png_raw(path, raw);
}

// ---- Diagnostics -------------------------------------------------------------

std::string diagnostics_line(const IterationRecord& record) {
  nlohmann::ordered_json j;
  j["t"] = record.t;
  j["E_t"] = record.energy;
  j["component_count"] = record.component_count;
  j["merge_performed"] = record.merge_performed;
  j["wall_ms"] = record.wall_ms;
  j["cg_iterations"] = record.cg_iterations;
  return j.dump();
}

void write_diagnostics(const std::filesystem::path& path,
                       std::span<const IterationRecord> records) {
  auto out = open_out(path);
  for (const IterationRecord& r : records) out << diagnostics_line(r) << '\n';
  if (!out) throw Error(ErrorCode::Io, "failed to write diagnostics: " + path.string());
}

}  // namespace normint::io
