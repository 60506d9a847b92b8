#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "normint/error.hpp"
#include "normint/io.hpp"
#include "normint/synth.hpp"
#include "support.hpp"

using namespace normint;
using normint::testing::TempDir;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

std::string bytes_of(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

double max_angle(const NormalMap& a, const NormalMap& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.normals().size(); ++i) {
    if (!a.mask()[i]) continue;
    m = std::max(m, relative_normal_angle(a.normals()[i], b.normals()[i]));
  }
  return m;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("pfm single pixel layout") {
  std::stringstream ss;
  io::write_pfm(ss, io::FloatImage{1, 1, 1, {3.25f}});
  const std::string s = ss.str();
  CHECK(s == std::string("Pf\n1 1\n-1.0\n") + std::string("\x00\x00\x50\x40", 4));
}

TEST_CASE("pfm round trip and bottom-up rows") {
  io::FloatImage img{3, 2, 3, {}};
  for (int i = 0; i < 18; ++i) img.data.push_back(static_cast<float>(i) * 0.5f - 2.0f);
  std::stringstream ss;
  io::write_pfm(ss, img);
  const std::string s = ss.str();
  // The first stored row is the bottom image row.
  float first;
  std::memcpy(&first, s.data() + s.size() - 18 * 4, 4);
  CHECK(first == img.data[9]);
  std::stringstream back(s);
  CHECK(io::read_pfm(back) == img);
}

TEST_CASE("pfm big-endian payload") {
  std::string s = "PF\n1 1\n1.0\n";
  for (float f : {1.0f, -2.0f, 0.5f}) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    for (int b = 3; b >= 0; --b) s.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
  }
  std::stringstream ss(s);
  const io::FloatImage img = io::read_pfm(ss);
  CHECK(img.channels == 3);
  CHECK(img.data == std::vector<float>{1.0f, -2.0f, 0.5f});
}

TEST_CASE("pfm errors") {
  auto read = [](std::string s) {
    return [s] {
      std::stringstream ss(s);
      (void)io::read_pfm(ss);
    };
  };
  CHECK(code_of(read("P6\n1 1\n-1.0\n")) == ErrorCode::MalformedHeader);
  CHECK(code_of(read("Pf\n1\n")) == ErrorCode::MalformedHeader);
  CHECK(code_of(read("Pf\n0 1\n-1.0\n")) == ErrorCode::MalformedHeader);
  CHECK(code_of(read("Pf\n2 1\n-1.0\n" + std::string(5, '\0'))) == ErrorCode::TruncatedPayload);
  CHECK(code_of([] { (void)io::read_pfm("/nonexistent/x.pfm"); }) == ErrorCode::Io);
}

TEST_CASE("normals from image mask zero pixels") {
  io::FloatImage img{2, 1, 3, {0, 0, -1, 0, 0, 0}};
  const NormalMap n = io::normals_from_image(img);
  CHECK(n.valid(0, 0));
  CHECK_FALSE(n.valid(1, 0));
  const std::vector<std::uint8_t> mask{0, 1};
  CHECK(io::normals_from_image(img, mask).valid_count() == 0);
  CHECK(io::image_from_normals(n) == img);
}

TEST_CASE("png16 normals") {
  TempDir dir("png16");
  SUBCASE("axis normal encodes within one step") {
    const NormalMap n = testing::uniform_normals(3, 2);
    io::write_png16_normals(dir / "n.png", n);
    const NormalMap back = io::read_png16_normals(dir / "n.png");
    CHECK(back.valid_count() == 6);
    for (const Vec3& v : back.normals()) CHECK((v - Vec3(0, 0, -1)).norm() < 2.0 / 65535.0);
  }
  SUBCASE("sphere round trip") {
    const NormalMap n = render_scene(SceneSpec::defaults(SceneKind::SpherePatch, 64)).normals;
    io::write_png16_normals(dir / "s.png", n);
    const NormalMap back = io::read_png16_normals(dir / "s.png");
    CHECK(back.valid_count() == n.valid_count());
    CHECK(max_angle(n, back) < testing::deg(0.005));
  }
  SUBCASE("masked pixels decode as invalid and z can be flipped") {
    const NormalMap n = testing::make_normals(
        2, 2, [](int, int) { return Vec3(0, 0, -1); }, [](int u, int v) { return u != v; });
    io::write_png16_normals(dir / "m.png", n);
    const NormalMap back = io::read_png16_normals(dir / "m.png");
    CHECK(back.valid_count() == 2);
    CHECK_FALSE(back.valid(0, 0));
    const NormalMap flipped = io::read_png16_normals(dir / "m.png", true);
    CHECK(flipped.normal(1, 0).z() > 0.99);
  }
  SUBCASE("8-bit files are rejected") {
    const std::vector<std::uint8_t> m{1, 1, 1, 1};
    io::write_mask_png(dir / "eight.png", 2, 2, m);
    CHECK(code_of([&] { (void)io::read_png16_normals(dir / "eight.png"); }) ==
          ErrorCode::UnsupportedBitDepth);
  }
}

TEST_CASE("mask png round trip and read_normals") {
  TempDir dir("mask");
  const std::vector<std::uint8_t> m{1, 0, 0, 1, 1, 1};
  io::write_mask_png(dir / "mask.png", 3, 2, m);
  int w = 0, h = 0;
  CHECK(io::read_mask_png(dir / "mask.png", w, h) == m);
  CHECK(w == 3);
  CHECK(h == 2);

  io::write_pfm(dir / "n.pfm", io::image_from_normals(testing::uniform_normals(3, 2)));
  CHECK(io::read_normals(dir / "n.pfm").valid_count() == 6);
  CHECK(io::read_normals(dir / "n.pfm", dir / "mask.png").valid_count() == 4);
  io::write_mask_png(dir / "small.png", 2, 2, {m.data(), 4});
  CHECK_THROWS_AS(io::read_normals(dir / "n.pfm", dir / "small.png"), Error);
  CHECK_THROWS_AS(io::read_normals(dir / "n.tiff"), Error);
}

TEST_CASE("depth images") {
  DepthMap d(2, 1);
  d.at(0, 0) = 1.5;
  d.mask()[0] = 1;
  const io::FloatImage img = io::image_from_depth(d);
  CHECK(img.channels == 1);
  const DepthMap back = io::depth_from_image(img);
  CHECK(back.valid(0, 0));
  CHECK(back.at(0, 0) == 1.5);
  CHECK_FALSE(back.valid(1, 0));
}

TEST_CASE("raw labels") {
  TempDir dir("labels");
  const std::vector<std::uint32_t> labels{0, 1, io::kInvalidLabel, 258};
  io::write_labels_raw(dir / "l.raw", 2, 2, labels);
  const std::string bytes = bytes_of(dir / "l.raw");
  REQUIRE(bytes.size() == 8 + 16);
  CHECK(bytes.substr(0, 8) == std::string("\x02\x00\x00\x00\x02\x00\x00\x00", 8));
  CHECK(bytes.substr(20, 4) == std::string("\x02\x01\x00\x00", 4));
  int w = 0, h = 0;
  CHECK(io::read_labels_raw(dir / "l.raw", w, h) == labels);
  CHECK(w == 2);
  std::ofstream(dir / "short.raw", std::ios::binary) << std::string(12, '\x01');
  CHECK_THROWS_AS(io::read_labels_raw(dir / "short.raw", w, h), Error);
}

TEST_CASE("label colors") {
  CHECK(io::label_color(io::kInvalidLabel) == std::array<std::uint8_t, 3>{0, 0, 0});
  std::set<std::array<std::uint8_t, 3>> seen;
  for (std::uint32_t l = 0; l < 200; ++l) {
    const auto c = io::label_color(l);
    CHECK(c == io::label_color(l));
    for (auto ch : c) CHECK(ch >= 48);
    seen.insert(c);
  }
  CHECK(seen.size() == 200);
}

TEST_CASE("label image follows the partition") {
  const NormalMap n = testing::make_normals(
      3, 1, [](int, int) { return Vec3(0, 0, -1); }, [](int u, int) { return u != 1; });
  const PixelGraph g = build_pixel_graph(n, Connectivity::Four);
  const Partition p = form_components(g, n, std::nullopt);
  const auto img = io::label_image(g, p);
  CHECK(img == std::vector<std::uint32_t>{0, io::kInvalidLabel, 1});
}

TEST_CASE("intrinsics json") {
  TempDir dir("intr");
  const CameraIntrinsics intr{100.5, 99.0, 31.5, 30.25};
  io::write_intrinsics(dir / "i.json", intr);
  const CameraIntrinsics back = io::read_intrinsics(dir / "i.json");
  CHECK(back.fx == intr.fx);
  CHECK(back.fy == intr.fy);
  CHECK(back.cx == intr.cx);
  CHECK(back.cy == intr.cy);

  std::ofstream(dir / "partial.json") << R"({"fx": 1, "fy": 1, "cx": 0})";
  CHECK(code_of([&] { (void)io::read_intrinsics(dir / "partial.json"); }) ==
        ErrorCode::MalformedHeader);
  try {
    (void)io::read_intrinsics(dir / "missing.json");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
    CHECK(std::string(e.what()).find("missing.json") != std::string::npos);
  }
}

TEST_CASE("diagnostics lines") {
  const IterationRecord r{3, 0.5, 7, true, 1.25, 42};
  const auto j = nlohmann::ordered_json::parse(io::diagnostics_line(r));
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"t", "E_t", "component_count", "merge_performed",
                                         "wall_ms", "cg_iterations"});
  CHECK(j["t"] == 3);
  CHECK(j["E_t"] == 0.5);
  CHECK(j["merge_performed"] == true);
  CHECK(j["cg_iterations"] == 42);

  TempDir dir("diag");
  const std::vector<IterationRecord> recs{r, r};
  io::write_diagnostics(dir / "d.jsonl", recs);
  std::ifstream in(dir / "d.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    CHECK(line == io::diagnostics_line(r));
    ++lines;
  }
  CHECK(lines == 2);
}

}
