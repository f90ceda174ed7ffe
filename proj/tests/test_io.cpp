#include "fovnoise/config_io.hpp"
#include "fovnoise/image_io.hpp"
#include "fovnoise/synthetic.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

using namespace fovnoise;
using doctest::Approx;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path = fs::temp_directory_path() / ("fovnoise_io_" + std::to_string(::getpid()));
  TempDir() { fs::create_directories(path); }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("viewing setup json") {
  const auto s = ViewingSetup::reference_display();
  const json j = s;
  CHECK(j["resolution"][0] == 3840);
  CHECK(j["size_m"][1].get<double>() == Approx(s.height_m));
  const auto back = j.get<ViewingSetup>();
  CHECK(back.resolution == s.resolution);
  CHECK(back.distance_m == s.distance_m);
  CHECK(back.gaze_x == s.gaze_x);

  const auto centered = json::parse(R"({"resolution":[101,51],"size_m":[1.0,0.5],"distance_m":0.7})").get<ViewingSetup>();
  CHECK(centered.gaze_x == 50.0);
  CHECK(centered.gaze_y == 25.0);

  CHECK_THROWS_AS(json::parse(R"({"resolution":[10,10]})").get<ViewingSetup>(), ConfigError);
  CHECK_THROWS_AS(json::parse(R"({"resolution":[10,10],"size_m":[1,1],"distance_m":-1})").get<ViewingSetup>(),
                  ConfigError);
  CHECK_THROWS_AS(json::parse(R"({"resolution":[10,10],"size_m":[1,1],"distance_m":1,"gaze":[50,5]})").get<ViewingSetup>(),
                  ConfigError);
}

TEST_CASE("enhance config json") {
  EnhanceConfig c = EnhanceConfig::calibrated(0.57);
  c.seed = 99;
  c.impulses_per_kernel = 64;
  CHECK(json(c).get<EnhanceConfig>() == c);
  const auto partial = json::parse(R"({"blur_rate":0.11,"s_k":10})").get<EnhanceConfig>();
  CHECK(partial.f_e == 0.15);
  CHECK(partial.s_k == 10.0);
  CHECK(partial.s_f == 3.45);
  CHECK_THROWS_AS(json::parse(R"({"f_e":"high"})").get<EnhanceConfig>(), ConfigError);
}

TEST_CASE("sidecar files") {
  TempDir tmp;
  Sidecar sc{ViewingSetup::centered({64, 32}, 0.5, 0.25, 0.6), EnhanceConfig::calibrated(0.34)};
  save_sidecar(tmp.path / "a.json", sc);
  const auto back = load_sidecar(tmp.path / "a.json");
  CHECK(back.setup.resolution == sc.setup.resolution);
  REQUIRE(back.config.has_value());
  CHECK(*back.config == *sc.config);

  std::ofstream(tmp.path / "bare.json") << json(sc.setup).dump();
  const auto bare = load_sidecar(tmp.path / "bare.json");
  CHECK_FALSE(bare.config.has_value());
  CHECK(bare.setup.width_m == 0.5);

  std::ofstream(tmp.path / "broken.json") << "{";
  CHECK_THROWS_AS(load_sidecar(tmp.path / "broken.json"), ConfigError);
  CHECK_THROWS_AS(load_sidecar(tmp.path / "missing.json"), IoError);
  CHECK_THROWS_AS(load_acuity_csv(tmp.path / "missing.csv"), IoError);
}

TEST_CASE("png round trips") {
  TempDir tmp;
  const auto f = synthetic_image({33, 17}, 3);
  SUBCASE("8-bit is within half a code") {
    write_image(tmp.path / "a.png", f, 8);
    const auto g = read_image(tmp.path / "a.png");
    REQUIRE(g.dims() == f.dims());
    for (int c = 0; c < 3; ++c) CHECK((g.channel(c) - f.channel(c)).abs().maxCoeff() <= 0.5f / 255.0f + 1e-6f);
    // re-encoding a decoded image is lossless
    write_image(tmp.path / "b.png", g, 8);
    CHECK(read_image(tmp.path / "b.png") == g);
  }
  SUBCASE("16-bit") {
    write_image(tmp.path / "a.png", f, 16);
    const auto g = read_image(tmp.path / "a.png");
    for (int c = 0; c < 3; ++c) CHECK((g.channel(c) - f.channel(c)).abs().maxCoeff() <= 0.5f / 65535.0f + 1e-6f);
  }
  SUBCASE("in memory") {
    const auto bytes = encode_png(f);
    CHECK(bytes.size() > 8);
    CHECK(bytes[1] == 'P');
    CHECK(decode_png(bytes).dims() == f.dims());
    CHECK_THROWS_AS(decode_png({1, 2, 3}), IoError);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(read_image(tmp.path / "missing.png"), IoError);
    CHECK_THROWS_AS(write_image(tmp.path / "x.bmp", f), IoError);
    CHECK_THROWS_AS(write_image(tmp.path / "x.png", f, 12), ConfigError);
  }
}

TEST_CASE("exr") {
  TempDir tmp;
  SUBCASE("field round trip") {
    FieldMap sigma(20, 30);
    for (Eigen::Index y = 0; y < 20; ++y)
      for (Eigen::Index x = 0; x < 30; ++x) sigma(y, x) = 0.25f * float(x) + 0.1f * float(y);
    write_exr_field(tmp.path / "s.exr", sigma);
    CHECK((read_exr_field(tmp.path / "s.exr") == sigma).all());
  }
  SUBCASE("images are linear on disk") {
    const auto f = Frame::gray(FieldMap::Constant(8, 8, 0.5f));
    write_image(tmp.path / "g.exr", f);
    const auto g = read_image(tmp.path / "g.exr");
    CHECK(g.channel(1)(3, 3) == Approx(0.5).epsilon(2e-3));
  }
}
