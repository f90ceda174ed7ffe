#include "fovnoise/calib/http.hpp"
#include "fovnoise/calib/service.hpp"
#include "fovnoise/config_io.hpp"
#include "fovnoise/image_io.hpp"
#include "fovnoise/synthetic.hpp"

#include <doctest.h>
#include <httplib.h>

#include <filesystem>
#include <thread>
#include <unistd.h>

using namespace fovnoise;
using namespace fovnoise::calib;
using doctest::Approx;
using nlohmann::json;

namespace {

StimulusStore store() {
  StimulusStore s;
  s.add("forest", synthetic_image({320, 180}, 1));
  s.add("city", synthetic_image({320, 180}, 2));
  return s;
}

PreviewOptions small() { return PreviewOptions{160, false}; }

SessionRequest request(AdjustMode mode, double blur, const std::string& stim = "forest") {
  SessionRequest r;
  r.stimulus = stim;
  r.mode = mode;
  r.blur_rate = blur;
  return r;
}

}  // namespace

TEST_CASE("modes and ranges") {
  CHECK(parse_mode("s_k") == AdjustMode::s_k);
  CHECK(to_string(AdjustMode::blur_rate) == "blur_rate");
  CHECK(parse_condition("contrast_only") == Condition::contrast_only);
  CHECK_THROWS_AS(parse_mode("gain"), ConfigError);
  CHECK(range_of(AdjustMode::f_e).hi == 0.4);
  CHECK(range_of(AdjustMode::s_k).hi == 45.0);
  EnhanceConfig c = EnhanceConfig::calibrated(0.34);
  apply_value(c, AdjustMode::blur_rate, 0.57);
  CHECK(c.blur_rate == 0.57);
  CHECK(c.s_k == 18.68);
  apply_value(c, AdjustMode::s_f, 3.0);
  CHECK(value_of(c, AdjustMode::s_f) == 3.0);
}

TEST_CASE("sessions") {
  CalibService svc(store(), small());
  CHECK(svc.stimuli() == std::vector<std::string>{"city", "forest"});

  SUBCASE("initial values come from the nearest calibrated row") {
    CHECK(svc.create_session(request(AdjustMode::f_e, 0.34)).value() == 0.23);
    CHECK(svc.create_session(request(AdjustMode::s_k, 0.11)).value() == 22.4);
    CHECK(svc.create_session(request(AdjustMode::s_f, 0.57)).value() == 2.19);
    CHECK(svc.create_session(request(AdjustMode::s_k, 0.2)).value() == 22.4);
    const auto s = svc.create_session(request(AdjustMode::f_e, 0.34));
    CHECK(s.setup.resolution == Dims{320, 180});
    CHECK(s.setup.gaze_x == 159.5);
    CHECK(s.setup.distance_m == 0.715);
  }
  SUBCASE("unknown stimulus and session") {
    CHECK_THROWS_AS(svc.create_session(request(AdjustMode::f_e, 0.34, "nope")), NotFoundError);
    CHECK_THROWS_AS(svc.session("missing"), NotFoundError);
    CHECK_THROWS_AS(svc.set_param("missing", {0.0, {}}), NotFoundError);
  }
  SUBCASE("bad settings") {
    CHECK_THROWS_AS(svc.create_session(request(AdjustMode::f_e, 5.0)), ConfigError);
    auto r = request(AdjustMode::f_e, 0.34);
    r.setup = ViewingSetup::centered({100, 100}, 1.0, 1.0, 1.0);
    CHECK_THROWS_AS(svc.create_session(r), ConfigError);
  }
  SUBCASE("updates") {
    const auto s = svc.create_session(request(AdjustMode::s_k, 0.34));
    const auto a = svc.set_param(s.id, {0.0, {}});
    CHECK(a.value() == s.value());
    CHECK(a.history.size() == 1);
    CHECK(a.config == s.config);
    const auto b = svc.set_param(s.id, {2.5, {}});
    CHECK(b.value() == Approx(s.value() + 2.5));
    CHECK(svc.set_param(s.id, {{}, 100.0}).value() == 45.0);
    CHECK(svc.set_param(s.id, {{}, -3.0}).value() == 0.0);
    CHECK_THROWS_AS(svc.set_param(s.id, {1.0, 2.0}), ConfigError);
    CHECK_THROWS_AS(svc.set_param(s.id, {{}, {}}), ConfigError);
    const auto now = svc.session(s.id);
    CHECK(now.history.size() == 4);
    CHECK(now.history[1].parameter == "s_k");
    CHECK(now.history[2].value == 45.0);
    CHECK(now.history[0].time_ms <= now.history[3].time_ms);
    CHECK(replay(now.initial, now.mode, now.history) == now.config);
  }
  SUBCASE("accept freezes the session") {
    const auto s = svc.create_session(request(AdjustMode::f_e, 0.34));
    svc.set_param(s.id, {{}, 0.3});
    const auto acc = svc.accept(s.id);
    REQUIRE(acc.accepted.has_value());
    CHECK(*acc.accepted == 0.3);
    CHECK_THROWS_AS(svc.set_param(s.id, {0.01, {}}), ConflictError);
    CHECK_THROWS_AS(svc.accept(s.id), ConflictError);
  }
}

TEST_CASE("export") {
  CalibService svc(store(), small());
  CHECK(svc.export_json() == json::array());
  for (double v : {0.2, 0.2, 0.26}) {
    const auto s = svc.create_session(request(AdjustMode::f_e, 0.34));
    svc.set_param(s.id, {{}, v});
    svc.accept(s.id);
  }
  const auto lone = svc.create_session(request(AdjustMode::f_e, 0.34, "city"));
  svc.accept(lone.id);
  svc.create_session(request(AdjustMode::f_e, 0.34));  // not accepted, not exported

  const json e = svc.export_json();
  REQUIRE(e.size() == 2);
  const json& cell = e[0]["stimulus"] == "forest" ? e[0] : e[1];
  const json& single = e[0]["stimulus"] == "forest" ? e[1] : e[0];
  CHECK(cell["n"] == 3);
  CHECK(cell["mode"] == "f_e");
  CHECK(cell["blur_rate"].get<double>() == 0.34);
  CHECK(cell["mean"].get<double>() == Approx(0.22));
  CHECK(cell["sem"].get<double>() == Approx(0.02));
  CHECK(single["n"] == 1);
  CHECK(single["sem"].is_null());
}

TEST_CASE("previews") {
  CalibService svc(store(), small());
  const auto s = svc.create_session(request(AdjustMode::s_k, 0.57));
  const auto first = svc.preview(s.id, true);
  CHECK(first.version == 1);
  CHECK_FALSE(first.rendering);
  const Frame img = decode_png(first.png);
  REQUIRE(img.dims() == Dims{160, 90});

  SUBCASE("left half is the reference, test half mirrors it") {
    const Frame ref = resize_area(synthetic_image({320, 180}, 1), {160, 90});
    for (Eigen::Index y = 0; y < 90; y += 9)
      for (Eigen::Index x = 0; x < 80; x += 7) REQUIRE(std::abs(img.channel(1)(y, x) - ref.channel(1)(y, x)) <= 0.5f / 255.0f + 1e-6f);
    // the center of the test half is inside the fovea: untouched mirror
    for (Eigen::Index y = 40; y < 50; ++y) CHECK(img.channel(0)(y, 80) == img.channel(0)(y, 79));
  }
  SUBCASE("identical parameters give identical bytes") {
    svc.set_param(s.id, {{}, 30.0});
    const auto mid = svc.preview(s.id, true);
    CHECK(mid.version == 2);
    svc.set_param(s.id, {{}, s.value()});
    const auto back = svc.preview(s.id, true);
    CHECK(back.version == 3);
    CHECK(back.png == first.png);
    CHECK(svc.session(s.id).rendered_version == 3);
    CHECK(svc.cache_size() >= 2);
  }
  SUBCASE("repeated identical set_param") {
    svc.set_param(s.id, {{}, 12.0});
    const auto a = svc.preview(s.id, true);
    svc.set_param(s.id, {{}, 12.0});
    const auto b = svc.preview(s.id, true);
    CHECK(a.png == b.png);
  }
  SUBCASE("pure function of its inputs") {
    const auto& st = svc.session(s.id);
    const auto stim = synthetic_image({320, 180}, 1);
    const Frame direct = render_preview(stim, st.setup, st.config, st.mode, st.condition, small());
    CHECK(encode_png(direct) == first.png);
    const Frame again = render_preview(stim, st.setup, st.config, st.mode, st.condition, small());
    CHECK(direct == again);
  }
  SUBCASE("noise shows once the preview resolves the band") {
    // 640 px across +-20 deg: the periphery resolves several cycles per degree
    StimulusStore wide;
    wide.add("wide", synthetic_image({640, 360}, 4));
    CalibService big(std::move(wide), PreviewOptions{640, false});
    auto r = request(AdjustMode::s_k, 0.57, "wide");
    r.setup = ViewingSetup::centered({640, 360}, 0.52, 0.2925, 0.715);
    const auto full = big.create_session(r);
    const auto base = big.preview(full.id, true).png;
    big.set_param(full.id, {{}, 40.0});
    CHECK(big.preview(full.id, true).png != base);
    r.condition = Condition::contrast_only;
    const auto c = big.create_session(r);
    CHECK(big.preview(c.id, true).png != base);
  }
  SUBCASE("full resolution") {
    CalibService full(store(), PreviewOptions{1280, true});
    const auto t = full.create_session(request(AdjustMode::f_e, 0.34));
    CHECK(decode_png(full.preview(t.id, true).png).dims() == Dims{320, 180});
  }
}

TEST_CASE("directory corpus") {
  const auto dir = std::filesystem::temp_directory_path() / ("fovnoise_calib_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  write_image(dir / "alpha.png", synthetic_image({64, 36}, 3));
  std::ofstream(dir / "notes.txt") << "x";
  StimulusStore s;
  s.load_directory(dir);
  CHECK(s.ids() == std::vector<std::string>{"alpha"});
  CHECK(s.get("alpha")->dims() == Dims{64, 36});
  CHECK_THROWS_AS(s.get("beta"), NotFoundError);
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(s.load_directory(dir), IoError);
}

TEST_CASE("http api") {
  CalibService svc(store(), small());
  httplib::Server server;
  mount_routes(server, svc);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client cli("127.0.0.1", port);

  auto post = [&](const std::string& path, const json& body) { return cli.Post(path, body.dump(), "application/json"); };

  auto r = cli.Get("/v1/stimuli");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(json::parse(r->body).size() == 2);

  r = cli.Get("/v1/export");
  CHECK(json::parse(r->body) == json::array());

  r = post("/v1/sessions", {{"stimulus", "nope"}, {"mode", "f_e"}});
  CHECK(r->status == 404);
  CHECK(json::parse(r->body).contains("error"));
  r = post("/v1/sessions", {{"stimulus", "forest"}, {"mode", "bogus"}});
  CHECK(r->status == 400);
  r = cli.Post("/v1/sessions", "{not json", "application/json");
  CHECK(r->status == 400);

  r = post("/v1/sessions", {{"stimulus", "forest"}, {"mode", "f_e"}, {"blur_rate", 0.34}});
  REQUIRE(r->status == 201);
  const json created = json::parse(r->body);
  const std::string id = created["id"];
  CHECK(created["value"].get<double>() == 0.23);
  CHECK(created["preview"]["url"] == "/v1/sessions/" + id + "/preview.png");
  CHECK(r->get_header_value("Access-Control-Allow-Origin") == "*");

  r = post("/v1/sessions/" + id + "/param", {{"value", 0.9}});
  CHECK(r->status == 200);
  CHECK(json::parse(r->body)["value"].get<double>() == 0.4);
  r = post("/v1/sessions/" + id + "/param", {{"delta", -0.1}});
  CHECK(json::parse(r->body)["value"].get<double>() == Approx(0.3));
  r = post("/v1/sessions/" + id + "/param", json::object());
  CHECK(r->status == 400);
  r = post("/v1/sessions/missing/param", {{"delta", 0.1}});
  CHECK(r->status == 404);

  r = cli.Get("/v1/sessions/" + id + "/preview.png?wait=1");
  REQUIRE(r->status == 200);
  CHECK(r->get_header_value("Content-Type") == "image/png");
  CHECK(r->get_header_value("X-Preview-Version") == "3");
  CHECK(r->get_header_value("X-Preview-Rendering") == "false");
  CHECK(decode_png(std::vector<std::uint8_t>(r->body.begin(), r->body.end())).dims() == Dims{160, 90});

  r = cli.Get("/v1/sessions/" + id);
  CHECK(json::parse(r->body)["history"].size() == 2);

  r = post("/v1/sessions/" + id + "/accept", json::object());
  CHECK(r->status == 200);
  r = post("/v1/sessions/" + id + "/accept", json::object());
  CHECK(r->status == 409);
  r = post("/v1/sessions/" + id + "/param", {{"delta", 0.1}});
  CHECK(r->status == 409);

  r = cli.Get("/v1/export");
  const json e = json::parse(r->body);
  REQUIRE(e.size() == 1);
  CHECK(e[0]["mean"].get<double>() == Approx(0.3));

  r = cli.Options("/v1/sessions");
  CHECK(r->status == 204);

  server.stop();
  t.join();
}
