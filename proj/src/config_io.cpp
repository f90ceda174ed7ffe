#include "fovnoise/config_io.hpp"

#include "fovnoise/errors.hpp"

#include <fstream>
#include <sstream>
#include <string>

namespace fovnoise {

using nlohmann::json;

void to_json(json& j, const ViewingSetup& s) {
  j = json{{"resolution", {s.resolution.width, s.resolution.height}},
           {"size_m", {s.width_m, s.height_m}},
           {"distance_m", s.distance_m},
           {"gaze", {s.gaze_x, s.gaze_y}}};
}

void from_json(const json& j, ViewingSetup& s) {
  try {
    const auto& res = j.at("resolution");
    const auto& size = j.at("size_m");
    s.resolution = {res.at(0).get<Eigen::Index>(), res.at(1).get<Eigen::Index>()};
    s.width_m = size.at(0).get<double>();
    s.height_m = size.at(1).get<double>();
    s.distance_m = j.at("distance_m").get<double>();
    if (j.contains("gaze")) {
      s.gaze_x = j["gaze"].at(0).get<double>();
      s.gaze_y = j["gaze"].at(1).get<double>();
    } else {
      s.center_gaze();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("viewing setup: ") + e.what());
  }
  s.validate();
}

void to_json(json& j, const EnhanceConfig& c) {
  j = json{{"blur_rate", c.blur_rate}, {"f_e", c.f_e},     {"s_k", c.s_k},
           {"s_f", c.s_f},             {"a", c.a},         {"impulses_per_kernel", c.impulses_per_kernel},
           {"seed", c.seed},           {"fovea_radius", c.fovea_radius}};
}

void from_json(const json& j, EnhanceConfig& c) {
  try {
    const double blur = j.value("blur_rate", EnhanceConfig{}.blur_rate);
    c = EnhanceConfig::calibrated(blur);
    c.f_e = j.value("f_e", c.f_e);
    c.s_k = j.value("s_k", c.s_k);
    c.s_f = j.value("s_f", c.s_f);
    c.a = j.value("a", c.a);
    c.impulses_per_kernel = j.value("impulses_per_kernel", c.impulses_per_kernel);
    c.seed = j.value("seed", c.seed);
    c.fovea_radius = j.value("fovea_radius", c.fovea_radius);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("enhance config: ") + e.what());
  }
  c.validate();
}

Sidecar load_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  Sidecar out;
  if (j.contains("setup")) {
    out.setup = j["setup"].get<ViewingSetup>();
    if (j.contains("enhance")) out.config = j["enhance"].get<EnhanceConfig>();
  } else {
    out.setup = j.get<ViewingSetup>();
  }
  return out;
}

void save_sidecar(const std::filesystem::path& path, const Sidecar& sidecar) {
  json j{{"setup", sidecar.setup}};
  if (sidecar.config) j["enhance"] = *sidecar.config;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

AcuityLimits read_acuity_csv(std::istream& in) {
  std::vector<AcuityLimits::Knot> knots;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    for (char& ch : line)
      if (ch == ',') ch = ' ';
    std::istringstream ls(line);
    AcuityLimits::Knot k{};
    if (!(ls >> k.eccentricity >> k.t_low >> k.t_high)) {
      if (first) {
        first = false;
        continue;
      }
      throw ConfigError("acuity csv: malformed row: " + line);
    }
    first = false;
    knots.push_back(k);
  }
  return AcuityLimits(std::move(knots));
}

AcuityLimits load_acuity_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_acuity_csv(in);
}

}  // namespace fovnoise
