#pragma once

#include "fovnoise/noise_params.hpp"
#include "fovnoise/retina.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>

namespace fovnoise {

// {"resolution": [w, h], "size_m": [w, h], "distance_m": d, "gaze": [x, y]};
// gaze is optional and defaults to the image center.
void to_json(nlohmann::json& j, const ViewingSetup& s);
void from_json(const nlohmann::json& j, ViewingSetup& s);

// Missing f_e / s_k / s_f are taken from the calibration table at blur_rate.
void to_json(nlohmann::json& j, const EnhanceConfig& c);
void from_json(const nlohmann::json& j, EnhanceConfig& c);

/// Setup plus optional enhancement settings. Accepts either a bare setup
/// object or {"setup": {...}, "enhance": {...}}.
struct Sidecar {
  ViewingSetup setup;
  std::optional<EnhanceConfig> config;
};

Sidecar load_sidecar(const std::filesystem::path& path);
void save_sidecar(const std::filesystem::path& path, const Sidecar& sidecar);

/// CSV rows "eccentricity,t_low,t_high"; a non-numeric first line is a header.
AcuityLimits read_acuity_csv(std::istream& in);
AcuityLimits load_acuity_csv(const std::filesystem::path& path);

}  // namespace fovnoise
