#pragma once

// Calibration sessions: one adjustable parameter per session, live
// side-by-side previews rendered on a background worker, and aggregated
// export of accepted values.

#include "fovnoise/noise_params.hpp"
#include "fovnoise/pipeline.hpp"
#include "fovnoise/retina.hpp"

#include <json.hpp>

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fovnoise::calib {

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation not allowed in the session's current state (e.g. already accepted).
class ConflictError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class AdjustMode { f_e, s_k, s_f, blur_rate };
/// Enhancement applied to the test half: contrast only, or contrast plus noise.
enum class Condition { full, contrast_only };

std::string to_string(AdjustMode m);
std::string to_string(Condition c);
AdjustMode parse_mode(const std::string& s);
Condition parse_condition(const std::string& s);

ParamRange range_of(AdjustMode m);
double value_of(const EnhanceConfig& c, AdjustMode m);
/// Writes the adjusted value into the config. Changing the blur rate re-reads
/// f_e, s_k and s_f from the calibration table.
void apply_value(EnhanceConfig& c, AdjustMode m, double v);

/// Stimulus images by id (file stem).
class StimulusStore {
 public:
  void add(const std::string& id, Frame frame);
  /// Loads every .png / .exr in `dir`.
  void load_directory(const std::filesystem::path& dir);
  bool contains(const std::string& id) const { return frames_.count(id) != 0; }
  std::shared_ptr<const Frame> get(const std::string& id) const;
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, std::shared_ptr<const Frame>> frames_;
};

struct PreviewOptions {
  int width = 1280;              // preview width; ignored when full_resolution
  bool full_resolution = false;  // render at the stimulus resolution
};

/// [reference left half | processed mirror of the left half]. The processed
/// half is foveated at the config's blur rate with gaze at the preview center
/// and enhanced per mode/condition. `setup` describes the full-size stimulus;
/// the preview keeps its physical size and distance.
Frame render_preview(const Frame& stimulus, const ViewingSetup& setup, const EnhanceConfig& config, AdjustMode mode,
                     Condition condition, const PreviewOptions& options, double* clipped_fraction = nullptr);

/// Area-averaging resize of every channel.
Frame resize_area(const Frame& frame, Dims target);

struct HistoryEvent {
  std::int64_t time_ms;  // milliseconds since the Unix epoch
  std::string parameter;
  double value;
};

struct SessionRequest {
  std::string stimulus;
  AdjustMode mode = AdjustMode::f_e;
  double blur_rate = 0.34;
  std::optional<ViewingSetup> setup;  // defaults to the reference panel at the stimulus resolution
  std::uint64_t seed = 0;
  Condition condition = Condition::full;
};

struct ParamUpdate {
  std::optional<double> delta;
  std::optional<double> value;
};

struct SessionState {
  std::string id;
  std::string stimulus;
  ViewingSetup setup;
  AdjustMode mode;
  Condition condition;
  double blur_rate;  // as requested at creation; export key
  EnhanceConfig initial;
  EnhanceConfig config;
  std::vector<HistoryEvent> history;
  std::optional<double> accepted;
  std::uint64_t version = 0;           // 1 on creation, incremented by every set_param
  std::uint64_t rendered_version = 0;  // version of the latest finished preview
  double clipped_fraction = 0.0;       // of the latest finished preview

  double value() const { return value_of(config, mode); }
  bool rendering() const { return rendered_version != version; }
};

/// Replays `history` on `initial`; reproduces the config of every preview.
EnhanceConfig replay(const EnhanceConfig& initial, AdjustMode mode, const std::vector<HistoryEvent>& history);

struct Preview {
  std::vector<std::uint8_t> png;
  std::uint64_t version = 0;
  bool rendering = false;  // a newer version is still being rendered
};

class CalibService {
 public:
  explicit CalibService(StimulusStore stimuli, PreviewOptions options = {});
  ~CalibService();
  CalibService(const CalibService&) = delete;
  CalibService& operator=(const CalibService&) = delete;

  std::vector<std::string> stimuli() const { return stimuli_.ids(); }

  /// Throws NotFoundError for an unknown stimulus, ConfigError for bad settings.
  SessionState create_session(const SessionRequest& request);
  SessionState set_param(const std::string& id, const ParamUpdate& update);
  SessionState accept(const std::string& id);
  SessionState session(const std::string& id) const;

  /// Latest finished preview. Blocks until the first render exists; with
  /// `wait`, blocks until the current version is rendered.
  Preview preview(const std::string& id, bool wait = false);

  /// Accepted values grouped by (stimulus, blur_rate, mode, condition) with
  /// mean and standard error; an array, empty when nothing was accepted.
  nlohmann::json export_json() const;

  std::size_t cache_size() const;

 private:
  struct Session {
    SessionState state;
    std::vector<std::uint8_t> png;
    std::string error;  // of the latest render, if it failed
  };
  struct Job {
    std::string session;
    std::uint64_t version;
    std::string stimulus;
    ViewingSetup setup;
    EnhanceConfig config;
    AdjustMode mode;
    Condition condition;
  };
  struct CacheEntry {
    std::vector<std::uint8_t> png;
    double clipped_fraction;
  };

  Session& find(const std::string& id);
  const Session& find(const std::string& id) const;
  void enqueue(const Session& s);
  void worker_loop(std::stop_token stop);
  static std::string cache_key(const Job& job);

  StimulusStore stimuli_;
  PreviewOptions options_;
  mutable std::mutex mutex_;
  std::condition_variable_any changed_;
  std::map<std::string, Session> sessions_;
  std::vector<Job> queue_;
  std::map<std::string, CacheEntry> cache_;
  std::uint64_t next_id_ = 1;
  std::jthread worker_;
};

nlohmann::json to_json(const SessionState& s);
SessionRequest session_request_from_json(const nlohmann::json& j);

}  // namespace fovnoise::calib
