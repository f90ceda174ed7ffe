#include "fovnoise/calib/service.hpp"

#include "fovnoise/config_io.hpp"
#include "fovnoise/errors.hpp"
#include "fovnoise/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

namespace fovnoise::calib {

using nlohmann::json;

std::string to_string(AdjustMode m) {
  switch (m) {
    case AdjustMode::f_e: return "f_e";
    case AdjustMode::s_k: return "s_k";
    case AdjustMode::s_f: return "s_f";
    case AdjustMode::blur_rate: return "blur_rate";
  }
  return "?";
}

std::string to_string(Condition c) { return c == Condition::full ? "full" : "contrast_only"; }

AdjustMode parse_mode(const std::string& s) {
  if (s == "f_e") return AdjustMode::f_e;
  if (s == "s_k") return AdjustMode::s_k;
  if (s == "s_f") return AdjustMode::s_f;
  if (s == "blur_rate") return AdjustMode::blur_rate;
  throw ConfigError("unknown adjustment mode: " + s);
}

Condition parse_condition(const std::string& s) {
  if (s == "full") return Condition::full;
  if (s == "contrast_only") return Condition::contrast_only;
  throw ConfigError("unknown condition: " + s);
}

ParamRange range_of(AdjustMode m) {
  switch (m) {
    case AdjustMode::f_e: return kContrastRange;
    case AdjustMode::s_k: return kAmplitudeScaleRange;
    case AdjustMode::s_f: return kBandwidthScaleRange;
    case AdjustMode::blur_rate: return kBlurRateRange;
  }
  return kContrastRange;
}

double value_of(const EnhanceConfig& c, AdjustMode m) {
  switch (m) {
    case AdjustMode::f_e: return c.f_e;
    case AdjustMode::s_k: return c.s_k;
    case AdjustMode::s_f: return c.s_f;
    case AdjustMode::blur_rate: return c.blur_rate;
  }
  return 0.0;
}

void apply_value(EnhanceConfig& c, AdjustMode m, double v) {
  switch (m) {
    case AdjustMode::f_e: c.f_e = v; break;
    case AdjustMode::s_k: c.s_k = v; break;
    case AdjustMode::s_f: c.s_f = v; break;
    case AdjustMode::blur_rate: {
      const auto row = CalibrationTable::standard().interpolate(v);
      c.blur_rate = v;
      c.f_e = row.f_e;
      c.s_k = row.s_k;
      c.s_f = row.s_f;
      break;
    }
  }
}

EnhanceConfig replay(const EnhanceConfig& initial, AdjustMode mode, const std::vector<HistoryEvent>& history) {
  EnhanceConfig c = initial;
  for (const auto& e : history) apply_value(c, mode, e.value);
  return c;
}

void StimulusStore::add(const std::string& id, Frame frame) {
  frames_[id] = std::make_shared<const Frame>(std::move(frame));
}

void StimulusStore::load_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto ext = entry.path().extension().string();
    if (ext == ".png" || ext == ".exr") add(entry.path().stem().string(), read_image(entry.path()));
  }
}

std::shared_ptr<const Frame> StimulusStore::get(const std::string& id) const {
  const auto it = frames_.find(id);
  if (it == frames_.end()) throw NotFoundError("unknown stimulus: " + id);
  return it->second;
}

std::vector<std::string> StimulusStore::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : frames_) out.push_back(id);
  return out;
}

namespace {

struct Tap {
  Eigen::Index index;
  float weight;
};

std::vector<std::vector<Tap>> area_weights(Eigen::Index n_src, Eigen::Index n_dst) {
  std::vector<std::vector<Tap>> w(static_cast<std::size_t>(n_dst));
  const double scale = static_cast<double>(n_src) / static_cast<double>(n_dst);
  for (Eigen::Index i = 0; i < n_dst; ++i) {
    const double lo = static_cast<double>(i) * scale;
    const double hi = lo + scale;
    for (auto j = static_cast<Eigen::Index>(std::floor(lo)); j < n_src && static_cast<double>(j) < hi; ++j) {
      const double overlap = std::min(hi, static_cast<double>(j + 1)) - std::max(lo, static_cast<double>(j));
      if (overlap > 0.0) w[static_cast<std::size_t>(i)].push_back({j, static_cast<float>(overlap / scale)});
    }
  }
  return w;
}

FieldMap resize_channel(const FieldMap& src, const std::vector<std::vector<Tap>>& wx,
                        const std::vector<std::vector<Tap>>& wy) {
  FieldMap tmp(src.rows(), static_cast<Eigen::Index>(wx.size()));
  for (Eigen::Index y = 0; y < src.rows(); ++y)
    for (Eigen::Index x = 0; x < tmp.cols(); ++x) {
      float acc = 0.0f;
      for (const auto& t : wx[static_cast<std::size_t>(x)]) acc += t.weight * src(y, t.index);
      tmp(y, x) = acc;
    }
  FieldMap out(static_cast<Eigen::Index>(wy.size()), tmp.cols());
  for (Eigen::Index y = 0; y < out.rows(); ++y)
    for (Eigen::Index x = 0; x < out.cols(); ++x) {
      float acc = 0.0f;
      for (const auto& t : wy[static_cast<std::size_t>(y)]) acc += t.weight * tmp(t.index, x);
      out(y, x) = acc;
    }
  return out.max(0.0f).min(1.0f);
}

ViewingSetup default_setup(Dims d) {
  const auto ref = ViewingSetup::reference_display();
  const double h = ref.width_m * static_cast<double>(d.height) / static_cast<double>(d.width);
  return ViewingSetup::centered(d, ref.width_m, h, ref.distance_m);
}

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

Frame resize_area(const Frame& frame, Dims target) {
  if (target.width <= 0 || target.height <= 0) throw ConfigError("resize: target must be non-empty");
  const Dims src = frame.dims();
  if (src == target) return frame;
  const auto wx = area_weights(src.width, target.width);
  const auto wy = area_weights(src.height, target.height);
  return Frame(resize_channel(frame.channel(0), wx, wy), resize_channel(frame.channel(1), wx, wy),
               resize_channel(frame.channel(2), wx, wy));
}

Frame render_preview(const Frame& stimulus, const ViewingSetup& setup, const EnhanceConfig& config, AdjustMode mode,
                     Condition condition, const PreviewOptions& options, double* clipped_fraction) {
  setup.validate();
  config.validate();
  if (stimulus.dims() != setup.resolution) throw ConfigError("preview: stimulus does not match the viewing setup");
  Dims target = stimulus.dims();
  if (!options.full_resolution && target.width > options.width) {
    if (options.width < 16) throw ConfigError("preview: width too small");
    const double s = static_cast<double>(options.width) / static_cast<double>(target.width);
    target = {options.width, std::max<Eigen::Index>(1, std::lround(static_cast<double>(target.height) * s))};
  }
  const Frame base = resize_area(stimulus, target);
  const Eigen::Index w = target.width;
  const Eigen::Index half = w / 2;

  std::array<FieldMap, 3> composed;
  for (int c = 0; c < 3; ++c) {
    const FieldMap& src = base.channel(c);
    FieldMap& dst = composed[static_cast<std::size_t>(c)];
    dst = src;
    for (Eigen::Index x = w - half; x < w; ++x) dst.col(x) = src.col(w - 1 - x);
  }
  const Frame test(std::move(composed[0]), std::move(composed[1]), std::move(composed[2]));

  const auto preview_setup = ViewingSetup::centered(target, setup.width_m, setup.height_m, setup.distance_m);
  EnhanceConfig cfg = config;
  if (mode == AdjustMode::f_e || condition == Condition::contrast_only) cfg.s_k = 0.0;

  Frame processed;
  double clipped = 0.0;
  if (cfg.s_k == 0.0) {
    const FieldMap sigma = sigma_map<float>(preview_setup, cfg.blur_rate, cfg.fovea_radius);
    processed = contrast_enhance(foveate(test, sigma), sigma, cfg.f_e);
  } else {
    EnhanceOptions opts;
    opts.max_clipped_fraction = 1.0;
    const Enhancer enhancer(preview_setup, cfg, opts);
    auto result = enhancer.run(foveate(test, enhancer.geometry().sigma_px));
    processed = std::move(result.output);
    clipped = result.clipped_fraction;
  }
  if (clipped_fraction) *clipped_fraction = clipped;

  std::array<FieldMap, 3> out;
  for (int c = 0; c < 3; ++c) {
    FieldMap& dst = out[static_cast<std::size_t>(c)];
    dst = processed.channel(c);
    dst.leftCols(half) = base.channel(c).leftCols(half);
  }
  return Frame(std::move(out[0]), std::move(out[1]), std::move(out[2]));
}

CalibService::CalibService(StimulusStore stimuli, PreviewOptions options)
    : stimuli_(std::move(stimuli)), options_(options), worker_([this](std::stop_token st) { worker_loop(st); }) {}

CalibService::~CalibService() {
  worker_.request_stop();
  changed_.notify_all();
}

CalibService::Session& CalibService::find(const std::string& id) {
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session: " + id);
  return it->second;
}

const CalibService::Session& CalibService::find(const std::string& id) const {
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session: " + id);
  return it->second;
}

SessionState CalibService::create_session(const SessionRequest& request) {
  const auto frame = stimuli_.get(request.stimulus);
  ViewingSetup setup = request.setup ? *request.setup : default_setup(frame->dims());
  setup.validate();
  if (setup.resolution != frame->dims()) throw ConfigError("setup resolution does not match the stimulus");
  if (!kBlurRateRange.contains(request.blur_rate)) throw ConfigError("blur_rate out of range");

  const auto& row = CalibrationTable::standard().nearest(request.blur_rate);
  EnhanceConfig config;
  config.blur_rate = request.blur_rate;
  config.f_e = row.f_e;
  config.s_k = row.s_k;
  config.s_f = row.s_f;
  config.seed = request.seed;
  config.validate();

  std::lock_guard lock(mutex_);
  Session s;
  s.state.id = std::to_string(next_id_++);
  s.state.stimulus = request.stimulus;
  s.state.setup = setup;
  s.state.mode = request.mode;
  s.state.condition = request.condition;
  s.state.blur_rate = request.blur_rate;
  s.state.initial = config;
  s.state.config = config;
  s.state.version = 1;
  auto& stored = sessions_.emplace(s.state.id, std::move(s)).first->second;
  enqueue(stored);
  return stored.state;
}

SessionState CalibService::set_param(const std::string& id, const ParamUpdate& update) {
  if (update.delta.has_value() == update.value.has_value())
    throw ConfigError("param update needs exactly one of delta or value");
  const double given = update.delta ? *update.delta : *update.value;
  if (!std::isfinite(given)) throw ConfigError("param update must be finite");
  std::lock_guard lock(mutex_);
  Session& s = find(id);
  if (s.state.accepted) throw ConflictError("session " + id + " is already accepted");
  const double current = s.state.value();
  const double v = range_of(s.state.mode).clamp(update.delta ? current + *update.delta : *update.value);
  apply_value(s.state.config, s.state.mode, v);
  s.state.history.push_back({now_ms(), to_string(s.state.mode), v});
  ++s.state.version;
  enqueue(s);
  return s.state;
}

SessionState CalibService::accept(const std::string& id) {
  std::lock_guard lock(mutex_);
  Session& s = find(id);
  if (s.state.accepted) throw ConflictError("session " + id + " is already accepted");
  s.state.accepted = s.state.value();
  return s.state;
}

SessionState CalibService::session(const std::string& id) const {
  std::lock_guard lock(mutex_);
  return find(id).state;
}

Preview CalibService::preview(const std::string& id, bool wait) {
  std::unique_lock lock(mutex_);
  find(id);
  changed_.wait(lock, [&] {
    const Session& s = find(id);
    return !s.error.empty() || (!s.png.empty() && (!wait || !s.state.rendering()));
  });
  const Session& s = find(id);
  if (s.png.empty()) throw std::runtime_error("preview failed: " + s.error);
  return {s.png, s.state.rendered_version, s.state.rendering()};
}

std::size_t CalibService::cache_size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

void CalibService::enqueue(const Session& s) {
  std::erase_if(queue_, [&](const Job& j) { return j.session == s.state.id; });
  queue_.push_back({s.state.id, s.state.version, s.state.stimulus, s.state.setup, s.state.config, s.state.mode,
                    s.state.condition});
  changed_.notify_all();
}

std::string CalibService::cache_key(const Job& job) {
  json j{{"stimulus", job.stimulus},
         {"setup", job.setup},
         {"config", job.config},
         {"mode", to_string(job.mode)},
         {"condition", to_string(job.condition)}};
  return j.dump();
}

void CalibService::worker_loop(std::stop_token stop) {
  constexpr std::size_t kMaxCache = 256;
  std::unique_lock lock(mutex_);
  while (true) {
    if (!changed_.wait(lock, stop, [&] { return !queue_.empty(); })) return;
    Job job = std::move(queue_.front());
    queue_.erase(queue_.begin());
    const std::string key = cache_key(job);
    CacheEntry entry;
    std::string error;
    if (const auto it = cache_.find(key); it != cache_.end()) {
      entry = it->second;
    } else {
      const auto frame = stimuli_.get(job.stimulus);
      lock.unlock();
      try {
        double clipped = 0.0;
        const Frame img = render_preview(*frame, job.setup, job.config, job.mode, job.condition, options_, &clipped);
        entry = {encode_png(img), clipped};
      } catch (const std::exception& e) {
        entry = {};
        error = e.what();
      }
      lock.lock();
      if (!entry.png.empty()) {
        if (cache_.size() >= kMaxCache) cache_.erase(cache_.begin());
        cache_[key] = entry;
      }
    }
    if (auto it = sessions_.find(job.session); it != sessions_.end()) {
      Session& s = it->second;
      if (job.version > s.state.rendered_version) {
        if (!entry.png.empty()) s.png = std::move(entry.png);
        s.state.rendered_version = job.version;
        s.state.clipped_fraction = entry.clipped_fraction;
        s.error = error;
      }
    }
    changed_.notify_all();
  }
}

json CalibService::export_json() const {
  std::lock_guard lock(mutex_);
  std::map<std::tuple<std::string, double, std::string, std::string>, std::vector<double>> cells;
  for (const auto& [_, s] : sessions_)
    if (s.state.accepted)
      cells[{s.state.stimulus, s.state.blur_rate, to_string(s.state.mode), to_string(s.state.condition)}].push_back(
          *s.state.accepted);
  json out = json::array();
  for (const auto& [key, values] : cells) {
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    json cell{{"stimulus", std::get<0>(key)}, {"blur_rate", std::get<1>(key)}, {"mode", std::get<2>(key)},
              {"condition", std::get<3>(key)}, {"n", values.size()},          {"mean", mean},
              {"values", values}};
    if (values.size() > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - mean) * (v - mean);
      cell["sem"] = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    } else {
      cell["sem"] = nullptr;
    }
    out.push_back(std::move(cell));
  }
  return out;
}

json to_json(const SessionState& s) {
  const ParamRange r = range_of(s.mode);
  json history = json::array();
  for (const auto& e : s.history) history.push_back({{"time_ms", e.time_ms}, {"parameter", e.parameter}, {"value", e.value}});
  return json{{"id", s.id},
              {"stimulus", s.stimulus},
              {"setup", s.setup},
              {"mode", to_string(s.mode)},
              {"condition", to_string(s.condition)},
              {"blur_rate", s.blur_rate},
              {"value", s.value()},
              {"range", {r.lo, r.hi}},
              {"config", s.config},
              {"history", std::move(history)},
              {"accepted", s.accepted ? json(*s.accepted) : json(nullptr)},
              {"preview",
               {{"url", "/v1/sessions/" + s.id + "/preview.png"},
                {"version", s.version},
                {"rendered_version", s.rendered_version},
                {"rendering", s.rendering()},
                {"clipped_fraction", s.clipped_fraction}}}};
}

SessionRequest session_request_from_json(const json& j) {
  SessionRequest r;
  try {
    r.stimulus = j.at("stimulus").get<std::string>();
    r.mode = parse_mode(j.value("mode", std::string("f_e")));
    r.blur_rate = j.value("blur_rate", r.blur_rate);
    r.seed = j.value("seed", r.seed);
    r.condition = parse_condition(j.value("condition", std::string("full")));
    if (j.contains("setup")) r.setup = j["setup"].get<ViewingSetup>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("session request: ") + e.what());
  }
  return r;
}

}  // namespace fovnoise::calib
