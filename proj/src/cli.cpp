#include "fovnoise/cli.hpp"

#include "fovnoise/analysis.hpp"
#include "fovnoise/config_io.hpp"
#include "fovnoise/errors.hpp"
#include "fovnoise/gabor.hpp"
#include "fovnoise/image_io.hpp"
#include "fovnoise/parallel.hpp"
#include "fovnoise/pipeline.hpp"
#include "fovnoise/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

namespace fovnoise::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

namespace {

struct Common {
  std::string setup_path;
  std::optional<double> blur_rate, f_e, s_k, s_f, a, fovea_radius;
  std::optional<int> impulses;
  std::uint64_t seed = 0;
  std::vector<double> gaze;
  unsigned threads = 0;
  std::string report;
  bool seed_given = false;
  std::string blur_method = "exact";
  BlurMethod blur() const { return blur_method == "separable" ? BlurMethod::separable : BlurMethod::exact; }
};

void add_setup_options(CLI::App* cmd, Common& c) {
  cmd->add_option("--setup", c.setup_path, "Viewing setup JSON (optionally with an \"enhance\" block)");
  cmd->add_option("--gaze", c.gaze, "Gaze point x,y in pixels")->delimiter(',')->expected(2);
  cmd->add_option("--fovea-radius", c.fovea_radius, "Fovea radius, degrees");
  cmd->add_option("--blur-rate", c.blur_rate, "Foveation blur rate, arcmin/deg");
  cmd->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
  cmd->add_option("--report", c.report, "JSON report path");
  cmd->add_option("--blur-method", c.blur_method, "Variable blur: exact (2-D) or separable")
      ->check(CLI::IsMember({"exact", "separable"}));
}

void add_enhance_options(CLI::App* cmd, Common& c) {
  cmd->add_option("--fe", c.f_e, "Contrast enhancement gain");
  cmd->add_option("--sk", c.s_k, "Noise amplitude scale");
  cmd->add_option("--sf", c.s_f, "Noise bandwidth scale");
  cmd->add_option("--a", c.a, "Attenuation factor for the amplitude level");
  cmd->add_option("--impulses", c.impulses, "Impulses per kernel");
  cmd->add_option("--seed", c.seed, "Noise seed")->each([&c](const std::string&) { c.seed_given = true; });
}

ViewingSetup default_setup(Dims d) {
  const auto ref = ViewingSetup::reference_display();
  return ViewingSetup::centered(d, ref.width_m, ref.width_m * static_cast<double>(d.height) / static_cast<double>(d.width),
                                ref.distance_m);
}

struct Resolved {
  ViewingSetup setup;
  EnhanceConfig config;
};

Resolved resolve(const Common& c, Dims image) {
  Resolved r;
  std::optional<EnhanceConfig> base;
  if (!c.setup_path.empty()) {
    const Sidecar sc = load_sidecar(c.setup_path);
    r.setup = sc.setup;
    base = sc.config;
    if (r.setup.resolution != image)
      throw ConfigError("setup resolution " + std::to_string(r.setup.resolution.width) + "x" +
                        std::to_string(r.setup.resolution.height) + " does not match the image");
  } else {
    r.setup = default_setup(image);
  }
  if (!c.gaze.empty()) {
    if (c.gaze.size() != 2) throw ConfigError("--gaze needs x,y");
    r.setup.gaze_x = c.gaze[0];
    r.setup.gaze_y = c.gaze[1];
  }
  r.setup.validate();

  if (base) {
    r.config = *base;
    if (c.blur_rate) r.config.blur_rate = *c.blur_rate;
  } else {
    r.config = EnhanceConfig::calibrated(c.blur_rate.value_or(EnhanceConfig{}.blur_rate));
  }
  if (c.f_e) r.config.f_e = *c.f_e;
  if (c.s_k) r.config.s_k = *c.s_k;
  if (c.s_f) r.config.s_f = *c.s_f;
  if (c.a) r.config.a = *c.a;
  if (c.impulses) r.config.impulses_per_kernel = *c.impulses;
  if (c.fovea_radius) r.config.fovea_radius = *c.fovea_radius;
  if (c.seed_given || !base) r.config.seed = c.seed;
  r.config.validate();
  return r;
}

json timings_json(const StageTimings& t) {
  return {{"contrast", t.contrast_ms},
          {"estimation", t.estimation_ms},
          {"synthesis", t.synthesis_ms},
          {"composite", t.composite_ms}};
}

void emit_report(const std::string& path, const json& report, std::ostream& out) {
  if (path.empty()) {
    out << report.dump(2) << '\n';
    return;
  }
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << report.dump(2) << '\n';
}

std::vector<fs::path> list_frames(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<fs::path> frames;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".png" || ext == ".exr")) frames.push_back(e.path());
  }
  std::sort(frames.begin(), frames.end());
  if (frames.empty()) throw IoError("no .png/.exr frames in " + dir);
  return frames;
}

std::pair<std::string, std::string> split_label(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("expected label=path, got " + s);
  return {s.substr(0, eq), s.substr(eq + 1)};
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct FoveateCmd {
  Common c;
  std::string input, output, sigma_out;
  int depth = 8;
  int run(std::ostream& out) {
    const Frame in = read_image(input);
    const auto r = resolve(c, in.dims());
    const FieldMap sigma = sigma_map<float>(r.setup, r.config.blur_rate, r.config.fovea_radius);
    const auto t0 = std::chrono::steady_clock::now();
    const Frame fov = foveate(in, sigma, c.blur());
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    write_image(output, fov, depth);
    if (!sigma_out.empty()) write_exr_field(sigma_out, sigma);
    if (!c.report.empty())
      emit_report(c.report, {{"input", input}, {"output", output}, {"setup", r.setup}, {"blur_rate", r.config.blur_rate},
                             {"max_sigma_px", sigma.maxCoeff()}, {"foveate_ms", ms}},
                  out);
    return kExitOk;
  }
};

struct EnhanceCmd {
  Common c;
  std::string input, output, sigma_path;
  bool simulate = false;
  double max_clipped = 0.05;
  int depth = 8;
  int run(std::ostream& out) {
    const Frame in = read_image(input);
    const auto r = resolve(c, in.dims());
    EnhanceOptions opts;
    opts.blur = c.blur();
    opts.max_clipped_fraction = max_clipped;
    std::optional<Enhancer> enhancer;
    if (sigma_path.empty()) {
      enhancer.emplace(r.setup, r.config, opts);
    } else {
      enhancer.emplace(r.setup, r.config, read_exr_field(sigma_path), opts);
    }
    const Frame src = simulate ? foveate(in, enhancer->geometry().sigma_px, c.blur()) : in;
    const EnhanceResult res = enhancer->run(src);
    write_image(output, res.output, depth);
    emit_report(c.report,
                {{"input", input},
                 {"output", output},
                 {"setup", r.setup},
                 {"config", r.config},
                 {"clipped_fraction", res.clipped_fraction},
                 {"impulses", enhancer->impulses().impulses.size()},
                 {"timings_ms", timings_json(res.timings)}},
                out);
    return kExitOk;
  }
};

struct AnalyzeCmd {
  Common c;
  std::vector<std::string> images, sequences;
  std::string reference, foveated, contrast, enhanced;
  std::string bands_out, ssim_out;
  double ring_center = 20.0, ring_width = 4.0;
  std::vector<double> band_edges;
  int run(std::ostream& out) {
    std::vector<std::pair<std::string, std::string>> labelled;
    for (const auto& [label, path] : {std::pair<std::string, std::string>{"reference", reference},
                                      {"foveated", foveated},
                                      {"contrast", contrast},
                                      {"enhanced", enhanced}})
      if (!path.empty()) labelled.emplace_back(label, path);
    for (const auto& s : images) labelled.push_back(split_label(s));
    if (labelled.empty() && sequences.empty()) throw ConfigError("analyze: nothing to analyze");

    const Ring ring{ring_center, ring_width};
    std::vector<Band> bands;
    if (!band_edges.empty()) {
      if (band_edges.size() < 2) throw ConfigError("--bands needs at least two edges");
      for (std::size_t i = 1; i < band_edges.size(); ++i) bands.push_back({band_edges[i - 1], band_edges[i]});
    } else {
      bands = default_bands(AcuityLimits::thibos(), ring);
    }

    json report{{"ring", {{"center_deg", ring.center_deg}, {"width_deg", ring.width_deg}}}};
    std::vector<BandReport> reports;
    for (const auto& [label, path] : labelled) {
      const Frame f = read_image(path);
      const auto r = resolve(c, f.dims());
      reports.push_back(ring_band_report(encoded_luma(f), r.setup, ring, bands, label));
    }
    json band_json = json::array();
    for (const auto& br : reports) {
      json e = json::array();
      for (const auto& b : br.bands) e.push_back({{"f_lo", b.band.f_lo}, {"f_hi", b.band.f_hi}, {"energy", b.energy}});
      band_json.push_back({{"condition", br.label}, {"patches", br.patches}, {"bands", e}});
    }
    report["bands"] = band_json;
    if (!bands_out.empty()) {
      std::ofstream f(bands_out);
      if (!f) throw IoError("cannot write " + bands_out);
      write_band_csv(f, reports);
    }

    std::vector<SsimEntry> entries;
    for (const auto& s : sequences) {
      const auto [label, dir] = split_label(s);
      std::vector<FieldMap> lumas;
      for (const auto& p : list_frames(dir)) lumas.push_back(encoded_luma(read_image(p)));
      entries.push_back({label, interframe_ssim(lumas), lumas.size()});
    }
    json ssim_json = json::array();
    for (const auto& e : entries) ssim_json.push_back({{"condition", e.label}, {"frames", e.frames}, {"mean_ssim", e.mean_ssim}});
    report["ssim"] = ssim_json;
    if (!ssim_out.empty()) {
      std::ofstream f(ssim_out);
      if (!f) throw IoError("cannot write " + ssim_out);
      write_ssim_csv(f, entries);
    }
    emit_report(c.report, report, out);
    return kExitOk;
  }
};

struct SequenceCmd {
  Common c;
  std::string input_dir, output_dir;
  bool simulate = false;
  double max_clipped = 0.05;
  int run(std::ostream& out) {
    const auto paths = list_frames(input_dir);
    std::vector<Frame> frames;
    frames.reserve(paths.size());
    for (const auto& p : paths) frames.push_back(read_image(p));
    for (const auto& f : frames)
      if (f.dims() != frames.front().dims()) throw ConfigError("sequence: frames differ in size");
    const auto r = resolve(c, frames.front().dims());
    EnhanceOptions opts;
    opts.blur = c.blur();
    opts.max_clipped_fraction = max_clipped;
    const Enhancer enhancer(r.setup, r.config, opts);

    fs::create_directories(output_dir);
    json per_frame = json::array();
    std::uint64_t combined = 0xcbf29ce484222325ULL;
    double max_fraction = 0.0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const Frame src = simulate ? foveate(frames[i], enhancer.geometry().sigma_px, c.blur()) : frames[i];
      const EnhanceResult res = enhancer.run(src);
      const fs::path dst = fs::path(output_dir) / paths[i].filename();
      write_image(dst, res.output);
      const std::string h = file_hash(dst.string());
      for (char ch : h) {
        combined ^= static_cast<unsigned char>(ch);
        combined *= 0x100000001b3ULL;
      }
      max_fraction = std::max(max_fraction, res.clipped_fraction);
      per_frame.push_back({{"frame", dst.filename().string()},
                           {"hash", h},
                           {"clipped_fraction", res.clipped_fraction},
                           {"timings_ms", timings_json(res.timings)}});
    }
    std::ostringstream hs;
    hs << std::hex << std::setw(16) << std::setfill('0') << combined;
    emit_report(c.report,
                {{"frames", per_frame},
                 {"sequence_hash", hs.str()},
                 {"max_clipped_fraction", max_fraction},
                 {"config", r.config},
                 {"setup", r.setup}},
                out);
    return kExitOk;
  }
};

struct BenchCmd {
  Common c;
  std::string input;
  int width = 3840, height = 2160;
  int runs = 10, warmup = 2;
  std::vector<int> sweep{12, 25, 50, 64};
  int run(std::ostream& out) {
    if (runs < 1 || warmup < 0) throw ConfigError("bench: runs must be >= 1 and warmup >= 0");
    const Frame frame = input.empty() ? synthetic_image({width, height}, c.seed) : read_image(input);
    json results = json::array();
    for (int ipk : sweep) {
      Common cc = c;
      cc.impulses = ipk;
      const auto r = resolve(cc, frame.dims());
      EnhanceOptions opts;
      opts.blur = cc.blur();
      opts.max_clipped_fraction = 1.0;
      const Enhancer enhancer(r.setup, r.config, opts);
      std::vector<double> contrast, estimation, synthesis, composite, total;
      for (int i = 0; i < warmup + runs; ++i) {
        const auto t = enhancer.run(frame).timings;
        if (i < warmup) continue;
        contrast.push_back(t.contrast_ms);
        estimation.push_back(t.estimation_ms);
        synthesis.push_back(t.synthesis_ms);
        composite.push_back(t.composite_ms);
        total.push_back(t.contrast_ms + t.estimation_ms + t.synthesis_ms + t.composite_ms);
      }
      results.push_back({{"impulses_per_kernel", ipk},
                         {"impulse_count", enhancer.impulses().impulses.size()},
                         {"median_ms",
                          {{"contrast", median(contrast)},
                           {"estimation", median(estimation)},
                           {"synthesis", median(synthesis)},
                           {"composite", median(composite)},
                           {"total", median(total)}}}});
    }
    emit_report(c.report,
                {{"resolution", {frame.dims().width, frame.dims().height}},
                 {"runs", runs},
                 {"warmup", warmup},
                 {"threads", thread_count()},
                 {"blur_method", c.blur_method},
                 {"results", results}},
                out);
    return kExitOk;
  }
};

struct ImpulsesCmd {
  Common c;
  std::string output, input;
  std::vector<int> size;
  int run(std::ostream&) {
    std::optional<Frame> frame;
    Dims dims;
    if (!input.empty()) {
      frame = read_image(input);
      dims = frame->dims();
    } else if (size.size() == 2) {
      dims = {size[0], size[1]};
    } else if (!c.setup_path.empty()) {
      dims = load_sidecar(c.setup_path).setup.resolution;
    } else {
      throw ConfigError("impulses: need --input, --size or --setup");
    }
    const auto r = resolve(c, dims);
    std::ofstream f(output);
    if (!f) throw IoError("cannot write " + output);
    f << std::setprecision(10);
    if (!frame) {
      GaborGrid g;
      g.impulses_per_kernel = r.config.impulses_per_kernel;
      g.seed = r.config.seed;
      const ImpulseSet set = generate_impulses(g, dims);
      f << "cell_x,cell_y,x,y,weight\n";
      for (const auto& i : set.impulses) f << i.cell_x << ',' << i.cell_y << ',' << i.x << ',' << i.y << ',' << i.weight << '\n';
      return kExitOk;
    }
    EnhanceOptions opts;
    opts.blur = c.blur();
    opts.max_clipped_fraction = 1.0;
    const Enhancer enhancer(r.setup, r.config, opts);
    const Frame contrast = contrast_enhance(*frame, enhancer.geometry().sigma_px, r.config.f_e, c.blur());
    const NoiseEstimate est = enhancer.estimate(*frame, contrast);
    const auto& geo = enhancer.geometry();
    const NoiseFields fields{geo.f_low, geo.f_high, geo.deg_per_px, est.amplitude, est.orientation, r.config.s_f};
    f << "cell_x,cell_y,x,y,weight,active,frequency,amplitude,orientation\n";
    for (const auto& i : enhancer.impulses().impulses) {
      const auto p = resolve_impulse(i, fields);
      f << i.cell_x << ',' << i.cell_y << ',' << i.x << ',' << i.y << ',' << i.weight << ',' << (p ? 1 : 0) << ','
        << (p ? p->frequency : 0.0) << ',' << (p ? p->amplitude : 0.0) << ',' << (p ? p->orientation : 0.0) << '\n';
    }
    return kExitOk;
  }
};

void error_line(std::ostream& err, const std::string& kind, const std::string& message) {
  err << json{{"error", message}, {"kind", kind}}.dump() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Noise-based enhancement for foveated images"};
  app.require_subcommand(1);

  FoveateCmd fov;
  auto* f = app.add_subcommand("foveate", "Simulate foveation blur");
  f->add_option("input", fov.input)->required();
  f->add_option("output", fov.output)->required();
  f->add_option("--sigma-out", fov.sigma_out, "Write the per-pixel blur sigma (EXR)");
  f->add_option("--depth", fov.depth, "PNG bit depth")->check(CLI::IsMember({8, 16}));
  add_setup_options(f, fov.c);

  EnhanceCmd enh;
  auto* e = app.add_subcommand("enhance", "Contrast enhancement plus noise on a foveated image");
  e->add_option("input", enh.input)->required();
  e->add_option("output", enh.output)->required();
  e->add_flag("--foveate", enh.simulate, "Input is unfoveated; simulate foveation first");
  e->add_option("--sigma-map", enh.sigma_path, "Per-pixel blur sigma (EXR) instead of the simulated one");
  e->add_option("--max-clipped", enh.max_clipped, "Fail when more pixels than this fraction clip");
  e->add_option("--depth", enh.depth, "PNG bit depth")->check(CLI::IsMember({8, 16}));
  add_setup_options(e, enh.c);
  add_enhance_options(e, enh.c);

  AnalyzeCmd ana;
  auto* a = app.add_subcommand("analyze", "Ring band energies and inter-frame SSIM");
  a->add_option("--reference", ana.reference);
  a->add_option("--foveated", ana.foveated);
  a->add_option("--contrast", ana.contrast);
  a->add_option("--enhanced", ana.enhanced);
  a->add_option("--image", ana.images, "label=path, repeatable");
  a->add_option("--frames", ana.sequences, "label=directory, repeatable");
  a->add_option("--bands-out", ana.bands_out, "Band energy CSV");
  a->add_option("--ssim-out", ana.ssim_out, "SSIM CSV");
  a->add_option("--ring-center", ana.ring_center);
  a->add_option("--ring-width", ana.ring_width);
  a->add_option("--bands", ana.band_edges, "Band edges in cpd, e.g. 1,5.5,23")->delimiter(',');
  add_setup_options(a, ana.c);

  SequenceCmd seq;
  auto* s = app.add_subcommand("sequence", "Enhance every frame of a directory with one impulse set");
  s->add_option("input_dir", seq.input_dir)->required();
  s->add_option("output_dir", seq.output_dir)->required();
  s->add_flag("--foveate", seq.simulate, "Frames are unfoveated; simulate foveation first");
  s->add_option("--max-clipped", seq.max_clipped);
  add_setup_options(s, seq.c);
  add_enhance_options(s, seq.c);

  BenchCmd bench;
  auto* b = app.add_subcommand("bench", "Per-stage timings over impulses per kernel");
  b->add_option("--input", bench.input, "Image to use instead of a synthetic one");
  b->add_option("--width", bench.width);
  b->add_option("--height", bench.height);
  b->add_option("--runs", bench.runs);
  b->add_option("--warmup", bench.warmup);
  b->add_option("--sweep", bench.sweep, "Impulses per kernel to time")->delimiter(',');
  add_setup_options(b, bench.c);
  add_enhance_options(b, bench.c);

  ImpulsesCmd imp;
  auto* i = app.add_subcommand("impulses", "Dump the impulse set as CSV");
  i->add_option("output", imp.output)->required();
  i->add_option("--input", imp.input, "Foveated image; adds resolved kernel parameters");
  i->add_option("--size", imp.size, "W,H")->delimiter(',')->expected(2);
  add_setup_options(i, imp.c);
  add_enhance_options(i, imp.c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    error_line(err, "config", ex.what());
    return kExitConfig;
  }

  const std::vector<std::pair<CLI::App*, std::function<int()>>> dispatch{
      {f, [&] { return fov.run(out); }},      {e, [&] { return enh.run(out); }},
      {a, [&] { return ana.run(out); }},      {s, [&] { return seq.run(out); }},
      {b, [&] { return bench.run(out); }},    {i, [&] { return imp.run(out); }}};
  const std::vector<Common*> commons{&fov.c, &enh.c, &ana.c, &seq.c, &bench.c, &imp.c};
  try {
    for (std::size_t k = 0; k < dispatch.size(); ++k) {
      if (!dispatch[k].first->parsed()) continue;
      set_thread_count(commons[k]->threads);
      return dispatch[k].second();
    }
  } catch (const ClippingError& ex) {
    error_line(err, "clipping", ex.what());
    return kExitConfig;
  } catch (const ConfigError& ex) {
    error_line(err, "config", ex.what());
    return kExitConfig;
  } catch (const IoError& ex) {
    error_line(err, "io", ex.what());
    return kExitIo;
  } catch (const fs::filesystem_error& ex) {
    error_line(err, "io", ex.what());
    return kExitIo;
  }
  return kExitConfig;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"fovnoise"};
  for (const auto& s : args) argv.push_back(s.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace fovnoise::cli
