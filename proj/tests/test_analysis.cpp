#include "fovnoise/analysis.hpp"
#include "fovnoise/synthetic.hpp"

#include "corpus.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace fovnoise;
using doctest::Approx;

namespace {

const Ring kRing{20.0, 4.0};

FieldMap grating(const ViewingSetup& s, double f_px, double angle) {
  FieldMap g(s.resolution.height, s.resolution.width);
  for (Eigen::Index y = 0; y < g.rows(); ++y)
    for (Eigen::Index x = 0; x < g.cols(); ++x)
      g(y, x) = static_cast<float>(
          0.5 + 0.3 * std::sin(2.0 * std::numbers::pi * f_px * (double(x) * std::cos(angle) + double(y) * std::sin(angle))));
  return g;
}

/// Gaussian-window SSIM evaluated window by window.
double ssim_direct(const FieldMap& a, const FieldMap& b) {
  const int n = 11;
  std::vector<double> w(n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += w[i] = std::exp(-(i - 5.0) * (i - 5.0) / (2.0 * 1.5 * 1.5));
  for (double& v : w) v /= sum;
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0.0;
  int count = 0;
  for (Eigen::Index y = 0; y + n <= a.rows(); ++y)
    for (Eigen::Index x = 0; x + n <= a.cols(); ++x) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const double k = w[j] * w[i], va = a(y + j, x + i), vb = b(y + j, x + i);
          ma += k * va;
          mb += k * vb;
          saa += k * va * va;
          sbb += k * vb * vb;
          sab += k * va * vb;
        }
      saa -= ma * ma;
      sbb -= mb * mb;
      sab -= ma * mb;
      total += (2 * ma * mb + c1) * (2 * sab + c2) / ((ma * ma + mb * mb + c1) * (saa + sbb + c2));
      ++count;
    }
  return total / count;
}

}  // namespace

TEST_CASE("spectrum helpers") {
  const auto w = hann_window(8);
  CHECK(w[0] == 0.0);
  CHECK(w[4] == Approx(1.0));
  CHECK(w[2] == Approx(0.5));
  CHECK(bin_frequency(3, 8) == 0.375);
  CHECK(bin_frequency(5, 8) == -0.375);
  Field<double> img(16, 16);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (auto& v : img.reshaped()) v = nd(rng);
  CHECK(power_spectrum(img).sum() == Approx(img.square().mean()).epsilon(1e-10));
}

TEST_CASE("ring patches lie in the ring") {
  const auto s = corpus::ring_setup();
  const auto origins = ring_patch_origins(s, kRing);
  REQUIRE_FALSE(origins.empty());
  for (const auto& [x0, y0] : origins) {
    CHECK(x0 >= 0);
    CHECK(y0 >= 0);
    CHECK(x0 + kRingPatchSize <= s.resolution.width);
    CHECK(y0 + kRingPatchSize <= s.resolution.height);
    const double e = s.eccentricity_at(x0 + 63.5, y0 + 63.5);
    CHECK(std::abs(e - 20.0) <= 2.0);
  }
  CHECK_THROWS_AS(ring_patch_origins(s, Ring{60.0, 2.0}), ConfigError);
}

TEST_CASE("band energy") {
  const auto s = corpus::ring_setup();
  SUBCASE("constant image has none") {
    const FieldMap c = FieldMap::Constant(s.resolution.height, s.resolution.width, 0.4f);
    CHECK(ring_band_energy(c, s, kRing, {0.0, 100.0}) == 0.0);
  }
  SUBCASE("a grating lands in the band containing its frequency") {
    const double f_px = 0.12;
    const auto g = grating(s, f_px, 0.4);
    const double r20 = s.distance_m * std::tan(deg_to_rad(20.0));
    const double dpp = s.deg_per_px_at(s.gaze_x + r20 / s.pitch_x(), s.gaze_y);
    const double f_cpd = f_px / dpp;
    const std::vector<Band> bands{{0.0, 0.75 * f_cpd}, {0.75 * f_cpd, 1.25 * f_cpd}, {1.25 * f_cpd, 1000.0}};
    const auto rep = ring_band_report(g, s, kRing, bands, "grating");
    const double total = ring_total_power(g, s, kRing);
    CHECK(rep.bands[1].energy / total >= 0.9);
    CHECK(rep.label == "grating");
    CHECK(rep.patches == ring_patch_origins(s, kRing).size());
  }
  SUBCASE("a partition of the spectrum sums to the total power") {
    const auto img = synthetic_image(s.resolution, 5).luminance();
    const std::vector<Band> bands{{0.0, 2.0}, {2.0, 5.5}, {5.5, 11.0}, {11.0, 23.0}, {23.0, 1000.0}};
    const auto rep = ring_band_report(img, s, kRing, bands);
    double sum = 0.0;
    for (const auto& b : rep.bands) {
      CHECK(b.energy >= 0.0);
      sum += b.energy;
    }
    CHECK(sum == Approx(ring_total_power(img, s, kRing)).epsilon(0.02));
  }
  SUBCASE("bands must be ordered") {
    const FieldMap c = FieldMap::Zero(s.resolution.height, s.resolution.width);
    const std::vector<Band> overlapping{{1.0, 5.0}, {4.0, 8.0}};
    CHECK_THROWS_AS(ring_band_report(c, s, kRing, overlapping), ConfigError);
    const std::vector<Band> inverted{{5.0, 1.0}};
    CHECK_THROWS_AS(ring_band_report(c, s, kRing, inverted), ConfigError);
  }
  SUBCASE("default bands split at the acuity limits") {
    const auto b = default_bands(AcuityLimits::thibos(), kRing);
    REQUIRE(b.size() == 2);
    CHECK(b[0].f_hi == 5.5);
    CHECK(b[1].f_lo == 5.5);
    CHECK(b[1].f_hi == 23.0);
  }
}

TEST_CASE("ssim") {
  const auto a = synthetic_image({64, 48}, 1).luminance();
  const auto b = synthetic_image({64, 48}, 2).luminance();
  CHECK(ssim(a, a) == Approx(1.0));
  CHECK(ssim(a, b) == Approx(ssim_direct(a, b)).epsilon(1e-9));
  CHECK(ssim(a, b) == Approx(ssim(b, a)).epsilon(1e-12));
  const FieldMap inv = 1.0f - a;
  CHECK(ssim(a, inv) < 0.0);
  CHECK(ssim(a, b) >= -1.0);
  CHECK(ssim(a, b) <= 1.0);
  CHECK_THROWS_AS(ssim(a, FieldMap(FieldMap::Zero(48, 63))), ConfigError);

  SUBCASE("interframe") {
    const std::vector<FieldMap> same{a, a, a};
    CHECK(interframe_ssim(same) == Approx(1.0));
    const std::vector<FieldMap> fwd{a, b, inv}, rev{inv, b, a};
    CHECK(interframe_ssim(fwd) == Approx((ssim(a, b) + ssim(b, inv)) / 2.0));
    CHECK(interframe_ssim(fwd) == Approx(interframe_ssim(rev)).epsilon(1e-12));
    const std::vector<FieldMap> one{a};
    CHECK_THROWS_AS(interframe_ssim(one), ConfigError);
  }
}

TEST_CASE("sampling-rate ratio") {
  CHECK(sampling_rate_ratio(0.3, 0.3) == 1.0);
  CHECK(sampling_rate_ratio(0.45, 0.68) == Approx(0.662).epsilon(1e-3));
  CHECK(sampling_rate_ratio(0.2, 0.4) == 0.5);
  CHECK(sampling_rate_ratio(0.2, 0.4) == Approx(0.5 * sampling_rate_ratio(0.2, 0.2)));
  CHECK_THROWS_AS(sampling_rate_ratio(0.0, 0.3), ConfigError);
  CHECK_THROWS_AS(sampling_rate_ratio(0.3, 0.0), ConfigError);
}

TEST_CASE("csv output") {
  BandReport r{"enhanced", kRing, 3, {{{1.0, 5.5}, 0.25}}};
  std::ostringstream os;
  const BandReport reports[1] = {r};
  write_band_csv(os, reports);
  CHECK(os.str().find("enhanced") != std::string::npos);
  CHECK(os.str().find("0.25") != std::string::npos);
  std::ostringstream ss;
  const SsimEntry entries[1] = {{"foveated", 0.5, 10}};
  write_ssim_csv(ss, entries);
  CHECK(ss.str().find("foveated") != std::string::npos);
}
