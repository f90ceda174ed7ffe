#include "fovnoise/parallel.hpp"
#include "fovnoise/pipeline.hpp"
#include "fovnoise/synthetic.hpp"

#include "corpus.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace fovnoise;
using doctest::Approx;

namespace {

FieldMap white_noise(Dims d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  FieldMap f(d.height, d.width);
  for (auto& v : f.reshaped()) v = u(rng);
  return f;
}

double rms(const FieldMap& a, const FieldMap& b) { return std::sqrt((a.cast<double>() - b.cast<double>()).square().mean()); }

}  // namespace

TEST_CASE("transfer function") {
  for (double v = 0.0; v <= 1.0; v += 0.01) CHECK(linear_to_srgb(srgb_to_linear(v)) == Approx(v).epsilon(1e-12));
  CHECK(srgb_to_linear(0.0) == 0.0);
  CHECK(srgb_to_linear(1.0) == Approx(1.0));
  CHECK(srgb_to_linear(0.5) == Approx(0.21404).epsilon(1e-4));
  CHECK(srgb_to_linear(0.04045) == Approx(0.04045 / 12.92));
}

TEST_CASE("frame") {
  SUBCASE("gray maps to the decoded value") {
    for (float g : {0.0f, 0.1f, 0.5f, 0.8f, 1.0f}) {
      const auto f = Frame::gray(FieldMap::Constant(4, 4, g));
      CHECK(f.luminance()(1, 1) == Approx(srgb_to_linear(g)).epsilon(1e-6));
    }
  }
  SUBCASE("weights") {
    const FieldMap z = FieldMap::Zero(2, 2), o = FieldMap::Ones(2, 2);
    CHECK(Frame(o, z, z).luminance()(0, 0) == Approx(0.2126));
    CHECK(Frame(z, o, z).luminance()(0, 0) == Approx(0.7152));
    CHECK(Frame(z, z, o).luminance()(0, 0) == Approx(0.0722));
  }
  SUBCASE("invariants") {
    const auto f = synthetic_image({40, 30}, 1);
    CHECK(f.luminance_consistent());
    CHECK_THROWS_AS(Frame::gray(FieldMap::Constant(2, 2, 1.5f)), ConfigError);
    CHECK_THROWS_AS(Frame::gray(FieldMap::Constant(2, 2, std::nanf(""))), ConfigError);
    CHECK_THROWS_AS(Frame(FieldMap::Zero(2, 2), FieldMap::Zero(2, 3), FieldMap::Zero(2, 2)), ConfigError);
  }
}

TEST_CASE("variable blur") {
  SUBCASE("zero sigma passes through bit-exact") {
    const auto f = synthetic_image({64, 48}, 2);
    CHECK(foveate(f, FieldMap::Zero(48, 64)) == f);
    const auto setup = corpus::pan_setup();
    const auto g = synthetic_image(setup.resolution, 3);
    CHECK(foveate(g, sigma_map(setup, 0.0)) == g);
  }
  SUBCASE("constant image is unchanged") {
    const auto f = Frame::gray(FieldMap::Constant(40, 50, 0.6f));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<float> u(0.0f, 6.0f);
    FieldMap sigma(40, 50);
    for (auto& v : sigma.reshaped()) v = u(rng);
    for (auto m : {BlurMethod::exact, BlurMethod::separable}) {
      const auto out = foveate(f, sigma, m);
      for (int c = 0; c < 3; ++c) CHECK((out.channel(c) - 0.6f).abs().maxCoeff() <= 1e-6f);
    }
  }
  SUBCASE("impulse response is the truncated Gaussian") {
    const double s = 5.47;
    const Dims d{96, 96};
    FieldMap img = FieldMap::Zero(96, 96);
    img(48, 48) = 1.0f;
    const auto out = gaussian_blur_variable(img, make_field<float>(d, float(s))).cast<double>().eval();
    const int r = static_cast<int>(std::ceil(3.0 * s));
    double norm = 0.0;
    for (int k = -r; k <= r; ++k) norm += std::exp(-0.5 * k * k / (s * s));
    for (int dy = -20; dy <= 20; ++dy)
      for (int dx = -20; dx <= 20; ++dx) {
        const double expect = std::abs(dx) > r || std::abs(dy) > r
                                  ? 0.0
                                  : std::exp(-0.5 * (dx * dx + dy * dy) / (s * s)) / (norm * norm);
        REQUIRE(std::abs(out(48 + dy, 48 + dx) - expect) <= 1e-6 / (norm * norm));
      }
  }
  SUBCASE("frequency response of the 20 deg blur") {
    // DFT of the measured impulse response against exp(-2 pi^2 sigma^2 f^2)
    const double s = 5.47;
    const int n = 128;
    const FieldMap sigma = make_field<float>({n, n}, float(s));
    // centered impulse, rolled so the kernel center sits at the origin
    FieldMap centered = FieldMap::Zero(n, n);
    centered(n / 2, n / 2) = 1.0f;
    const auto resp = gaussian_blur_variable(centered, sigma);
    Field<double> k(n, n);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) k((y - n / 2 + n) % n, (x - n / 2 + n) % n) = resp(y, x);
    const auto spec = oracle::dft2(k);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        const double f = std::hypot(oracle::freq(x, n), oracle::freq(y, n));
        if (f > 0.15) continue;
        const double h = std::exp(-2.0 * std::numbers::pi * std::numbers::pi * s * s * f * f);
        const double got = std::abs(spec(y, x));
        REQUIRE(std::abs(got - h) <= 0.01);
        if (h >= 0.1) REQUIRE(std::abs(got / h - 1.0) <= 0.10);
      }
  }
  SUBCASE("white noise variance drops by the kernel energy") {
    const double s = 5.47;
    const Dims d{256, 256};
    FieldMap noise = white_noise(d, 4) - 0.5f;
    const auto out = gaussian_blur_variable(noise, make_field<float>(d, float(s)));
    const auto inner = out.block(40, 40, 176, 176).cast<double>();
    const double var = (inner - inner.mean()).square().mean();
    // variance of U(-.5,.5) is 1/12; sum of squared normalized weights ~ 1/(4 pi s^2)
    CHECK(var == Approx(1.0 / 12.0 / (4.0 * std::numbers::pi * s * s)).epsilon(0.1));
  }
  SUBCASE("separable path within 1e-3 RMS of the exact blur") {
    const auto setup = corpus::pan_setup();
    const auto f = synthetic_image(setup.resolution, 8);
    const auto sigma = sigma_map(setup, 0.57);
    const auto a = foveate(f, sigma, BlurMethod::exact);
    const auto b = foveate(f, sigma, BlurMethod::separable);
    for (int c = 0; c < 3; ++c) CHECK(rms(a.channel(c), b.channel(c)) <= 1e-3);
  }
  SUBCASE("size mismatch is rejected") {
    CHECK_THROWS_AS(foveate(Frame::gray(FieldMap::Zero(4, 4)), FieldMap::Zero(4, 5)), ConfigError);
  }
}

TEST_CASE("contrast enhancement") {
  SUBCASE("zero gain is the identity") {
    const auto f = synthetic_image({64, 48}, 5);
    CHECK(contrast_enhance(f, make_field<float>({64, 48}, 3.0f), 0.0) == f);
  }
  SUBCASE("constant image is unchanged") {
    const auto f = Frame::gray(FieldMap::Constant(30, 30, 0.4f));
    const auto out = contrast_enhance(f, make_field<float>({30, 30}, 4.0f), 0.4);
    CHECK((out.channel(0) - 0.4f).abs().maxCoeff() <= 1e-6f);
  }
  SUBCASE("step edge overshoot equals the detail layer at gain 1") {
    const int w = 80;
    const double s = 3.0;
    std::vector<double> lum(w);
    for (int x = 0; x < w; ++x) lum[x] = x < w / 2 ? 0.2 : 0.6;
    FieldMap enc(16, w);
    for (int x = 0; x < w; ++x) enc.col(x).setConstant(static_cast<float>(linear_to_srgb(lum[x])));
    const auto f = Frame::gray(enc);
    const auto out = contrast_enhance(f, make_field<float>({w, 16}, float(s)), 0.2);
    const auto blurred = oracle::blur_1d(lum, s);
    std::vector<double> row(w);
    for (int x = 0; x < w; ++x) row[x] = f.luminance()(8, x);
    const auto row_blurred = oracle::blur_1d(row, s);
    for (int x = 0; x < w; ++x) {
      const double detail = row[x] - row_blurred[x];
      REQUIRE(out.luminance()(8, x) == Approx(row[x] + detail).epsilon(1e-4).scale(1e-4));
    }
    const double overshoot = out.luminance()(8, w / 2) - 0.6;
    CHECK(overshoot == Approx(0.6 - blurred[w / 2]).epsilon(1e-3));
    CHECK(overshoot > 0.0);
  }
  SUBCASE("gain scales the detail linearly") {
    FieldMap enc(8, 40);
    for (int x = 0; x < 40; ++x) enc.col(x).setConstant(x < 20 ? 0.45f : 0.55f);
    const auto f = Frame::gray(enc);
    const auto sig = make_field<float>({40, 8}, 2.0f);
    const double base = f.luminance()(4, 20);
    const double d1 = contrast_enhance(f, sig, 0.1).luminance()(4, 20) - base;
    const double d2 = contrast_enhance(f, sig, 0.2).luminance()(4, 20) - base;
    CHECK(d2 == Approx(2.0 * d1).epsilon(1e-3));
  }
}

TEST_CASE("enhancement") {
  const auto setup = corpus::pan_setup();
  const auto src = synthetic_image(setup.resolution, 31);
  const auto sigma = sigma_map(setup, 0.57);
  const auto fov = foveate(src, sigma);

  SUBCASE("calibrated defaults at 0.57") {
    const Enhancer e(setup, EnhanceConfig::calibrated(0.57));
    CHECK(e.config().f_e == 0.28);
    CHECK(e.config().s_k == 18.68);
    CHECK(e.config().s_f == 2.19);
  }
  SUBCASE("no gain and no noise is the identity") {
    auto c = EnhanceConfig::calibrated(0.57);
    c.f_e = 0.0;
    c.s_k = 0.0;
    CHECK(enhance(fov, setup, c) == fov);
  }
  SUBCASE("output invariants") {
    const Enhancer e(setup, EnhanceConfig::calibrated(0.57));
    const auto r = e.run(fov);
    const auto& g = e.geometry();
    CHECK(r.clipped_fraction < 0.01);
    for (int c = 0; c < 3; ++c) {
      CHECK(r.output.channel(c).minCoeff() >= 0.0f);
      CHECK(r.output.channel(c).maxCoeff() <= 1.0f);
    }
    CHECK(r.noise.abs().maxCoeff() > 0.0f);
    std::size_t checked = 0;
    for (Eigen::Index y = 0; y < fov.dims().height; ++y)
      for (Eigen::Index x = 0; x < fov.dims().width; ++x) {
        if (!(g.sigma_px(y, x) > 0.0f)) {
          for (int c = 0; c < 3; ++c) REQUIRE(r.output.channel(c)(y, x) == fov.channel(c)(y, x));
          continue;
        }
        bool inside = true;
        for (int c = 0; c < 3; ++c) {
          const float v = r.output.channel(c)(y, x);
          inside = inside && v > 0.0f && v < 1.0f;
        }
        if (!inside) continue;
        const float n0 = r.output.channel(0)(y, x) - r.contrast.channel(0)(y, x);
        for (int c = 1; c < 3; ++c) REQUIRE(std::abs(r.output.channel(c)(y, x) - r.contrast.channel(c)(y, x) - n0) <= 1e-6f);
        ++checked;
      }
    CHECK(checked > 0);
    // the fovea is everything within 8 deg
    for (Eigen::Index y = 0; y < fov.dims().height; y += 7)
      for (Eigen::Index x = 0; x < fov.dims().width; x += 7)
        if (g.eccentricity(y, x) < 7.99f) REQUIRE(g.sigma_px(y, x) == 0.0f);
  }
  SUBCASE("independent of thread count") {
    const Enhancer e(setup, EnhanceConfig::calibrated(0.34));
    set_thread_count(1);
    const auto a = e.run(fov).output;
    set_thread_count(3);
    const auto b = e.run(fov).output;
    set_thread_count(0);
    CHECK(a == b);
  }
  SUBCASE("clipping guard") {
    auto c = EnhanceConfig::calibrated(0.57);
    c.s_k = 45.0;
    c.f_e = 0.4;
    EnhanceOptions o;
    o.max_clipped_fraction = 0.0;
    const Enhancer e(setup, c, o);
    bool threw = false;
    try {
      (void)e.run(fov);
    } catch (const ClippingError& err) {
      threw = true;
      CHECK(err.fraction() > 0.0);
    }
    CHECK(threw);
  }
  SUBCASE("external sigma map") {
    const Enhancer a(setup, EnhanceConfig::calibrated(0.57));
    const Enhancer b(setup, EnhanceConfig::calibrated(0.57), sigma);
    CHECK(a.run(fov).output == b.run(fov).output);
    CHECK_THROWS_AS(Enhancer(setup, EnhanceConfig::calibrated(0.57), FieldMap::Zero(3, 3)), ConfigError);
  }
  SUBCASE("frame size must match the setup") {
    const Enhancer e(setup, EnhanceConfig::calibrated(0.57));
    CHECK_THROWS_AS(e.run(Frame::gray(FieldMap::Zero(10, 10))), ConfigError);
  }
}

TEST_CASE("sequences") {
  const auto setup = corpus::pan_setup();
  const auto frame = foveate(synthetic_image(setup.resolution, 40), sigma_map(setup, 0.34));
  SequenceJob job{{frame, frame, frame}, EnhanceConfig::calibrated(0.34), setup};
  const auto a = process_sequence(job);
  REQUIRE(a.size() == 3);
  CHECK(a[0] == a[1]);
  CHECK(a[1] == a[2]);
  const auto b = process_sequence(job);
  for (std::size_t i = 0; i < 3; ++i) CHECK(a[i] == b[i]);
  job.config.seed = 1;
  CHECK_FALSE(process_sequence(job)[0] == a[0]);
}
