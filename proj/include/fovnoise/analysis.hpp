#pragma once

// Spectral and temporal measurements: band energy in eccentricity rings,
// inter-frame SSIM, and the sampling-rate ratio implied by two blur rates.

#include "fovnoise/field.hpp"
#include "fovnoise/retina.hpp"

#include <complex>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace fovnoise {

using ComplexField = Eigen::Array<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Unnormalized forward 2-D DFT.
ComplexField fft2(const Field<double>& img);

/// |F|^2 / N^2 per bin, DC at (0, 0). Sums to the mean of img^2 (Parseval).
Field<double> power_spectrum(const Field<double>& img);

/// Signed frequency (cycles/px) of DFT bin k out of n.
inline double bin_frequency(Eigen::Index k, Eigen::Index n) {
  const Eigen::Index s = k <= n / 2 ? k : k - n;
  return static_cast<double>(s) / static_cast<double>(n);
}

/// Periodic Hann window of length n.
std::vector<double> hann_window(Eigen::Index n);

struct Ring {
  double center_deg = 20.0;
  double width_deg = 4.0;  // full width
};

struct Band {
  double f_lo = 0.0;  // cpd, inclusive
  double f_hi = 0.0;  // cpd, exclusive
};

struct BandEnergy {
  Band band;
  double energy = 0.0;  // windowed power per pixel in the band, averaged over patches
};

struct BandReport {
  std::string label;
  Ring ring;
  std::size_t patches = 0;
  std::vector<BandEnergy> bands;
};

inline constexpr int kRingPatchSize = 128;

/// Top-left corners of the 50%-overlapping patches whose center lies in the ring.
std::vector<std::pair<Eigen::Index, Eigen::Index>> ring_patch_origins(const ViewingSetup& setup, Ring ring,
                                                                     int patch = kRingPatchSize);

BandReport ring_band_report(const FieldMap& luminance, const ViewingSetup& setup, Ring ring,
                            std::span<const Band> bands, std::string label = {}, int patch = kRingPatchSize);

double ring_band_energy(const FieldMap& luminance, const ViewingSetup& setup, Ring ring, Band band,
                        int patch = kRingPatchSize);

/// Total windowed non-DC power per pixel over the ring patches.
double ring_total_power(const FieldMap& luminance, const ViewingSetup& setup, Ring ring, int patch = kRingPatchSize);

/// Resolvable band [1, T_L] and aliasing band [T_L, T_H] at the ring center.
std::vector<Band> default_bands(const AcuityLimits& limits, Ring ring);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Mean SSIM over the valid (fully covered) window positions.
double ssim(const FieldMap& a, const FieldMap& b, const SsimParams& params = {});

/// Mean SSIM of consecutive frame pairs.
double interframe_ssim(std::span<const FieldMap> frames, const SsimParams& params = {});

/// Net sampling-rate ratio SR2/SR1 between foveation with blur rates 1 and 2;
/// equals blur_rate_1 / blur_rate_2.
double sampling_rate_ratio(double blur_rate_1, double blur_rate_2);

void write_band_csv(std::ostream& os, std::span<const BandReport> reports);

struct SsimEntry {
  std::string label;
  double mean_ssim;
  std::size_t frames;
};
void write_ssim_csv(std::ostream& os, std::span<const SsimEntry> entries);

}  // namespace fovnoise
