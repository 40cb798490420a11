#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace ersd::lineshape {

struct Histogram {
  std::vector<double> centers;
  std::vector<double> counts;  // integer-valued; sums to the sample count
  double bin_width = 0.0;
};

/// Freedman-Diaconis histogram over the [0.1%, 99.9%] quantile range. Samples
/// outside the range are clamped into the edge bins. Returns an empty
/// histogram when that range has zero width.
Histogram make_histogram(std::span<const double> samples, std::size_t max_bins = 1'000'000);

enum class FwhmMethod { interpolated_histogram, gaussian_fit, lorentzian_fit };

inline constexpr std::size_t kMinHistogramSamples = 100;

struct FwhmEstimate {
  double fwhm = 0.0;
  bool degenerate = false;  // zero-width sample; fwhm reported as 0
  bool fit_converged = true;
  Histogram histogram;      // of the median-centred samples
};

/// Full width at half maximum of the sample distribution. Samples are
/// centred on their median first, so the result does not depend on a common
/// offset. Throws std::invalid_argument below kMinHistogramSamples.
FwhmEstimate fwhm_from_samples(std::span<const double> samples,
                               FwhmMethod method = FwhmMethod::interpolated_histogram);

/// Half-maximum width of a histogram, crossings located by linear
/// interpolation walking outward from the (lightly smoothed) peak.
double histogram_fwhm(const Histogram& h);

/// Standard deviation of the FWHM over bootstrap resamples.
double bootstrap_fwhm_error(std::span<const double> samples, FwhmMethod method,
                            std::size_t replicates, std::uint64_t seed);

/// Bootstrap error of fwhm(a) - fwhm(b) for paired samples (same index = same
/// bath realization); both sides are resampled with the same indices.
double paired_bootstrap_difference_error(std::span<const double> a, std::span<const double> b,
                                         FwhmMethod method, std::size_t replicates,
                                         std::uint64_t seed);

/// Holtsmark distribution of the reduced field magnitude beta = E / E0:
///   H(beta) = (2 beta / pi) int_0^inf y sin(beta y) exp(-y^{3/2}) dy.
/// Throws std::invalid_argument for negative beta.
double holtsmark_pdf(double beta);

/// Density of one Cartesian component of the Holtsmark field (symmetric
/// stable law with index 3/2, unit scale):
///   p(x) = (1 / pi) int_0^inf cos(t x) exp(-t^{3/2}) dt.
double holtsmark_component_pdf(double x);

/// Holtsmark normal field E0 = 2 pi (4/15)^{2/3} e / (4 pi eps0) rho^{2/3}, in V/m
/// for a point-charge density rho in cm^-3.
double holtsmark_normal_field(double rho_cm3);

/// coupling [Hz per V/m] * E0(rho).
double holtsmark_width(double rho_cm3, double coupling_hz_per_v_per_m);

/// Lorentzian FWHM linear in rho: coupling [Hz cm^3] * rho.
double gradient_broadening_width(double rho_cm3, double coupling_hz_cm3);

enum class LineKind { lorentzian, gaussian, holtsmark };

struct LineModel {
  LineKind kind = LineKind::lorentzian;
  double scale = 1.0;  // gamma (Lorentzian HWHM), sigma, or Holtsmark frequency scale
  double center = 0.0;

  void validate() const;
  double density(double frequency) const;
  double fwhm() const;
};

struct ScalingFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  double residual = 0.0;  // rms of the log residuals
};

/// Least-squares line through (log density, log width).
ScalingFit scaling_fit(std::span<const double> density, std::span<const double> width);

struct ScalingPoint {
  double density = 0.0;
  double width = 0.0;
  bool censored = false;  // width is a lower bound
};

struct ScalingReport {
  ScalingFit all_points;
  std::optional<ScalingFit> uncensored;  // present when censoring removed points and >= 2 remain
};

ScalingReport scaling_report(std::span<const ScalingPoint> points);

}  // namespace ersd::lineshape
