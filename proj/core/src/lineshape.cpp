#include "ersd/lineshape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ersd/constants.hpp"
#include "ersd/fitkit.hpp"
#include "ersd/numeric.hpp"
#include "ersd/rng.hpp"
#include "quadrature.hpp"

namespace ersd::lineshape {

namespace {

constexpr double kGaussianFwhmPerSigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)
constexpr double kEnvelopeCutoff = 12.0;  // exp(-12^{3/2}) ~ 1e-18

Histogram histogram_from_sorted(std::span<const double> sorted, std::size_t max_bins) {
  Histogram h;
  const double lo = sorted_quantile(sorted, 0.001);
  const double hi = sorted_quantile(sorted, 0.999);
  if (!(hi > lo)) return h;
  const double n = static_cast<double>(sorted.size());
  const double iqr = sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
  double width = 2.0 * iqr / std::cbrt(n);
  if (!(width > 0.0)) width = (hi - lo) / std::sqrt(n);
  const double raw = std::ceil((hi - lo) / width);
  const auto bins = static_cast<std::size_t>(std::clamp(raw, 1.0, static_cast<double>(max_bins)));
  h.bin_width = (hi - lo) / static_cast<double>(bins);
  h.counts.assign(bins, 0.0);
  h.centers.resize(bins);
  for (std::size_t i = 0; i < bins; ++i) h.centers[i] = lo + (static_cast<double>(i) + 0.5) * h.bin_width;
  for (double x : sorted) {
    const double pos = std::floor((x - lo) / h.bin_width);
    const auto idx = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(bins - 1)));
    h.counts[idx] += 1.0;
  }
  return h;
}

FwhmEstimate fwhm_sorted(std::vector<double> sorted, FwhmMethod method) {
  if (sorted.size() < kMinHistogramSamples)
    throw std::invalid_argument("FWHM estimation needs at least 100 samples");
  const double centre = sorted_quantile(sorted, 0.5);
  for (double& x : sorted) x -= centre;

  FwhmEstimate est;
  est.histogram = histogram_from_sorted(sorted, 1'000'000);
  if (est.histogram.counts.empty()) {
    est.degenerate = true;
    est.histogram.centers = {0.0};
    est.histogram.counts = {static_cast<double>(sorted.size())};
    return est;
  }
  const Histogram& h = est.histogram;
  switch (method) {
    case FwhmMethod::interpolated_histogram:
      est.fwhm = histogram_fwhm(h);
      break;
    case FwhmMethod::gaussian_fit:
    case FwhmMethod::lorentzian_fit: {
      // Edge bins hold the clamped outliers and are left out of the fit.
      const std::size_t n = h.centers.size();
      if (n < 10) {
        est.fwhm = histogram_fwhm(h);
        est.fit_converged = false;
        break;
      }
      const std::span<const double> x(h.centers.data() + 1, n - 2);
      const std::span<const double> y(h.counts.data() + 1, n - 2);
      const fitkit::FitResult r = method == FwhmMethod::gaussian_fit
                                      ? fitkit::fit_gaussian_peak(x, y, fitkit::Weighting::poisson)
                                      : fitkit::fit_lorentzian_peak(x, y, fitkit::Weighting::poisson);
      est.fwhm = r.value("fwhm");
      est.fit_converged = r.converged;
      break;
    }
  }
  return est;
}

std::vector<double> sorted_copy(std::span<const double> v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace

Histogram make_histogram(std::span<const double> samples, std::size_t max_bins) {
  if (samples.empty()) return {};
  if (max_bins == 0) throw std::invalid_argument("max_bins must be positive");
  return histogram_from_sorted(sorted_copy(samples), max_bins);
}

double histogram_fwhm(const Histogram& h) {
  const std::size_t n = h.counts.size();
  if (n == 0) return 0.0;
  const std::size_t half = n >= 50 ? 2 : (n >= 20 ? 1 : 0);
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i >= half ? i - half : 0;
    const std::size_t b = std::min(n - 1, i + half);
    double acc = 0.0;
    for (std::size_t j = a; j <= b; ++j) acc += h.counts[j];
    s[i] = acc / static_cast<double>(b - a + 1);
  }
  const auto peak = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
  const double level = 0.5 * s[peak];
  if (!(level > 0.0)) return 0.0;

  auto crossing = [&](std::size_t below, std::size_t above) {
    const double t = (level - s[below]) / (s[above] - s[below]);
    return h.centers[below] + t * (h.centers[above] - h.centers[below]);
  };
  double left = h.centers.front() - 0.5 * h.bin_width;
  for (std::size_t i = peak; i-- > 0;) {
    if (s[i] < level) {
      left = crossing(i, i + 1);
      break;
    }
  }
  double right = h.centers.back() + 0.5 * h.bin_width;
  for (std::size_t i = peak + 1; i < n; ++i) {
    if (s[i] < level) {
      right = crossing(i, i - 1);
      break;
    }
  }
  return right - left;
}

FwhmEstimate fwhm_from_samples(std::span<const double> samples, FwhmMethod method) {
  return fwhm_sorted(sorted_copy(samples), method);
}

double bootstrap_fwhm_error(std::span<const double> samples, FwhmMethod method,
                            std::size_t replicates, std::uint64_t seed) {
  if (replicates < 2) throw std::invalid_argument("bootstrap needs at least 2 replicates");
  std::vector<double> widths;
  widths.reserve(replicates);
  std::vector<double> draw(samples.size());
  for (std::size_t r = 0; r < replicates; ++r) {
    Rng rng(derive_seed(seed, Stream::bootstrap, r));
    for (double& d : draw) d = samples[rng() % samples.size()];
    std::sort(draw.begin(), draw.end());
    widths.push_back(fwhm_sorted(draw, method).fwhm);
  }
  return sample_stddev(widths);
}

double paired_bootstrap_difference_error(std::span<const double> a, std::span<const double> b,
                                         FwhmMethod method, std::size_t replicates,
                                         std::uint64_t seed) {
  if (a.size() != b.size()) throw std::invalid_argument("paired samples differ in length");
  if (replicates < 2) throw std::invalid_argument("bootstrap needs at least 2 replicates");
  std::vector<double> diffs;
  diffs.reserve(replicates);
  std::vector<double> da(a.size()), db(b.size());
  for (std::size_t r = 0; r < replicates; ++r) {
    Rng rng(derive_seed(seed, Stream::bootstrap, r));
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::size_t k = rng() % a.size();
      da[i] = a[k];
      db[i] = b[k];
    }
    std::sort(da.begin(), da.end());
    std::sort(db.begin(), db.end());
    diffs.push_back(fwhm_sorted(da, method).fwhm - fwhm_sorted(db, method).fwhm);
  }
  return sample_stddev(diffs);
}

double holtsmark_pdf(double beta) {
  if (!(beta >= 0.0)) throw std::invalid_argument("Holtsmark argument must be non-negative");
  if (beta == 0.0) return 0.0;
  if (!std::isfinite(beta)) return 0.0;
  auto f = [beta](double y) { return y * std::sin(beta * y) * std::exp(-y * std::sqrt(y)); };
  const double period = constants::pi / beta;
  const double integral = detail::integrate_oscillatory(f, kEnvelopeCutoff, period, period, 1e-14);
  return std::max(0.0, 2.0 * beta / constants::pi * integral);
}

double holtsmark_component_pdf(double x) {
  x = std::abs(x);
  if (!std::isfinite(x)) return 0.0;
  auto f = [x](double t) { return std::cos(t * x) * std::exp(-t * std::sqrt(t)); };
  const double first = x > 0.0 ? 0.5 * constants::pi / x : kEnvelopeCutoff;
  const double period = x > 0.0 ? constants::pi / x : kEnvelopeCutoff;
  return std::max(0.0, detail::integrate_oscillatory(f, kEnvelopeCutoff, first, period, 1e-14) / constants::pi);
}

double holtsmark_normal_field(double rho_cm3) {
  if (!(rho_cm3 >= 0.0)) throw std::invalid_argument("charge density must be non-negative");
  const double rho_m3 = rho_cm3 * 1e6;
  const double coulomb = constants::elementary_charge / (4.0 * constants::pi * constants::vacuum_permittivity);
  return 2.0 * constants::pi * std::pow(4.0 / 15.0, 2.0 / 3.0) * coulomb * std::cbrt(rho_m3 * rho_m3);
}

double holtsmark_width(double rho_cm3, double coupling_hz_per_v_per_m) {
  return coupling_hz_per_v_per_m * holtsmark_normal_field(rho_cm3);
}

double gradient_broadening_width(double rho_cm3, double coupling_hz_cm3) {
  if (!(rho_cm3 >= 0.0)) throw std::invalid_argument("charge density must be non-negative");
  return coupling_hz_cm3 * rho_cm3;
}

void LineModel::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("line scale must be positive");
  if (!std::isfinite(center)) throw std::invalid_argument("line center must be finite");
}

double LineModel::density(double frequency) const {
  validate();
  const double u = (frequency - center) / scale;
  switch (kind) {
    case LineKind::lorentzian: return 1.0 / (constants::pi * scale * (1.0 + u * u));
    case LineKind::gaussian: return std::exp(-0.5 * u * u) / (scale * std::sqrt(2.0 * constants::pi));
    case LineKind::holtsmark: return holtsmark_component_pdf(u) / scale;
  }
  return 0.0;
}

double LineModel::fwhm() const {
  validate();
  switch (kind) {
    case LineKind::lorentzian: return 2.0 * scale;
    case LineKind::gaussian: return kGaussianFwhmPerSigma * scale;
    case LineKind::holtsmark: break;
  }
  static const double half_width = [] {
    const double target = 0.5 * holtsmark_component_pdf(0.0);
    double lo = 0.0, hi = 4.0;
    for (int i = 0; i < 100 && hi - lo > 1e-14; ++i) {
      const double mid = 0.5 * (lo + hi);
      (holtsmark_component_pdf(mid) > target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }();
  return 2.0 * half_width * scale;
}

ScalingFit scaling_fit(std::span<const double> density, std::span<const double> width) {
  if (density.size() != width.size()) throw std::invalid_argument("density and width differ in length");
  if (density.size() < 2) throw std::invalid_argument("scaling fit needs at least two points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < density.size(); ++i) {
    if (!(density[i] > 0.0) || !(width[i] > 0.0) || !std::isfinite(density[i]) || !std::isfinite(width[i]))
      throw std::invalid_argument("scaling fit needs positive finite points");
    lx.push_back(std::log(density[i]));
    ly.push_back(std::log(width[i]));
  }
  const double mx = mean(lx), my = mean(ly);
  CompensatedSum sxx, sxy;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx.add((lx[i] - mx) * (lx[i] - mx));
    sxy.add((lx[i] - mx) * (ly[i] - my));
  }
  if (!(sxx.value() > 0.0)) throw std::invalid_argument("scaling fit needs at least two distinct densities");
  ScalingFit fit;
  fit.exponent = sxy.value() / sxx.value();
  fit.prefactor = std::exp(my - fit.exponent * mx);
  CompensatedSum rss;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - my - fit.exponent * (lx[i] - mx);
    rss.add(r * r);
  }
  fit.residual = std::sqrt(rss.value() / static_cast<double>(lx.size()));
  return fit;
}

ScalingReport scaling_report(std::span<const ScalingPoint> points) {
  std::vector<double> d, w, du, wu;
  for (const auto& p : points) {
    d.push_back(p.density);
    w.push_back(p.width);
    if (!p.censored) {
      du.push_back(p.density);
      wu.push_back(p.width);
    }
  }
  ScalingReport report;
  report.all_points = scaling_fit(d, w);
  if (du.size() < d.size() && du.size() >= 2) report.uncensored = scaling_fit(du, wu);
  return report;
}

}  // namespace ersd::lineshape
