#include "ersd/speclab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "ersd/constants.hpp"
#include "ersd/numeric.hpp"

namespace ersd::speclab {

void Spectrum::validate() const {
  if (detuning_hz.size() != counts.size()) throw std::invalid_argument("spectrum arrays differ in length");
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (!std::isfinite(detuning_hz[i]) || !(counts[i] >= 0.0) || !std::isfinite(counts[i]))
      throw std::invalid_argument("spectrum values must be finite and counts non-negative");
    if (i > 0 && !(detuning_hz[i] > detuning_hz[i - 1]))
      throw std::invalid_argument("detunings must be strictly increasing");
  }
}

std::vector<Peak> detect_peaks(const Spectrum& s, const PeakOptions& options) {
  s.validate();
  const std::size_t n = s.counts.size();
  if (n < 16) throw std::invalid_argument("peak detection needs at least 16 points");
  if (options.baseline_window < 3) throw std::invalid_argument("baseline window must be at least 3");
  const std::size_t half = options.baseline_window / 2;

  std::vector<double> base(n), thr(n), window;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i >= half ? i - half : 0;
    const std::size_t b = std::min(n, i + half + 1);
    window.assign(s.counts.begin() + static_cast<std::ptrdiff_t>(a), s.counts.begin() + static_cast<std::ptrdiff_t>(b));
    const double m = median(window);
    for (double& w : window) w = std::abs(w - m);
    base[i] = m;
    thr[i] = options.mad_multiplier * median(window);
  }

  std::vector<Peak> peaks;
  std::size_t i = 0;
  while (i < n) {
    if (!(s.counts[i] - base[i] > thr[i])) {
      ++i;
      continue;
    }
    // One contiguous above-threshold run: keep its tallest strict local maximum.
    std::optional<Peak> best;
    for (; i < n && s.counts[i] - base[i] > thr[i]; ++i) {
      const bool left = i == 0 || s.counts[i] > s.counts[i - 1];
      const bool right = i + 1 == n || s.counts[i] > s.counts[i + 1];
      if (!(left && right) || i == 0 || i + 1 == n) continue;
      const double h = s.counts[i] - base[i];
      if (!best || h > best->height) best = Peak{i, s.detuning_hz[i], h, thr[i]};
    }
    if (best) peaks.push_back(*best);
  }
  return peaks;
}

SdLinewidthResult sd_linewidth(std::span<const Spectrum> epochs, double drift_threshold_hz) {
  if (epochs.empty()) throw std::invalid_argument("sd_linewidth needs at least one spectrum");
  for (const auto& e : epochs) {
    e.validate();
    if (e.detuning_hz != epochs.front().detuning_hz)
      throw std::invalid_argument("all epochs must share one detuning grid");
  }
  std::vector<double> summed(epochs.front().counts.size(), 0.0);
  for (const auto& e : epochs)
    for (std::size_t i = 0; i < summed.size(); ++i) summed[i] += e.counts[i];

  SdLinewidthResult r;
  r.averaged = fitkit::fit_lorentzian_peak(epochs.front().detuning_hz, summed);
  if (epochs.size() < 2) {
    r.per_epoch_mean_fwhm_hz = r.averaged.value("fwhm");
    r.per_epoch_fwhm_error_hz = r.averaged.error("fwhm");
    return r;
  }
  std::vector<double> center_err;
  for (const auto& e : epochs) {
    const auto f = fitkit::fit_lorentzian_peak(e.detuning_hz, e.counts);
    if (!f.converged) continue;
    r.drift.epoch_centers_hz.push_back(f.value("center"));
    r.drift.epoch_fwhm_hz.push_back(f.value("fwhm"));
    center_err.push_back(f.error("center"));
  }
  if (!r.drift.epoch_centers_hz.empty()) {
    const auto [lo, hi] = std::minmax_element(r.drift.epoch_centers_hz.begin(), r.drift.epoch_centers_hz.end());
    r.drift.max_excursion_hz = *hi - *lo;
    r.drift.threshold_hz = drift_threshold_hz > 0.0 ? drift_threshold_hz : 6.0 * median(center_err);
    r.drift.flagged = r.drift.max_excursion_hz > r.drift.threshold_hz;
    r.per_epoch_mean_fwhm_hz = mean(r.drift.epoch_fwhm_hz);
    r.per_epoch_fwhm_error_hz = sample_stddev(r.drift.epoch_fwhm_hz) /
                                std::sqrt(static_cast<double>(r.drift.epoch_fwhm_hz.size()));
  }
  return r;
}

void EchoDataset::validate() const {
  if (delays_s.size() != amplitude.size()) throw std::invalid_argument("echo arrays differ in length");
  if (!(tau_pi_s > 0.0)) throw std::invalid_argument("tau_pi must be positive");
  for (std::size_t i = 1; i < delays_s.size(); ++i)
    if (!(delays_s[i] > delays_s[i - 1])) throw std::invalid_argument("echo delays must be ascending");
}

fitkit::FitResult echo_t2(const EchoDataset& d, bool fix_offset_zero) {
  d.validate();
  if (d.delays_s.size() < 5) throw std::invalid_argument("echo fit needs at least 5 delays");
  fitkit::FitResult f = fitkit::fit_exponential_decay(d.delays_s, d.amplitude, {fix_offset_zero, fitkit::Weighting::uniform});
  const double factor = d.convention == EchoConvention::inter_pulse_delay ? 2.0 : 1.0;
  f.names = {"amplitude", "t2", "offset"};
  f.params[1] *= factor;
  f.sigma[1] *= factor;
  return f;
}

DeviceT2Series t2_series_from_echoes(std::string name, std::span<const EchoDataset> echoes,
                                     std::optional<double> t1_s) {
  DeviceT2Series s;
  s.name = std::move(name);
  s.t1_s = t1_s;
  for (const auto& e : echoes) {
    const auto f = echo_t2(e);
    if (!f.converged) throw std::runtime_error("echo fit failed at tau_pi = " + std::to_string(e.tau_pi_s) + ": " + f.message);
    s.tau_pi_s.push_back(e.tau_pi_s);
    s.t2_s.push_back(f.value("t2"));
  }
  return s;
}

DephasingResult dephasing_scaling(std::span<const DeviceT2Series> devices) {
  DephasingResult out;
  for (const auto& d : devices) {
    if (d.tau_pi_s.size() < 2) throw std::invalid_argument("device " + d.name + " needs at least 2 tau_pi values");
    DeviceDephasing dd;
    dd.name = d.name;
    // Echo T2 errors scale with T2 itself: weight each point by 1 / T2^2.
    std::vector<double> w(d.t2_s.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = d.t2_s[i] != 0.0 ? 1.0 / (d.t2_s[i] * d.t2_s[i]) : 0.0;
    dd.linear = fitkit::fit_linear_origin(d.tau_pi_s, d.t2_s, w);
    if (d.t1_s) dd.saturation = fitkit::fit_saturation(d.tau_pi_s, d.t2_s, *d.t1_s);
    out.devices.push_back(std::move(dd));
  }
  if (out.devices.size() >= 2) {
    const double a = out.devices[0].linear.params[0];
    const double b = out.devices[1].linear.params[0];
    const double sa = out.devices[0].linear.sigma[0];
    const double sb = out.devices[1].linear.sigma[0];
    out.ratio = a / b;
    out.ratio_error = std::abs(*out.ratio) * std::hypot(sa / a, sb / b);
  }
  return out;
}

double homogeneous_linewidth(double t2_s) {
  if (!(t2_s > 0.0)) throw std::invalid_argument("t2 must be positive");
  return 1.0 / (constants::pi * t2_s);
}

void PhotonRecord::validate() const {
  if (trial_index.size() != counts.size()) throw std::invalid_argument("photon record arrays differ in length");
  for (std::size_t i = 0; i < trial_index.size(); ++i) {
    if (trial_index[i] >= trials) throw std::invalid_argument("trial index beyond trial count");
    if (i > 0 && !(trial_index[i] > trial_index[i - 1])) throw std::invalid_argument("trial indices must be ascending");
  }
  if (!(dark_count_rate_hz >= 0.0) || !(window_s >= 0.0)) throw std::invalid_argument("dark rate and window must be non-negative");
}

G2Result g2_pulsed(const PhotonRecord& r, const G2Options& options) {
  r.validate();
  if (r.trials < 2) throw std::invalid_argument("g2 needs at least 2 trials");
  const double n_trials = static_cast<double>(r.trials);
  double total = 0.0, zero = 0.0;
  for (auto c : r.counts) {
    const double n = c;
    total += n;
    zero += n * (n - 1.0);
  }
  if (!(total > 0.0)) throw std::domain_error("g2 normalization undefined: no detections");
  const std::size_t max_lag = static_cast<std::size_t>(std::min<std::uint64_t>(options.max_lag, r.trials - 1));
  if (max_lag < 2) throw std::invalid_argument("max_lag must be at least 2");

  std::vector<double> coinc(max_lag + 1, 0.0);
  coinc[0] = zero;
  for (std::size_t a = 0; a < r.trial_index.size(); ++a)
    for (std::size_t b = a + 1; b < r.trial_index.size(); ++b) {
      const std::uint64_t lag = r.trial_index[b] - r.trial_index[a];
      if (lag > max_lag) break;
      coinc[lag] += static_cast<double>(r.counts[a]) * static_cast<double>(r.counts[b]);
    }

  G2Result g;
  const double mu = total / n_trials;
  g.mean_counts = mu;
  std::vector<double> raw(max_lag + 1);
  for (std::size_t l = 0; l <= max_lag; ++l) {
    const double pairs = l == 0 ? n_trials : n_trials - static_cast<double>(l);
    raw[l] = coinc[l] / pairs / (mu * mu);
  }
  CompensatedSum plateau;
  std::size_t np = 0;
  for (std::size_t l = std::max<std::size_t>(1, max_lag / 2); l <= max_lag; ++l, ++np) plateau.add(raw[l]);
  g.plateau = plateau.value() / static_cast<double>(np);
  if (!(g.plateau > 0.0)) throw std::domain_error("g2 normalization undefined: no coincidences at large lags");

  g.lags.resize(max_lag + 1);
  g.g2.resize(max_lag + 1);
  for (std::size_t l = 0; l <= max_lag; ++l) {
    g.lags[l] = l;
    g.g2[l] = raw[l] / g.plateau;
  }

  const double dark = r.dark_count_rate_hz * r.window_s;
  if (!(dark < mu)) throw std::domain_error("dark counts account for all detections");
  const double rho = (mu - dark) / mu;
  g.signal_probability = mu - dark;
  g.signal_probability_error = std::sqrt(mu / n_trials);
  g.accidental_prediction = 1.0 - rho * rho;
  g.g2_zero_raw = g.g2[0];
  const double scale = n_trials * mu * mu * g.plateau;
  const double expected_accidental = g.accidental_prediction * scale;
  // zero counts every coincident pair twice, so its variance is twice its mean.
  g.g2_zero_raw_error = std::sqrt(2.0 * std::max({zero, expected_accidental, 1.0})) / scale;
  g.g2_zero_corrected = (g.g2_zero_raw - g.accidental_prediction) / (rho * rho);
  g.g2_zero_corrected_error = g.g2_zero_raw_error / (rho * rho);

  // Bunching timescale: single exponential over log-binned lags.
  std::vector<double> t, y;
  for (std::size_t a = 1; a <= max_lag; a *= 2) {
    const std::size_t b = std::min(max_lag + 1, 2 * a);
    double sum_l = 0.0, sum_g = 0.0;
    for (std::size_t l = a; l < b; ++l) {
      sum_l += static_cast<double>(l);
      sum_g += g.g2[l];
    }
    const double cnt = static_cast<double>(b - a);
    const double period = r.pulse_period_s > 0.0 ? r.pulse_period_s : 1.0;
    t.push_back(sum_l / cnt * period);
    y.push_back(sum_g / cnt);
  }
  if (t.size() >= 5) {
    try {
      auto fit = fitkit::fit_exponential_decay(t, y);
      if (fit.converged && fit.value("amplitude") > 3.0 * fit.error("amplitude")) {
        g.bunching_time_s = fit.value("tau");
        g.bunching = std::move(fit);
      }
    } catch (const std::invalid_argument&) {
    }
  }
  return g;
}

std::string format_value_uncertainty(double value, double uncertainty) {
  char buf[64];
  if (!(uncertainty > 0.0) || !std::isfinite(uncertainty)) {
    std::snprintf(buf, sizeof buf, "%.3g(0)", value);
    return buf;
  }
  int sig = 1;
  int place = 0;
  double digits = 0.0;
  for (int pass = 0; pass < 2; ++pass) {
    int e = static_cast<int>(std::floor(std::log10(uncertainty)));
    // Guard against 0.3 / 0.1 = 2.9999... and log10 landing just below an integer.
    int lead = static_cast<int>(std::floor(uncertainty / std::pow(10.0, e) * (1.0 + 1e-12)));
    if (lead >= 10) {
      ++e;
      lead /= 10;
    }
    sig = (lead == 1 || lead == 2) ? 2 : 1;
    place = e - (sig - 1);
    digits = std::round(uncertainty / std::pow(10.0, place));
    if (digits < std::pow(10.0, sig)) break;
    uncertainty = digits * std::pow(10.0, place);  // rounding carried into a new digit
  }
  if (place < 0) {
    std::snprintf(buf, sizeof buf, "%.*f(%.0f)", -place, value, digits);
  } else {
    const double scale = std::pow(10.0, place);
    std::snprintf(buf, sizeof buf, "%.0f(%.0f)", std::round(value / scale) * scale, digits * scale);
  }
  return buf;
}

EmitterTable emitter_table(std::vector<EmitterRow> rows) {
  EmitterTable t;
  t.rows = std::move(rows);
  if (t.rows.empty()) return t;
  std::vector<double> p, lw;
  for (const auto& r : t.rows) {
    p.push_back(r.purcell);
    lw.push_back(r.sd_lw_mhz);
  }
  auto stat = [](const std::vector<double>& v) {
    SummaryStat s;
    s.mean = mean(v);
    s.stddev = sample_stddev(v);
    s.formatted = format_value_uncertainty(s.mean, s.stddev);
    return s;
  };
  t.purcell = stat(p);
  t.sd_lw_mhz = stat(lw);
  return t;
}

}  // namespace ersd::speclab
