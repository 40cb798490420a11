#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ersd/fitkit.hpp"

namespace ersd::speclab {

struct Spectrum {
  std::vector<double> detuning_hz;  // strictly increasing
  std::vector<double> counts;
  double repetitions = 1.0;
  double pulse_duration_s = 1e-7;
  double integration_window_s = 1e-4;

  void validate() const;
};

struct Peak {
  std::size_t index = 0;
  double detuning_hz = 0.0;
  double height = 0.0;     // counts above the running-median baseline
  double threshold = 0.0;  // mad_multiplier * local MAD
};

struct PeakOptions {
  double mad_multiplier = 5.0;
  std::size_t baseline_window = 50;
};

/// Strict local maxima whose height above a running-median baseline exceeds
/// mad_multiplier times the local median absolute deviation. Within one
/// contiguous above-threshold run only the tallest maximum is kept.
std::vector<Peak> detect_peaks(const Spectrum& s, const PeakOptions& options = {});

struct DriftReport {
  std::vector<double> epoch_centers_hz;
  std::vector<double> epoch_fwhm_hz;
  double max_excursion_hz = 0.0;
  double threshold_hz = 0.0;
  bool flagged = false;
};

struct SdLinewidthResult {
  fitkit::FitResult averaged;  // Lorentzian fit of the summed spectrum
  DriftReport drift;           // empty for a single epoch
  double per_epoch_mean_fwhm_hz = 0.0;
  double per_epoch_fwhm_error_hz = 0.0;  // standard error of the mean
};

/// Spectral-diffusion linewidth from repeated scans on a common detuning
/// grid. drift_threshold_hz <= 0 selects 6x the median per-epoch center error.
SdLinewidthResult sd_linewidth(std::span<const Spectrum> epochs, double drift_threshold_hz = 0.0);

enum class EchoConvention {
  inter_pulse_delay,  // amplitude ~ exp(-2 tau / T2)
  total_evolution,    // amplitude ~ exp(-t / T2)
};

struct EchoDataset {
  std::vector<double> delays_s;
  std::vector<double> amplitude;
  double tau_pi_s = 0.0;
  std::string pulse_shape = "gaussian";
  EchoConvention convention = EchoConvention::inter_pulse_delay;

  void validate() const;
};

/// Exponential fit of the echo decay; parameters amplitude, t2, offset.
fitkit::FitResult echo_t2(const EchoDataset& d, bool fix_offset_zero = false);

struct DeviceT2Series {
  std::string name;
  std::vector<double> tau_pi_s;
  std::vector<double> t2_s;
  std::optional<double> t1_s;
};

DeviceT2Series t2_series_from_echoes(std::string name, std::span<const EchoDataset> echoes,
                                     std::optional<double> t1_s = std::nullopt);

struct DeviceDephasing {
  std::string name;
  fitkit::FitResult linear;                    // T2 = xi tau_pi
  std::optional<fitkit::FitResult> saturation;  // when T1 is known
};

struct DephasingResult {
  std::vector<DeviceDephasing> devices;
  std::optional<double> ratio;  // xi of the first device over xi of the second
  std::optional<double> ratio_error;
};

DephasingResult dephasing_scaling(std::span<const DeviceT2Series> devices);

/// Gamma_h = 1 / (pi T2).
double homogeneous_linewidth(double t2_s);

/// Photon counts per excitation trial, stored sparsely.
struct PhotonRecord {
  std::uint64_t trials = 0;
  std::vector<std::uint64_t> trial_index;  // ascending, trials with counts > 0
  std::vector<std::uint32_t> counts;
  double dark_count_rate_hz = 0.0;
  double window_s = 0.0;
  double pulse_period_s = 0.0;  // converts lags to time for the bunching fit

  void validate() const;
};

struct G2Options {
  std::size_t max_lag = 2000;
};

struct G2Result {
  std::vector<std::size_t> lags;     // 0..max_lag
  std::vector<double> g2;            // normalized by the large-lag plateau
  double plateau = 0.0;              // raw g2 averaged over [max_lag/2, max_lag]
  double mean_counts = 0.0;          // detections per trial
  double signal_probability = 0.0;   // mean counts minus dark expectation
  double signal_probability_error = 0.0;
  double g2_zero_raw = 0.0;
  double g2_zero_raw_error = 0.0;
  double accidental_prediction = 0.0;  // 1 - rho^2: raw g2(0) of a perfect single emitter
  double g2_zero_corrected = 0.0;
  double g2_zero_corrected_error = 0.0;
  std::optional<fitkit::FitResult> bunching;  // exponential over log-binned lags
  std::optional<double> bunching_time_s;
};

/// Pulsed autocorrelation. Raw g2(l) = <n_k n_{k+l}> / <n>^2 (<n(n-1)> at
/// l = 0), normalized by its plateau. Dark counts d = rate * window enter as
/// an independent Poisson background: g2_c = (g2 - (1 - rho^2)) / rho^2 with
/// rho = (<n> - d) / <n>. Throws std::domain_error for a record without counts.
G2Result g2_pulsed(const PhotonRecord& r, const G2Options& options = {});

struct EmitterRow {
  std::string id;
  std::string sample;
  double purcell = 0.0;
  double purcell_error = 0.0;
  double sd_lw_mhz = 0.0;
  double sd_lw_error_mhz = 0.0;
  double detuning_ghz = 0.0;
  double repetitions = 0.0;  // in units of 1e6 spectra
};

struct SummaryStat {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
  std::string formatted;
};

struct EmitterTable {
  std::vector<EmitterRow> rows;
  std::optional<SummaryStat> purcell;
  std::optional<SummaryStat> sd_lw_mhz;
};

EmitterTable emitter_table(std::vector<EmitterRow> rows);

/// value(uncertainty) with the uncertainty rounded to one significant digit,
/// or two when its leading digit is 1 or 2: 2.43, 0.435 -> "2.4(4)".
std::string format_value_uncertainty(double value, double uncertainty);

}  // namespace ersd::speclab
