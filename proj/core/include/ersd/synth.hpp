#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ersd/speclab.hpp"

// Synthetic datasets drawn from the exact analysis models. Every generator is
// deterministic per seed and returns its ground truth as JSON.
namespace ersd::synth {

template <class T>
struct Dataset {
  T data;
  nlohmann::json truth;
};

struct LorentzLine {
  double center_hz = 0.0;
  double fwhm_hz = 5.2e6;
  double amplitude = 1000.0;  // peak counts above offset
};

struct SpectrumTruth {
  std::vector<LorentzLine> lines{LorentzLine{}};
  double offset = 5.0;
  double start_hz = -50e6;
  double stop_hz = 50e6;
  double step_hz = 0.5e6;
  double repetitions = 1e4;
  bool noise = true;  // Poisson counts
};

Dataset<speclab::Spectrum> spectrum(const SpectrumTruth& truth, std::uint64_t seed);

struct SdSeriesTruth {
  double fwhm_hz = 5.2e6;
  double amplitude = 1000.0;  // per epoch
  double offset = 10.0;
  std::size_t epochs = 12;
  double epoch_duration_s = 3600.0;
  double drift_hz_per_s = 0.0;  // linear center drift
  double half_span_hz = 30e6;
  double step_hz = 0.5e6;
  bool noise = true;
};

Dataset<std::vector<speclab::Spectrum>> sd_series(const SdSeriesTruth& truth, std::uint64_t seed);

struct EchoTruth {
  double t2_s = 20e-6;
  double amplitude = 1.0;
  double offset = 0.0;
  double tau_pi_s = 1e-6;
  std::size_t points = 24;
  double max_delay_t2 = 1.5;  // last inter-pulse delay in units of T2
  double noise_sigma = 0.01;  // absolute Gaussian noise
  speclab::EchoConvention convention = speclab::EchoConvention::inter_pulse_delay;
  bool noise = true;
};

Dataset<speclab::EchoDataset> echo(const EchoTruth& truth, std::uint64_t seed);

struct DeviceTruth {
  std::string name;
  double xi = 100.0;
  std::optional<double> t1_s;  // saturation model when set
  std::vector<double> tau_pi_s{0.1e-6, 0.2e-6, 0.4e-6, 0.8e-6, 1.6e-6};
};

struct DephasingTruth {
  std::vector<DeviceTruth> devices{DeviceTruth{"fz", 100.0, std::nullopt, {0.1e-6, 0.2e-6, 0.4e-6, 0.8e-6, 1.6e-6}},
                                   DeviceTruth{"nano", 100.0 / 6.0, std::nullopt, {0.1e-6, 0.2e-6, 0.4e-6, 0.8e-6, 1.6e-6}}};
  double relative_noise = 0.03;
  bool noise = true;
};

Dataset<std::vector<speclab::DeviceT2Series>> dephasing(const DephasingTruth& truth, std::uint64_t seed);

enum class PhotonSource { single_emitter, poissonian, blinking };

struct G2Truth {
  PhotonSource source = PhotonSource::single_emitter;
  std::uint64_t trials = 1'000'000;
  double p_signal = 0.009;  // mean signal detections per trial
  double dark_count_rate_hz = 10.0;
  double window_s = 1e-4;
  double pulse_period_s = 2e-4;
  double on_dwell_trials = 200.0;   // blinking: mean bright dwell
  double off_dwell_trials = 200.0;  // blinking: mean dark dwell
};

Dataset<speclab::PhotonRecord> g2(const G2Truth& truth, std::uint64_t seed);

struct LifetimeTruth {
  double tau_s = 43e-6;
  double amplitude = 1000.0;
  double dark_floor = 5.0;
  std::size_t bins = 100;
  double bin_width_s = 2e-6;
  bool noise = true;
};

struct Decay {
  std::vector<double> time_s;
  std::vector<double> counts;
};

Dataset<Decay> lifetime(const LifetimeTruth& truth, std::uint64_t seed);

std::string to_string(PhotonSource s);
PhotonSource photon_source_from_string(const std::string& s);

}  // namespace ersd::synth
