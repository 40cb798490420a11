#include "ersd/synth.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "ersd/fitkit.hpp"
#include "ersd/rng.hpp"

namespace ersd::synth {

namespace {

Rng stream(std::uint64_t seed, std::uint64_t k) { return Rng(derive_seed(seed, Stream::synth, k)); }

double poisson_sample(Rng& rng, double mean) { return static_cast<double>(rng.poisson(mean)); }

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

std::vector<double> grid(double start, double stop, double step) {
  require(step > 0.0 && stop > start, "invalid detuning grid");
  std::vector<double> g;
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  for (std::size_t i = 0; i < n; ++i) g.push_back(start + static_cast<double>(i) * step);
  return g;
}

}  // namespace

std::string to_string(PhotonSource s) {
  switch (s) {
    case PhotonSource::single_emitter: return "single_emitter";
    case PhotonSource::poissonian: return "poissonian";
    case PhotonSource::blinking: return "blinking";
  }
  return "single_emitter";
}

PhotonSource photon_source_from_string(const std::string& s) {
  if (s == "single_emitter") return PhotonSource::single_emitter;
  if (s == "poissonian") return PhotonSource::poissonian;
  if (s == "blinking") return PhotonSource::blinking;
  throw std::invalid_argument("unknown photon source: " + s);
}

Dataset<speclab::Spectrum> spectrum(const SpectrumTruth& truth, std::uint64_t seed) {
  require(truth.offset >= 0.0, "offset must be non-negative");
  for (const auto& l : truth.lines) require(l.fwhm_hz > 0.0 && l.amplitude >= 0.0, "invalid line parameters");
  Dataset<speclab::Spectrum> out;
  auto& s = out.data;
  s.detuning_hz = grid(truth.start_hz, truth.stop_hz, truth.step_hz);
  s.repetitions = truth.repetitions;
  Rng rng = stream(seed, 0);
  for (double x : s.detuning_hz) {
    double model = truth.offset;
    for (const auto& l : truth.lines) model += fitkit::lorentzian_peak(x, l.center_hz, l.fwhm_hz, l.amplitude, 0.0);
    s.counts.push_back(truth.noise ? poisson_sample(rng, model) : model);
  }
  nlohmann::json lines = nlohmann::json::array();
  for (const auto& l : truth.lines)
    lines.push_back({{"center_hz", l.center_hz}, {"fwhm_hz", l.fwhm_hz}, {"amplitude", l.amplitude}});
  out.truth = {{"kind", "spectrum"}, {"seed", seed}, {"lines", lines}, {"offset", truth.offset}, {"noise", truth.noise}};
  return out;
}

Dataset<std::vector<speclab::Spectrum>> sd_series(const SdSeriesTruth& truth, std::uint64_t seed) {
  require(truth.epochs >= 1, "sd_series needs at least one epoch");
  require(truth.fwhm_hz > 0.0 && truth.amplitude > 0.0, "invalid line parameters");
  Dataset<std::vector<speclab::Spectrum>> out;
  const auto det = grid(-truth.half_span_hz, truth.half_span_hz, truth.step_hz);
  for (std::size_t e = 0; e < truth.epochs; ++e) {
    Rng rng = stream(seed, e);
    const double center = truth.drift_hz_per_s * truth.epoch_duration_s * static_cast<double>(e);
    speclab::Spectrum s;
    s.detuning_hz = det;
    for (double x : det) {
      const double model = fitkit::lorentzian_peak(x, center, truth.fwhm_hz, truth.amplitude, truth.offset);
      s.counts.push_back(truth.noise ? poisson_sample(rng, model) : model);
    }
    out.data.push_back(std::move(s));
  }
  out.truth = {{"kind", "sd_series"}, {"seed", seed}, {"fwhm_hz", truth.fwhm_hz}, {"amplitude", truth.amplitude},
               {"offset", truth.offset}, {"epochs", truth.epochs}, {"epoch_duration_s", truth.epoch_duration_s},
               {"drift_hz_per_s", truth.drift_hz_per_s}, {"noise", truth.noise}};
  return out;
}

Dataset<speclab::EchoDataset> echo(const EchoTruth& truth, std::uint64_t seed) {
  require(truth.t2_s > 0.0 && truth.tau_pi_s > 0.0 && truth.points >= 5, "invalid echo truth");
  Dataset<speclab::EchoDataset> out;
  auto& d = out.data;
  d.tau_pi_s = truth.tau_pi_s;
  d.convention = truth.convention;
  Rng rng = stream(seed, 0);
  const double factor = truth.convention == speclab::EchoConvention::inter_pulse_delay ? 2.0 : 1.0;
  const double last = truth.max_delay_t2 * truth.t2_s * 2.0 / factor;
  for (std::size_t i = 0; i < truth.points; ++i) {
    const double t = last * static_cast<double>(i + 1) / static_cast<double>(truth.points);
    const double model = truth.amplitude * std::exp(-factor * t / truth.t2_s) + truth.offset;
    d.delays_s.push_back(t);
    d.amplitude.push_back(truth.noise ? model + truth.noise_sigma * rng.normal() : model);
  }
  out.truth = {{"kind", "echo"}, {"seed", seed}, {"t2_s", truth.t2_s}, {"amplitude", truth.amplitude},
               {"offset", truth.offset}, {"tau_pi_s", truth.tau_pi_s}, {"noise_sigma", truth.noise_sigma},
               {"convention", truth.convention == speclab::EchoConvention::inter_pulse_delay ? "inter_pulse_delay" : "total_evolution"},
               {"noise", truth.noise}};
  return out;
}

Dataset<std::vector<speclab::DeviceT2Series>> dephasing(const DephasingTruth& truth, std::uint64_t seed) {
  require(!truth.devices.empty(), "dephasing needs at least one device");
  Dataset<std::vector<speclab::DeviceT2Series>> out;
  nlohmann::json devices = nlohmann::json::array();
  for (std::size_t k = 0; k < truth.devices.size(); ++k) {
    const auto& dev = truth.devices[k];
    require(dev.xi > 0.0 && dev.tau_pi_s.size() >= 2, "invalid device truth");
    Rng rng = stream(seed, k);
    speclab::DeviceT2Series s;
    s.name = dev.name;
    s.t1_s = dev.t1_s;
    for (double tau : dev.tau_pi_s) {
      require(tau > 0.0, "tau_pi must be positive");
      const double model = dev.t1_s ? fitkit::saturation_t2(tau, dev.xi, *dev.t1_s) : dev.xi * tau;
      s.tau_pi_s.push_back(tau);
      s.t2_s.push_back(truth.noise ? model * (1.0 + truth.relative_noise * rng.normal()) : model);
    }
    out.data.push_back(std::move(s));
    nlohmann::json j = {{"name", dev.name}, {"xi", dev.xi}};
    if (dev.t1_s) j["t1_s"] = *dev.t1_s;
    devices.push_back(j);
  }
  out.truth = {{"kind", "dephasing"}, {"seed", seed}, {"devices", devices},
               {"relative_noise", truth.relative_noise}, {"noise", truth.noise}};
  if (truth.devices.size() >= 2) out.truth["xi_ratio"] = truth.devices[0].xi / truth.devices[1].xi;
  return out;
}

Dataset<speclab::PhotonRecord> g2(const G2Truth& truth, std::uint64_t seed) {
  require(truth.trials >= 2, "g2 needs at least 2 trials");
  require(truth.p_signal >= 0.0 && truth.p_signal <= 1.0, "p_signal must lie in [0, 1]");
  require(truth.dark_count_rate_hz >= 0.0 && truth.window_s >= 0.0, "invalid dark-count parameters");
  Dataset<speclab::PhotonRecord> out;
  auto& r = out.data;
  r.trials = truth.trials;
  r.dark_count_rate_hz = truth.dark_count_rate_hz;
  r.window_s = truth.window_s;
  r.pulse_period_s = truth.pulse_period_s;

  std::map<std::uint64_t, std::uint32_t> events;
  // Bernoulli events over [begin, end) with probability p by geometric skipping.
  auto bernoulli_events = [&](Rng& rng, std::uint64_t begin, std::uint64_t end, double p) {
    if (!(p > 0.0)) return;
    std::uint64_t i = begin + rng.geometric(p);
    while (i < end) {
      events[i] += 1;
      const std::uint64_t gap = rng.geometric(p);
      if (gap >= end - i) break;
      i += gap + 1;
    }
  };

  Rng signal = stream(seed, 0);
  switch (truth.source) {
    case PhotonSource::single_emitter:
      bernoulli_events(signal, 0, truth.trials, truth.p_signal);
      break;
    case PhotonSource::poissonian:
      // Trials with >= 1 photon, then the zero-truncated count.
      if (truth.p_signal > 0.0) {
        bernoulli_events(signal, 0, truth.trials, -std::expm1(-truth.p_signal));
        for (auto& [idx, c] : events) {
          std::uint64_t k;
          do k = signal.poisson(truth.p_signal); while (k == 0);
          c = static_cast<std::uint32_t>(k);
        }
      }
      break;
    case PhotonSource::blinking: {
      require(truth.on_dwell_trials >= 1.0 && truth.off_dwell_trials >= 1.0, "dwell times must be at least one trial");
      const double on_fraction = truth.on_dwell_trials / (truth.on_dwell_trials + truth.off_dwell_trials);
      const double p_on = std::min(1.0, truth.p_signal / on_fraction);
      bool on = signal.bernoulli(on_fraction);
      std::uint64_t t = 0;
      while (t < truth.trials) {
        const double mean_dwell = on ? truth.on_dwell_trials : truth.off_dwell_trials;
        const std::uint64_t dwell = 1 + signal.geometric(1.0 / mean_dwell);
        const std::uint64_t end = dwell >= truth.trials - t ? truth.trials : t + dwell;
        if (on) bernoulli_events(signal, t, end, p_on);
        t = end;
        on = !on;
      }
      break;
    }
  }

  const double dark = truth.dark_count_rate_hz * truth.window_s;
  if (dark > 0.0) {
    Rng noise = stream(seed, 1);
    const double p_any = -std::expm1(-dark);
    std::uint64_t i = noise.geometric(p_any);
    while (i < truth.trials) {
      std::uint64_t k;
      do k = noise.poisson(dark); while (k == 0);
      events[i] += static_cast<std::uint32_t>(k);
      const std::uint64_t gap = noise.geometric(p_any);
      if (gap >= truth.trials - i) break;
      i += gap + 1;
    }
  }
  r.trial_index.reserve(events.size());
  r.counts.reserve(events.size());
  for (const auto& [idx, c] : events) {
    r.trial_index.push_back(idx);
    r.counts.push_back(c);
  }
  out.truth = {{"kind", "g2"}, {"seed", seed}, {"source", to_string(truth.source)}, {"trials", truth.trials},
               {"p_signal", truth.p_signal}, {"dark_count_rate_hz", truth.dark_count_rate_hz},
               {"window_s", truth.window_s}, {"pulse_period_s", truth.pulse_period_s},
               {"g2_zero", truth.source == PhotonSource::single_emitter ? 0.0 : 1.0}};
  if (truth.source == PhotonSource::blinking) {
    out.truth["on_dwell_trials"] = truth.on_dwell_trials;
    out.truth["off_dwell_trials"] = truth.off_dwell_trials;
    out.truth.erase("g2_zero");
  }
  return out;
}

Dataset<Decay> lifetime(const LifetimeTruth& truth, std::uint64_t seed) {
  require(truth.tau_s > 0.0 && truth.amplitude > 0.0 && truth.dark_floor >= 0.0, "invalid lifetime truth");
  require(truth.bins >= 5 && truth.bin_width_s > 0.0, "invalid lifetime binning");
  Dataset<Decay> out;
  Rng rng = stream(seed, 0);
  for (std::size_t i = 0; i < truth.bins; ++i) {
    const double t = (static_cast<double>(i) + 0.5) * truth.bin_width_s;
    const double model = truth.amplitude * std::exp(-t / truth.tau_s) + truth.dark_floor;
    out.data.time_s.push_back(t);
    out.data.counts.push_back(truth.noise ? poisson_sample(rng, model) : model);
  }
  out.truth = {{"kind", "lifetime"}, {"seed", seed}, {"tau_s", truth.tau_s}, {"amplitude", truth.amplitude},
               {"dark_floor", truth.dark_floor}, {"noise", truth.noise}};
  return out;
}

}  // namespace ersd::synth
