#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include "commands.hpp"
#include "ersd/cavity.hpp"
#include "ersd/fitkit.hpp"
#include "ersd/speclab.hpp"
#include "ersd/synth.hpp"
#include "ersd_cli/config.hpp"

namespace ersd::cli {

using nlohmann::json;

namespace {

json fit_json(const fitkit::FitResult& r) {
  json params = json::object();
  json sigma = json::object();
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    params[r.names[i]] = r.params[i];
    sigma[r.names[i]] = r.sigma[i];
  }
  return {{"params", params},   {"sigma", sigma},           {"residual_norm", r.residual_norm},
          {"dof", r.dof},       {"converged", r.converged}, {"iterations", r.iterations},
          {"message", r.message}};
}

fitkit::Weighting weighting_or(const std::string& name, fitkit::Weighting fallback) {
  if (name == "default") return fallback;
  if (name == "uniform") return fitkit::Weighting::uniform;
  if (name == "poisson") return fitkit::Weighting::poisson;
  throw UsageError("unknown weighting '" + name + "'");
}

speclab::EchoConvention convention_from(const std::string& s) {
  if (s == "inter_pulse_delay") return speclab::EchoConvention::inter_pulse_delay;
  if (s == "total_evolution") return speclab::EchoConvention::total_evolution;
  throw UsageError("unknown echo convention '" + s + "'");
}

std::vector<double> scaled(std::vector<double> v, double factor) {
  for (double& x : v) x *= factor;
  return v;
}

void emit(Context& ctx, const std::string& name, const json& j) {
  ctx.write_json(ctx.artifact_path(name), j);
  *ctx.out << j.dump(2) << '\n';
}

void require_converged(const fitkit::FitResult& r, const std::string& what) {
  if (!r.converged) throw NumericFailure(what + " fit did not converge: " + r.message);
}

// ------------------------------------------------------------ analyze

json analyze_spectrum(const csv::Table& t, const std::filesystem::path& in) {
  speclab::Spectrum s;
  s.detuning_hz = scaled(column(t, "detuning_MHz", in), 1e6);
  s.counts = column(t, "counts", in);
  s.validate();
  json peaks = json::array();
  for (const auto& p : speclab::detect_peaks(s)) {
    peaks.push_back({{"detuning_MHz", p.detuning_hz * 1e-6}, {"height", p.height}, {"threshold", p.threshold}});
  }
  const auto fit = fitkit::fit_lorentzian_peak(s.detuning_hz, s.counts);
  require_converged(fit, "Lorentzian");
  return {{"peaks", peaks},
          {"center_MHz", fit.value("center") * 1e-6},
          {"center_error_MHz", fit.error("center") * 1e-6},
          {"fwhm_MHz", fit.value("fwhm") * 1e-6},
          {"fwhm_error_MHz", fit.error("fwhm") * 1e-6},
          {"fit", fit_json(fit)}};
}

json analyze_sd_series(const csv::Table& t, const std::filesystem::path& in) {
  const auto epoch = column(t, "epoch", in);
  const auto det = column(t, "detuning_MHz", in);
  const auto counts = column(t, "counts", in);
  std::map<double, speclab::Spectrum> by_epoch;
  for (std::size_t i = 0; i < epoch.size(); ++i) {
    auto& s = by_epoch[epoch[i]];
    s.detuning_hz.push_back(det[i] * 1e6);
    s.counts.push_back(counts[i]);
  }
  std::vector<speclab::Spectrum> epochs;
  for (auto& [_, s] : by_epoch) epochs.push_back(std::move(s));
  const auto r = speclab::sd_linewidth(epochs);
  require_converged(r.averaged, "averaged Lorentzian");
  return {{"epochs", epochs.size()},
          {"averaged_fwhm_MHz", r.averaged.value("fwhm") * 1e-6},
          {"averaged_fwhm_error_MHz", r.averaged.error("fwhm") * 1e-6},
          {"per_epoch_mean_fwhm_MHz", r.per_epoch_mean_fwhm_hz * 1e-6},
          {"per_epoch_fwhm_error_MHz", r.per_epoch_fwhm_error_hz * 1e-6},
          {"drift",
           {{"epoch_centers_MHz", scaled(r.drift.epoch_centers_hz, 1e-6)},
            {"epoch_fwhm_MHz", scaled(r.drift.epoch_fwhm_hz, 1e-6)},
            {"max_excursion_MHz", r.drift.max_excursion_hz * 1e-6},
            {"threshold_MHz", r.drift.threshold_hz * 1e-6},
            {"flagged", r.drift.flagged}}},
          {"fit", fit_json(r.averaged)}};
}

json analyze_echo(const csv::Table& t, const std::filesystem::path& in, const json& meta,
                  const AnalyzeOptions& o) {
  speclab::EchoDataset d;
  d.delays_s = scaled(column(t, "delay_us", in), 1e-6);
  d.amplitude = column(t, "amplitude", in);
  d.tau_pi_s = meta.value("tau_pi_s", 1e-6);
  std::string conv = o.convention;
  if (conv.empty()) conv = meta.value("convention", std::string("inter_pulse_delay"));
  d.convention = convention_from(conv);
  const auto fit = speclab::echo_t2(d, o.fix_offset_zero);
  require_converged(fit, "echo");
  const double t2 = fit.value("t2");
  return {{"convention", conv},
          {"t2_us", t2 * 1e6},
          {"t2_error_us", fit.error("t2") * 1e6},
          {"homogeneous_linewidth_kHz", speclab::homogeneous_linewidth(t2) * 1e-3},
          {"fit", fit_json(fit)}};
}

json analyze_dephasing(const csv::Table& t, const std::filesystem::path& in, const json& meta) {
  const auto names = t.column("device");
  const auto tau = column(t, "tau_pi_us", in);
  const auto t2 = column(t, "t2_us", in);
  std::vector<speclab::DeviceT2Series> devices;
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto it = std::find_if(devices.begin(), devices.end(), [&](const auto& d) { return d.name == names[i]; });
    if (it == devices.end()) {
      devices.push_back({names[i], {}, {}, std::nullopt});
      it = devices.end() - 1;
    }
    it->tau_pi_s.push_back(tau[i] * 1e-6);
    it->t2_s.push_back(t2[i] * 1e-6);
  }
  if (meta.contains("devices")) {
    for (const auto& m : meta["devices"]) {
      if (!m.contains("t1_s")) continue;
      for (auto& d : devices) {
        if (d.name == m.value("name", std::string())) d.t1_s = m["t1_s"].get<double>();
      }
    }
  }
  const auto r = speclab::dephasing_scaling(devices);
  json out_devices = json::array();
  for (const auto& d : r.devices) {
    require_converged(d.linear, "linear dephasing (" + d.name + ")");
    json j = {{"name", d.name}, {"xi", d.linear.value("xi")}, {"xi_error", d.linear.error("xi")},
              {"linear", fit_json(d.linear)}};
    if (d.saturation) j["saturation"] = fit_json(*d.saturation);
    out_devices.push_back(j);
  }
  json out = {{"devices", out_devices}};
  out["xi_ratio"] = r.ratio ? json(*r.ratio) : json(nullptr);
  out["xi_ratio_error"] = r.ratio_error ? json(*r.ratio_error) : json(nullptr);
  return out;
}

json analyze_g2(Context& ctx, const csv::Table& t, const std::filesystem::path& in, const json& meta,
                const AnalyzeOptions& o) {
  speclab::PhotonRecord r;
  for (double v : column(t, "trial_index", in)) r.trial_index.push_back(static_cast<std::uint64_t>(v));
  for (double v : column(t, "counts", in)) r.counts.push_back(static_cast<std::uint32_t>(v));
  auto pick = [&](const auto& flag, const char* key) -> double {
    if (flag) return static_cast<double>(*flag);
    if (meta.contains(key)) return meta[key].get<double>();
    throw UsageError(std::string("g2 analysis needs '") + key + "' from --meta or the matching flag");
  };
  r.trials = o.trials ? *o.trials
             : meta.contains("trials")
                 ? meta["trials"].get<std::uint64_t>()
                 : throw UsageError("g2 analysis needs 'trials' from --meta or --trials");
  r.dark_count_rate_hz = pick(o.dark_rate_hz, "dark_count_rate_hz");
  r.window_s = pick(o.window_s, "window_s");
  r.pulse_period_s = pick(o.pulse_period_s, "pulse_period_s");
  const auto g = speclab::g2_pulsed(r, speclab::G2Options{o.max_lag});

  {
    auto os = ctx.open(ctx.artifact_path("analyze_g2.csv"));
    csv::Writer w(os, {"lag", "g2"});
    for (std::size_t i = 0; i < g.lags.size(); ++i) w.row({static_cast<std::int64_t>(g.lags[i]), g.g2[i]});
  }
  json out = {{"trials", r.trials},
              {"mean_counts", g.mean_counts},
              {"signal_probability", g.signal_probability},
              {"signal_probability_error", g.signal_probability_error},
              {"plateau", g.plateau},
              {"g2_zero_raw", g.g2_zero_raw},
              {"g2_zero_raw_error", g.g2_zero_raw_error},
              {"accidental_prediction", g.accidental_prediction},
              {"g2_zero_corrected", g.g2_zero_corrected},
              {"g2_zero_corrected_error", g.g2_zero_corrected_error}};
  out["bunching"] = g.bunching ? fit_json(*g.bunching) : json(nullptr);
  out["bunching_time_us"] = g.bunching_time_s ? json(*g.bunching_time_s * 1e6) : json(nullptr);
  return out;
}

json analyze_lifetime(const Context& ctx, const csv::Table& t, const std::filesystem::path& in) {
  const auto time = scaled(column(t, "time_us", in), 1e-6);
  const auto counts = column(t, "counts", in);
  const auto fit = fitkit::fit_exponential_decay(time, counts, {false, fitkit::Weighting::poisson});
  require_converged(fit, "exponential");
  const double tau = fit.value("tau");
  const double bulk = ctx.config["cavity"]["bulk_lifetime_us"].get<double>() * 1e-6;
  const double purcell = cavity::purcell_from_lifetime(tau, bulk);
  return {{"tau_us", tau * 1e6},
          {"tau_error_us", fit.error("tau") * 1e6},
          {"purcell", purcell},
          {"purcell_error", purcell * fit.error("tau") / tau},
          {"fit", fit_json(fit)}};
}

// Row entries keep the precision the uncertainty was recorded with:
// ("7.7", "2.4") -> "7.7(24)", ("7", "1") -> "7(1)".
std::string format_recorded(double value, const std::string& uncertainty_text) {
  const double unc = std::stod(uncertainty_text);
  if (uncertainty_text.find_first_of("eE") != std::string::npos || !(unc > 0.0)) {
    return speclab::format_value_uncertainty(value, unc);
  }
  const auto dot = uncertainty_text.find('.');
  const int decimals = dot == std::string::npos ? 0 : static_cast<int>(uncertainty_text.size() - dot - 1);
  const auto digits = static_cast<long long>(std::llround(unc * std::pow(10.0, decimals)));
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, decimals);
  if (ec != std::errc()) throw std::invalid_argument("value out of range");
  return std::string(buf, end) + "(" + std::to_string(digits) + ")";
}

// ------------------------------------------------------------ synth

void check_flags(const SynthOptions& o, const std::set<std::string>& allowed) {
  const std::vector<std::pair<std::string, bool>> given = {
      {"--t2", o.t2_s.has_value()},         {"--tau", o.tau_s.has_value()},
      {"--fwhm", o.fwhm_hz.has_value()},    {"--drift", o.drift_hz_per_s.has_value()},
      {"--epochs", o.epochs.has_value()},   {"--points", o.points.has_value()},
      {"--p-signal", o.p_signal.has_value()}, {"--trials", o.trials.has_value()},
      {"--dark-rate", o.dark_rate_hz.has_value()}, {"--source", o.source.has_value()},
      {"--xi-ratio", o.xi_ratio.has_value()},
  };
  for (const auto& [flag, set] : given) {
    if (set && !allowed.contains(flag)) throw UsageError(flag + " does not apply to synth " + o.kind);
  }
}

}  // namespace

void cmd_fit(Context& ctx, const FitOptions& o) {
  const auto t = read_csv(o.in);
  const auto x = column(t, "x", o.in);
  const auto y = column(t, "y", o.in);
  fitkit::FitResult r;
  if (o.model == "lorentzian") {
    r = fitkit::fit_lorentzian_peak(x, y, weighting_or(o.weighting, fitkit::Weighting::poisson));
  } else if (o.model == "gaussian") {
    r = fitkit::fit_gaussian_peak(x, y, weighting_or(o.weighting, fitkit::Weighting::uniform));
  } else if (o.model == "exponential") {
    r = fitkit::fit_exponential_decay(x, y, {o.fix_offset_zero, weighting_or(o.weighting, fitkit::Weighting::uniform)});
  } else if (o.model == "rabi") {
    r = fitkit::fit_sine_rabi(x, y);
  } else if (o.model == "linear-origin") {
    r = fitkit::fit_linear_origin(x, y);
  } else if (o.model == "saturation") {
    if (!o.t1_s) throw UsageError("fit saturation needs --t1");
    r = fitkit::fit_saturation(x, y, *o.t1_s);
  } else {
    throw UsageError("unknown fit model '" + o.model + "'");
  }
  json j = fit_json(r);
  j["model"] = o.model;
  ctx.write_json(o.out, j);
  require_converged(r, o.model);
}

void cmd_analyze(Context& ctx, const AnalyzeOptions& o) {
  const auto in = o.in.empty() ? ctx.artifact_path(o.kind + ".csv") : o.in;
  auto meta_path = o.meta;
  if (meta_path.empty()) {
    auto sidecar = in.parent_path() / (in.stem().string() + ".truth.json");
    if (std::filesystem::exists(sidecar)) meta_path = sidecar;
  }
  const json meta = meta_path.empty() ? json::object() : read_json(meta_path);
  const auto t = read_csv(in);
  ctx.summary["input"] = in.string();

  json result;
  if (o.kind == "spectrum") {
    result = analyze_spectrum(t, in);
  } else if (o.kind == "sd_series") {
    result = analyze_sd_series(t, in);
  } else if (o.kind == "echo") {
    result = analyze_echo(t, in, meta, o);
  } else if (o.kind == "dephasing") {
    result = analyze_dephasing(t, in, meta);
  } else if (o.kind == "g2") {
    result = analyze_g2(ctx, t, in, meta, o);
  } else if (o.kind == "lifetime") {
    result = analyze_lifetime(ctx, t, in);
  } else {
    throw UsageError("unknown analysis kind '" + o.kind + "'");
  }
  result["kind"] = o.kind;
  emit(ctx, "analyze_" + o.kind + ".json", result);
}

void cmd_synth(Context& ctx, const SynthOptions& o) {
  const bool noise = !o.no_noise;
  auto os = ctx.open(ctx.artifact_path(o.kind + ".csv"));
  json truth;
  if (o.kind == "spectrum") {
    check_flags(o, {"--fwhm"});
    synth::SpectrumTruth tr;
    if (o.fwhm_hz) tr.lines[0].fwhm_hz = *o.fwhm_hz;
    tr.noise = noise;
    const auto d = synth::spectrum(tr, ctx.seed);
    csv::Writer w(os, {"detuning_MHz", "counts"});
    for (std::size_t i = 0; i < d.data.counts.size(); ++i) w.row({d.data.detuning_hz[i] * 1e-6, d.data.counts[i]});
    truth = d.truth;
  } else if (o.kind == "sd_series") {
    check_flags(o, {"--fwhm", "--drift", "--epochs"});
    synth::SdSeriesTruth tr;
    if (o.fwhm_hz) tr.fwhm_hz = *o.fwhm_hz;
    if (o.drift_hz_per_s) tr.drift_hz_per_s = *o.drift_hz_per_s;
    if (o.epochs) tr.epochs = *o.epochs;
    tr.noise = noise;
    const auto d = synth::sd_series(tr, ctx.seed);
    csv::Writer w(os, {"epoch", "detuning_MHz", "counts"});
    for (std::size_t e = 0; e < d.data.size(); ++e) {
      const auto& s = d.data[e];
      for (std::size_t i = 0; i < s.counts.size(); ++i) {
        w.row({static_cast<std::int64_t>(e), s.detuning_hz[i] * 1e-6, s.counts[i]});
      }
    }
    truth = d.truth;
  } else if (o.kind == "echo") {
    check_flags(o, {"--t2", "--points"});
    synth::EchoTruth tr;
    if (o.t2_s) tr.t2_s = *o.t2_s;
    if (o.points) tr.points = *o.points;
    tr.convention = convention_from(o.convention);
    tr.noise = noise;
    const auto d = synth::echo(tr, ctx.seed);
    csv::Writer w(os, {"delay_us", "amplitude"});
    for (std::size_t i = 0; i < d.data.delays_s.size(); ++i) w.row({d.data.delays_s[i] * 1e6, d.data.amplitude[i]});
    truth = d.truth;
  } else if (o.kind == "dephasing") {
    check_flags(o, {"--xi-ratio"});
    synth::DephasingTruth tr;
    if (o.xi_ratio) {
      if (!(*o.xi_ratio > 0.0)) throw UsageError("--xi-ratio must be positive");
      tr.devices[1].xi = tr.devices[0].xi / *o.xi_ratio;
    }
    tr.noise = noise;
    const auto d = synth::dephasing(tr, ctx.seed);
    csv::Writer w(os, {"device", "tau_pi_us", "t2_us"});
    for (const auto& dev : d.data) {
      for (std::size_t i = 0; i < dev.tau_pi_s.size(); ++i) w.row({dev.name, dev.tau_pi_s[i] * 1e6, dev.t2_s[i] * 1e6});
    }
    truth = d.truth;
  } else if (o.kind == "g2") {
    check_flags(o, {"--p-signal", "--trials", "--dark-rate", "--source"});
    if (o.no_noise) throw UsageError("--no-noise does not apply to synth g2");
    synth::G2Truth tr;
    if (o.p_signal) tr.p_signal = *o.p_signal;
    if (o.trials) tr.trials = *o.trials;
    if (o.dark_rate_hz) tr.dark_count_rate_hz = *o.dark_rate_hz;
    if (o.source) {
      try {
        tr.source = synth::photon_source_from_string(*o.source);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }
    const auto d = synth::g2(tr, ctx.seed);
    csv::Writer w(os, {"trial_index", "counts"});
    for (std::size_t i = 0; i < d.data.counts.size(); ++i) {
      w.row({static_cast<std::int64_t>(d.data.trial_index[i]), static_cast<std::int64_t>(d.data.counts[i])});
    }
    truth = d.truth;
  } else if (o.kind == "lifetime") {
    check_flags(o, {"--tau"});
    synth::LifetimeTruth tr;
    if (o.tau_s) tr.tau_s = *o.tau_s;
    tr.noise = noise;
    const auto d = synth::lifetime(tr, ctx.seed);
    csv::Writer w(os, {"time_us", "counts"});
    for (std::size_t i = 0; i < d.data.counts.size(); ++i) w.row({d.data.time_s[i] * 1e6, d.data.counts[i]});
    truth = d.truth;
  } else {
    throw UsageError("unknown synth kind '" + o.kind + "'");
  }
  ctx.write_json(ctx.artifact_path(o.kind + ".truth.json"), truth);
}

void cmd_table(Context& ctx, const TableOptions& o) {
  const auto t = read_csv(o.in);
  const auto ids = t.column("id");
  const auto samples = t.column("sample");
  const auto p = column(t, "P", o.in);
  const auto p_err = column(t, "P_err", o.in);
  const auto lw = column(t, "sd_lw_MHz", o.in);
  const auto lw_err = column(t, "sd_lw_err_MHz", o.in);
  const auto det = column(t, "detuning_GHz", o.in);
  const auto reps = column(t, "repetitions", o.in);
  std::vector<speclab::EmitterRow> rows;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    rows.push_back({ids[i], samples[i], p[i], p_err[i], lw[i], lw_err[i], det[i], reps[i]});
  }
  const auto table = speclab::emitter_table(std::move(rows));

  const auto p_err_text = t.column("P_err");
  const auto lw_err_text = t.column("sd_lw_err_MHz");
  auto os = ctx.open(ctx.artifact_path("table.csv"));
  csv::Writer w(os, {"id", "sample", "P", "sd_lw_MHz", "detuning_GHz", "repetitions"});
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    w.row({r.id, r.sample, format_recorded(r.purcell, p_err_text[i]),
           format_recorded(r.sd_lw_mhz, lw_err_text[i]), r.detuning_ghz, r.repetitions});
  }
  if (table.purcell && table.sd_lw_mhz) {
    w.row({std::string("mean"), std::string(), table.purcell->formatted, table.sd_lw_mhz->formatted,
           std::string(), std::string()});
    ctx.summary["mean"] = {{"P", table.purcell->mean},
                           {"P_sd", table.purcell->stddev},
                           {"sd_lw_MHz", table.sd_lw_mhz->mean},
                           {"sd_lw_sd_MHz", table.sd_lw_mhz->stddev}};
  }
}

}  // namespace ersd::cli
