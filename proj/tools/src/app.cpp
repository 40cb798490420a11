#include "ersd_cli/app.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <sstream>
#include <system_error>

#include <CLI11.hpp>

#include "commands.hpp"
#include "ersd/types.hpp"
#include "ersd_cli/config.hpp"

namespace ersd::cli {

using nlohmann::json;
namespace fs = std::filesystem;

// ------------------------------------------------------------ Context and I/O

std::ofstream Context::open(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::system_error(std::make_error_code(std::errc::io_error), "cannot write " + path.string());
  artifacts.push_back(path.string());
  return os;
}

void Context::write_json(const fs::path& path, const json& j) {
  auto os = open(path);
  os << j.dump(2) << '\n';
}

csv::Table read_csv(const fs::path& path) {
  try {
    return csv::read_file(path);
  } catch (const std::system_error&) {
    throw InputError(path, "cannot read input file");
  }
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path, "cannot read input file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path, std::string("invalid JSON: ") + e.what());
  }
}

std::vector<double> column(const csv::Table& t, const std::string& name, const fs::path& path) {
  try {
    return t.numbers(name);
  } catch (const std::out_of_range&) {
    throw InputError(path, "missing column '" + name + "'");
  } catch (const std::invalid_argument& e) {
    throw InputError(path, "column '" + name + "': " + e.what());
  }
}

json artifact_schema() {
  auto cols = [](std::initializer_list<std::pair<const char*, const char*>> c) {
    json out = json::array();
    for (const auto& [name, desc] : c) out.push_back({{"name", name}, {"description", desc}});
    return out;
  };
  const json angle = cols({{"theta_deg", "polar angle of B_ext from [001]"},
                           {"phi_deg", "azimuth of B_ext from [100]"},
                           {"fwhm_MHz", "spectral-diffusion FWHM"},
                           {"mc_error_MHz", "bootstrap standard error of the FWHM"}});
  return {
      {"bath-angle", {{"bath_angle.csv", angle}}},
      {"bath-field",
       {{"bath_field.csv", cols({{"direction_label", "Miller direction of B_ext"},
                                 {"B_mT", "field magnitude"},
                                 {"fwhm_MHz", "spectral-diffusion FWHM"},
                                 {"mc_error_MHz", "bootstrap standard error of the FWHM"}})}}},
      {"single-emitter",
       {{"single_emitter_spectra.csv", cols({{"configuration", "bath configuration index"},
                                             {"detuning_MHz", "histogram bin centre"},
                                             {"probability", "fraction of realizations in the bin"}})},
        {"single_emitter_spins.csv", cols({{"configuration", "bath configuration index"},
                                           {"x_nm", "position relative to the emitter"},
                                           {"y_nm", "position relative to the emitter"},
                                           {"z_nm", "position relative to the emitter"},
                                           {"distance_nm", "distance to the emitter"},
                                           {"splitting_kHz", "optical splitting produced by the spin"}})},
        {"bath_positions_<k>.csv", cols({{"x_nm", "position relative to the emitter"},
                                         {"y_nm", "position relative to the emitter"},
                                         {"z_nm", "position relative to the emitter"},
                                         {"kind", "si29 or er"}})},
        {"single_emitter_summary.json", "per-configuration counts and widths"}}},
      {"er-er", {{"er_er_angle.csv", angle}, {"er_er_summary.json", "linewidth at the configured field"}}},
      {"lineshape",
       {{"lineshape_holtsmark.csv", cols({{"x", "field magnitude in units of the normal field"},
                                          {"density", "Holtsmark probability density"}})},
        {"lineshape_scaling.json", "power-law fits of width versus density"}}},
      {"cavity", {{"cavity.json", "Q, mode volume, Purcell factors, expected lifetime, efficiency budget"}}},
      {"fit",
       {{"input", cols({{"x", "independent variable"}, {"y", "observations"}})},
        {"<out>.json", "params, sigma, residual_norm, dof, converged"}}},
      {"synth",
       {{"spectrum.csv", cols({{"detuning_MHz", "laser detuning"}, {"counts", "detected counts"}})},
        {"sd_series.csv", cols({{"epoch", "epoch index"}, {"detuning_MHz", "laser detuning"}, {"counts", "detected counts"}})},
        {"echo.csv", cols({{"delay_us", "inter-pulse delay or total evolution time"}, {"amplitude", "echo amplitude"}})},
        {"dephasing.csv", cols({{"device", "device name"}, {"tau_pi_us", "pi-pulse duration"}, {"t2_us", "coherence time"}})},
        {"g2.csv", cols({{"trial_index", "trial with at least one detection"}, {"counts", "detections in the trial"}})},
        {"lifetime.csv", cols({{"time_us", "bin centre after the excitation pulse"}, {"counts", "detected counts"}})},
        {"<kind>.truth.json", "generator parameters"}}},
      {"analyze",
       {{"analyze_<kind>.json", "fit results for the analyzed dataset"},
        {"analyze_g2.csv", cols({{"lag", "trial lag"}, {"g2", "plateau-normalized correlation"}})}}},
      {"table",
       {{"input", cols({{"id", "emitter label"}, {"sample", "sample name"}, {"P", "Purcell factor"},
                        {"P_err", "uncertainty of P"}, {"sd_lw_MHz", "spectral-diffusion linewidth"},
                        {"sd_lw_err_MHz", "uncertainty of the linewidth"}, {"detuning_GHz", "cavity detuning"},
                        {"repetitions", "spectra recorded, in millions"}})},
        {"table.csv", cols({{"id", "emitter label, last row 'mean'"}, {"sample", "sample name"},
                            {"P", "value(uncertainty)"}, {"sd_lw_MHz", "value(uncertainty)"},
                            {"detuning_GHz", "cavity detuning"}, {"repetitions", "spectra recorded, in millions"}})}}},
  };
}

// ------------------------------------------------------------ dispatch

namespace {

void print_error(std::ostream& err, json e) { err << e.dump() << '\n'; }

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

fs::path default_out_dir(const json& cfg) {
  const std::string configured = cfg["execution"]["out_dir"];
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv("ERSD_OUT_ROOT"); env && *env) return env;
  return "ersd_out";
}

template <class T>
void add_optional(CLI::App* app, const std::string& name, std::optional<T>& target, const std::string& desc) {
  app->add_option_function<T>(name, [&target](const T& v) { target = v; }, desc);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral-diffusion simulation and emitter data analysis for Er:Si", "ersd"};
  app.set_version_flag("--version", std::string(kVersion));
  app.fallthrough();
  app.require_subcommand(0, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string out_dir;
  bool schema = false;
  app.add_option("--config", config_path, "Run configuration file (TOML subset, or JSON by .json extension)");
  app.add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& v) { seed = v; },
                                         "Master seed (overrides execution.seed)");
  app.add_option_function<unsigned>("--workers", [&](const unsigned& v) { workers = v; },
                                    "Worker threads (overrides execution.workers)")
      ->check(CLI::Range(1u, 4096u));
  app.add_option("--out", out_dir,
                 "Output directory (default: execution.out_dir, then $ERSD_OUT_ROOT, then ./ersd_out)");
  app.add_flag("--schema", schema, "Print configuration defaults and artifact columns as JSON, then exit");

  AngleOptions angle_opts;
  auto* bath_angle = app.add_subcommand("bath-angle", "Nuclear-bath linewidth versus field direction");
  bath_angle->add_option("--grid", angle_opts.grid, "Direction grid (overrides sweep.grid)")
      ->check(CLI::IsMember({"sphere", "arc"}));

  auto* bath_field = app.add_subcommand("bath-field", "Nuclear-bath linewidth versus field magnitude");

  bool positions = false;
  auto* single = app.add_subcommand("single-emitter", "Spectra of single emitters in frozen bath configurations");
  single->add_flag("--positions", positions, "Also write bath_positions_<k>.csv for every configuration");

  AngleOptions erer_opts;
  auto* erer = app.add_subcommand("er-er", "Er-Er dipolar linewidth versus field direction");
  erer->add_option("--grid", erer_opts.grid, "Direction grid (overrides sweep.grid)")
      ->check(CLI::IsMember({"sphere", "arc"}));

  auto* lineshape = app.add_subcommand("lineshape", "Holtsmark density table and width-versus-density scaling fit");
  auto* cavity = app.add_subcommand("cavity", "Cavity design report: Q, mode volume, Purcell factor");

  FitOptions fit_opts;
  auto* fit = app.add_subcommand("fit", "Fit a model to x,y columns of a CSV file");
  fit->add_option("model", fit_opts.model, "Model")
      ->required()
      ->check(CLI::IsMember({"lorentzian", "gaussian", "exponential", "rabi", "linear-origin", "saturation"}));
  fit->add_option("--in", fit_opts.in, "Input CSV with columns x,y")->required();
  fit->add_option("--out", fit_opts.out, "Result JSON (default <out_dir>/fit_<model>.json)");
  fit->add_option("--weights", fit_opts.weighting, "Residual weighting")
      ->check(CLI::IsMember({"default", "uniform", "poisson"}));
  fit->add_flag("--fix-offset-zero", fit_opts.fix_offset_zero, "Exponential: hold the offset at zero");
  add_optional(fit, "--t1", fit_opts.t1_s, "Saturation: T1 in seconds");

  AnalyzeOptions an_opts;
  auto* analyze = app.add_subcommand("analyze", "Analyze a measured or synthetic dataset");
  analyze->add_option("kind", an_opts.kind, "Dataset kind")
      ->required()
      ->check(CLI::IsMember({"spectrum", "sd_series", "echo", "dephasing", "g2", "lifetime"}));
  analyze->add_option("--in", an_opts.in, "Input CSV (default <out_dir>/<kind>.csv)");
  analyze->add_option("--meta", an_opts.meta, "Metadata JSON (default: <in stem>.truth.json when present)");
  analyze->add_option("--convention", an_opts.convention, "Echo delay convention")
      ->check(CLI::IsMember({"inter_pulse_delay", "total_evolution"}));
  analyze->add_flag("--fix-offset-zero", an_opts.fix_offset_zero, "Echo: hold the offset at zero");
  add_optional(analyze, "--trials", an_opts.trials, "g2: number of trials");
  add_optional(analyze, "--dark-rate", an_opts.dark_rate_hz, "g2: dark-count rate in Hz");
  add_optional(analyze, "--window", an_opts.window_s, "g2: detection window in seconds");
  add_optional(analyze, "--pulse-period", an_opts.pulse_period_s, "g2: trial period in seconds");
  analyze->add_option("--max-lag", an_opts.max_lag, "g2: largest trial lag")->check(CLI::Range(std::size_t{1}, std::size_t{100'000'000}));

  SynthOptions syn_opts;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with known ground truth");
  synth->add_option("kind", syn_opts.kind, "Dataset kind")
      ->required()
      ->check(CLI::IsMember({"spectrum", "sd_series", "echo", "dephasing", "g2", "lifetime"}));
  add_optional(synth, "--t2", syn_opts.t2_s, "echo: T2 in seconds");
  add_optional(synth, "--tau", syn_opts.tau_s, "lifetime: decay time in seconds");
  add_optional(synth, "--fwhm", syn_opts.fwhm_hz, "spectrum, sd_series: line FWHM in Hz");
  add_optional(synth, "--drift", syn_opts.drift_hz_per_s, "sd_series: centre drift in Hz/s");
  add_optional(synth, "--epochs", syn_opts.epochs, "sd_series: number of epochs");
  add_optional(synth, "--points", syn_opts.points, "echo: number of delays");
  add_optional(synth, "--p-signal", syn_opts.p_signal, "g2: signal detections per trial");
  add_optional(synth, "--trials", syn_opts.trials, "g2: number of trials");
  add_optional(synth, "--dark-rate", syn_opts.dark_rate_hz, "g2: dark-count rate in Hz");
  add_optional(synth, "--source", syn_opts.source, "g2: single_emitter, poissonian or blinking");
  add_optional(synth, "--xi-ratio", syn_opts.xi_ratio, "dephasing: xi of the first device over the second");
  synth->add_option("--convention", syn_opts.convention, "echo: delay convention")
      ->check(CLI::IsMember({"inter_pulse_delay", "total_evolution"}));
  synth->add_flag("--no-noise", syn_opts.no_noise, "Write the noiseless model");

  TableOptions table_opts;
  auto* table = app.add_subcommand("table", "Per-emitter summary table with value(uncertainty) formatting");
  table->add_option("--in", table_opts.in, "Input CSV of per-emitter values")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    print_error(err, {{"error", "usage"}, {"message", e.what()}});
    return kUsage;
  }

  CLI::App* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front();
  if (schema) {
    const json artifacts = artifact_schema();
    json j = {{"version", kVersion}, {"config_defaults", default_config()}};
    j["artifacts"] = sub ? json{{sub->get_name(), artifacts.at(sub->get_name())}} : artifacts;
    out << j.dump(2) << '\n';
    return kOk;
  }
  if (!sub) {
    print_error(err, {{"error", "usage"}, {"message", "a subcommand is required; see --help"}});
    return kUsage;
  }

  const auto started = std::chrono::system_clock::now();
  const auto t0 = std::chrono::steady_clock::now();
  Context ctx;
  ctx.out = &out;
  try {
    json user = json::object();
    if (!config_path.empty()) user = load_config_file(config_path);
    if (seed) user["execution"]["seed"] = *seed;
    if (workers) user["execution"]["workers"] = *workers;
    ctx.config = resolve_config(user);
  } catch (const ConfigError& e) {
    print_error(err, {{"error", "config"}, {"key", e.key()}, {"message", e.what()}});
    return kConfig;
  } catch (const std::system_error& e) {
    print_error(err, {{"error", "missing_input"}, {"path", config_path}, {"message", e.code().message()}});
    return kMissingInput;
  }
  ctx.seed = ctx.config["execution"]["seed"].get<std::uint64_t>();
  ctx.workers = ctx.config["execution"]["workers"].get<unsigned>();
  ctx.out_dir = out_dir.empty() ? default_out_dir(ctx.config) : fs::path(out_dir);
  const std::string name = sub->get_name();
  std::string stem = name;
  if (sub == analyze) stem += "_" + an_opts.kind;
  if (sub == synth) stem += "_" + syn_opts.kind;
  ctx.manifest_path = ctx.out_dir / (stem + ".manifest.json");
  if (sub == fit) {
    if (fit_opts.out.empty()) fit_opts.out = ctx.out_dir / ("fit_" + fit_opts.model + ".json");
    ctx.manifest_path = fs::path(fit_opts.out).replace_extension(".manifest.json");
  }

  int code = kOk;
  json error;
  try {
    if (sub == bath_angle) cmd_bath_angle(ctx, angle_opts);
    else if (sub == bath_field) cmd_bath_field(ctx);
    else if (sub == single) cmd_single_emitter(ctx, positions);
    else if (sub == erer) cmd_er_er(ctx, erer_opts);
    else if (sub == lineshape) cmd_lineshape(ctx);
    else if (sub == cavity) cmd_cavity(ctx);
    else if (sub == fit) cmd_fit(ctx, fit_opts);
    else if (sub == analyze) cmd_analyze(ctx, an_opts);
    else if (sub == synth) cmd_synth(ctx, syn_opts);
    else if (sub == table) cmd_table(ctx, table_opts);
  } catch (const UsageError& e) {
    print_error(err, {{"error", "usage"}, {"message", e.what()}});
    return kUsage;
  } catch (const ConfigError& e) {
    print_error(err, {{"error", "config"}, {"key", e.key()}, {"message", e.what()}});
    return kConfig;
  } catch (const InputError& e) {
    error = {{"error", "missing_input"}, {"path", e.path().string()}, {"message", e.what()}};
    print_error(err, error);
    return kMissingInput;
  } catch (const NumericFailure& e) {
    error = {{"error", "numeric"}, {"message", e.what()}};
    code = kNumeric;
  } catch (const std::exception& e) {
    // Domain and argument errors from the numerical core.
    error = {{"error", "numeric"}, {"message", e.what()}};
    code = kNumeric;
  }
  if (code != kOk) print_error(err, error);

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json manifest = {{"tool", "ersd"},
                   {"version", kVersion},
                   {"subcommand", name},
                   {"arguments", std::vector<std::string>(argv + 1, argv + argc)},
                   {"seed", ctx.seed},
                   {"workers", ctx.workers},
                   {"config", ctx.config},
                   {"artifacts", ctx.artifacts},
                   {"summary", ctx.summary},
                   {"status", code == kOk ? "ok" : "failed"},
                   {"started_utc", utc_timestamp(started)},
                   {"wall_time_s", wall}};
  if (code != kOk) manifest["error"] = error;
  try {
    Context writer;
    writer.write_json(ctx.manifest_path, manifest);
  } catch (const std::exception& e) {
    print_error(err, {{"error", "io"}, {"message", e.what()}});
    return code == kOk ? kNumeric : code;
  }
  return code;
}

}  // namespace ersd::cli
