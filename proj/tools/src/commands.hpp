#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ersd/csv.hpp"

namespace ersd::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kConfig = 3, kNumeric = 4, kMissingInput = 5 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation finished but its result is not trustworthy (non-converged fit).
class NumericFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing or unreadable input file.
class InputError : public std::runtime_error {
 public:
  InputError(std::filesystem::path path, const std::string& message)
      : std::runtime_error(message), path_(std::move(path)) {}
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

struct Context {
  nlohmann::json config;  // fully resolved
  std::filesystem::path out_dir;
  std::filesystem::path manifest_path;  // default <out_dir>/<subcommand>.manifest.json
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::ostream* out = nullptr;
  std::vector<std::string> artifacts;
  nlohmann::json summary = nlohmann::json::object();  // copied into the manifest

  std::filesystem::path artifact_path(const std::string& name) const { return out_dir / name; }
  std::ofstream open(const std::filesystem::path& path);
  void write_json(const std::filesystem::path& path, const nlohmann::json& j);
};

csv::Table read_csv(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);
std::vector<double> column(const csv::Table& t, const std::string& name, const std::filesystem::path& path);

// ------------------------------------------------------------ option structs

struct AngleOptions {
  std::string grid;  // empty: sweep.grid from config
};

struct FitOptions {
  std::string model;
  std::filesystem::path in;
  std::filesystem::path out;  // result JSON
  std::string weighting = "default";
  bool fix_offset_zero = false;
  std::optional<double> t1_s;
};

struct AnalyzeOptions {
  std::string kind;
  std::filesystem::path in;    // default <out>/<kind>.csv
  std::filesystem::path meta;  // default <in stem>.truth.json when present
  std::string convention;      // echo
  bool fix_offset_zero = false;
  std::optional<std::uint64_t> trials;
  std::optional<double> dark_rate_hz;
  std::optional<double> window_s;
  std::optional<double> pulse_period_s;
  std::size_t max_lag = 2000;
};

struct SynthOptions {
  std::string kind;
  std::optional<double> t2_s;
  std::optional<double> tau_s;
  std::optional<double> fwhm_hz;
  std::optional<double> drift_hz_per_s;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> points;
  std::optional<double> p_signal;
  std::optional<std::uint64_t> trials;
  std::optional<double> dark_rate_hz;
  std::optional<std::string> source;
  std::optional<double> xi_ratio;
  std::string convention = "inter_pulse_delay";
  bool no_noise = false;
};

struct TableOptions {
  std::filesystem::path in;
};

// ------------------------------------------------------------ commands

void cmd_bath_angle(Context& ctx, const AngleOptions& o);
void cmd_bath_field(Context& ctx);
void cmd_single_emitter(Context& ctx, bool positions);
void cmd_er_er(Context& ctx, const AngleOptions& o);
void cmd_lineshape(Context& ctx);
void cmd_cavity(Context& ctx);
void cmd_fit(Context& ctx, const FitOptions& o);
void cmd_analyze(Context& ctx, const AnalyzeOptions& o);
void cmd_synth(Context& ctx, const SynthOptions& o);
void cmd_table(Context& ctx, const TableOptions& o);

/// Column documentation for every artifact, keyed by subcommand.
nlohmann::json artifact_schema();

}  // namespace ersd::cli
