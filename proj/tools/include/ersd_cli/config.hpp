#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "ersd/cavity.hpp"
#include "ersd/diffusionmc.hpp"

namespace ersd::cli {

/// Configuration problem tied to one key ("section.key") or source line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Subset of TOML: [section] and [section.sub] headers, key = value with
/// strings, booleans, integers, floats and (nested, multi-line) arrays,
/// '#' comments.
nlohmann::json parse_toml(std::string_view text);

/// .json files are parsed as JSON, everything else as the TOML subset.
nlohmann::json load_config_file(const std::filesystem::path& path);

nlohmann::json default_config();

/// "110" -> normalized (1, 1, 0); a minus sign negates the following digit ("1-10").
Vec3 miller_to_vector(const std::string& indices);

/// Defaults overlaid with `user`; unknown keys, wrong types and out-of-range
/// values raise ConfigError naming the key.
nlohmann::json resolve_config(const nlohmann::json& user);

diffusionmc::EnsembleParams ensemble_params(const nlohmann::json& cfg, diffusionmc::BathKind kind);
cavity::CavityParams cavity_params(const nlohmann::json& cfg);
cavity::EmitterPhotonics emitter_photonics(const nlohmann::json& cfg);

}  // namespace ersd::cli
