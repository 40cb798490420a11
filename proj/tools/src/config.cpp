#include "ersd_cli/config.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <system_error>

#include "ersd/constants.hpp"
#include "ersd/lattice.hpp"

namespace ersd::cli {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------- TOML subset

class TomlParser {
 public:
  explicit TomlParser(std::string_view text) : text_(text) {}

  json parse() {
    json root = json::object();
    json* table = &root;
    while (skip_blank_lines()) {
      if (peek() == '[') {
        table = &open_table(root);
      } else {
        std::string key = parse_key();
        skip_inline_space();
        expect('=');
        skip_inline_space();
        json value = parse_value();
        if (table->contains(key)) fail("duplicate key '" + key + "'");
        (*table)[key] = std::move(value);
      }
      end_of_line();
    }
    return root;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;

  [[noreturn]] void fail(const std::string& message) const {
    throw ConfigError("line " + std::to_string(line_), message);
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }
  char take() {
    char c = text_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  void skip_inline_space() {
    while (!at_end() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++pos_;
  }
  void skip_comment() {
    if (peek() == '#') {
      while (!at_end() && peek() != '\n') ++pos_;
    }
  }
  // Returns false at end of input.
  bool skip_blank_lines() {
    for (;;) {
      skip_inline_space();
      skip_comment();
      if (at_end()) return false;
      if (peek() != '\n') return true;
      take();
    }
  }
  // Whitespace, comments and newlines inside arrays.
  void skip_array_space() {
    for (;;) {
      skip_inline_space();
      skip_comment();
      if (peek() != '\n') return;
      take();
    }
  }
  void end_of_line() {
    skip_inline_space();
    skip_comment();
    if (at_end()) return;
    if (peek() != '\n') fail("unexpected trailing characters");
    take();
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    take();
  }

  static bool bare_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  }

  std::string parse_key() {
    if (peek() == '"' || peek() == '\'') return parse_string();
    std::string key;
    while (!at_end() && bare_key_char(peek())) key.push_back(take());
    if (key.empty()) fail("expected a key");
    return key;
  }

  json& open_table(json& root) {
    take();
    if (peek() == '[') fail("arrays of tables are not supported");
    json* table = &root;
    std::string path;
    for (;;) {
      skip_inline_space();
      std::string part = parse_key();
      path += path.empty() ? part : "." + part;
      json& next = (*table)[part];
      if (next.is_null()) next = json::object();
      if (!next.is_object()) fail("'" + path + "' is not a table");
      table = &next;
      skip_inline_space();
      if (peek() == '.') {
        take();
        continue;
      }
      expect(']');
      return *table;
    }
  }

  std::string parse_literal_string() {
    expect('\'');
    std::string out;
    for (;;) {
      if (at_end() || peek() == '\n') fail("unterminated string");
      const char c = take();
      if (c == '\'') return out;
      out.push_back(c);
    }
  }

  std::string parse_string() {
    if (peek() == '\'') return parse_literal_string();
    expect('"');
    std::string out;
    for (;;) {
      if (at_end() || peek() == '\n') fail("unterminated string");
      char c = take();
      if (c == '"') return out;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (at_end()) fail("unterminated string");
      switch (take()) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        default: fail("unsupported escape sequence");
      }
    }
  }

  json parse_array() {
    expect('[');
    json arr = json::array();
    for (;;) {
      skip_array_space();
      if (peek() == ']') {
        take();
        return arr;
      }
      arr.push_back(parse_value());
      skip_array_space();
      if (peek() == ',') {
        take();
        continue;
      }
      skip_array_space();
      expect(']');
      return arr;
    }
  }

  json parse_scalar_token() {
    std::string token;
    while (!at_end()) {
      char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' || c == '_') {
        token.push_back(take());
      } else {
        break;
      }
    }
    if (token.empty()) fail("expected a value");
    if (token == "true") return true;
    if (token == "false") return false;
    std::string digits;
    for (char c : token) {
      if (c != '_') digits.push_back(c);
    }
    if (digits == "inf" || digits == "+inf" || digits == "-inf" || digits.ends_with("nan")) {
      fail("non-finite numbers are not accepted");
    }
    const bool is_float = digits.find_first_of(".eE") != std::string::npos;
    const char* first = digits.data();
    const char* last = first + digits.size();
    if (*first == '+') ++first;
    if (!is_float) {
      if (*first == '-') {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(first, last, v);
        if (ec == std::errc() && p == last) return v;
      } else {
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(first, last, v);
        if (ec == std::errc() && p == last) return v;
      }
      fail("invalid integer '" + token + "'");
    }
    double v = 0.0;
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || p != last) fail("invalid number '" + token + "'");
    return v;
  }

  json parse_value() {
    if (peek() == '"' || peek() == '\'') return parse_string();
    if (peek() == '[') return parse_array();
    if (peek() == '{') fail("inline tables are not supported");
    return parse_scalar_token();
  }
};

// ---------------------------------------------------------------- schema

using Check = std::function<void(const std::string& key, const json& value)>;

[[noreturn]] void reject(const std::string& key, const std::string& message) {
  throw ConfigError(key, message);
}

double number(const std::string& key, const json& v) {
  if (!v.is_number()) reject(key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) reject(key, "expected a finite number");
  return x;
}

Check in_range(double lo, double hi) {
  return [lo, hi](const std::string& key, const json& v) {
    const double x = number(key, v);
    if (x < lo || x > hi) {
      std::ostringstream os;
      os << "must lie in [" << lo << ", " << hi << "]";
      reject(key, os.str());
    }
  };
}

Check positive() {
  return [](const std::string& key, const json& v) {
    if (number(key, v) <= 0.0) reject(key, "must be positive");
  };
}

Check non_negative() {
  return [](const std::string& key, const json& v) {
    if (number(key, v) < 0.0) reject(key, "must be non-negative");
  };
}

Check integer_at_least(std::uint64_t lo) {
  return [lo](const std::string& key, const json& v) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      reject(key, "expected a non-negative integer");
    }
    if (v.get<std::uint64_t>() < lo) reject(key, "must be at least " + std::to_string(lo));
  };
}

Check one_of(std::vector<std::string> allowed) {
  return [allowed = std::move(allowed)](const std::string& key, const json& v) {
    if (!v.is_string()) reject(key, "expected a string");
    for (const auto& a : allowed) {
      if (v.get<std::string>() == a) return;
    }
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    reject(key, "must be one of: " + list);
  };
}

Check any_string() {
  return [](const std::string& key, const json& v) {
    if (!v.is_string()) reject(key, "expected a string");
  };
}

Check boolean() {
  return [](const std::string& key, const json& v) {
    if (!v.is_boolean()) reject(key, "expected true or false");
  };
}

Check number_array(std::size_t exact_size, Check element = {}) {
  return [exact_size, element](const std::string& key, const json& v) {
    if (!v.is_array()) reject(key, "expected an array of numbers");
    if (exact_size != 0 && v.size() != exact_size) {
      reject(key, "expected exactly " + std::to_string(exact_size) + " numbers");
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string k = key + "[" + std::to_string(i) + "]";
      number(k, v[i]);
      if (element) element(k, v[i]);
    }
  };
}

Check nonzero_vector() {
  return [](const std::string& key, const json& v) {
    number_array(3)(key, v);
    const Vec3 u(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
    if (u.norm() == 0.0) reject(key, "direction must be nonzero");
  };
}

Check string_array(Check element) {
  return [element](const std::string& key, const json& v) {
    if (!v.is_array() || v.empty()) reject(key, "expected a non-empty array of strings");
    for (std::size_t i = 0; i < v.size(); ++i) element(key + "[" + std::to_string(i) + "]", v[i]);
  };
}

Check bool_array() {
  return [](const std::string& key, const json& v) {
    if (!v.is_array()) reject(key, "expected an array of booleans");
    for (std::size_t i = 0; i < v.size(); ++i) boolean()(key + "[" + std::to_string(i) + "]", v[i]);
  };
}

Check miller_direction() {
  return [](const std::string& key, const json& v) {
    if (!v.is_string()) reject(key, "expected a Miller-index string such as \"110\" or \"1-10\"");
    try {
      (void)miller_to_vector(v.get<std::string>());
    } catch (const std::invalid_argument& e) {
      reject(key, e.what());
    }
  };
}

const std::map<std::string, Check>& checks() {
  static const std::map<std::string, Check> table = {
      {"execution.seed", integer_at_least(0)},
      {"execution.workers", integer_at_least(1)},
      {"execution.out_dir", any_string()},

      {"emitter.g_ground", number_array(9)},
      {"emitter.g_excited", number_array(9)},
      {"emitter.g_tensors_are_placeholders", boolean()},
      {"emitter.c2_axis", nonzero_vector()},
      {"emitter.branch_selection", one_of({"lower_lower", "upper_upper", "average"})},
      {"emitter.emitter_offset_cells", in_range(-1.0, 1.0)},

      {"bath.abundance", in_range(0.0, 1.0)},
      {"bath.er_concentration_cm3", non_negative()},
      {"bath.nuclear_radius_nm", positive()},
      {"bath.er_radius_nm", positive()},
      {"bath.orientation_model", one_of({"isotropic", "projected"})},
      {"bath.er_placement", one_of({"continuum", "lattice_substitution"})},
      {"bath.lattice_constant_nm", positive()},

      {"ensemble.b_ext_mT", non_negative()},
      {"ensemble.b_direction", nonzero_vector()},
      {"ensemble.realizations", integer_at_least(diffusionmc::kMinRealizations)},
      {"ensemble.fwhm_method", one_of({"interpolated_histogram", "gaussian_fit", "lorentzian_fit"})},
      {"ensemble.bootstrap_replicates", integer_at_least(0)},

      {"sweep.grid", one_of({"sphere", "arc"})},
      {"sweep.n_theta", integer_at_least(2)},
      {"sweep.n_phi", integer_at_least(2)},
      {"sweep.arc_points", integer_at_least(2)},
      {"sweep.b_min_mT", positive()},
      {"sweep.b_max_mT", positive()},
      {"sweep.b_points", integer_at_least(2)},
      {"sweep.field_directions", string_array(miller_direction())},

      {"single_emitter.configurations", integer_at_least(1)},
      {"single_emitter.realizations", integer_at_least(diffusionmc::kMinRealizations)},
      {"single_emitter.strong_threshold", positive()},
      {"single_emitter.orientation_model", one_of({"isotropic", "projected"})},

      {"cavity.wavelength_um", positive()},
      {"cavity.linewidth_MHz", positive()},
      {"cavity.waist_um", positive()},
      {"cavity.effective_length_um", positive()},
      {"cavity.refractive_index", positive()},
      {"cavity.branching_ratio", in_range(0.0, 1.0)},
      {"cavity.orientation_factor", in_range(0.0, 1.0)},
      {"cavity.bulk_lifetime_us", positive()},
      {"cavity.detection_probability", in_range(0.0, 1.0)},
      {"cavity.losses", number_array(0, in_range(0.0, 1.0))},

      {"lineshape.x_max", positive()},
      {"lineshape.points", integer_at_least(2)},
      {"lineshape.densities_cm3", number_array(0, positive())},
      {"lineshape.widths_MHz", number_array(0, positive())},
      {"lineshape.censored", bool_array()},
  };
  return table;
}

void merge_section(json& target, const json& user, const std::string& prefix) {
  for (const auto& [key, value] : user.items()) {
    const std::string full = prefix.empty() ? key : prefix + "." + key;
    if (!target.contains(key)) reject(full, "unknown key");
    if (target[key].is_object()) {
      if (!value.is_object()) reject(full, "expected a table");
      merge_section(target[key], value, full);
      continue;
    }
    if (value.is_object()) reject(full, "unexpected table");
    checks().at(full)(full, value);
    target[key] = value;
  }
}

Vec3 vec3(const json& v) { return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()}; }

bathfield::GTensor gtensor(const json& v) {
  std::array<double, 9> values{};
  for (std::size_t i = 0; i < 9; ++i) values[i] = v[i].get<double>();
  return bathfield::GTensor::from_row_major(values);
}

}  // namespace

Vec3 miller_to_vector(const std::string& indices) {
  Vec3 out = Vec3::Zero();
  int filled = 0;
  bool negative = false;
  for (char c : indices) {
    if (c == '-') {
      if (negative) throw std::invalid_argument("malformed Miller index '" + indices + "'");
      negative = true;
      continue;
    }
    if (!std::isdigit(static_cast<unsigned char>(c)) || filled == 3) {
      throw std::invalid_argument("malformed Miller index '" + indices + "'");
    }
    out[filled++] = (negative ? -1.0 : 1.0) * (c - '0');
    negative = false;
  }
  if (filled != 3 || negative || out.norm() == 0.0) {
    throw std::invalid_argument("malformed Miller index '" + indices + "'");
  }
  return out.normalized();
}

json parse_toml(std::string_view text) { return TomlParser(text).parse(); }

json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::system_error(std::make_error_code(std::errc::no_such_file_or_directory), path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  if (path.extension() == ".json") {
    try {
      return json::parse(buffer.str());
    } catch (const json::parse_error& e) {
      throw ConfigError("byte " + std::to_string(e.byte), "invalid JSON");
    }
  }
  return parse_toml(buffer.str());
}

json default_config() {
  // Placeholder g-tensors; replace with measured site values for quantitative work.
  return json{
      {"execution", {{"seed", 1}, {"workers", 1}, {"out_dir", ""}}},
      {"emitter",
       {{"g_ground", {2.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 12.0}},
        {"g_excited", {1.0, 0.0, 0.0, 0.0, 3.5, 0.0, 0.0, 0.0, 9.0}},
        {"g_tensors_are_placeholders", true},
        {"c2_axis", {0.0, 0.0, 1.0}},
        {"branch_selection", "lower_lower"},
        {"emitter_offset_cells", 0.25}}},
      {"bath",
       {{"abundance", constants::si29_natural_abundance},
        {"er_concentration_cm3", 1e15},
        {"nuclear_radius_nm", 10.0},
        {"er_radius_nm", 1000.0},
        {"orientation_model", "isotropic"},
        {"er_placement", "continuum"},
        {"lattice_constant_nm", lattice::kSiliconLatticeConstantNm}}},
      {"ensemble",
       {{"b_ext_mT", 100.0},
        {"b_direction", {0.0, 0.0, 1.0}},
        {"realizations", 30000},
        {"fwhm_method", "interpolated_histogram"},
        {"bootstrap_replicates", 50}}},
      {"sweep",
       {{"grid", "sphere"},
        {"n_theta", 17},
        {"n_phi", 33},
        {"arc_points", 181},
        {"b_min_mT", 1.0},
        {"b_max_mT", 300.0},
        {"b_points", 24},
        {"field_directions", {"001", "110"}}}},
      {"single_emitter",
       {{"configurations", 3},
        {"realizations", 20000},
        {"strong_threshold", 1.0},
        {"orientation_model", "projected"}}},
      {"cavity",
       {{"wavelength_um", 1.5378},
        {"linewidth_MHz", 75.0},
        {"waist_um", 3.8},
        {"effective_length_um", 28.5},
        {"refractive_index", 3.48},
        {"branching_ratio", 0.23},
        {"orientation_factor", 1.0 / 3.0},
        {"bulk_lifetime_us", 140.0},
        {"detection_probability", 0.009},
        {"losses", {0.82, 0.73, 0.33, 0.97}}}},
      {"lineshape",
       {{"x_max", 20.0},
        {"points", 401},
        {"densities_cm3", json::array()},
        {"widths_MHz", json::array()},
        {"censored", json::array()}}},
  };
}

json resolve_config(const json& user) {
  json cfg = default_config();
  if (!user.is_object()) reject("", "configuration must be a table");
  merge_section(cfg, user, "");

  if (cfg["sweep"]["b_min_mT"].get<double>() >= cfg["sweep"]["b_max_mT"].get<double>()) {
    reject("sweep.b_max_mT", "must exceed sweep.b_min_mT");
  }
  const auto& ls = cfg["lineshape"];
  if (ls["widths_MHz"].size() != ls["densities_cm3"].size()) {
    reject("lineshape.widths_MHz", "must have one entry per density");
  }
  if (!ls["censored"].empty() && ls["censored"].size() != ls["densities_cm3"].size()) {
    reject("lineshape.censored", "must be empty or have one entry per density");
  }
  try {
    gtensor(cfg["emitter"]["g_ground"]).validate();
  } catch (const std::invalid_argument& e) {
    reject("emitter.g_ground", e.what());
  }
  try {
    gtensor(cfg["emitter"]["g_excited"]).validate();
  } catch (const std::invalid_argument& e) {
    reject("emitter.g_excited", e.what());
  }
  return cfg;
}

diffusionmc::EnsembleParams ensemble_params(const json& cfg, diffusionmc::BathKind kind) {
  diffusionmc::EnsembleParams p;
  const auto& em = cfg["emitter"];
  const auto& bath = cfg["bath"];
  const auto& ens = cfg["ensemble"];

  p.emitter.g_ground = gtensor(em["g_ground"]);
  p.emitter.g_excited = gtensor(em["g_excited"]);
  p.emitter.c2_axis = vec3(em["c2_axis"]).normalized();
  const std::string branch = em["branch_selection"];
  p.emitter.branch_selection = branch == "lower_lower"   ? bathfield::BranchSelection::lower_lower
                               : branch == "upper_upper" ? bathfield::BranchSelection::upper_upper
                                                         : bathfield::BranchSelection::average;

  p.geometry.lattice_constant_nm = bath["lattice_constant_nm"];
  p.geometry.c2_axis = p.emitter.c2_axis;
  p.geometry.emitter_offset_cells = em["emitter_offset_cells"];

  p.bath_kind = kind;
  p.bath.abundance = bath["abundance"];
  p.bath.er_concentration_cm3 = bath["er_concentration_cm3"];
  p.bath.region_radius_nm = kind == diffusionmc::BathKind::nuclear ? bath["nuclear_radius_nm"].get<double>()
                                                                   : bath["er_radius_nm"].get<double>();
  p.geometry.region_radius_nm = p.bath.region_radius_nm;
  p.bath.orientation_model = bath["orientation_model"] == "projected" ? lattice::OrientationModel::projected
                                                                      : lattice::OrientationModel::isotropic;
  p.bath.er_placement = bath["er_placement"] == "continuum" ? lattice::ErPlacement::continuum
                                                           : lattice::ErPlacement::lattice_substitution;
  p.bath.seed = cfg["execution"]["seed"].get<std::uint64_t>();

  p.b_ext_T = ens["b_ext_mT"].get<double>() * 1e-3;
  p.b_ext_direction = vec3(ens["b_direction"]).normalized();
  p.bath.quantization_axis = p.b_ext_direction;
  p.realizations = ens["realizations"].get<std::size_t>();
  const std::string method = ens["fwhm_method"];
  p.fwhm_method = method == "gaussian_fit"     ? lineshape::FwhmMethod::gaussian_fit
                  : method == "lorentzian_fit" ? lineshape::FwhmMethod::lorentzian_fit
                                               : lineshape::FwhmMethod::interpolated_histogram;
  p.bootstrap_replicates = ens["bootstrap_replicates"].get<std::size_t>();
  p.workers = cfg["execution"]["workers"].get<unsigned>();
  return p;
}

cavity::CavityParams cavity_params(const json& cfg) {
  const auto& c = cfg["cavity"];
  return cavity::CavityParams::from_wavelength(c["wavelength_um"], c["linewidth_MHz"].get<double>() * 1e6,
                                               c["waist_um"], c["effective_length_um"], c["refractive_index"]);
}

cavity::EmitterPhotonics emitter_photonics(const json& cfg) {
  const auto& c = cfg["cavity"];
  cavity::EmitterPhotonics ph;
  ph.branching_ratio = c["branching_ratio"];
  ph.orientation_factor = c["orientation_factor"];
  ph.bulk_lifetime_s = c["bulk_lifetime_us"].get<double>() * 1e-6;
  return ph;
}

}  // namespace ersd::cli
