#include <cmath>
#include <numbers>

#include "commands.hpp"
#include "ersd/cavity.hpp"
#include "ersd/constants.hpp"
#include "ersd/diffusionmc.hpp"
#include "ersd/lattice.hpp"
#include "ersd/lineshape.hpp"
#include "ersd/rng.hpp"
#include "ersd_cli/config.hpp"

namespace ersd::cli {

using nlohmann::json;
namespace dmc = diffusionmc;

namespace {

dmc::EnsembleParams params_for(const Context& ctx, dmc::BathKind kind) {
  auto p = ensemble_params(ctx.config, kind);
  p.bath.seed = ctx.seed;
  p.workers = ctx.workers;
  return p;
}

std::vector<dmc::Direction> angle_grid(const Context& ctx, const std::string& override_grid) {
  const auto& sw = ctx.config["sweep"];
  const std::string grid = override_grid.empty() ? sw["grid"].get<std::string>() : override_grid;
  if (grid == "arc") return dmc::arc_grid(sw["arc_points"].get<std::size_t>());
  if (grid == "sphere") return dmc::sphere_grid(sw["n_theta"].get<std::size_t>(), sw["n_phi"].get<std::size_t>());
  throw UsageError("unknown grid '" + grid + "'");
}

dmc::Direction labelled_direction(const std::string& miller) {
  const Vec3 u = miller_to_vector(miller);
  const double theta = std::acos(std::clamp(u.z(), -1.0, 1.0)) * 180.0 / std::numbers::pi;
  double phi = std::atan2(u.y(), u.x()) * 180.0 / std::numbers::pi;
  if (phi < 0.0) phi += 360.0;
  dmc::Direction d;
  d.theta_deg = theta;
  d.phi_deg = phi;
  d.unit = u;
  d.label = "[" + miller + "]";
  return d;
}

json failed_points(const std::vector<dmc::SweepPoint>& points) {
  json failed = json::array();
  for (const auto& pt : points) {
    if (pt.ok) continue;
    failed.push_back({{"theta_deg", pt.direction.theta_deg},
                      {"phi_deg", pt.direction.phi_deg},
                      {"B_mT", pt.b_T * 1e3},
                      {"message", pt.message}});
  }
  return failed;
}

void write_angle_csv(Context& ctx, const std::string& name, const std::vector<dmc::SweepPoint>& points) {
  const auto path = ctx.artifact_path(name);
  auto os = ctx.open(path);
  csv::Writer w(os, {"theta_deg", "phi_deg", "fwhm_MHz", "mc_error_MHz"});
  for (const auto& pt : points) {
    if (!pt.ok) continue;
    w.row({pt.direction.theta_deg, pt.direction.phi_deg, pt.fwhm_hz * 1e-6, pt.mc_error_hz * 1e-6});
  }
  ctx.summary["failed_points"] = failed_points(points);
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

void cmd_bath_angle(Context& ctx, const AngleOptions& o) {
  const auto p = params_for(ctx, dmc::BathKind::nuclear);
  const auto grid = angle_grid(ctx, o.grid);
  const auto points = dmc::angle_sweep(p, grid);
  write_angle_csv(ctx, "bath_angle.csv", points);
  ctx.summary["directions"] = grid.size();
}

void cmd_bath_field(Context& ctx) {
  const auto p = params_for(ctx, dmc::BathKind::nuclear);
  const auto& sw = ctx.config["sweep"];
  std::vector<dmc::Direction> dirs;
  for (const auto& m : sw["field_directions"]) dirs.push_back(labelled_direction(m.get<std::string>()));
  const auto mags = dmc::log_spaced(sw["b_min_mT"].get<double>() * 1e-3, sw["b_max_mT"].get<double>() * 1e-3,
                                    sw["b_points"].get<std::size_t>());
  const auto points = dmc::field_sweep(p, dirs, mags);

  auto os = ctx.open(ctx.artifact_path("bath_field.csv"));
  csv::Writer w(os, {"direction_label", "B_mT", "fwhm_MHz", "mc_error_MHz"});
  for (const auto& pt : points) {
    if (!pt.ok) continue;
    w.row({pt.direction.label, pt.b_T * 1e3, pt.fwhm_hz * 1e-6, pt.mc_error_hz * 1e-6});
  }
  ctx.summary["failed_points"] = failed_points(points);
}

void cmd_single_emitter(Context& ctx, bool positions) {
  auto p = params_for(ctx, dmc::BathKind::nuclear);
  const auto& se = ctx.config["single_emitter"];
  p.realizations = se["realizations"].get<std::size_t>();
  p.bath.orientation_model = se["orientation_model"] == "projected" ? lattice::OrientationModel::projected
                                                                    : lattice::OrientationModel::isotropic;
  dmc::SingleEmitterOptions options;
  options.strong_threshold = se["strong_threshold"].get<double>();
  const auto configurations = se["configurations"].get<std::size_t>();

  auto spectra_os = ctx.open(ctx.artifact_path("single_emitter_spectra.csv"));
  csv::Writer spectra(spectra_os, {"configuration", "detuning_MHz", "probability"});
  auto spins_os = ctx.open(ctx.artifact_path("single_emitter_spins.csv"));
  csv::Writer spins(spins_os, {"configuration", "x_nm", "y_nm", "z_nm", "distance_nm", "splitting_kHz"});
  json configs = json::array();

  for (std::size_t k = 0; k < configurations; ++k) {
    const std::uint64_t bath_seed = derive_seed(ctx.seed, Stream::configuration, k);
    const auto s = dmc::single_emitter_spectrum(bath_seed, p, options);
    const auto id = static_cast<std::int64_t>(k);
    double total = 0.0;
    for (double c : s.histogram.counts) total += c;
    for (std::size_t i = 0; i < s.histogram.centers.size(); ++i) {
      spectra.row({id, s.histogram.centers[i] * 1e-6, s.histogram.counts[i] / total});
    }
    for (const auto& sp : s.strongly_coupled) {
      spins.row({id, sp.position_nm.x(), sp.position_nm.y(), sp.position_nm.z(), sp.distance_nm,
                 sp.splitting_hz * 1e-3});
    }
    configs.push_back({{"configuration", k},
                       {"bath_seed", bath_seed},
                       {"strongly_coupled", s.strongly_coupled.size()},
                       {"resolved_lines", s.resolved_lines},
                       {"far_fwhm_kHz", s.far_fwhm_hz * 1e-3},
                       {"line_fwhm_kHz", s.line_fwhm_hz * 1e-3}});

    if (positions) {
      lattice::BathConfig cfg = p.bath;
      cfg.seed = bath_seed;
      const auto bath = lattice::sample_nuclear_bath(lattice::build_lattice(p.geometry), cfg);
      auto pos_os = ctx.open(ctx.artifact_path("bath_positions_" + std::to_string(k) + ".csv"));
      csv::Writer w(pos_os, {"x_nm", "y_nm", "z_nm", "kind"});
      for (const auto& site : bath) {
        w.row({site.position_nm.x(), site.position_nm.y(), site.position_nm.z(),
               std::string(site.kind == lattice::SpinKind::nuclear_si29 ? "si29" : "er")});
      }
    }
  }
  ctx.write_json(ctx.artifact_path("single_emitter_summary.json"), json{{"configurations", configs}});
}

void cmd_er_er(Context& ctx, const AngleOptions& o) {
  const auto p = params_for(ctx, dmc::BathKind::erbium);
  if (!(p.bath.er_concentration_cm3 > 0.0)) {
    throw ConfigError("bath.er_concentration_cm3", "er-er requires a positive concentration");
  }
  const auto grid = angle_grid(ctx, o.grid);
  const auto points = dmc::angle_sweep(p, grid);
  write_angle_csv(ctx, "er_er_angle.csv", points);

  const auto r = dmc::erer_linewidth(p);
  ctx.write_json(ctx.artifact_path("er_er_summary.json"),
                 json{{"er_concentration_cm3", p.bath.er_concentration_cm3},
                      {"region_radius_nm", p.bath.region_radius_nm},
                      {"b_ext_mT", p.b_ext_T * 1e3},
                      {"b_direction", vec_json(p.b_ext_direction)},
                      {"realizations", p.realizations},
                      {"fwhm_kHz", r.fwhm_hz * 1e-3},
                      {"mc_error_kHz", r.mc_error_hz * 1e-3},
                      {"degenerate", r.degenerate}});
}

void cmd_lineshape(Context& ctx) {
  const auto& ls = ctx.config["lineshape"];
  const double x_max = ls["x_max"];
  const auto n = ls["points"].get<std::size_t>();
  {
    auto os = ctx.open(ctx.artifact_path("lineshape_holtsmark.csv"));
    csv::Writer w(os, {"x", "density"});
    for (std::size_t i = 0; i < n; ++i) {
      const double x = x_max * static_cast<double>(i) / static_cast<double>(n - 1);
      w.row({x, lineshape::holtsmark_pdf(x)});
    }
  }
  const auto& dens = ls["densities_cm3"];
  if (dens.empty()) return;
  std::vector<lineshape::ScalingPoint> pts;
  json points = json::array();
  for (std::size_t i = 0; i < dens.size(); ++i) {
    lineshape::ScalingPoint sp;
    sp.density = dens[i];
    sp.width = ls["widths_MHz"][i].get<double>();
    sp.censored = !ls["censored"].empty() && ls["censored"][i].get<bool>();
    pts.push_back(sp);
    points.push_back({{"density_cm3", sp.density}, {"width_MHz", sp.width}, {"censored", sp.censored}});
  }
  if (pts.size() < 2) throw ConfigError("lineshape.densities_cm3", "scaling fit needs at least two points");
  const auto rep = lineshape::scaling_report(pts);
  auto fit_json = [](const lineshape::ScalingFit& f) {
    return json{{"exponent", f.exponent}, {"prefactor_MHz", f.prefactor}, {"residual", f.residual}};
  };
  ctx.write_json(ctx.artifact_path("lineshape_scaling.json"),
                 json{{"points", points},
                      {"all_points", fit_json(rep.all_points)},
                      {"uncensored", rep.uncensored ? fit_json(*rep.uncensored) : json(nullptr)}});
}

void cmd_cavity(Context& ctx) {
  const auto cav = cavity_params(ctx.config);
  const auto ph = emitter_photonics(ctx.config);
  const auto rep = cavity::design_report(cav, ph);
  const auto& c = ctx.config["cavity"];
  const auto losses = c["losses"].get<std::vector<double>>();
  const double p_detect = c["detection_probability"];
  json budget = {{"detection_probability", p_detect}, {"losses", losses}};
  if (p_detect > 0.0) budget["source_efficiency"] = cavity::efficiency_budget(p_detect, losses);

  const json report = {{"frequency_Hz", cav.resonance_frequency_hz},
                       {"Q", rep.q},
                       {"mode_volume_um3", rep.mode_volume_um3},
                       {"P_ideal", rep.p_ideal},
                       {"P_theo", rep.p_theo},
                       {"expected_lifetime_us", rep.expected_lifetime_s * 1e6},
                       {"efficiency_budget", budget}};
  ctx.write_json(ctx.artifact_path("cavity.json"), report);
  *ctx.out << report.dump(2) << '\n';
}

}  // namespace ersd::cli
