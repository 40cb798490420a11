#include "ersd/diffusionmc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ersd/constants.hpp"
#include "ersd/numeric.hpp"
#include "ersd/parallel.hpp"
#include "ersd/rng.hpp"

namespace ersd::diffusionmc {

namespace {

constexpr double kNm = 1e-9;
constexpr double kGaussianFwhmPerSigma = 2.3548200450309493;

lattice::LatticeRegion region_of(const EnsembleParams& p, double radius_nm) {
  lattice::LatticeRegion r = p.geometry;
  r.region_radius_nm = radius_nm;
  return r;
}

lattice::BathConfig realization_config(const EnsembleParams& p, std::size_t i) {
  lattice::BathConfig cfg = p.bath;
  cfg.seed = derive_seed(p.bath.seed, Stream::realization, i);
  return cfg;
}

double shift_of(const FieldVector& b, const bathfield::EmitterModel& emitter, std::size_t realization) {
  return bathfield::optical_shift(b, emitter, emitter.branch_for(realization));
}

std::uint64_t bootstrap_seed(const EnsembleParams& p) { return derive_seed(p.bath.seed, Stream::bootstrap, 0); }

}  // namespace

void EnsembleParams::validate() const {
  if (bath_kind == BathKind::nuclear)
    bath.validate_nuclear();
  else
    bath.validate_er();
  region_of(*this, bath.region_radius_nm).validate();
  emitter.validate();
  if (realizations < kMinRealizations) throw std::invalid_argument("realizations must be at least 100");
  if (!(b_ext_T >= 0.0) || !std::isfinite(b_ext_T)) throw std::invalid_argument("b_ext must be non-negative");
  if (!(b_ext_direction.norm() > 0.0) || !b_ext_direction.allFinite())
    throw std::invalid_argument("b_ext direction must be nonzero");
}

FieldVector EnsembleParams::b_ext() const { return b_ext_T * b_ext_direction.normalized(); }

std::vector<FieldVector> sample_bath_fields(const EnsembleParams& p) {
  p.validate();
  std::vector<FieldVector> fields(p.realizations, FieldVector::Zero());
  if (p.bath_kind == BathKind::nuclear) {
    if (p.bath.abundance == 0.0) return fields;
    const std::vector<Vec3> sites = lattice::build_lattice(region_of(p, p.bath.region_radius_nm));
    parallel_for(p.realizations, p.workers, [&](std::size_t i) {
      const auto spins = lattice::sample_nuclear_bath(sites, realization_config(p, i));
      fields[i] = bathfield::bath_field(spins, p.emitter, p.bath.nuclear_moment_JT);
    });
  } else {
    if (p.bath.er_concentration_cm3 == 0.0) return fields;
    const lattice::LatticeRegion geometry = region_of(p, p.bath.region_radius_nm);
    parallel_for(p.realizations, p.workers, [&](std::size_t i) {
      const auto spins = lattice::sample_er_bath(realization_config(p, i), geometry);
      fields[i] = bathfield::bath_field(spins, p.emitter, p.bath.nuclear_moment_JT);
    });
  }
  return fields;
}

std::vector<double> shift_samples(std::span<const FieldVector> bath_fields, const FieldVector& b_ext,
                                  const bathfield::EmitterModel& emitter) {
  std::vector<double> out(bath_fields.size());
  for (std::size_t i = 0; i < bath_fields.size(); ++i)
    out[i] = shift_of(b_ext + bath_fields[i], emitter, i) - shift_of(b_ext, emitter, i);
  return out;
}

SDResult linewidth_from_samples(std::vector<double> samples, lineshape::FwhmMethod method,
                                std::size_t bootstrap_replicates, std::uint64_t seed) {
  SDResult r;
  auto est = lineshape::fwhm_from_samples(samples, method);
  r.fwhm_hz = est.fwhm;
  r.degenerate = est.degenerate;
  r.histogram = std::move(est.histogram);
  r.fwhm_method = method;
  if (bootstrap_replicates >= 2 && !r.degenerate)
    r.mc_error_hz = lineshape::bootstrap_fwhm_error(samples, method, bootstrap_replicates, seed);
  r.shift_samples_hz = std::move(samples);
  return r;
}

SDResult ensemble_linewidth(const EnsembleParams& p) {
  const auto fields = sample_bath_fields(p);
  return linewidth_from_samples(shift_samples(fields, p.b_ext(), p.emitter), p.fwhm_method,
                                p.bootstrap_replicates, bootstrap_seed(p));
}

SDResult erer_linewidth(EnsembleParams p) {
  if (!(p.bath.er_concentration_cm3 > 0.0)) throw std::invalid_argument("er_concentration must be positive");
  p.bath_kind = BathKind::erbium;
  return ensemble_linewidth(p);
}

Direction direction_from_angles(double theta_deg, double phi_deg, std::string label) {
  const double t = theta_deg * constants::pi / 180.0;
  const double f = phi_deg * constants::pi / 180.0;
  return {theta_deg, phi_deg, Vec3(std::sin(t) * std::cos(f), std::sin(t) * std::sin(f), std::cos(t)),
          std::move(label)};
}

std::vector<Direction> sphere_grid(std::size_t n_theta, std::size_t n_phi) {
  if (n_theta < 2 || n_phi < 2) throw std::invalid_argument("sphere grid needs at least 2x2 points");
  std::vector<Direction> grid;
  grid.reserve(n_theta * n_phi);
  for (std::size_t i = 0; i < n_theta; ++i)
    for (std::size_t j = 0; j < n_phi; ++j)
      grid.push_back(direction_from_angles(180.0 * static_cast<double>(i) / static_cast<double>(n_theta - 1),
                                           360.0 * static_cast<double>(j) / static_cast<double>(n_phi - 1)));
  return grid;
}

std::vector<Direction> arc_grid(std::size_t points) {
  if (points < 2) throw std::invalid_argument("arc grid needs at least 2 points");
  std::vector<Direction> grid;
  grid.reserve(points);
  for (std::size_t i = 0; i < points; ++i)
    grid.push_back(direction_from_angles(180.0 * static_cast<double>(i) / static_cast<double>(points - 1), 45.0));
  return grid;
}

std::vector<double> log_spaced(double first, double last, std::size_t count) {
  if (!(first > 0.0) || !(last > first) || count < 2) throw std::invalid_argument("invalid log-spaced range");
  std::vector<double> out(count);
  const double step = std::log(last / first) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) out[i] = first * std::exp(step * static_cast<double>(i));
  out.back() = last;
  return out;
}

std::vector<double> default_field_magnitudes() { return log_spaced(1e-3, 0.3, 24); }

namespace {

void fill_point(SweepPoint& pt, std::span<const FieldVector> fields, const EnsembleParams& p) {
  try {
    const FieldVector b = pt.b_T * pt.direction.unit.normalized();
    const SDResult r = linewidth_from_samples(shift_samples(fields, b, p.emitter), p.fwhm_method,
                                              p.bootstrap_replicates, bootstrap_seed(p));
    pt.fwhm_hz = r.fwhm_hz;
    pt.mc_error_hz = r.mc_error_hz;
    if (r.degenerate) pt.message = "degenerate";
  } catch (const std::exception& e) {
    pt.ok = false;
    pt.message = e.what();
  }
}

}  // namespace

std::vector<SweepPoint> angle_sweep(const EnsembleParams& p, std::span<const Direction> grid) {
  if (grid.empty()) throw std::invalid_argument("angle grid is empty");
  for (const auto& d : grid)
    if (std::abs(d.unit.norm() - 1.0) > 1e-9) throw std::invalid_argument("grid directions must be unit vectors");
  const auto fields = sample_bath_fields(p);
  std::vector<SweepPoint> out(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out[k].direction = grid[k];
    out[k].b_T = p.b_ext_T;
  }
  parallel_for(out.size(), p.workers, [&](std::size_t k) { fill_point(out[k], fields, p); });
  return out;
}

std::vector<SweepPoint> field_sweep(const EnsembleParams& p, std::span<const Direction> directions,
                                    std::span<const double> magnitudes_T) {
  if (directions.empty() || magnitudes_T.empty()) throw std::invalid_argument("field sweep needs directions and magnitudes");
  for (std::size_t i = 0; i < magnitudes_T.size(); ++i) {
    if (!(magnitudes_T[i] >= 0.0)) throw std::invalid_argument("field magnitudes must be non-negative");
    if (i > 0 && magnitudes_T[i] < magnitudes_T[i - 1]) throw std::invalid_argument("field magnitudes must be ascending");
  }
  const auto fields = sample_bath_fields(p);
  std::vector<SweepPoint> out;
  out.reserve(directions.size() * magnitudes_T.size());
  for (const auto& d : directions)
    for (double b : magnitudes_T) {
      SweepPoint pt;
      pt.direction = d;
      pt.b_T = b;
      out.push_back(std::move(pt));
    }
  parallel_for(out.size(), p.workers, [&](std::size_t k) { fill_point(out[k], fields, p); });
  return out;
}

PairedComparison compare_fields(const EnsembleParams& p, const FieldVector& b_a, const FieldVector& b_b) {
  const auto fields = sample_bath_fields(p);
  const auto a = shift_samples(fields, b_a, p.emitter);
  const auto b = shift_samples(fields, b_b, p.emitter);
  PairedComparison c;
  c.fwhm_a_hz = lineshape::fwhm_from_samples(a, p.fwhm_method).fwhm;
  c.fwhm_b_hz = lineshape::fwhm_from_samples(b, p.fwhm_method).fwhm;
  const std::size_t reps = std::max<std::size_t>(p.bootstrap_replicates, 2);
  c.difference_error_hz = lineshape::paired_bootstrap_difference_error(a, b, p.fwhm_method, reps, bootstrap_seed(p));
  return c;
}

SingleEmitterSpectrum single_emitter_spectrum(std::uint64_t bath_seed, const EnsembleParams& p,
                                              const SingleEmitterOptions& options) {
  if (p.realizations == 0) throw std::invalid_argument("realizations must be positive");
  if (!(options.strong_threshold > 0.0)) throw std::invalid_argument("strong threshold must be positive");
  p.emitter.validate();
  const Vec3 axis = p.b_ext_direction.normalized();
  const FieldVector b = p.b_ext();

  lattice::SpinConfig spins;
  if (options.spins) {
    spins = *options.spins;
  } else {
    lattice::BathConfig cfg = p.bath;
    cfg.seed = bath_seed;
    if (p.bath_kind == BathKind::nuclear)
      spins = lattice::sample_nuclear_bath(lattice::build_lattice(region_of(p, cfg.region_radius_nm)), cfg);
    else
      spins = lattice::sample_er_bath(cfg, region_of(p, cfg.region_radius_nm));
  }

  // Field of each spin in its "up" state along the quantization axis.
  std::vector<Vec3> up(spins.size());
  std::vector<double> split(spins.size());
  for (std::size_t i = 0; i < spins.size(); ++i) {
    lattice::SpinSite s = spins[i];
    s.direction = axis;
    up[i] = bathfield::dipole_field(bathfield::site_moment(s, p.emitter, p.bath.nuclear_moment_JT),
                                    -kNm * s.position_nm);
    split[i] = std::abs(shift_of(b + up[i], p.emitter, 0) - shift_of(b - up[i], p.emitter, 0));
  }

  // Peel spins off in order of decreasing splitting while each one exceeds
  // the threshold times the Gaussian width of everything weaker than it.
  std::vector<std::size_t> order(spins.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return split[a] > split[b]; });
  std::vector<double> tail_var(order.size() + 1, 0.0);  // sum over order[k..] of (split / 2)^2
  for (std::size_t k = order.size(); k-- > 0;)
    tail_var[k] = tail_var[k + 1] + 0.25 * split[order[k]] * split[order[k]];
  std::size_t n_strong = 0;
  while (n_strong < order.size() &&
         split[order[n_strong]] > options.strong_threshold * kGaussianFwhmPerSigma * std::sqrt(tail_var[n_strong + 1]))
    ++n_strong;
  std::vector<bool> strong(spins.size(), false);
  for (std::size_t k = 0; k < n_strong; ++k) strong[order[k]] = true;
  const double far_fwhm = kGaussianFwhmPerSigma * std::sqrt(tail_var[n_strong]);

  SingleEmitterSpectrum out;
  out.far_fwhm_hz = far_fwhm;
  for (std::size_t i = 0; i < spins.size(); ++i)
    if (strong[i])
      out.strongly_coupled.push_back({spins[i].position_nm, spins[i].position_nm.norm(), split[i]});
  std::sort(out.strongly_coupled.begin(), out.strongly_coupled.end(),
            [](const ProximalSpin& x, const ProximalSpin& y) { return x.splitting_hz > y.splitting_hz; });

  out.shift_samples_hz.assign(p.realizations, 0.0);
  const bool projected = p.bath.orientation_model == lattice::OrientationModel::projected;
  parallel_for(p.realizations, p.workers, [&](std::size_t r) {
    Rng rng(derive_seed(bath_seed, Stream::projection, r));
    CompensatedVec3 acc;
    acc.add(b);
    if (projected) {
      std::uint64_t bits = 0;
      for (std::size_t i = 0; i < spins.size(); ++i) {
        if (i % 64 == 0) bits = rng();
        acc.add(((bits >> (i % 64)) & 1U) ? Vec3(up[i]) : Vec3(-up[i]));
      }
    } else {
      for (const auto& s0 : spins) {
        lattice::SpinSite s = s0;
        s.direction = rng.unit_vector();
        acc.add(bathfield::dipole_field(bathfield::site_moment(s, p.emitter, p.bath.nuclear_moment_JT),
                                        -kNm * s.position_nm));
      }
    }
    out.shift_samples_hz[r] = shift_of(acc.value(), p.emitter, r) - shift_of(b, p.emitter, r);
  });

  out.histogram = lineshape::make_histogram(out.shift_samples_hz);
  if (out.shift_samples_hz.size() >= lineshape::kMinHistogramSamples)
    out.line_fwhm_hz = lineshape::fwhm_from_samples(out.shift_samples_hz).fwhm;
  double resolution = far_fwhm;
  if (!(resolution > 0.0)) {
    const auto [lo, hi] = std::minmax_element(out.shift_samples_hz.begin(), out.shift_samples_hz.end());
    resolution = (*hi - *lo) / 100.0;
  }
  out.resolved_lines = count_resolved_lines(out.shift_samples_hz, resolution);
  return out;
}

std::size_t count_resolved_lines(std::span<const double> samples, double resolution_hz) {
  if (samples.empty()) return 0;
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  if (*lo_it == *hi_it || !(resolution_hz > 0.0)) return 1;
  double bin = resolution_hz / 4.0;
  const double span = *hi_it - *lo_it;
  if (span / bin > 1e6) bin = span / 1e6;
  const double lo = *lo_it - 2.0 * bin;
  const auto n = static_cast<std::size_t>(std::ceil((span + 4.0 * bin) / bin));
  std::vector<double> h(n, 0.0);
  for (double x : samples) h[std::min(n - 1, static_cast<std::size_t>((x - lo) / bin))] += 1.0;
  std::vector<double> s(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double l = i > 0 ? h[i - 1] : 0.0;
    const double r = i + 1 < n ? h[i + 1] : 0.0;
    s[i] = (l + h[i] + r) / 3.0;
  }
  const double top = *std::max_element(s.begin(), s.end());
  std::size_t lines = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double left_n = i > 0 ? s[i - 1] : 0.0;
    const double right_n = i + 1 < n ? s[i + 1] : 0.0;
    if (!(s[i] > left_n && s[i] >= right_n)) continue;
    // Prominence: height above the higher of the two minima reached before
    // meeting a taller peak (or the edge) on each side.
    // The histogram is zero beyond both edges.
    double left_min = 0.0;
    for (std::size_t j = i; j-- > 0;) {
      if (s[j] > s[i]) {
        left_min = s[i];
        for (std::size_t k = j + 1; k < i; ++k) left_min = std::min(left_min, s[k]);
        break;
      }
    }
    double right_min = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (s[j] > s[i]) {
        right_min = s[i];
        for (std::size_t k = i + 1; k < j; ++k) right_min = std::min(right_min, s[k]);
        break;
      }
    }
    if (s[i] - std::max(left_min, right_min) >= 0.1 * top) ++lines;
  }
  return lines;
}

ConvergenceReport convergence_check(const EnsembleParams& p, std::span<const double> radii_nm) {
  if (radii_nm.size() < 2) throw std::invalid_argument("convergence check needs at least 2 radii");
  for (std::size_t k = 0; k < radii_nm.size(); ++k) {
    if (!(radii_nm[k] > 0.0)) throw std::invalid_argument("radii must be positive");
    if (k > 0 && radii_nm[k] < radii_nm[k - 1]) throw std::invalid_argument("radii must be ascending");
  }
  EnsembleParams big = p;
  big.bath.region_radius_nm = radii_nm.back();
  big.validate();
  const std::size_t nr = radii_nm.size();
  std::vector<std::vector<FieldVector>> fields(nr, std::vector<FieldVector>(p.realizations, FieldVector::Zero()));

  auto accumulate = [&](std::size_t i, const lattice::SpinConfig& spins) {
    std::vector<CompensatedVec3> acc(nr);
    for (const auto& s : spins) {
      const double r = s.position_nm.norm();
      const Vec3 f = bathfield::dipole_field(bathfield::site_moment(s, p.emitter, p.bath.nuclear_moment_JT),
                                             -kNm * s.position_nm);
      for (std::size_t k = 0; k < nr; ++k)
        if (r <= radii_nm[k]) acc[k].add(f);
    }
    for (std::size_t k = 0; k < nr; ++k) fields[k][i] = acc[k].value();
  };
  if (p.bath_kind == BathKind::nuclear) {
    const auto sites = lattice::build_lattice(region_of(big, radii_nm.back()));
    parallel_for(p.realizations, p.workers, [&](std::size_t i) {
      accumulate(i, lattice::sample_nuclear_bath(sites, realization_config(big, i)));
    });
  } else {
    const auto geometry = region_of(big, radii_nm.back());
    parallel_for(p.realizations, p.workers, [&](std::size_t i) {
      accumulate(i, lattice::sample_er_bath(realization_config(big, i), geometry));
    });
  }

  ConvergenceReport report;
  for (std::size_t k = 0; k < nr; ++k) {
    ConvergenceRow row;
    row.radius_nm = radii_nm[k];
    row.fwhm_hz = lineshape::fwhm_from_samples(shift_samples(fields[k], p.b_ext(), p.emitter), p.fwhm_method).fwhm;
    if (k > 0) {
      const double prev = report.rows.back().fwhm_hz;
      row.relative_change = prev > 0.0 ? std::abs(row.fwhm_hz - prev) / prev : (row.fwhm_hz == prev ? 0.0 : 1.0);
    }
    report.rows.push_back(row);
  }
  for (std::size_t k = 0; k + 1 < nr; ++k)
    if (report.rows[k + 1].relative_change < 0.01) {
      report.converged_radius_nm = report.rows[k].radius_nm;
      break;
    }
  return report;
}

}  // namespace ersd::diffusionmc
