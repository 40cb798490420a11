#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "ersd/diffusionmc.hpp"
#include "helpers.hpp"

using namespace ersd;
using namespace ersd::diffusionmc;

namespace {

EnsembleParams small_params() {
  EnsembleParams p;
  p.bath.region_radius_nm = 4.0;
  p.bath.seed = 17;
  p.emitter.g_ground = bathfield::GTensor::diagonal(2, 5, 12);
  p.emitter.g_excited = bathfield::GTensor::diagonal(1, 3.5, 9);
  p.realizations = 2000;
  p.bootstrap_replicates = 20;
  return p;
}

lattice::SpinSite site_at(const Vec3& pos) {
  lattice::SpinSite s;
  s.position_nm = pos;
  return s;
}

}  // namespace

TEST_CASE("parameter validation") {
  auto p = small_params();
  p.realizations = 99;
  CHECK_THROWS(p.validate());
  p = small_params();
  p.b_ext_T = -1.0;
  CHECK_THROWS(p.validate());
  p = small_params();
  p.bath.er_concentration_cm3 = 0.0;
  CHECK_THROWS(erer_linewidth(p));
}

TEST_CASE("trivial baths give zero width") {
  auto p = small_params();
  p.bath.abundance = 0.0;
  const auto r = ensemble_linewidth(p);
  CHECK(std::all_of(r.shift_samples_hz.begin(), r.shift_samples_hz.end(), [](double x) { return x == 0.0; }));
  CHECK(r.fwhm_hz == 0.0);
  CHECK(r.degenerate);

  p = small_params();
  p.emitter.g_excited = p.emitter.g_ground;
  const auto same = ensemble_linewidth(p);
  CHECK(std::all_of(same.shift_samples_hz.begin(), same.shift_samples_hz.end(), [](double x) { return x == 0.0; }));
  for (const auto& pt : angle_sweep(p, arc_grid(7))) CHECK(pt.fwhm_hz == 0.0);
}

TEST_CASE("ensemble result invariants") {
  const auto p = small_params();
  const auto r = ensemble_linewidth(p);
  REQUIRE(r.shift_samples_hz.size() == p.realizations);
  double total = 0;
  for (double c : r.histogram.counts) total += c;
  CHECK(total == static_cast<double>(p.realizations));
  CHECK(r.fwhm_hz > 0.0);
  CHECK(r.mc_error_hz > 0.0);
  std::vector<double> s = r.shift_samples_hz;
  std::sort(s.begin(), s.end());
  CHECK(std::abs(s[s.size() / 2]) <= r.fwhm_hz);

  // Centring invariance.
  auto shifted = r.shift_samples_hz;
  for (auto& x : shifted) x += 12345.0;
  CHECK(linewidth_from_samples(shifted, p.fwhm_method, 0, 1).fwhm_hz == doctest::Approx(r.fwhm_hz).epsilon(1e-6));
}

TEST_CASE("results do not depend on the worker count") {
  auto p = small_params();
  p.realizations = 600;
  const auto grid = arc_grid(5);
  p.workers = 1;
  const auto a = angle_sweep(p, grid);
  const auto sa = single_emitter_spectrum(5, p);
  p.workers = 7;
  const auto b = angle_sweep(p, grid);
  const auto sb = single_emitter_spectrum(5, p);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].fwhm_hz == b[i].fwhm_hz);
    CHECK(a[i].mc_error_hz == b[i].mc_error_hz);
  }
  CHECK(sa.shift_samples_hz == sb.shift_samples_hz);
}

TEST_CASE("grids") {
  const auto sphere = sphere_grid(17, 33);
  CHECK(sphere.size() == 17 * 33);
  CHECK(sphere.front().theta_deg == 0.0);
  CHECK(sphere.back().theta_deg == 180.0);
  CHECK(sphere.back().phi_deg == 360.0);
  for (const auto& d : sphere) CHECK(std::abs(d.unit.norm() - 1.0) < 1e-12);

  const auto arc = arc_grid(181);
  CHECK(arc.size() == 181);
  CHECK((arc.front().unit - Vec3::UnitZ()).norm() < 1e-12);
  CHECK((arc.back().unit + Vec3::UnitZ()).norm() < 1e-12);
  CHECK((arc[90].unit - Vec3(1, 1, 0).normalized()).norm() < 1e-12);

  const auto mags = log_spaced(1e-3, 0.3, 24);
  CHECK(mags.front() == 1e-3);
  CHECK(mags.back() == doctest::Approx(0.3).epsilon(1e-15));
  for (std::size_t i = 1; i + 1 < mags.size(); ++i)
    CHECK(mags[i] / mags[i - 1] == doctest::Approx(mags[i + 1] / mags[i]).epsilon(1e-12));
  CHECK(default_field_magnitudes().size() == 24);
  CHECK_THROWS(log_spaced(0.0, 1.0, 5));
  CHECK_THROWS(sphere_grid(1, 5));
}

TEST_CASE("opposite field directions give the same width") {
  auto p = small_params();
  p.realizations = 3000;
  const std::vector<Direction> grid{direction_from_angles(60, 30), direction_from_angles(120, 210)};
  const auto pts = angle_sweep(p, grid);
  const double err = std::hypot(pts[0].mc_error_hz, pts[1].mc_error_hz);
  CHECK(std::abs(pts[0].fwhm_hz - pts[1].fwhm_hz) < 3.0 * err);
}

TEST_CASE("field sweep is paired and ordered") {
  auto p = small_params();
  const std::vector<Direction> dirs{direction_from_angles(0, 0, "[001]")};
  const std::vector<double> mags{0.01, 0.3};
  const auto pts = field_sweep(p, dirs, mags);
  REQUIRE(pts.size() == 2);
  CHECK(pts[0].direction.label == "[001]");
  CHECK(pts[1].fwhm_hz <= pts[0].fwhm_hz + 3.0 * std::hypot(pts[0].mc_error_hz, pts[1].mc_error_hz));
  CHECK_THROWS(field_sweep(p, dirs, std::vector<double>{0.3, 0.01}));
}

TEST_CASE("synthetic single spin splits into two lines separated by its splitting") {
  auto p = small_params();
  p.realizations = 4000;
  p.bath.orientation_model = lattice::OrientationModel::projected;
  SingleEmitterOptions opt;
  const Vec3 pos(0.4, 0.3, 0.9);
  opt.spins = lattice::SpinConfig{site_at(pos)};
  const auto s = single_emitter_spectrum(1, p, opt);

  // Oracle: field of the spin in its up state along B.
  const Vec3 m = p.bath.nuclear_moment_JT * p.b_ext_direction.normalized();
  const Vec3 bup = bathfield::dipole_field(m, -1e-9 * pos);
  const FieldVector b = p.b_ext();
  const double split = std::abs(bathfield::optical_shift(b + bup, p.emitter) - bathfield::optical_shift(b - bup, p.emitter));

  const std::set<double> values(s.shift_samples_hz.begin(), s.shift_samples_hz.end());
  REQUIRE(values.size() == 2);
  CHECK(*values.rbegin() - *values.begin() == doctest::Approx(split).epsilon(1e-9));
  REQUIRE(s.strongly_coupled.size() == 1);
  CHECK(s.strongly_coupled[0].splitting_hz == doctest::Approx(split).epsilon(1e-12));
  CHECK(s.resolved_lines == 2);
  CHECK(s.far_fwhm_hz == 0.0);
}

TEST_CASE("two strong spins give four lines, a weak cloud gives one") {
  auto p = small_params();
  p.realizations = 8000;
  p.bath.orientation_model = lattice::OrientationModel::projected;
  SingleEmitterOptions opt;
  lattice::SpinConfig two{site_at(Vec3(0.3, 0.2, 0.8)), site_at(Vec3(-1.1, 0.7, 0.4))};
  opt.spins = two;
  const auto s2 = single_emitter_spectrum(2, p, opt);
  CHECK(s2.strongly_coupled.size() == 2);
  CHECK(s2.resolved_lines == 4);

  // Many comparable weak spins far from the emitter: quasi-Gaussian single line.
  test::Gen g(3);
  lattice::SpinConfig cloud;
  for (int i = 0; i < 400; ++i) cloud.push_back(site_at(6.0 * Vec3(g.normal(), g.normal(), g.normal()).normalized()));
  opt.spins = cloud;
  const auto s0 = single_emitter_spectrum(3, p, opt);
  CHECK(s0.strongly_coupled.empty());
  CHECK(s0.resolved_lines == 1);
  // Far-bath Gaussian estimate tracks the measured line width.
  CHECK(s0.line_fwhm_hz == doctest::Approx(s0.far_fwhm_hz).epsilon(0.1));
}

TEST_CASE("resolved line counter") {
  std::vector<double> v(1000, 0.0);
  CHECK(count_resolved_lines(v, 1.0) == 1);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (i % 2 ? 10.0 : -10.0) + 1e-3 * static_cast<double>(i % 7);
  CHECK(count_resolved_lines(v, 1.0) == 2);
  CHECK(count_resolved_lines(std::vector<double>{}, 1.0) == 0);
}

TEST_CASE("convergence check") {
  auto p = small_params();
  p.realizations = 500;
  const std::vector<double> same{3.0, 3.0};
  const auto r = convergence_check(p, same);
  CHECK(r.rows[0].fwhm_hz == r.rows[1].fwhm_hz);
  REQUIRE(r.converged_radius_nm.has_value());

  // The region's outer shells add little.
  p.realizations = 1500;
  const std::vector<double> radii{2.0, 5.0, 7.0};
  const auto rep = convergence_check(p, radii);
  CHECK(rep.rows[2].relative_change < 0.03);
  CHECK_THROWS(convergence_check(p, std::vector<double>{5.0, 2.0}));
}

TEST_CASE("Er bath linewidth") {
  auto p = small_params();
  p.bath_kind = BathKind::erbium;
  p.bath.er_concentration_cm3 = 1e15;
  p.bath.region_radius_nm = 1000.0;
  p.realizations = 1500;
  const auto r = erer_linewidth(p);
  CHECK(r.fwhm_hz > 100.0);
  CHECK(r.fwhm_hz < 5000.0);
}
