#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ersd/lattice.hpp"
#include "helpers.hpp"

using namespace ersd;
using namespace ersd::lattice;

namespace {

constexpr double kA = kSiliconLatticeConstantNm;

double cube(double x) { return x * x * x; }

// Residual of a crystal-frame position (units of a) from the nearest diamond site.
double diamond_residual(const Vec3& crystal) {
  double best = 1.0;
  for (const Vec3& b : diamond_basis()) {
    const Vec3 d = crystal - b;
    const Vec3 frac = d - d.array().round().matrix();
    best = std::min(best, frac.cwiseAbs().maxCoeff());
  }
  return best;
}

}  // namespace

TEST_CASE("empty region") {
  LatticeRegion r;
  r.region_radius_nm = 0.0;
  CHECK(build_lattice(r).empty());
}

TEST_CASE("conventional cell holds eight atoms") {
  CHECK(diamond_basis().size() == 8);
  const double density_nm3 = 8.0 / cube(kA);
  CHECK(density_nm3 == doctest::Approx(49.94).epsilon(1e-3));
  CHECK(density_nm3 * 1e21 == doctest::Approx(4.994e22).epsilon(1e-3));
}

TEST_CASE("10 nm region: count, ordering and lattice membership") {
  LatticeRegion r;
  r.region_radius_nm = 10.0;
  const auto sites = build_lattice(r);
  const double expected = 8.0 / cube(kA) * 4.0 / 3.0 * std::numbers::pi * 1000.0;
  CHECK(std::abs(static_cast<double>(sites.size()) / expected - 1.0) < 0.01);

  const Vec3 emitter = r.emitter_crystal_position_nm();
  double worst = 0.0;
  bool sorted = true;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    worst = std::max(worst, diamond_residual((sites[i] + emitter) / kA));
    if (i > 0 && sites[i].norm() < sites[i - 1].norm()) sorted = false;
    REQUIRE(sites[i].norm() <= 10.0);
  }
  CHECK(worst < 1e-9);
  CHECK(sorted);
}

TEST_CASE("smaller sphere is a prefix of a larger one") {
  LatticeRegion small, large;
  small.region_radius_nm = 2.0;
  large.region_radius_nm = 3.0;
  const auto a = build_lattice(small);
  const auto b = build_lattice(large);
  REQUIRE(a.size() < b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("nuclear occupancy") {
  LatticeRegion r;
  r.region_radius_nm = 10.0;
  const auto sites = build_lattice(r);
  BathConfig cfg;
  cfg.region_radius_nm = 10.0;

  cfg.abundance = 0.0;
  CHECK(sample_nuclear_bath(sites, cfg).empty());
  cfg.abundance = 1.0;
  CHECK(sample_nuclear_bath(sites, cfg).size() == sites.size());

  cfg.abundance = 0.047;
  const double n = static_cast<double>(sites.size());
  const double mean = n * 0.047;
  const double sigma = std::sqrt(n * 0.047 * 0.953);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    cfg.seed = seed;
    const auto spins = sample_nuclear_bath(sites, cfg);
    CHECK(std::abs(static_cast<double>(spins.size()) - mean) < 3.0 * sigma);
  }
  // Large abundance takes the per-site Bernoulli branch.
  cfg.abundance = 0.6;
  const auto dense = sample_nuclear_bath(sites, cfg);
  CHECK(std::abs(static_cast<double>(dense.size()) - 0.6 * n) < 4.0 * std::sqrt(n * 0.24));
}

TEST_CASE("occupancy fraction converges to the abundance") {
  LatticeRegion r;
  r.region_radius_nm = 6.0;
  const auto sites = build_lattice(r);
  BathConfig cfg;
  cfg.region_radius_nm = 6.0;
  test::Gen g(5);
  for (int trial = 0; trial < 20; ++trial) {
    cfg.abundance = g.uniform(0.001, 0.999);
    cfg.seed = g.next();
    const auto spins = sample_nuclear_bath(sites, cfg);
    const double n = static_cast<double>(sites.size());
    const double sigma = std::sqrt(n * cfg.abundance * (1 - cfg.abundance));
    CHECK(std::abs(static_cast<double>(spins.size()) - n * cfg.abundance) < 4.0 * sigma);
  }
}

TEST_CASE("bath sampling is deterministic and orientation models behave") {
  LatticeRegion r;
  r.region_radius_nm = 5.0;
  const auto sites = build_lattice(r);
  BathConfig cfg;
  cfg.region_radius_nm = 5.0;
  cfg.seed = 99;
  const auto a = sample_nuclear_bath(sites, cfg);
  const auto b = sample_nuclear_bath(sites, cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].position_nm == b[i].position_nm);
    CHECK(a[i].direction == b[i].direction);
    CHECK(std::abs(a[i].direction.norm() - 1.0) < 1e-12);
  }

  cfg.orientation_model = OrientationModel::projected;
  cfg.quantization_axis = Vec3(1, 1, 0);
  const Vec3 axis = Vec3(1, 1, 0).normalized();
  const auto p = sample_nuclear_bath(sites, cfg);
  REQUIRE(p.size() == a.size());
  int up = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(p[i].position_nm == a[i].position_nm);  // occupancy stream is independent of orientations
    const bool is_up = p[i].moment_state == MomentState::projected_up;
    CHECK((p[i].direction - (is_up ? axis : Vec3(-axis))).norm() < 1e-15);
    up += is_up;
  }
  CHECK(std::abs(up - static_cast<double>(p.size()) / 2) < 4.0 * std::sqrt(p.size() / 4.0));

  auto c = a;
  resample_orientations(c, OrientationModel::isotropic, Vec3::UnitZ(), 12345);
  bool changed = false;
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(c[i].position_nm == a[i].position_nm);
    changed |= c[i].direction != a[i].direction;
  }
  CHECK(changed);
}

TEST_CASE("Er continuum bath: Poisson count, isotropy and nearest neighbour") {
  BathConfig cfg;
  cfg.er_concentration_cm3 = 0.0;
  cfg.region_radius_nm = 500.0;
  CHECK(sample_er_bath(cfg).empty());
  CHECK(std::isinf(nearest_neighbor_distance_nm(sample_er_bath(cfg))));

  cfg.er_concentration_cm3 = 1e15;
  const double mean = 1e-6 * 4.0 / 3.0 * std::numbers::pi * cube(500.0);
  CHECK(mean == doctest::Approx(523.6).epsilon(1e-3));
  const int seeds = 300;
  double total = 0;
  Vec3 centroid = Vec3::Zero();
  for (int s = 0; s < seeds; ++s) {
    cfg.seed = static_cast<std::uint64_t>(s);
    const auto spins = sample_er_bath(cfg);
    total += static_cast<double>(spins.size());
    for (const auto& sp : spins) {
      REQUIRE(sp.position_nm.norm() <= 500.0);
      centroid += sp.position_nm;
    }
  }
  CHECK(std::abs(total / seeds - mean) < 3.0 * std::sqrt(mean / seeds));
  // Per-component variance of a uniform ball is R^2 / 5.
  const double sigma = 500.0 / std::sqrt(5.0) / std::sqrt(total);
  for (int d = 0; d < 3; ++d) CHECK(std::abs(centroid[d] / total) < 3.5 * sigma);

  // Mean nearest-neighbour distance of a Poisson process: Gamma(4/3) (4 pi n / 3)^(-1/3).
  cfg.region_radius_nm = 250.0;
  const double n_nm3 = 1e-6;
  const double oracle = std::tgamma(4.0 / 3.0) * std::pow(4.0 * std::numbers::pi * n_nm3 / 3.0, -1.0 / 3.0);
  CHECK(oracle == doctest::Approx(55.4).epsilon(0.002));
  double sum = 0, sum2 = 0;
  const int nn_seeds = 4000;
  for (int s = 0; s < nn_seeds; ++s) {
    cfg.seed = 1000 + static_cast<std::uint64_t>(s);
    const double d = nearest_neighbor_distance_nm(sample_er_bath(cfg));
    sum += d;
    sum2 += d * d;
  }
  const double m = sum / nn_seeds;
  const double sd = std::sqrt(sum2 / nn_seeds - m * m);
  CHECK(std::abs(m - oracle) < 3.0 * sd / std::sqrt(nn_seeds));
}

TEST_CASE("Er lattice substitution sits on conventional-cell centres") {
  BathConfig cfg;
  cfg.er_concentration_cm3 = 1e19;
  cfg.region_radius_nm = 30.0;
  cfg.er_placement = ErPlacement::lattice_substitution;
  LatticeRegion geom;
  geom.region_radius_nm = 30.0;
  const auto spins = sample_er_bath(cfg, geom);
  REQUIRE(!spins.empty());
  const Vec3 emitter = geom.emitter_crystal_position_nm();
  for (const auto& s : spins) {
    const Vec3 cell = (s.position_nm + emitter) / kA - Vec3(0.5, 0.5, 0.5);
    CHECK((cell - cell.array().round().matrix()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(s.position_nm.norm() <= 30.0);
  }
  const double expected = 1e19 * 1e-21 * 4.0 / 3.0 * std::numbers::pi * cube(30.0);
  CHECK(std::abs(static_cast<double>(spins.size()) - expected) < 4.0 * std::sqrt(expected));
}

TEST_CASE("invalid configurations are rejected") {
  LatticeRegion r;
  r.region_radius_nm = -1.0;
  CHECK_THROWS_AS(build_lattice(r), std::invalid_argument);
  r.region_radius_nm = 1.0;
  r.lattice_constant_nm = 0.0;
  CHECK_THROWS_AS(build_lattice(r), std::invalid_argument);

  BathConfig cfg;
  cfg.abundance = 1.5;
  const std::vector<Vec3> one{Vec3(1, 0, 0)};
  CHECK_THROWS_AS(sample_nuclear_bath(one, cfg), std::invalid_argument);
  cfg.abundance = 0.5;
  cfg.quantization_axis = Vec3::Zero();
  CHECK_THROWS_AS(sample_nuclear_bath(one, cfg), std::invalid_argument);
  BathConfig er;
  er.er_concentration_cm3 = -1.0;
  CHECK_THROWS_AS(sample_er_bath(er), std::invalid_argument);
}
