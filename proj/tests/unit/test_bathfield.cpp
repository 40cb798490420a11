#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ersd/bathfield.hpp"
#include "ersd/constants.hpp"
#include "helpers.hpp"

using namespace ersd;
using namespace ersd::bathfield;
using lattice::MomentState;
using lattice::SpinConfig;
using lattice::SpinKind;
using lattice::SpinSite;

namespace {

constexpr double kSi29 = 2.8047e-27;

Mat3 random_rotation(test::Gen& g) {
  // Unit quaternion from four normals.
  Eigen::Quaterniond q(g.normal(), g.normal(), g.normal(), g.normal());
  q.normalize();
  return q.toRotationMatrix();
}

Mat3 random_matrix(test::Gen& g, double scale) {
  Mat3 m;
  for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = scale * g.uniform(-1.0, 1.0);
  return m;
}

SpinSite nuclear_site(const Vec3& pos, const Vec3& dir) {
  SpinSite s;
  s.position_nm = pos;
  s.kind = SpinKind::nuclear_si29;
  s.direction = dir;
  return s;
}

}  // namespace

TEST_CASE("point dipole: closed-form examples") {
  CHECK(dipole_field(Vec3::Zero(), Vec3(1e-9, 0, 0)).norm() == 0.0);

  const Vec3 m(0, 0, kSi29);
  const Vec3 on_axis = dipole_field(m, Vec3(0, 0, 0.5e-9));
  const Vec3 side = dipole_field(m, Vec3(0.5e-9, 0, 0));
  const double oracle = 2.0 * 1e-7 * kSi29 / std::pow(0.5e-9, 3);
  CHECK(oracle == doctest::Approx(4.488e-6).epsilon(1e-4));
  CHECK(on_axis.z() == doctest::Approx(oracle).epsilon(1e-8));
  CHECK(std::abs(on_axis.x()) + std::abs(on_axis.y()) < 1e-20);
  CHECK(side.z() == doctest::Approx(-0.5 * oracle).epsilon(1e-8));
  CHECK(side.z() == doctest::Approx(-2.244e-6).epsilon(1e-3));

  CHECK_THROWS(dipole_field(m, Vec3::Zero()));
}

TEST_CASE("point dipole: antisymmetry, inversion and scaling") {
  test::Gen g(11);
  for (int i = 0; i < 200; ++i) {
    const Vec3 m(g.normal(), g.normal(), g.normal());
    const Vec3 r = 1e-9 * Vec3(g.normal(), g.normal(), g.normal());
    const Vec3 b = dipole_field(m, r);
    CHECK((dipole_field(-m, r) + b).norm() <= 1e-15 * b.norm());
    CHECK((dipole_field(m, -r) - b).norm() <= 1e-14 * b.norm());
    CHECK((dipole_field(m, 2.0 * r) - b / 8.0).norm() <= 1e-14 * b.norm());
    // Independent form: (mu0/4pi)(3 r (m.r) - m r^2) / r^5.
    const double rn = r.norm();
    const Vec3 ref = 1e-7 * (3.0 * r * m.dot(r) - m * rn * rn) / std::pow(rn, 5);
    CHECK((b - ref).norm() <= 1e-8 * ref.norm());
  }
}

TEST_CASE("moments") {
  Rng rng(3);
  const Vec3 up = nuclear_moment(MomentState::projected_up, Vec3::UnitZ(), rng);
  CHECK(up.z() == doctest::Approx(kSi29).epsilon(1e-4));
  CHECK(up.head<2>().norm() == 0.0);
  CHECK(nuclear_moment(MomentState::projected_down, Vec3::UnitZ(), rng) == -up);
  CHECK(constants::si29_moment == doctest::Approx(0.55529 * 5.0508e-27).epsilon(1e-4));

  Vec3 sum = Vec3::Zero();
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Vec3 m = nuclear_moment(MomentState::isotropic_random_unit_vector, Vec3::UnitZ(), rng);
    REQUIRE(m.norm() == doctest::Approx(constants::si29_moment).epsilon(1e-12));
    sum += m / constants::si29_moment;
  }
  // Each component of a uniform unit vector has variance 1/3.
  CHECK((sum / n).norm() < 3.0 * std::sqrt(1.0 / 3.0 / n) * std::sqrt(3.0));

  CHECK(er_moment(GTensor{Mat3::Zero()}, Vec3::UnitZ()).norm() == 0.0);
  const Vec3 er = er_moment(GTensor::isotropic(2.0), Vec3::UnitZ());
  CHECK(er.z() == doctest::Approx(9.274e-24).epsilon(1e-4));
  test::Gen g(4);
  const GTensor aniso{random_matrix(g, 10.0)};
  const Vec3 u = Vec3(g.normal(), g.normal(), g.normal()).normalized();
  CHECK(er_moment(aniso, -u) == -er_moment(aniso, u));
  CHECK(er_moment(aniso, u).norm() ==
        doctest::Approx(0.5 * constants::bohr_magneton * aniso.effective_g(u)).epsilon(1e-14));
}

TEST_CASE("g-tensor construction and validation") {
  const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9};
  const auto t = GTensor::from_row_major(v);
  CHECK(t.matrix(0, 1) == 2.0);
  CHECK(t.matrix(2, 0) == 7.0);
  CHECK_THROWS(GTensor::from_row_major(std::vector<double>{1, 2}));
  CHECK_THROWS(GTensor::from_row_major(std::vector<double>{1, 2, 3, 4, NAN, 6, 7, 8, 9}));
  CHECK(GTensor::diagonal(2, 5, 12).effective_g(Vec3::UnitY()) == 5.0);
  EmitterModel e;
  e.c2_axis = Vec3(0, 0, 2);
  CHECK_THROWS(e.validate());
}

TEST_CASE("total field: identities and mirror cancellation") {
  EmitterModel e;
  const Vec3 bext(0.01, -0.02, 0.1);
  CHECK(total_field({}, e, bext) == bext);
  CHECK(bath_field({}, e).norm() == 0.0);

  const SpinSite s = nuclear_site(Vec3(0.3, -0.4, 1.2), Vec3::UnitZ());
  const Vec3 single = bath_field(SpinConfig{s}, e);
  CHECK((single - dipole_field(constants::si29_moment * Vec3::UnitZ(), -1e-9 * s.position_nm)).norm() == 0.0);

  // Opposite moments at inverted positions cancel exactly.
  SpinSite up = nuclear_site(Vec3(0.7, 0.2, -0.5), Vec3::UnitZ());
  up.moment_state = MomentState::projected_up;
  SpinSite down = nuclear_site(-up.position_nm, -Vec3::UnitZ());
  down.moment_state = MomentState::projected_down;
  CHECK(bath_field(SpinConfig{up, down}, e).norm() < 1e-15);

  SpinSite er;
  er.kind = SpinKind::erbium_bath;
  er.position_nm = Vec3(10, 0, 0);
  er.direction = Vec3::UnitX();
  e.g_ground = GTensor::diagonal(2, 5, 12);
  CHECK((site_moment(er, e) - er_moment(e.g_ground, Vec3::UnitX())).norm() == 0.0);
}

TEST_CASE("total field is insensitive to summation order") {
  test::Gen g(21);
  SpinConfig spins;
  for (int i = 0; i < 10000; ++i) {
    const double r = std::pow(g.uniform(0.001, 1.0), 1.0 / 3.0) * 10.0 + 0.2;
    const Vec3 dir = Vec3(g.normal(), g.normal(), g.normal()).normalized();
    spins.push_back(nuclear_site(r * Vec3(g.normal(), g.normal(), g.normal()).normalized(), dir));
  }
  EmitterModel e;
  const Vec3 bext(0, 0, 0.1);
  const Vec3 ref = total_field(spins, e, bext);
  for (int trial = 0; trial < 5; ++trial) {
    for (std::size_t i = spins.size() - 1; i > 0; --i) std::swap(spins[i], spins[g.index(i + 1)]);
    const Vec3 b = total_field(spins, e, bext);
    CHECK((b - ref).norm() <= 1e-12 * ref.norm());
    CHECK(((b - bext) - (ref - bext)).norm() <= 1e-12 * (ref - bext).norm());
  }
}

TEST_CASE("optical shift: examples") {
  EmitterModel e;
  e.g_ground = GTensor::isotropic(7.0);
  e.g_excited = GTensor::isotropic(5.0);
  const double df = optical_shift(Vec3(0, 0.1, 0), e, Branch::lower_lower);
  CHECK(constants::bohr_hz_per_tesla == doctest::Approx(13.996e9).epsilon(1e-4));
  CHECK(df == doctest::Approx(-1.3996e9).epsilon(1e-4));
  CHECK(optical_shift(Vec3(0, 0.1, 0), e, Branch::upper_upper) == -df);
  CHECK(optical_shift(Vec3::Zero(), e) == 0.0);
  CHECK(optical_shift(Vec3(0, 0.05, 0), e) == doctest::Approx(0.5 * df).epsilon(1e-14));

  e.branch_selection = BranchSelection::average;
  CHECK_THROWS(optical_shift(Vec3(0, 0.1, 0), e));
  CHECK(e.branch_for(0) == Branch::lower_lower);
  CHECK(e.branch_for(1) == Branch::upper_upper);

  test::Gen g(8);
  for (int i = 0; i < 100; ++i) {
    EmitterModel same;
    same.g_ground = same.g_excited = GTensor{random_matrix(g, 15.0)};
    CHECK(optical_shift(Vec3(g.normal(), g.normal(), g.normal()), same) == 0.0);
  }
}

TEST_CASE("optical shift gradient matches finite differences") {
  test::Gen g(31);
  for (int i = 0; i < 200; ++i) {
    EmitterModel e;
    e.g_ground = GTensor{random_matrix(g, 10.0)};
    e.g_excited = GTensor{random_matrix(g, 10.0)};
    const Vec3 bext = 0.1 * Vec3(g.normal(), g.normal(), g.normal()).normalized();
    const Vec3 db = 1e-4 * 0.1 * Vec3(g.normal(), g.normal(), g.normal()).normalized();
    const double exact = optical_shift(bext + db, e) - optical_shift(bext, e);
    const Vec3 grad = optical_shift_gradient(bext, e, Branch::lower_lower);
    // Relative to the largest first-order change for a step of this size.
    CHECK(std::abs(exact - grad.dot(db)) <= 1e-3 * grad.norm() * db.norm());
  }
  // Isotropic tensors: only the parallel component enters at first order.
  EmitterModel iso;
  iso.g_ground = GTensor::isotropic(7.0);
  iso.g_excited = GTensor::isotropic(5.0);
  const Vec3 bext(0, 0, 0.1);
  const Vec3 db(3e-6, -4e-6, 5e-6);
  const double exact = optical_shift(bext + db, iso) - optical_shift(bext, iso);
  const double parallel = 0.5 * constants::bohr_hz_per_tesla * (5.0 - 7.0) * db.z();
  CHECK(std::abs(exact - parallel) <= 1e-3 * std::abs(parallel));
}

TEST_CASE("optical shift is rotation covariant") {
  test::Gen g(41);
  for (int trial = 0; trial < 20; ++trial) {
    EmitterModel e;
    e.g_ground = GTensor{random_matrix(g, 10.0)};
    e.g_excited = GTensor{random_matrix(g, 10.0)};
    SpinConfig spins;
    for (int i = 0; i < 50; ++i) {
      SpinSite s = nuclear_site(Vec3(g.normal(), g.normal(), g.normal()) * 2.0,
                                Vec3(g.normal(), g.normal(), g.normal()).normalized());
      if (i % 5 == 0) s.kind = SpinKind::erbium_bath;
      spins.push_back(s);
    }
    const Vec3 bext = 1e-3 * Vec3(g.normal(), g.normal(), g.normal());
    const double f0 = optical_shift(total_field(spins, e, bext), e);

    const Mat3 rot = random_rotation(g);
    EmitterModel er = e;
    er.g_ground.matrix = rot * e.g_ground.matrix * rot.transpose();
    er.g_excited.matrix = rot * e.g_excited.matrix * rot.transpose();
    er.c2_axis = rot * e.c2_axis;
    SpinConfig rs = spins;
    for (auto& s : rs) {
      s.position_nm = rot * s.position_nm;
      s.direction = rot * s.direction;
    }
    const double f1 = optical_shift(total_field(rs, er, rot * bext), er);
    CHECK(std::abs(f1 - f0) <= 1e-12 * std::abs(f0));
  }
}
