#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "ersd/lineshape.hpp"
#include "ersd/rng.hpp"
#include "helpers.hpp"

using namespace ersd;
using namespace ersd::lineshape;

namespace {

constexpr double kPi = std::numbers::pi;

// Convergent power series from expanding sin(beta y); usable for small beta.
double holtsmark_small(double beta) {
  double sum = 0.0;
  for (int j = 0; j < 40; ++j) {
    const double term = std::pow(beta, 2 * j + 2) / std::tgamma(2 * j + 2.0) * (2.0 / 3.0) *
                        std::tgamma(4.0 * j / 3.0 + 2.0);
    sum += (j % 2 == 0 ? term : -term);
  }
  return 2.0 / kPi * sum;
}

// Asymptotic series from expanding exp(-y^{3/2}); coefficient of beta^{-1-3k/2}.
double tail_coefficient(int k) {
  return 2.0 / kPi * (k % 2 == 0 ? 1.0 : -1.0) / std::tgamma(k + 1.0) * std::tgamma(2.0 + 1.5 * k) *
         std::sin(kPi * (1.0 + 0.75 * k));
}

double holtsmark_tail(double beta) {
  double sum = 0.0;
  for (int k = 1; k <= 6; ++k) sum += tail_coefficient(k) * std::pow(beta, -1.0 - 1.5 * k);
  return sum;
}

double component_small(double x) {
  double sum = 0.0;
  for (int j = 0; j < 40; ++j) {
    const double term = std::pow(x, 2 * j) / std::tgamma(2 * j + 1.0) * (2.0 / 3.0) *
                        std::tgamma((2.0 * j + 1.0) * 2.0 / 3.0);
    sum += (j % 2 == 0 ? term : -term);
  }
  return sum / kPi;
}

template <class F>
double simpson(F f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

std::vector<double> lorentz_samples(std::size_t n, double gamma, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = gamma * std::tan(kPi * (rng.uniform_open() - 0.5));
  return v;
}

std::vector<double> gauss_samples(std::size_t n, double sigma, double offset, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = offset + sigma * rng.normal();
  return v;
}

}  // namespace

TEST_CASE("Holtsmark density against series oracles") {
  CHECK(holtsmark_pdf(0.0) == 0.0);
  CHECK_THROWS_AS(holtsmark_pdf(-1.0), std::invalid_argument);
  for (double b : {0.05, 0.1, 0.3, 0.7, 1.0, 1.5, 2.0}) {
    CHECK(holtsmark_pdf(b) == doctest::Approx(holtsmark_small(b)).epsilon(1e-7));
  }
  for (double b : {20.0, 30.0, 40.0, 80.0}) {
    CHECK(holtsmark_pdf(b) == doctest::Approx(holtsmark_tail(b)).epsilon(1e-5));
  }
  const double small = 4.0 / (3.0 * kPi) * 0.05 * 0.05;
  CHECK(std::abs(holtsmark_pdf(0.05) / small - 1.0) < 0.01);
  CHECK(holtsmark_pdf(1.0) == doctest::Approx(0.2712208070).epsilon(1e-7));
}

TEST_CASE("Holtsmark tail exponent") {
  // Local slope of log H between 100 and 200 approaches -5/2.
  const double slope = std::log(holtsmark_pdf(200.0) / holtsmark_pdf(100.0)) / std::log(2.0);
  CHECK(slope == doctest::Approx(-2.5).epsilon(0.02));
  // At 20/40 the first correction term is still visible; the series oracle captures it.
  const double ratio = holtsmark_pdf(40.0) / holtsmark_pdf(20.0);
  CHECK(ratio == doctest::Approx(holtsmark_tail(40.0) / holtsmark_tail(20.0)).epsilon(1e-5));
}

TEST_CASE("Holtsmark normalization") {
  const double cut = 40.0;
  const double body = simpson([](double b) { return holtsmark_pdf(b); }, 0.0, cut, 4000);
  double tail = 0.0;
  for (int k = 1; k <= 6; ++k) tail += tail_coefficient(k) * std::pow(cut, -1.5 * k) / (1.5 * k);
  CHECK(std::abs(body + tail - 1.0) < 1e-6);
  for (double b = 0.0; b < 60.0; b += 0.37) CHECK(holtsmark_pdf(b) >= 0.0);
}

TEST_CASE("line models normalize and report widths") {
  CHECK(holtsmark_component_pdf(0.0) == doctest::Approx(2.0 / (3.0 * kPi) * std::tgamma(2.0 / 3.0)).epsilon(1e-9));
  for (double x : {0.2, 0.5, 1.0, 1.5}) {
    CHECK(holtsmark_component_pdf(x) == doctest::Approx(component_small(x)).epsilon(1e-7));
    CHECK(holtsmark_component_pdf(-x) == holtsmark_component_pdf(x));
  }
  for (LineKind kind : {LineKind::lorentzian, LineKind::gaussian, LineKind::holtsmark}) {
    LineModel m{kind, 2.5e6, 1e6};
    const double c = m.center;
    const double w = m.scale;
    const double body = simpson([&](double f) { return m.density(f); }, c - 40 * w, c + 40 * w, 8000);
    double tail = 0.0;
    // Analytic tails beyond 40 scale units.
    if (kind == LineKind::lorentzian) tail = 2.0 * (0.5 - std::atan(40.0) / kPi);
    if (kind == LineKind::holtsmark) {
      // Component tail ~ (3/4) Gamma(5/2) sin(3 pi/4) / pi |x|^{-5/2}; its integral beyond 40 per side.
      tail = 2.0 * (1.5 * std::tgamma(1.5) * std::sin(0.75 * kPi) / kPi) * std::pow(40.0, -1.5) / 1.5;
    }
    CHECK(std::abs(body + tail - 1.0) < (kind == LineKind::holtsmark ? 5e-5 : 1e-6));
    const double half = 0.5 * m.density(c);
    CHECK(m.density(c + 0.5 * m.fwhm()) == doctest::Approx(half).epsilon(1e-9));
  }
  CHECK((LineModel{LineKind::lorentzian, 1.0, 0.0}.fwhm()) == 2.0);
  CHECK((LineModel{LineKind::gaussian, 1.0, 0.0}.fwhm()) == doctest::Approx(2.3548200450).epsilon(1e-10));
  CHECK_THROWS((LineModel{LineKind::gaussian, 0.0, 0.0}.density(0.0)));
}

TEST_CASE("Holtsmark and gradient widths scale with density") {
  CHECK(holtsmark_width(0.0, 1.0) == 0.0);
  CHECK(holtsmark_width(2e16, 3.0) / holtsmark_width(1e16, 3.0) == doctest::Approx(std::cbrt(4.0)).epsilon(1e-14));
  CHECK(holtsmark_width(1e17, 3.0) / holtsmark_width(1e16, 3.0) == doctest::Approx(4.6416).epsilon(1e-4));
  // E0 = 2.603 e n^{2/3} / (4 pi eps0) with n in m^-3.
  const double e0 = 2.0 * kPi * std::pow(4.0 / 15.0, 2.0 / 3.0);
  CHECK(e0 == doctest::Approx(2.603).epsilon(1e-3));
  CHECK(gradient_broadening_width(0.0, 5.0) == 0.0);
  CHECK(gradient_broadening_width(2e15, 5e-9) == 2.0 * gradient_broadening_width(1e15, 5e-9));
  CHECK(gradient_broadening_width(1e16, 5e-9) / 1e16 ==
        doctest::Approx(gradient_broadening_width(1e15, 5e-9) / 1e15).epsilon(1e-15));
  CHECK_THROWS(holtsmark_width(-1.0, 1.0));
}

TEST_CASE("scaling fit") {
  const std::vector<double> rho{1e14, 1e15, 3e15, 1e16, 1e17};
  std::vector<double> w;
  for (double r : rho) w.push_back(std::pow(r, 2.0 / 3.0));
  const auto exact = scaling_fit(rho, w);
  CHECK(exact.exponent == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  CHECK(exact.residual < 1e-9);

  // Independent least-squares oracle on the measured points.
  const std::vector<double> d{1e15, 1e16, 2e17};
  const std::vector<double> width{4.0, 20.0, 100.0};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double x = std::log(d[i]), y = std::log(width[i]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  const double slope = (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
  const auto fit = scaling_fit(d, width);
  CHECK(fit.exponent == doctest::Approx(slope).epsilon(1e-12));
  CHECK(std::abs(fit.exponent - 0.60) <= 0.02);

  test::Gen g(2);
  for (int t = 0; t < 50; ++t) {
    const double k = std::exp(g.uniform(-10, 10));
    std::vector<double> scaled;
    for (double x : width) scaled.push_back(k * x);
    CHECK(std::abs(scaling_fit(d, scaled).exponent - fit.exponent) < 1e-12);
  }

  CHECK_THROWS(scaling_fit(std::vector<double>{1e15, 1e15}, std::vector<double>{1.0, 2.0}));
  CHECK_THROWS(scaling_fit(std::vector<double>{1e15, -1e16}, std::vector<double>{1.0, 2.0}));
  CHECK_THROWS(scaling_fit(std::vector<double>{1e15}, std::vector<double>{1.0}));

  const std::vector<ScalingPoint> pts{{1e15, 4.0, false}, {1e16, 20.0, false}, {2e17, 100.0, true}};
  const auto rep = scaling_report(pts);
  CHECK(rep.all_points.exponent == doctest::Approx(fit.exponent).epsilon(1e-12));
  REQUIRE(rep.uncensored.has_value());
  CHECK(rep.uncensored->exponent == doctest::Approx(std::log10(5.0)).epsilon(1e-12));
}

TEST_CASE("FWHM from samples") {
  const auto lor = lorentz_samples(1'000'000, 1e6, 1);
  CHECK(std::abs(fwhm_from_samples(lor).fwhm / 2e6 - 1.0) < 0.02);
  const auto gau = gauss_samples(1'000'000, 1e6, 0.0, 2);
  CHECK(std::abs(fwhm_from_samples(gau).fwhm / 2.35482e6 - 1.0) < 0.02);

  const auto small = gauss_samples(20000, 1.0, 0.0, 3);
  const double hist = fwhm_from_samples(small, FwhmMethod::interpolated_histogram).fwhm;
  const auto gfit = fwhm_from_samples(small, FwhmMethod::gaussian_fit);
  CHECK(gfit.fit_converged);
  CHECK(std::abs(hist / gfit.fwhm - 1.0) < 0.05);
  const auto lfit = fwhm_from_samples(lorentz_samples(20000, 1.0, 4), FwhmMethod::lorentzian_fit);
  CHECK(std::abs(lfit.fwhm / 2.0 - 1.0) < 0.1);

  // Translation invariance: the samples are median-centred first.
  auto shifted = small;
  for (auto& x : shifted) x += 1e3;
  CHECK(fwhm_from_samples(shifted).fwhm == doctest::Approx(hist).epsilon(1e-6));

  const std::vector<double> flat(500, 3.0);
  const auto deg = fwhm_from_samples(flat);
  CHECK(deg.degenerate);
  CHECK(deg.fwhm == 0.0);
  CHECK_THROWS_AS(fwhm_from_samples(std::vector<double>(50, 1.0)), std::invalid_argument);
}

TEST_CASE("histogram and bootstrap") {
  const auto s = gauss_samples(10000, 1.0, 0.0, 5);
  const auto h = make_histogram(s);
  double total = 0;
  for (double c : h.counts) total += c;
  CHECK(total == 10000.0);
  CHECK(h.bin_width > 0.0);

  const double err = bootstrap_fwhm_error(s, FwhmMethod::interpolated_histogram, 50, 9);
  CHECK(err > 0.0);
  CHECK(err < 0.1);
  CHECK(err == bootstrap_fwhm_error(s, FwhmMethod::interpolated_histogram, 50, 9));
  CHECK(paired_bootstrap_difference_error(s, s, FwhmMethod::interpolated_histogram, 20, 1) == 0.0);
  CHECK_THROWS(bootstrap_fwhm_error(s, FwhmMethod::interpolated_histogram, 1, 9));
}
