#include <doctest.h>

#include <algorithm>
#include <vector>

#include "ersd/numeric.hpp"
#include "helpers.hpp"

TEST_CASE("compensated sum recovers cancellation") {
  ersd::CompensatedSum s;
  s.add(1e16);
  s.add(1.0);
  s.add(-1e16);
  CHECK(s.value() == 1.0);
}

TEST_CASE("compensated sum is order independent on random data") {
  test::Gen g(3);
  std::vector<double> v;
  for (int i = 0; i < 10000; ++i) v.push_back(g.normal() * std::pow(10.0, g.uniform(-8, 8)));
  ersd::CompensatedSum a;
  for (double x : v) a.add(x);
  for (int trial = 0; trial < 5; ++trial) {
    for (std::size_t i = v.size() - 1; i > 0; --i) std::swap(v[i], v[g.index(i + 1)]);
    ersd::CompensatedSum b;
    for (double x : v) b.add(x);
    CHECK(std::abs(a.value() - b.value()) <= 1e-12 * std::abs(a.value()) + 1e-300);
  }
}

TEST_CASE("type-7 quantile") {
  const std::vector<double> v{1, 2, 3, 4, 5};
  CHECK(ersd::sorted_quantile(v, 0.0) == 1.0);
  CHECK(ersd::sorted_quantile(v, 1.0) == 5.0);
  CHECK(ersd::sorted_quantile(v, 0.5) == 3.0);
  CHECK(ersd::sorted_quantile(v, 0.1) == doctest::Approx(1.4));
  CHECK(ersd::median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK_THROWS_AS(ersd::sorted_quantile(std::vector<double>{}, 0.5), std::invalid_argument);
}

TEST_CASE("mean and sample standard deviation") {
  const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
  CHECK(ersd::mean(v) == 5.0);
  CHECK(ersd::sample_stddev(v) == doctest::Approx(std::sqrt(32.0 / 7.0)));
  CHECK(ersd::sample_stddev(std::vector<double>{3.0}) == 0.0);
}
