#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "ersd/csv.hpp"
#include "helpers.hpp"

using namespace ersd;

TEST_CASE("shortest round-trip number formatting") {
  CHECK(csv::format_number(0.1) == "0.1");
  CHECK(csv::format_number(5.0) == "5");
  CHECK(csv::format_number(-2.5e-7) == "-2.5e-07");
  test::Gen g(1);
  for (int i = 0; i < 2000; ++i) {
    const double v = g.normal() * std::pow(10.0, g.uniform(-30, 30));
    CHECK(std::stod(csv::format_number(v)) == v);
  }
}

TEST_CASE("writer and reader round-trip") {
  std::ostringstream os;
  {
    csv::Writer w(os, {"label", "x", "n"});
    w.row({std::string("[001]"), 1.25, std::int64_t{3}});
    w.row({std::string("a,b"), -0.5, std::int64_t{-1}});
    CHECK_THROWS(w.row({1.0}));
  }
  std::istringstream is("# comment\n" + os.str() + "\n");
  const auto t = csv::read(is);
  REQUIRE(t.columns.size() == 3);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.column("label")[1] == "a,b");
  CHECK(t.numbers("x") == std::vector<double>{1.25, -0.5});
  CHECK(t.numbers("n") == std::vector<double>{3, -1});
  CHECK_THROWS_AS(t.index_of("missing"), std::out_of_range);
  CHECK_THROWS_AS(t.numbers("label"), std::invalid_argument);
}
