#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "ersd/bathfield.hpp"
#include "ersd/fitkit.hpp"
#include "ersd/lattice.hpp"
#include "ersd/lineshape.hpp"

using namespace ersd;

static void BM_BathField(benchmark::State& state) {
  lattice::LatticeRegion region;
  region.region_radius_nm = static_cast<double>(state.range(0));
  const auto sites = lattice::build_lattice(region);
  lattice::BathConfig cfg;
  cfg.region_radius_nm = region.region_radius_nm;
  const auto spins = lattice::sample_nuclear_bath(sites, cfg);
  const bathfield::EmitterModel emitter;
  for (auto _ : state) benchmark::DoNotOptimize(bathfield::bath_field(spins, emitter));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(spins.size()));
}
BENCHMARK(BM_BathField)->Arg(5)->Arg(10);

static void BM_NuclearBathSample(benchmark::State& state) {
  lattice::LatticeRegion region;
  const auto sites = lattice::build_lattice(region);
  lattice::BathConfig cfg;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    cfg.seed = ++seed;
    benchmark::DoNotOptimize(lattice::sample_nuclear_bath(sites, cfg));
  }
}
BENCHMARK(BM_NuclearBathSample);

static void BM_HoltsmarkPdf(benchmark::State& state) {
  const double beta = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(lineshape::holtsmark_pdf(beta));
}
BENCHMARK(BM_HoltsmarkPdf)->Arg(1)->Arg(20);

static void BM_LorentzianFit(benchmark::State& state) {
  std::vector<double> x, y;
  for (int i = 0; i < 201; ++i) {
    x.push_back(-25e6 + 0.25e6 * i);
    y.push_back(fitkit::lorentzian_peak(x.back(), 0.3e6, 5.2e6, 1000.0, 10.0) + 3.0 * std::sin(i));
  }
  for (auto _ : state) benchmark::DoNotOptimize(fitkit::fit_lorentzian_peak(x, y));
}
BENCHMARK(BM_LorentzianFit);
BENCHMARK_MAIN();
