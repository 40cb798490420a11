#include <doctest.h>

#include <cmath>

#include "ersd/fitkit.hpp"
#include "ersd/synth.hpp"

using namespace ersd;
using namespace ersd::synth;

TEST_CASE("generators are deterministic per seed") {
  const auto a = echo(EchoTruth{}, 3);
  const auto b = echo(EchoTruth{}, 3);
  const auto c = echo(EchoTruth{}, 4);
  CHECK(a.data.amplitude == b.data.amplitude);
  CHECK(a.data.amplitude != c.data.amplitude);
  CHECK(a.truth == b.truth);
  CHECK(g2(G2Truth{.trials = 10000}, 1).data.trial_index == g2(G2Truth{.trials = 10000}, 1).data.trial_index);
}

TEST_CASE("noise-free datasets lie on the model") {
  EchoTruth et;
  et.noise = false;
  const auto e = echo(et, 1);
  for (std::size_t i = 0; i < e.data.delays_s.size(); ++i)
    CHECK(e.data.amplitude[i] == doctest::Approx(std::exp(-2.0 * e.data.delays_s[i] / et.t2_s)).epsilon(1e-14));

  SpectrumTruth st;
  st.noise = false;
  const auto s = spectrum(st, 1);
  for (std::size_t i = 0; i < s.data.counts.size(); ++i)
    CHECK(s.data.counts[i] ==
          doctest::Approx(fitkit::lorentzian_peak(s.data.detuning_hz[i], 0.0, 5.2e6, 1000.0, 5.0)).epsilon(1e-14));

  LifetimeTruth lt;
  lt.noise = false;
  const auto l = lifetime(lt, 1);
  for (std::size_t i = 0; i < l.data.counts.size(); ++i)
    CHECK(l.data.counts[i] == doctest::Approx(1000.0 * std::exp(-l.data.time_s[i] / 43e-6) + 5.0).epsilon(1e-14));
}

TEST_CASE("lifetime and detection-rate recovery") {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto d = lifetime(LifetimeTruth{}, seed);
    fitkit::DecayOptions o;
    o.weighting = fitkit::Weighting::poisson;
    const auto r = fitkit::fit_exponential_decay(d.data.time_s, d.data.counts, o);
    ok += r.converged && std::abs(r.value("tau") - 43e-6) < 3.0 * r.error("tau");
  }
  CHECK(ok >= 18);

  G2Truth t;
  t.trials = 400'000;
  const auto r = speclab::g2_pulsed(g2(t, 9).data);
  CHECK(std::abs(r.signal_probability - 0.009) < 3.0 * r.signal_probability_error);
}

TEST_CASE("photon source names round-trip") {
  for (auto s : {PhotonSource::single_emitter, PhotonSource::poissonian, PhotonSource::blinking})
    CHECK(photon_source_from_string(to_string(s)) == s);
  CHECK_THROWS(photon_source_from_string("laser"));
}
