#include "ersd/cavity.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ersd/constants.hpp"

namespace ersd::cavity {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be positive");
}

void require_fraction(double v, const char* what) {
  if (!(v > 0.0 && v <= 1.0)) throw std::invalid_argument(std::string(what) + " must lie in (0, 1]");
}

}  // namespace

CavityParams CavityParams::from_wavelength(double wavelength_um, double linewidth_hz, double waist_um,
                                           double effective_length_um, double refractive_index) {
  require_positive(wavelength_um, "wavelength");
  CavityParams c;
  c.wavelength_um = wavelength_um;
  c.resonance_frequency_hz = constants::speed_of_light / (wavelength_um * 1e-6);
  c.linewidth_hz = linewidth_hz;
  c.waist_um = waist_um;
  c.effective_length_um = effective_length_um;
  c.refractive_index = refractive_index;
  c.validate();
  return c;
}

void CavityParams::validate() const {
  require_positive(resonance_frequency_hz, "resonance_frequency");
  require_positive(linewidth_hz, "linewidth");
  require_positive(waist_um, "waist");
  require_positive(effective_length_um, "effective_length");
  require_positive(refractive_index, "refractive_index");
  require_positive(wavelength_um, "wavelength");
  const double product = wavelength_um * 1e-6 * resonance_frequency_hz;
  if (std::abs(product / constants::speed_of_light - 1.0) > 1e-9)
    throw std::invalid_argument("wavelength and resonance_frequency are inconsistent");
}

void EmitterPhotonics::validate() const {
  require_fraction(branching_ratio, "branching_ratio");
  require_fraction(orientation_factor, "orientation_factor");
  require_positive(bulk_lifetime_s, "bulk_lifetime");
}

double q_from_linewidth(double frequency_hz, double linewidth_hz) {
  require_positive(frequency_hz, "frequency");
  require_positive(linewidth_hz, "linewidth");
  return frequency_hz / linewidth_hz;
}

double mode_volume(double waist_um, double effective_length_um) {
  require_positive(waist_um, "waist");
  require_positive(effective_length_um, "effective_length");
  return 0.25 * constants::pi * waist_um * waist_um * effective_length_um;
}

double ideal_purcell(double q, double volume_um3, double wavelength_um, double refractive_index) {
  require_positive(q, "Q");
  require_positive(volume_um3, "mode volume");
  require_positive(wavelength_um, "wavelength");
  require_positive(refractive_index, "refractive_index");
  const double l = wavelength_um / refractive_index;
  return 3.0 / (4.0 * constants::pi * constants::pi) * l * l * l * q / volume_um3;
}

double corrected_purcell(double p_ideal, const EmitterPhotonics& photonics) {
  photonics.validate();
  return p_ideal * photonics.branching_ratio * photonics.orientation_factor;
}

double purcell_from_lifetime(double t1_s, double bulk_lifetime_s) {
  require_positive(t1_s, "t1");
  require_positive(bulk_lifetime_s, "bulk_lifetime");
  return bulk_lifetime_s / t1_s;
}

double expected_lifetime(double purcell, double bulk_lifetime_s) {
  require_positive(purcell, "Purcell factor");
  require_positive(bulk_lifetime_s, "bulk_lifetime");
  return bulk_lifetime_s / purcell;
}

double efficiency_budget(double p_detect_per_shot, std::span<const double> losses) {
  require_fraction(p_detect_per_shot, "detection probability");
  double transmission = 1.0;
  for (double l : losses) {
    require_fraction(l, "loss factor");
    transmission *= l;
  }
  return p_detect_per_shot / transmission;
}

DesignReport design_report(const CavityParams& cavity, const EmitterPhotonics& photonics) {
  cavity.validate();
  photonics.validate();
  DesignReport r;
  r.q = q_from_linewidth(cavity.resonance_frequency_hz, cavity.linewidth_hz);
  r.mode_volume_um3 = mode_volume(cavity.waist_um, cavity.effective_length_um);
  r.p_ideal = ideal_purcell(r.q, r.mode_volume_um3, cavity.wavelength_um, cavity.refractive_index);
  r.p_theo = corrected_purcell(r.p_ideal, photonics);
  r.expected_lifetime_s = expected_lifetime(r.p_theo, photonics.bulk_lifetime_s);
  return r;
}

}  // namespace ersd::cavity
