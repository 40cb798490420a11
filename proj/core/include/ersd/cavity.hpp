#pragma once

#include <span>

namespace ersd::cavity {

struct CavityParams {
  double resonance_frequency_hz = 0.0;
  double linewidth_hz = 0.0;
  double waist_um = 0.0;
  double effective_length_um = 0.0;
  double refractive_index = 3.48;
  double wavelength_um = 0.0;  // vacuum wavelength; c / frequency

  /// Fills the frequency from the vacuum wavelength.
  static CavityParams from_wavelength(double wavelength_um, double linewidth_hz, double waist_um,
                                      double effective_length_um, double refractive_index = 3.48);
  void validate() const;
};

struct EmitterPhotonics {
  double branching_ratio = 0.23;
  double orientation_factor = 1.0 / 3.0;
  double bulk_lifetime_s = 1.4e-4;

  void validate() const;
};

double q_from_linewidth(double frequency_hz, double linewidth_hz);

/// Standing-wave Gaussian mode volume (pi / 4) w0^2 L_eff in um^3.
double mode_volume(double waist_um, double effective_length_um);

/// P = (3 / (4 pi^2)) (lambda / n)^3 Q / V, lengths in um.
double ideal_purcell(double q, double volume_um3, double wavelength_um, double refractive_index);

double corrected_purcell(double p_ideal, const EmitterPhotonics& photonics);

/// P = T1,bulk / T1.
double purcell_from_lifetime(double t1_s, double bulk_lifetime_s);

/// Lifetime implied by a Purcell factor under the same convention.
double expected_lifetime(double purcell, double bulk_lifetime_s);

/// Source efficiency p / prod(losses).
double efficiency_budget(double p_detect_per_shot, std::span<const double> losses);

struct DesignReport {
  double q = 0.0;
  double mode_volume_um3 = 0.0;
  double p_ideal = 0.0;
  double p_theo = 0.0;
  double expected_lifetime_s = 0.0;
};

DesignReport design_report(const CavityParams& cavity, const EmitterPhotonics& photonics);

}  // namespace ersd::cavity
