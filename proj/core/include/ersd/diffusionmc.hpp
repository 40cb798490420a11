#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ersd/bathfield.hpp"
#include "ersd/lattice.hpp"
#include "ersd/lineshape.hpp"
#include "ersd/types.hpp"

namespace ersd::diffusionmc {

enum class BathKind { nuclear, erbium };

inline constexpr std::size_t kMinRealizations = 100;

struct EnsembleParams {
  lattice::BathConfig bath;
  lattice::LatticeRegion geometry;  // lattice constant, emitter offset; radius comes from bath
  bathfield::EmitterModel emitter;
  BathKind bath_kind = BathKind::nuclear;
  double b_ext_T = 0.1;
  Vec3 b_ext_direction{0.0, 0.0, 1.0};
  std::size_t realizations = 30'000;
  lineshape::FwhmMethod fwhm_method = lineshape::FwhmMethod::interpolated_histogram;
  std::size_t bootstrap_replicates = 50;  // 0 disables the MC error estimate
  unsigned workers = 1;

  void validate() const;
  FieldVector b_ext() const;
};

struct SDResult {
  std::vector<double> shift_samples_hz;  // relative to the bath-free shift
  lineshape::Histogram histogram;
  double fwhm_hz = 0.0;
  lineshape::FwhmMethod fwhm_method = lineshape::FwhmMethod::interpolated_histogram;
  double mc_error_hz = 0.0;
  bool degenerate = false;
  std::optional<double> truncation_error_estimate;
};

/// Bath field at the emitter for every realization. Realization i draws its
/// positions and orientations from derive_seed(bath.seed, realization, i),
/// independently of B_ext, so one set can be reused across field directions
/// and magnitudes (paired comparison).
std::vector<FieldVector> sample_bath_fields(const EnsembleParams& p);

/// shift_i = f(B_ext + dB_i) - f(B_ext).
std::vector<double> shift_samples(std::span<const FieldVector> bath_fields, const FieldVector& b_ext,
                                  const bathfield::EmitterModel& emitter);

SDResult linewidth_from_samples(std::vector<double> samples, lineshape::FwhmMethod method,
                                std::size_t bootstrap_replicates, std::uint64_t seed);

SDResult ensemble_linewidth(const EnsembleParams& p);

/// Er-Er linewidth; requires er_concentration > 0.
SDResult erer_linewidth(EnsembleParams p);

struct Direction {
  double theta_deg = 0.0;
  double phi_deg = 0.0;
  Vec3 unit{0.0, 0.0, 1.0};
  std::string label;
};

Direction direction_from_angles(double theta_deg, double phi_deg, std::string label = {});
/// theta in [0, 180], phi in [0, 360], both ends included.
std::vector<Direction> sphere_grid(std::size_t n_theta = 17, std::size_t n_phi = 33);
/// Arc from [001] through [110] to [00-1].
std::vector<Direction> arc_grid(std::size_t points = 181);
/// Log-spaced magnitudes in tesla, both ends included.
std::vector<double> log_spaced(double first, double last, std::size_t count);
std::vector<double> default_field_magnitudes();

struct SweepPoint {
  Direction direction;
  double b_T = 0.0;
  double fwhm_hz = 0.0;
  double mc_error_hz = 0.0;
  bool ok = true;
  std::string message;
};

/// One linewidth per direction at |B| = b_ext_T, all sharing the same bath realizations.
std::vector<SweepPoint> angle_sweep(const EnsembleParams& p, std::span<const Direction> grid);

/// FWHM(B) for each direction; magnitudes must be ascending and non-negative.
std::vector<SweepPoint> field_sweep(const EnsembleParams& p, std::span<const Direction> directions,
                                    std::span<const double> magnitudes_T);

struct PairedComparison {
  double fwhm_a_hz = 0.0;
  double fwhm_b_hz = 0.0;
  double difference_error_hz = 0.0;  // bootstrap error of fwhm_a - fwhm_b
};

/// Linewidths at two external fields on the same bath realizations.
PairedComparison compare_fields(const EnsembleParams& p, const FieldVector& b_a, const FieldVector& b_b);

struct ProximalSpin {
  Vec3 position_nm;
  double distance_nm = 0.0;
  double splitting_hz = 0.0;  // |f(B + b_up) - f(B - b_up)|
};

struct SingleEmitterOptions {
  /// A spin is strongly coupled when its splitting exceeds this multiple of the
  /// Gaussian FWHM produced by all weaker spins.
  double strong_threshold = 1.0;
  /// Overrides the sampled bath (synthetic configurations).
  std::optional<lattice::SpinConfig> spins;
};

struct SingleEmitterSpectrum {
  std::vector<double> shift_samples_hz;
  lineshape::Histogram histogram;
  std::vector<ProximalSpin> strongly_coupled;  // largest splitting first
  double far_fwhm_hz = 0.0;  // Gaussian estimate from the weakly coupled spins
  double line_fwhm_hz = 0.0;  // FWHM of the whole spectrum
  std::size_t resolved_lines = 0;
};

/// Static positions drawn from bath_seed; orientations redrawn per
/// realization. Projected mode puts each spin in +/- along the external field
/// direction; isotropic mode draws uniform directions.
SingleEmitterSpectrum single_emitter_spectrum(std::uint64_t bath_seed, const EnsembleParams& p,
                                              const SingleEmitterOptions& options = {});

/// Resolved peaks of a sample distribution: histogram with bin width
/// resolution / 4, 3-bin smoothing, peaks with prominence >= 10% of the maximum.
std::size_t count_resolved_lines(std::span<const double> samples, double resolution_hz);

struct ConvergenceRow {
  double radius_nm = 0.0;
  double fwhm_hz = 0.0;
  double relative_change = 0.0;  // vs the previous radius
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  std::optional<double> converged_radius_nm;  // first radius whose successor changes FWHM < 1%
};

/// Samples the bath once at the largest radius and evaluates every radius on
/// the same realizations, so inner regions are shared exactly.
ConvergenceReport convergence_check(const EnsembleParams& p, std::span<const double> radii_nm);

}  // namespace ersd::diffusionmc
