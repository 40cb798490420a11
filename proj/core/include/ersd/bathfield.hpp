#pragma once

#include <cstddef>
#include <span>

#include "ersd/lattice.hpp"
#include "ersd/rng.hpp"
#include "ersd/types.hpp"

namespace ersd::bathfield {

/// 3x3 g-tensor in the crystal frame (C2 along the third axis by default).
struct GTensor {
  Mat3 matrix = 2.0 * Mat3::Identity();

  static GTensor isotropic(double g);
  static GTensor diagonal(double gx, double gy, double gz);
  /// Nine numbers, row-major.
  static GTensor from_row_major(std::span<const double> values);

  /// g_eff(u) = |G u| for a unit direction u.
  double effective_g(const Vec3& direction) const;
  void validate() const;
};

enum class BranchSelection { lower_lower, upper_upper, average };
enum class Branch { lower_lower, upper_upper };

struct EmitterModel {
  GTensor g_ground;
  GTensor g_excited;
  Vec3 c2_axis{0.0, 0.0, 1.0};
  BranchSelection branch_selection = BranchSelection::lower_lower;

  void validate() const;
  /// Branch used for a given realization. `average` mixes the two
  /// spin-conserving branches, alternating by realization parity.
  Branch branch_for(std::size_t realization) const;
};

/// Point-dipole field (mu0/4pi) [3 (m.r^) r^ - m] / r^3. Moment in J/T,
/// displacement (dipole -> field point) in metres.
FieldVector dipole_field(const Vec3& moment, const Vec3& displacement);

/// 29Si moment: magnitude along a uniform random direction (isotropic) or
/// along +/- the quantization axis (projected).
Vec3 nuclear_moment(lattice::MomentState state, const Vec3& quantization_axis, Rng& rng,
                    double magnitude = constants::si29_moment);

/// Effective spin-1/2 moment m = (1/2) mu_B G u.
Vec3 er_moment(const GTensor& g, const Vec3& orientation);

/// Moment carried by a sampled site. Bath Er reuses the emitter's ground-state tensor.
Vec3 site_moment(const lattice::SpinSite& site, const EmitterModel& emitter,
                 double nuclear_magnitude = constants::si29_moment);

/// Sum of the bath dipole fields at the emitter (compensated summation).
FieldVector bath_field(const lattice::SpinConfig& spins, const EmitterModel& emitter,
                       double nuclear_magnitude = constants::si29_moment);

/// b_ext plus the bath field.
FieldVector total_field(const lattice::SpinConfig& spins, const EmitterModel& emitter,
                        const FieldVector& b_ext,
                        double nuclear_magnitude = constants::si29_moment);

/// Optical transition frequency shift in Hz:
///   s * (1/2) (mu_B/h) (|G_e B| - |G_g B|),  s = +1 lower_lower, -1 upper_upper.
double optical_shift(const FieldVector& b, const EmitterModel& emitter, Branch branch);
/// Uses the emitter's branch selection; throws std::invalid_argument for `average`,
/// which is only defined over an ensemble.
double optical_shift(const FieldVector& b, const EmitterModel& emitter);

/// Gradient of optical_shift with respect to B (Hz/T); undefined at B = 0.
Vec3 optical_shift_gradient(const FieldVector& b, const EmitterModel& emitter, Branch branch);

}  // namespace ersd::bathfield
