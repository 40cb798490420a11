#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ersd/constants.hpp"
#include "ersd/types.hpp"

namespace ersd::lattice {

inline constexpr double kSiliconLatticeConstantNm = 0.5431;

/// Diamond-cubic region centred on a single emitter.
///
/// The emitter sits `emitter_offset_cells` conventional cells away from a
/// cell centre along `c2_axis`; all generated positions are relative to it.
struct LatticeRegion {
  double lattice_constant_nm = kSiliconLatticeConstantNm;
  double region_radius_nm = 10.0;
  Vec3 c2_axis{0.0, 0.0, 1.0};
  double emitter_offset_cells = 0.25;

  void validate() const;
  /// Emitter position in crystal coordinates (nm) with the reference cell at the origin.
  Vec3 emitter_crystal_position_nm() const;
};

enum class SpinKind : std::uint8_t { nuclear_si29, erbium_bath };
enum class MomentState : std::uint8_t { isotropic_random_unit_vector, projected_up, projected_down };
enum class OrientationModel : std::uint8_t { isotropic, projected };
enum class ErPlacement : std::uint8_t { continuum, lattice_substitution };

struct SpinSite {
  Vec3 position_nm;  // relative to the emitter
  SpinKind kind = SpinKind::nuclear_si29;
  MomentState moment_state = MomentState::isotropic_random_unit_vector;
  Vec3 direction{0.0, 0.0, 1.0};  // unit orientation drawn for this realization
};

/// One stochastic realization of the bath.
using SpinConfig = std::vector<SpinSite>;

struct BathConfig {
  double abundance = constants::si29_natural_abundance;
  double er_concentration_cm3 = 0.0;
  double region_radius_nm = 10.0;
  OrientationModel orientation_model = OrientationModel::isotropic;
  Vec3 quantization_axis{0.0, 0.0, 1.0};  // used by the projected model
  ErPlacement er_placement = ErPlacement::continuum;
  double nuclear_moment_JT = constants::si29_moment;
  std::uint64_t seed = 1;

  void validate_nuclear() const;
  void validate_er() const;
};

/// Basis of the diamond-cubic conventional cell in units of the lattice constant.
std::span<const Vec3> diamond_basis();

/// All diamond-cubic atoms within region_radius of the emitter, sorted by
/// distance (stable, so ties keep cell-major order). Positions are relative
/// to the emitter.
std::vector<Vec3> build_lattice(const LatticeRegion& region);

/// Each site independently hosts a 29Si spin with probability `abundance`.
/// Occupancy and orientations use separate counter-derived streams so the
/// orientations can be redrawn for a frozen configuration.
SpinConfig sample_nuclear_bath(std::span<const Vec3> sites, const BathConfig& config);

/// Er bath. Continuum mode draws Poisson(n V) points uniformly in the sphere;
/// lattice-substitution mode populates conventional-cell centres of `geometry`
/// independently with probability n a^3.
SpinConfig sample_er_bath(const BathConfig& config, const LatticeRegion& geometry = {});

/// Redraws moment orientations in place from the stream derived from `seed`.
void resample_orientations(SpinConfig& spins, OrientationModel model, const Vec3& axis,
                           std::uint64_t seed);

/// Distance from the emitter to the closest bath spin; +inf for an empty bath.
double nearest_neighbor_distance_nm(const SpinConfig& spins);

}  // namespace ersd::lattice
