#include "ersd/lattice.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ersd/rng.hpp"

namespace ersd::lattice {

namespace {

const std::array<Vec3, 8> kDiamondBasis = {
    Vec3{0.00, 0.00, 0.00}, Vec3{0.00, 0.50, 0.50}, Vec3{0.50, 0.00, 0.50},
    Vec3{0.50, 0.50, 0.00}, Vec3{0.25, 0.25, 0.25}, Vec3{0.25, 0.75, 0.75},
    Vec3{0.75, 0.25, 0.75}, Vec3{0.75, 0.75, 0.25},
};

constexpr double kCm3ToNm3 = 1e-21;

void draw_orientation(SpinSite& site, OrientationModel model, const Vec3& axis, Rng& rng) {
  if (model == OrientationModel::isotropic) {
    site.moment_state = MomentState::isotropic_random_unit_vector;
    site.direction = rng.unit_vector();
  } else if (rng.bernoulli(0.5)) {
    site.moment_state = MomentState::projected_up;
    site.direction = axis;
  } else {
    site.moment_state = MomentState::projected_down;
    site.direction = -axis;
  }
}

Vec3 checked_axis(const Vec3& axis) {
  const double n = axis.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("quantization axis must be nonzero");
  return axis / n;
}

}  // namespace

void LatticeRegion::validate() const {
  if (!(lattice_constant_nm > 0.0)) throw std::invalid_argument("lattice_constant must be positive");
  if (!(region_radius_nm >= 0.0)) throw std::invalid_argument("region_radius must be non-negative");
  if (std::abs(c2_axis.norm() - 1.0) > 1e-12) throw std::invalid_argument("c2_axis must be a unit vector");
}

Vec3 LatticeRegion::emitter_crystal_position_nm() const {
  return lattice_constant_nm * (Vec3(0.5, 0.5, 0.5) + emitter_offset_cells * c2_axis);
}

void BathConfig::validate_nuclear() const {
  if (!(abundance >= 0.0 && abundance <= 1.0)) throw std::invalid_argument("abundance must lie in [0, 1]");
  if (!(region_radius_nm > 0.0)) throw std::invalid_argument("region_radius must be positive");
}

void BathConfig::validate_er() const {
  if (!(er_concentration_cm3 >= 0.0) || !std::isfinite(er_concentration_cm3))
    throw std::invalid_argument("er_concentration must be non-negative");
  if (!(region_radius_nm > 0.0)) throw std::invalid_argument("region_radius must be positive");
}

std::span<const Vec3> diamond_basis() { return kDiamondBasis; }

std::vector<Vec3> build_lattice(const LatticeRegion& region) {
  region.validate();
  std::vector<Vec3> sites;
  const double a = region.lattice_constant_nm;
  const double r = region.region_radius_nm;
  if (r == 0.0) return sites;

  const Vec3 emitter = region.emitter_crystal_position_nm();
  const double r2 = r * r;
  const double min_dist2 = 1e-24 * a * a;
  Eigen::Vector3i lo, hi;
  for (int d = 0; d < 3; ++d) {
    lo[d] = static_cast<int>(std::floor((emitter[d] - r) / a)) - 1;
    hi[d] = static_cast<int>(std::ceil((emitter[d] + r) / a)) + 1;
  }
  sites.reserve(static_cast<std::size_t>(50.0 * 4.2 * r * r * r) + 64);
  for (int i = lo[0]; i <= hi[0]; ++i)
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int k = lo[2]; k <= hi[2]; ++k)
        for (const Vec3& b : kDiamondBasis) {
          const Vec3 p = a * (Vec3(i, j, k) + b) - emitter;
          const double d2 = p.squaredNorm();
          if (d2 <= r2 && d2 > min_dist2) sites.push_back(p);
        }
  // Nearest first, so a prefix of the list is exactly a smaller sphere.
  std::stable_sort(sites.begin(), sites.end(),
                   [](const Vec3& x, const Vec3& y) { return x.squaredNorm() < y.squaredNorm(); });
  return sites;
}

SpinConfig sample_nuclear_bath(std::span<const Vec3> sites, const BathConfig& config) {
  config.validate_nuclear();
  SpinConfig spins;
  if (config.abundance == 0.0 || sites.empty()) return spins;
  const Vec3 axis = checked_axis(config.quantization_axis);
  const double r2 = config.region_radius_nm * config.region_radius_nm;

  Rng occupancy(derive_seed(config.seed, Stream::occupancy, 0));
  Rng orientation(derive_seed(config.seed, Stream::orientation, 0));
  spins.reserve(static_cast<std::size_t>(config.abundance * static_cast<double>(sites.size()) * 1.1) + 16);

  auto accept = [&](const Vec3& p) {
    if (p.squaredNorm() > r2) return;
    SpinSite s;
    s.position_nm = p;
    s.kind = SpinKind::nuclear_si29;
    draw_orientation(s, config.orientation_model, axis, orientation);
    spins.push_back(s);
  };

  if (config.abundance >= 1.0) {
    for (const Vec3& p : sites) accept(p);
  } else if (config.abundance > 0.25) {
    for (const Vec3& p : sites)
      if (occupancy.bernoulli(config.abundance)) accept(p);
  } else {
    // Geometric skipping: distributionally identical to per-site Bernoulli draws.
    std::uint64_t idx = occupancy.geometric(config.abundance);
    while (idx < sites.size()) {
      accept(sites[idx]);
      const std::uint64_t gap = occupancy.geometric(config.abundance);
      if (gap >= sites.size()) break;
      idx += gap + 1;
    }
  }
  return spins;
}

SpinConfig sample_er_bath(const BathConfig& config, const LatticeRegion& geometry) {
  config.validate_er();
  SpinConfig spins;
  if (config.er_concentration_cm3 == 0.0) return spins;
  const Vec3 axis = checked_axis(config.quantization_axis);
  const double density_nm3 = config.er_concentration_cm3 * kCm3ToNm3;
  const double radius = config.region_radius_nm;
  Rng positions(derive_seed(config.seed, Stream::er_positions, 0));
  Rng orientation(derive_seed(config.seed, Stream::orientation, 0));

  auto push = [&](const Vec3& p) {
    SpinSite s;
    s.position_nm = p;
    s.kind = SpinKind::erbium_bath;
    draw_orientation(s, config.orientation_model, axis, orientation);
    spins.push_back(s);
  };

  if (config.er_placement == ErPlacement::continuum) {
    const double volume = 4.0 / 3.0 * constants::pi * radius * radius * radius;
    const std::uint64_t count = positions.poisson(density_nm3 * volume);
    spins.reserve(count);
    for (std::uint64_t n = 0; n < count; ++n) {
      const double r = radius * std::cbrt(positions.uniform_open());
      push(r * positions.unit_vector());
    }
    return spins;
  }

  // Lattice substitution: Er occupies conventional-cell centres (the cell
  // hosting the emitter excluded). Cells of the bounding cube are visited by
  // geometric skipping over a linear index, so the cost is O(occupied cells).
  geometry.validate();
  const double a = geometry.lattice_constant_nm;
  const double p_cell = std::min(1.0, density_nm3 * a * a * a);
  const Vec3 emitter = geometry.emitter_crystal_position_nm();
  const auto half = static_cast<std::int64_t>(std::ceil(radius / a)) + 1;
  const auto side = static_cast<std::uint64_t>(2 * half + 1);
  const std::uint64_t total = side * side * side;
  const double r2 = radius * radius;
  std::uint64_t idx = positions.geometric(p_cell);
  while (idx < total) {
    const auto i = static_cast<std::int64_t>(idx / (side * side)) - half;
    const auto j = static_cast<std::int64_t>((idx / side) % side) - half;
    const auto k = static_cast<std::int64_t>(idx % side) - half;
    if (i != 0 || j != 0 || k != 0) {
      const Vec3 p = a * (Vec3(static_cast<double>(i), static_cast<double>(j), static_cast<double>(k)) +
                          Vec3(0.5, 0.5, 0.5)) - emitter;
      if (p.squaredNorm() <= r2) push(p);
    }
    const std::uint64_t gap = positions.geometric(p_cell);
    if (gap >= total) break;
    idx += gap + 1;
  }
  return spins;
}

void resample_orientations(SpinConfig& spins, OrientationModel model, const Vec3& axis,
                           std::uint64_t seed) {
  const Vec3 unit = checked_axis(axis);
  Rng rng(derive_seed(seed, Stream::orientation, 0));
  for (auto& s : spins) draw_orientation(s, model, unit, rng);
}

double nearest_neighbor_distance_nm(const SpinConfig& spins) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : spins) best = std::min(best, s.position_nm.squaredNorm());
  return std::sqrt(best);
}

}  // namespace ersd::lattice
