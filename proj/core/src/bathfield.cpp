#include "ersd/bathfield.hpp"

#include <cmath>
#include <stdexcept>

#include "ersd/constants.hpp"
#include "ersd/numeric.hpp"

namespace ersd::bathfield {

namespace {
constexpr double kNm = 1e-9;

double branch_sign(Branch b) { return b == Branch::lower_lower ? 1.0 : -1.0; }
}  // namespace

GTensor GTensor::isotropic(double g) { return {g * Mat3::Identity()}; }

GTensor GTensor::diagonal(double gx, double gy, double gz) {
  GTensor t;
  t.matrix = Vec3(gx, gy, gz).asDiagonal();
  return t;
}

GTensor GTensor::from_row_major(std::span<const double> values) {
  if (values.size() != 9) throw std::invalid_argument("g-tensor needs nine row-major entries");
  GTensor t;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) t.matrix(r, c) = values[static_cast<std::size_t>(3 * r + c)];
  t.validate();
  return t;
}

double GTensor::effective_g(const Vec3& direction) const { return (matrix * direction).norm(); }

void GTensor::validate() const {
  if (!matrix.allFinite()) throw std::invalid_argument("g-tensor entries must be finite");
}

void EmitterModel::validate() const {
  g_ground.validate();
  g_excited.validate();
  if (std::abs(c2_axis.norm() - 1.0) > 1e-12) throw std::invalid_argument("c2_axis must be a unit vector");
}

Branch EmitterModel::branch_for(std::size_t realization) const {
  switch (branch_selection) {
    case BranchSelection::lower_lower: return Branch::lower_lower;
    case BranchSelection::upper_upper: return Branch::upper_upper;
    case BranchSelection::average: break;
  }
  return realization % 2 == 0 ? Branch::lower_lower : Branch::upper_upper;
}

FieldVector dipole_field(const Vec3& moment, const Vec3& displacement) {
  const double r2 = displacement.squaredNorm();
  if (!(r2 > 0.0)) throw std::domain_error("dipole field evaluated at zero displacement");
  const double r = std::sqrt(r2);
  const double inv_r3 = 1.0 / (r2 * r);
  const Vec3 rhat = displacement / r;
  return constants::mu0_over_4pi * inv_r3 * (3.0 * moment.dot(rhat) * rhat - moment);
}

Vec3 nuclear_moment(lattice::MomentState state, const Vec3& quantization_axis, Rng& rng,
                    double magnitude) {
  using lattice::MomentState;
  switch (state) {
    case MomentState::projected_up: return magnitude * quantization_axis.normalized();
    case MomentState::projected_down: return -magnitude * quantization_axis.normalized();
    case MomentState::isotropic_random_unit_vector: break;
  }
  return magnitude * rng.unit_vector();
}

Vec3 er_moment(const GTensor& g, const Vec3& orientation) {
  return 0.5 * constants::bohr_magneton * (g.matrix * orientation);
}

Vec3 site_moment(const lattice::SpinSite& site, const EmitterModel& emitter, double nuclear_magnitude) {
  if (site.kind == lattice::SpinKind::erbium_bath) return er_moment(emitter.g_ground, site.direction);
  return nuclear_magnitude * site.direction;
}

FieldVector bath_field(const lattice::SpinConfig& spins, const EmitterModel& emitter,
                       double nuclear_magnitude) {
  CompensatedVec3 acc;
  for (const auto& s : spins) acc.add(dipole_field(site_moment(s, emitter, nuclear_magnitude), -kNm * s.position_nm));
  return acc.value();
}

FieldVector total_field(const lattice::SpinConfig& spins, const EmitterModel& emitter,
                        const FieldVector& b_ext, double nuclear_magnitude) {
  CompensatedVec3 acc;
  acc.add(b_ext);
  for (const auto& s : spins) acc.add(dipole_field(site_moment(s, emitter, nuclear_magnitude), -kNm * s.position_nm));
  return acc.value();
}

double optical_shift(const FieldVector& b, const EmitterModel& emitter, Branch branch) {
  const double excited = (emitter.g_excited.matrix * b).norm();
  const double ground = (emitter.g_ground.matrix * b).norm();
  return branch_sign(branch) * 0.5 * constants::bohr_hz_per_tesla * (excited - ground);
}

double optical_shift(const FieldVector& b, const EmitterModel& emitter) {
  if (emitter.branch_selection == BranchSelection::average)
    throw std::invalid_argument("average branch is an ensemble mixture; pass an explicit branch");
  return optical_shift(b, emitter, emitter.branch_for(0));
}

Vec3 optical_shift_gradient(const FieldVector& b, const EmitterModel& emitter, Branch branch) {
  const Mat3& ge = emitter.g_excited.matrix;
  const Mat3& gg = emitter.g_ground.matrix;
  const Vec3 ue = ge * b;
  const Vec3 ug = gg * b;
  const double ne = ue.norm();
  const double ng = ug.norm();
  Vec3 grad = Vec3::Zero();
  if (ne > 0.0) grad += ge.transpose() * ue / ne;
  if (ng > 0.0) grad -= gg.transpose() * ug / ng;
  return branch_sign(branch) * 0.5 * constants::bohr_hz_per_tesla * grad;
}

}  // namespace ersd::bathfield
