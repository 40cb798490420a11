#pragma once

// CODATA 2018 values (SI).
namespace ersd::constants {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double mu0 = 1.25663706212e-6;            // T m / A
inline constexpr double mu0_over_4pi = mu0 / (4.0 * pi);   // ~1e-7
inline constexpr double bohr_magneton = 9.2740100783e-24;  // J/T
inline constexpr double nuclear_magneton = 5.0507837461e-27;  // J/T
inline constexpr double planck = 6.62607015e-34;           // J s
inline constexpr double speed_of_light = 299792458.0;      // m/s
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m

/// |mu(29Si)| = 0.55529 mu_N. The sign (negative gyromagnetic ratio) does not
/// enter any width statistic, so moments are built from the magnitude.
inline constexpr double si29_moment = 0.55529 * nuclear_magneton;

/// Silicon natural 29Si abundance.
inline constexpr double si29_natural_abundance = 0.047;

/// mu_B / h in Hz/T.
inline constexpr double bohr_hz_per_tesla = bohr_magneton / planck;

}  // namespace ersd::constants
