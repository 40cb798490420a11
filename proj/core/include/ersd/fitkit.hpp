#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ersd::fitkit {

/// Fitted parameters with 1-sigma errors from the linearized covariance,
/// scaled by the reduced chi-square.
struct FitResult {
  std::vector<std::string> names;
  std::vector<double> params;
  std::vector<double> sigma;
  double residual_norm = 0.0;  // sqrt(sum w r^2)
  int dof = 0;
  bool converged = false;
  int iterations = 0;
  std::string message;

  double value(std::string_view name) const;
  double error(std::string_view name) const;
};

class SingularJacobian : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ModelFn = std::function<double(double x, std::span<const double> p)>;

struct Problem {
  ModelFn model;
  std::vector<std::string> names;
  std::vector<double> init;
  /// Typical magnitude per parameter; sets finite-difference steps and the
  /// absolute part of the step-convergence test. Defaults to max(|init|, 1).
  std::vector<double> scale;
  /// Parameters held at their initial value.
  std::vector<bool> fixed;
};

struct FitOptions {
  int max_iterations = 500;
  double step_tolerance = 1e-10;
  double residual_tolerance = 1e-12;
};

/// Levenberg-Marquardt (Marquardt diagonal damping) with a central-difference
/// Jacobian. Points are put into a canonical order first, so results do not
/// depend on the order of the input. Throws SingularJacobian when the normal
/// matrix is rank deficient, std::invalid_argument for malformed input.
FitResult nlls_solve(const Problem& problem, std::span<const double> x, std::span<const double> y,
                     std::span<const double> weights = {}, const FitOptions& options = {});

enum class Weighting { uniform, poisson };

/// w_i = 1 / max(y_i, m), m = half the smallest positive value.
std::vector<double> poisson_weights(std::span<const double> counts);

double lorentzian_peak(double x, double center, double fwhm, double amplitude, double offset);
double gaussian_peak(double x, double center, double fwhm, double amplitude, double offset);
double rabi_signal(double drive, double pi_amplitude, double visibility, double offset);
double saturation_t2(double tau_pi, double xi, double t1);

/// Parameters: center, fwhm, amplitude, offset. A flat spectrum yields converged = false.
FitResult fit_lorentzian_peak(std::span<const double> x, std::span<const double> y,
                              Weighting weighting = Weighting::poisson);
FitResult fit_gaussian_peak(std::span<const double> x, std::span<const double> y,
                            Weighting weighting = Weighting::uniform);

struct DecayOptions {
  bool fix_offset_zero = false;
  Weighting weighting = Weighting::uniform;
};

/// y = amplitude exp(-t / tau) + offset. Non-decaying data yields converged = false.
FitResult fit_exponential_decay(std::span<const double> t, std::span<const double> y,
                                const DecayOptions& options = {});

/// y = offset + (visibility / 2) (1 - cos(pi x / pi_amplitude)). Data covering
/// less than one full oscillation yields converged = false.
FitResult fit_sine_rabi(std::span<const double> drive, std::span<const double> signal);

/// Closed-form least squares through the origin: xi = sum(w x y) / sum(w x^2).
/// Empty weights means unit weights.
FitResult fit_linear_origin(std::span<const double> x, std::span<const double> y, std::span<const double> w = {});

/// T2(tau) = 1 / (1 / (xi tau) + 1 / (2 T1)) with known T1; fits xi.
FitResult fit_saturation(std::span<const double> tau_pi, std::span<const double> t2, double t1);

}  // namespace ersd::fitkit
