#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace ersd::detail {

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule.
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct GkResult {
  double value;
  double error;
};

template <class F>
GkResult gk15(F&& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[static_cast<std::size_t>(j)];
    const double sum = f(c - dx) + f(c + dx);
    kronrod += kWgk[static_cast<std::size_t>(j)] * sum;
    if (j % 2 == 1) gauss += kWg[static_cast<std::size_t>(j / 2)] * sum;
  }
  return {kronrod * h, std::abs((kronrod - gauss) * h)};
}

/// Recursive bisection until the Kronrod-Gauss difference meets abs_tol.
template <class F>
double adaptive_gk(F&& f, double a, double b, double abs_tol, int depth = 0) {
  const GkResult r = gk15(f, a, b);
  if (r.error <= abs_tol || r.error <= 1e-15 * std::abs(r.value) || depth >= 30) return r.value;
  const double m = 0.5 * (a + b);
  return adaptive_gk(f, a, m, 0.5 * abs_tol, depth + 1) + adaptive_gk(f, m, b, 0.5 * abs_tol, depth + 1);
}

/// Integral of f over [0, upper] split at first + k * period so every piece
/// holds at most one half-oscillation.
template <class F>
double integrate_oscillatory(F&& f, double upper, double first, double period, double abs_tol) {
  double total = 0.0;
  double comp = 0.0;
  double a = 0.0;
  double b = std::min(first, upper);
  const double pieces = std::max(1.0, std::ceil((upper - first) / period) + 1.0);
  const double piece_tol = abs_tol / pieces;
  while (a < upper) {
    const double v = adaptive_gk(f, a, b, piece_tol);
    const double t = total + v;
    comp += std::abs(total) >= std::abs(v) ? (total - t) + v : (v - t) + total;
    total = t;
    a = b;
    b = std::min(upper, b + period);
  }
  return total + comp;
}

}  // namespace ersd::detail
