#include "ersd/fitkit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

#include "ersd/constants.hpp"
#include "ersd/numeric.hpp"

namespace ersd::fitkit {

namespace {

constexpr double kFourLn2 = 2.772588722239781;

struct Point {
  double x, y, w;
};

void check_sizes(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("x and y differ in length");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw std::invalid_argument("data must be finite");
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// Half-maximum span around `peak`, linearly interpolated.
double half_max_span(std::span<const double> x, std::span<const double> y, std::size_t peak,
                     double level) {
  std::size_t l = peak;
  while (l > 0 && y[l] >= level) --l;
  std::size_t r = peak;
  while (r + 1 < y.size() && y[r] >= level) ++r;
  auto cross = [&](std::size_t below, std::size_t above) {
    const double dy = y[above] - y[below];
    if (dy == 0.0) return x[above];
    return x[below] + (level - y[below]) / dy * (x[above] - x[below]);
  };
  const double xl = y[l] < level ? cross(l, l + 1) : x[l];
  const double xr = y[r] < level ? cross(r, r - 1) : x[r];
  return std::abs(xr - xl);
}

double min_spacing(std::span<const double> x) {
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < s.size(); ++i)
    if (s[i] > s[i - 1]) best = std::min(best, s[i] - s[i - 1]);
  return std::isfinite(best) ? best : 1.0;
}

FitResult flagged(const Problem& p, std::string message) {
  FitResult r;
  r.names = p.names;
  r.params = p.init;
  r.sigma.assign(p.init.size(), 0.0);
  r.converged = false;
  r.message = std::move(message);
  return r;
}

}  // namespace

double FitResult::value(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return params[i];
  throw std::out_of_range("no fit parameter named " + std::string(name));
}

double FitResult::error(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return sigma[i];
  throw std::out_of_range("no fit parameter named " + std::string(name));
}

FitResult nlls_solve(const Problem& problem, std::span<const double> x, std::span<const double> y,
                     std::span<const double> weights, const FitOptions& options) {
  check_sizes(x, y);
  const std::size_t np = problem.init.size();
  if (np == 0 || problem.names.size() != np) throw std::invalid_argument("parameter names and init differ");
  if (!weights.empty() && weights.size() != x.size()) throw std::invalid_argument("weights differ in length");

  std::vector<std::size_t> free;
  for (std::size_t j = 0; j < np; ++j)
    if (problem.fixed.empty() || !problem.fixed[j]) free.push_back(j);
  const std::size_t nf = free.size();
  if (x.size() < nf + 1) throw std::invalid_argument("need more data points than free parameters");

  std::vector<Point> pts(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("weights must be finite and non-negative");
    pts[i] = {x[i], y[i], w};
  }
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
    if (a.x != b.x) return a.x < b.x;
    if (a.y != b.y) return a.y < b.y;
    return a.w < b.w;
  });
  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::VectorXd sqrt_w(n);
  for (Eigen::Index i = 0; i < n; ++i) sqrt_w[i] = std::sqrt(pts[static_cast<std::size_t>(i)].w);

  std::vector<double> scale(np);
  for (std::size_t j = 0; j < np; ++j)
    scale[j] = (problem.scale.size() == np && problem.scale[j] > 0.0) ? problem.scale[j]
                                                                       : std::max(std::abs(problem.init[j]), 1.0);

  auto residuals = [&](const std::vector<double>& p, Eigen::VectorXd& r) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& pt = pts[static_cast<std::size_t>(i)];
      r[i] = sqrt_w[i] * (pt.y - problem.model(pt.x, p));
    }
    return r.allFinite() ? r.squaredNorm() : std::numeric_limits<double>::infinity();
  };
  auto jacobian = [&](const std::vector<double>& p, Eigen::MatrixXd& jac) {
    std::vector<double> q = p;
    for (std::size_t k = 0; k < nf; ++k) {
      const std::size_t j = free[k];
      const double h = 1e-6 * scale[j];
      q[j] = p[j] + h;
      const double up_j = q[j];
      Eigen::VectorXd fp(n), fm(n);
      for (Eigen::Index i = 0; i < n; ++i) fp[i] = problem.model(pts[static_cast<std::size_t>(i)].x, q);
      q[j] = p[j] - h;
      const double down_j = q[j];
      for (Eigen::Index i = 0; i < n; ++i) fm[i] = problem.model(pts[static_cast<std::size_t>(i)].x, q);
      q[j] = p[j];
      jac.col(static_cast<Eigen::Index>(k)) = sqrt_w.cwiseProduct(fp - fm) / (up_j - down_j);
    }
  };
  auto check_rank = [&](const Eigen::MatrixXd& a) {
    Eigen::VectorXd d = a.diagonal();
    for (Eigen::Index k = 0; k < d.size(); ++k)
      if (!(d[k] > 0.0)) throw SingularJacobian("Jacobian column " + problem.names[free[static_cast<std::size_t>(k)]] + " vanishes");
    const Eigen::VectorXd inv = d.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd c = inv.asDiagonal() * a * inv.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 1e-13 * hi)) throw SingularJacobian("normal matrix is singular");
  };

  FitResult result;
  result.names = problem.names;
  std::vector<double> p = problem.init;
  Eigen::VectorXd r(n);
  double cost = residuals(p, r);
  if (!std::isfinite(cost)) throw std::invalid_argument("model is not finite at the initial parameters");

  double y_norm = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) y_norm += pts[static_cast<std::size_t>(i)].w * pts[static_cast<std::size_t>(i)].y * pts[static_cast<std::size_t>(i)].y;
  const double exact_floor = 1e-30 * std::max(y_norm, std::numeric_limits<double>::min());

  Eigen::MatrixXd jac(n, static_cast<Eigen::Index>(nf));
  bool converged = cost <= exact_floor;
  double lambda = 1e-3;
  int it = 0;
  while (!converged && it < options.max_iterations) {
    ++it;
    jacobian(p, jac);
    const Eigen::MatrixXd a = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    check_rank(a);
    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd damped = a;
      damped.diagonal() += lambda * a.diagonal();
      const Eigen::VectorXd step = damped.ldlt().solve(g);
      std::vector<double> trial = p;
      for (std::size_t k = 0; k < nf; ++k) trial[free[k]] += step[static_cast<Eigen::Index>(k)];
      Eigen::VectorXd r_trial(n);
      const double c_trial = residuals(trial, r_trial);
      if (c_trial < cost) {
        bool small_step = true;
        for (std::size_t k = 0; k < nf; ++k) {
          const std::size_t j = free[k];
          if (std::abs(step[static_cast<Eigen::Index>(k)]) > options.step_tolerance * (std::abs(trial[j]) + 1e-3 * scale[j]))
            small_step = false;
        }
        const bool small_change = (cost - c_trial) <= options.residual_tolerance * cost;
        p = std::move(trial);
        r = r_trial;
        cost = c_trial;
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        converged = small_step || small_change || cost <= exact_floor;
      } else {
        lambda *= 10.0;
        if (lambda > 1e16) {
          // No descent direction left: we are at a stationary point to working precision.
          accepted = true;
          converged = true;
        }
      }
    }
  }

  jacobian(p, jac);
  const Eigen::MatrixXd a = jac.transpose() * jac;
  check_rank(a);
  result.params = p;
  result.sigma.assign(np, 0.0);
  result.dof = static_cast<int>(n) - static_cast<int>(nf);
  result.residual_norm = std::sqrt(cost);
  result.iterations = it;
  result.converged = converged;
  if (!converged) result.message = "maximum iterations reached";
  if (result.dof > 0) {
    const double s2 = cost / result.dof;
    const Eigen::MatrixXd cov = a.ldlt().solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(nf), static_cast<Eigen::Index>(nf))) * s2;
    for (std::size_t k = 0; k < nf; ++k)
      result.sigma[free[k]] = std::sqrt(std::max(0.0, cov(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k))));
  }
  return result;
}

std::vector<double> poisson_weights(std::span<const double> counts) {
  double smallest = std::numeric_limits<double>::infinity();
  for (double c : counts)
    if (c > 0.0) smallest = std::min(smallest, c);
  const double floor = std::isfinite(smallest) ? 0.5 * smallest : 1.0;
  std::vector<double> w(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) w[i] = 1.0 / std::max(counts[i], floor);
  return w;
}

double lorentzian_peak(double x, double center, double fwhm, double amplitude, double offset) {
  const double u = 2.0 * (x - center) / fwhm;
  return offset + amplitude / (1.0 + u * u);
}

double gaussian_peak(double x, double center, double fwhm, double amplitude, double offset) {
  const double u = (x - center) / fwhm;
  return offset + amplitude * std::exp(-kFourLn2 * u * u);
}

double rabi_signal(double drive, double pi_amplitude, double visibility, double offset) {
  return offset + 0.5 * visibility * (1.0 - std::cos(constants::pi * drive / pi_amplitude));
}

double saturation_t2(double tau_pi, double xi, double t1) {
  return 1.0 / (1.0 / (xi * tau_pi) + 0.5 / t1);
}

namespace {

FitResult fit_peak(std::span<const double> x, std::span<const double> y, Weighting weighting,
                   ModelFn model) {
  check_sizes(x, y);
  if (x.size() < 8) throw std::invalid_argument("peak fit needs at least 8 points");
  std::vector<double> xs(x.begin(), x.end()), ys(y.begin(), y.end());
  {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return xs[a] < xs[b]; });
    std::vector<double> tx, ty;
    for (auto i : order) {
      tx.push_back(xs[i]);
      ty.push_back(ys[i]);
    }
    xs.swap(tx);
    ys.swap(ty);
  }
  const std::size_t peak = argmax(ys);
  std::vector<double> sorted = ys;
  std::sort(sorted.begin(), sorted.end());
  const double offset = sorted_quantile(sorted, 0.1);
  const double amplitude = ys[peak] - offset;
  double fwhm = half_max_span(xs, ys, peak, offset + 0.5 * amplitude);
  const double dx = min_spacing(xs);
  if (!(fwhm > 0.0)) fwhm = 2.0 * dx;

  Problem prob;
  prob.model = std::move(model);
  prob.names = {"center", "fwhm", "amplitude", "offset"};
  prob.init = {xs[peak], fwhm, amplitude, offset};
  const double amp_scale = std::max(std::abs(amplitude), std::abs(ys[peak]));
  prob.scale = {fwhm, fwhm, amp_scale > 0 ? amp_scale : 1.0, amp_scale > 0 ? amp_scale : 1.0};
  const std::vector<double> w = weighting == Weighting::poisson ? poisson_weights(ys) : std::vector<double>{};
  if (!(amplitude > 0.0)) return flagged(prob, "flat spectrum: no peak above baseline");
  try {
    FitResult r = nlls_solve(prob, xs, ys, w);
    r.params[1] = std::abs(r.params[1]);
    if (!(r.params[1] > 0.0) || r.params[0] < xs.front() || r.params[0] > xs.back()) {
      r.converged = false;
      r.message = "fitted peak outside the data range";
    }
    return r;
  } catch (const SingularJacobian& e) {
    return flagged(prob, e.what());
  }
}

}  // namespace

FitResult fit_lorentzian_peak(std::span<const double> x, std::span<const double> y, Weighting weighting) {
  return fit_peak(x, y, weighting, [](double xv, std::span<const double> p) {
    return lorentzian_peak(xv, p[0], p[1], p[2], p[3]);
  });
}

FitResult fit_gaussian_peak(std::span<const double> x, std::span<const double> y, Weighting weighting) {
  return fit_peak(x, y, weighting, [](double xv, std::span<const double> p) {
    return gaussian_peak(xv, p[0], p[1], p[2], p[3]);
  });
}

FitResult fit_exponential_decay(std::span<const double> t, std::span<const double> y,
                                const DecayOptions& options) {
  check_sizes(t, y);
  if (t.size() < 5) throw std::invalid_argument("decay fit needs at least 5 points");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1])) throw std::invalid_argument("decay times must be strictly ascending");

  const double span_t = t.back() - t.front();
  const std::size_t tail = std::max<std::size_t>(1, t.size() / 10);
  double offset = 0.0;
  if (!options.fix_offset_zero) {
    std::vector<double> last(y.end() - static_cast<std::ptrdiff_t>(tail), y.end());
    offset = *std::min_element(last.begin(), last.end());
  }
  // Log-linear regression of the baseline-subtracted head of the curve.
  std::vector<double> lt, ly;
  const double head = y.front() - offset;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double v = y[i] - offset;
    if (v > 0.05 * std::abs(head) && v > 0.0) {
      lt.push_back(t[i]);
      ly.push_back(std::log(v));
    }
  }
  double tau = span_t / 3.0;
  double amplitude = head;
  if (lt.size() >= 2) {
    const double mt = mean(lt), my = mean(ly);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lt.size(); ++i) {
      sxx += (lt[i] - mt) * (lt[i] - mt);
      sxy += (lt[i] - mt) * (ly[i] - my);
    }
    const double slope = sxx > 0 ? sxy / sxx : 0.0;
    if (slope < 0.0) {
      tau = -1.0 / slope;
      amplitude = std::exp(my - slope * mt);
    }
  }

  Problem prob;
  prob.model = [](double tv, std::span<const double> p) { return p[0] * std::exp(-tv / p[1]) + p[2]; };
  prob.names = {"amplitude", "tau", "offset"};
  prob.init = {amplitude, tau, offset};
  const double a_scale = std::max(std::abs(amplitude), 1e-300);
  prob.scale = {a_scale, tau, a_scale};
  prob.fixed = {false, false, options.fix_offset_zero};
  if (!(std::abs(head) > 0.0)) return flagged(prob, "no decaying signal above the baseline");
  const std::vector<double> w = options.weighting == Weighting::poisson ? poisson_weights(y) : std::vector<double>{};
  try {
    FitResult r = nlls_solve(prob, t, y, w);
    const double fitted_tau = r.params[1];
    if (!(fitted_tau > 0.0) || !std::isfinite(fitted_tau) || fitted_tau > 1e3 * span_t ||
        !(r.params[0] > 0.0)) {
      r.converged = false;
      r.message = "data does not decay";
    }
    return r;
  } catch (const SingularJacobian& e) {
    return flagged(prob, std::string("data does not decay: ") + e.what());
  }
}

FitResult fit_sine_rabi(std::span<const double> drive, std::span<const double> signal) {
  check_sizes(drive, signal);
  if (drive.size() < 5) throw std::invalid_argument("Rabi fit needs at least 5 points");
  const auto [xmin_it, xmax_it] = std::minmax_element(drive.begin(), drive.end());
  const double range = *xmax_it - *xmin_it;
  if (!(range > 0.0)) throw std::invalid_argument("drive axis has no extent");
  const double ybar = mean(signal);

  // Periodogram on a 20x oversampled frequency grid.
  double best_f = 1.0 / range, best_power = -1.0;
  const double df = 0.05 / range;
  const double f_max = 0.5 * static_cast<double>(drive.size()) / range;
  for (double f = 0.25 / range; f <= f_max; f += df) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < drive.size(); ++i)
      acc += (signal[i] - ybar) * std::polar(1.0, -2.0 * constants::pi * f * drive[i]);
    const double power = std::norm(acc);
    if (power > best_power) {
      best_power = power;
      best_f = f;
    }
  }
  const auto [ymin_it, ymax_it] = std::minmax_element(signal.begin(), signal.end());
  Problem prob;
  prob.model = [](double x, std::span<const double> p) { return rabi_signal(x, p[0], p[1], p[2]); };
  prob.names = {"pi_amplitude", "visibility", "offset"};
  const double vis = *ymax_it - *ymin_it;
  prob.init = {0.5 / best_f, vis, *ymin_it};
  prob.scale = {0.5 / best_f, std::max(vis, 1e-300), std::max(vis, 1e-300)};
  if (!(vis > 0.0)) return flagged(prob, "signal does not oscillate");
  try {
    FitResult r = nlls_solve(prob, drive, signal);
    r.params[0] = std::abs(r.params[0]);
    if (range < 2.0 * r.params[0] * (1.0 - 1e-9)) {
      r.converged = false;
      r.message = "data covers less than one full oscillation";
    }
    return r;
  } catch (const SingularJacobian& e) {
    return flagged(prob, e.what());
  }
}

FitResult fit_linear_origin(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
  check_sizes(x, y);
  if (x.empty()) throw std::invalid_argument("linear fit needs at least one point");
  if (!w.empty() && w.size() != x.size()) throw std::invalid_argument("weights and data differ in length");
  auto weight = [&](std::size_t i) { return w.empty() ? 1.0 : w[i]; };
  CompensatedSum sxx, sxy;
  std::size_t used = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(weight(i) >= 0.0)) throw std::invalid_argument("weights must be non-negative");
    sxx.add(weight(i) * x[i] * x[i]);
    sxy.add(weight(i) * x[i] * y[i]);
    used += weight(i) > 0.0;
  }
  if (!(sxx.value() > 0.0)) throw std::invalid_argument("all abscissae are zero");
  const double xi = sxy.value() / sxx.value();
  FitResult r;
  r.names = {"xi"};
  r.params = {xi};
  r.sigma = {0.0};
  CompensatedSum rss;
  for (std::size_t i = 0; i < x.size(); ++i) rss.add(weight(i) * (y[i] - xi * x[i]) * (y[i] - xi * x[i]));
  r.residual_norm = std::sqrt(rss.value());
  r.dof = static_cast<int>(used) - 1;
  if (r.dof > 0) r.sigma[0] = std::sqrt(rss.value() / r.dof / sxx.value());
  r.converged = true;
  return r;
}

FitResult fit_saturation(std::span<const double> tau_pi, std::span<const double> t2, double t1) {
  check_sizes(tau_pi, t2);
  if (!(t1 > 0.0)) throw std::invalid_argument("t1 must be positive");
  if (tau_pi.size() < 2) throw std::invalid_argument("saturation fit needs at least 2 points");
  std::vector<double> guesses;
  for (std::size_t i = 0; i < tau_pi.size(); ++i) {
    if (!(tau_pi[i] > 0.0) || !(t2[i] > 0.0)) throw std::invalid_argument("data must be positive");
    const double rate = 1.0 / t2[i] - 0.5 / t1;
    if (rate > 0.0) guesses.push_back(1.0 / (rate * tau_pi[i]));
  }
  Problem prob;
  prob.model = [t1](double tau, std::span<const double> p) { return saturation_t2(tau, p[0], t1); };
  prob.names = {"xi"};
  prob.init = {guesses.empty() ? fit_linear_origin(tau_pi, t2).params[0] : median(guesses)};
  prob.scale = {prob.init[0]};
  try {
    return nlls_solve(prob, tau_pi, t2);
  } catch (const SingularJacobian& e) {
    return flagged(prob, e.what());
  }
}

}  // namespace ersd::fitkit
