#include "cycleqm/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cycleqm/errors.hpp"
#include "cycleqm/rng.hpp"

namespace cycleqm {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

Vector gaussian_density(const Grid& grid, double center, double sigma) {
  Vector p(grid.n_points);
  const double norm = 1.0 / std::sqrt(kTwoPi * sigma * sigma);
  for (int i = 0; i < grid.n_points; ++i) {
    const double z = (grid.point(i) - center) / sigma;
    p[i] = norm * std::exp(-0.5 * z * z);
  }
  return p;
}

int required_grid_index(const Grid& grid, double x, const char* what) {
  if (!grid.contains_point(x))
    throw std::invalid_argument(std::string("two_slit: ") + what + " at " + std::to_string(x) +
                                " does not lie on the screen grid");
  return grid.nearest_index(x);
}

}  // namespace

SlitSetup make_two_slit_setup(const Grid& screen_grid, double x_slit, double mass,
                              double tau_source_to_slits, double tau_slits_to_screen,
                              double hbar_cycle, bool objectivity) {
  SlitSetup s;
  s.screen_grid = screen_grid;
  s.x_slit = x_slit;
  const NonRelativistic free{mass, zero_potential()};
  s.F0 = build_factor(free, screen_grid, tau_source_to_slits, hbar_cycle);
  s.F1 = build_factor(free, screen_grid, tau_slits_to_screen, hbar_cycle);
  if (objectivity) {
    s.G1 = s.F1.transpose();
    s.G0 = s.F0.transpose();
  } else {
    s.G1 = s.F1;
    s.G0 = s.F0;
  }
  s.source_index = required_grid_index(screen_grid, 0.0, "source");
  s.slit_plus_index = required_grid_index(screen_grid, x_slit, "upper slit");
  s.slit_minus_index = required_grid_index(screen_grid, -x_slit, "lower slit");
  return s;
}

TwoSlitResult two_slit(const SlitSetup& setup) {
  const Grid& g = setup.screen_grid;
  const int src = required_grid_index(g, 0.0, "source");
  const int ip = setup.slit_plus_index;
  const int im = setup.slit_minus_index;
  const int n = g.n_points;
  const double dx = g.dx;

  // Path weights w_ab(x) = F0(a, 0) F1(x, a) G1(b, x) G0(0, b).
  auto weight = [&](int a, int b, int x) {
    return setup.F0.m(a, src) * setup.F1.m(x, a) * setup.G1.m(b, x) * setup.G0.m(src, b);
  };

  Vector wpp(n), wmm(n), wpm(n), wmp(n);
  for (int x = 0; x < n; ++x) {
    wpp[x] = weight(ip, ip, x);
    wmm[x] = weight(im, im, x);
    wpm[x] = weight(ip, im, x);
    wmp[x] = weight(im, ip, x);
  }

  TwoSlitResult r;
  const double z_plus = wpp.sum() * dx;
  const double z_minus = wmm.sum() * dx;
  if (!(z_plus > 0.0) || !(z_minus > 0.0))
    throw NumericsError("two_slit: single-slit path weight has no mass on the screen");
  r.Z_one = 0.5 * (z_plus + z_minus);
  r.p_plus = wpp / z_plus;
  r.p_minus = wmm / z_minus;

  r.p_both_raw = wpp + wmm + wpm + wmp;
  r.Z_both = r.p_both_raw.sum() * dx;
  r.p_both = r.p_both_raw / r.Z_both;
  r.C = 2.0 * r.Z_one / r.Z_both;

  // Imaginary-time phases from the factor products, independent of the raw sum.
  r.closed_form.resize(n);
  r.interference.resize(n);
  for (int x = 0; x < n; ++x) {
    const double s_plus = 0.5 * (std::log(setup.F0.m(ip, src)) + std::log(setup.F1.m(x, ip)) -
                                 std::log(setup.G1.m(ip, x)) - std::log(setup.G0.m(src, ip)));
    const double s_minus = 0.5 * (std::log(setup.F0.m(im, src)) + std::log(setup.F1.m(x, im)) -
                                  std::log(setup.G1.m(im, x)) - std::log(setup.G0.m(src, im)));
    const double ds = s_plus - s_minus;
    const double cross = std::sqrt(r.p_plus[x] * r.p_minus[x]) * std::cosh(ds);
    r.interference[x] = r.C * cross;
    r.closed_form[x] = r.C * (0.5 * (r.p_plus[x] + r.p_minus[x]) + cross);
  }

  r.closed_form_gap = (r.p_both - r.closed_form).cwiseAbs().maxCoeff();
  r.non_additivity_l1 =
      (r.p_both - 0.5 * (r.p_plus + r.p_minus)).cwiseAbs().sum() * dx;
  return r;
}

namespace {

double path_energy(const PathProblem& pr, const std::vector<double>& x) {
  double e = 0.0;
  for (int l = 0; l + 1 < static_cast<int>(x.size()); ++l) {
    const double v = (x[l + 1] - x[l]) / pr.epsilon;
    e += 0.5 * pr.mass * v * v + 0.5 * (pr.potential(x[l]) + pr.potential(x[l + 1]));
  }
  return e;
}

// Gradient of the path energy in the interior nodes.
void path_gradient(const PathProblem& pr, const std::vector<double>& x, Vector& g) {
  const double w = pr.mass / (pr.epsilon * pr.epsilon);
  for (int l = 1; l + 1 < static_cast<int>(x.size()); ++l)
    g[l - 1] = w * (2.0 * x[l] - x[l + 1] - x[l - 1]) + pr.potential_deriv(x[l]);
}

// Thomas solve of (diag, off) delta = rhs; returns false on a non-positive pivot.
bool tridiag_solve_spd(Vector diag, const double off, Vector rhs, Vector& out) {
  const int n = static_cast<int>(diag.size());
  for (int i = 1; i < n; ++i) {
    if (diag[i - 1] <= 0.0) return false;
    const double m = off / diag[i - 1];
    diag[i] -= m * off;
    rhs[i] -= m * rhs[i - 1];
  }
  if (diag[n - 1] <= 0.0) return false;
  out.resize(n);
  out[n - 1] = rhs[n - 1] / diag[n - 1];
  for (int i = n - 2; i >= 0; --i) out[i] = (rhs[i] - off * out[i + 1]) / diag[i];
  return true;
}

}  // namespace

PathResult classical_path(const PathProblem& problem) {
  if (problem.n_steps < 2)
    throw std::invalid_argument("classical_path: n_steps must be >= 2");
  const int n = problem.n_steps;
  const int interior = n - 1;
  const double eps2 = problem.epsilon * problem.epsilon;

  PathResult res;
  res.path.resize(n + 1);
  for (int l = 0; l <= n; ++l)
    res.path[l] = problem.x_start + (problem.x_end - problem.x_start) * l / n;

  Vector grad(interior), step(interior);
  for (int it = 1; it <= problem.max_iterations; ++it) {
    path_gradient(problem, res.path, grad);
    res.newton_residual = grad.cwiseAbs().maxCoeff();
    res.iterations = it;
    if (res.newton_residual <= problem.tolerance) break;

    Vector diag(interior);
    for (int l = 1; l <= interior; ++l)
      diag[l - 1] = 2.0 * problem.mass / eps2 + problem.potential_deriv2(res.path[l]);
    const double off = -problem.mass / eps2;

    bool newton_ok = tridiag_solve_spd(diag, off, grad, step);
    if (!newton_ok) {
      // Inverted-potential caveat: Hessian can go indefinite, damped descent.
      res.used_gradient_fallback = true;
      step = grad * (eps2 / (4.0 * problem.mass));
    }

    // Backtracking on the path energy.
    const double e0 = path_energy(problem, res.path);
    double alpha = 1.0;
    std::vector<double> trial = res.path;
    for (int bt = 0; bt < 60; ++bt) {
      for (int l = 1; l <= interior; ++l) trial[l] = res.path[l] - alpha * step[l - 1];
      if (path_energy(problem, trial) <= e0 || grad.cwiseAbs().maxCoeff() < 1e-14) break;
      alpha *= 0.5;
    }
    for (int l = 1; l <= interior; ++l) res.path[l] -= alpha * step[l - 1];
  }

  path_gradient(problem, res.path, grad);
  res.newton_residual = grad.cwiseAbs().maxCoeff();
  if (res.newton_residual > std::max(problem.tolerance, 1e-10) * 1e2 &&
      res.iterations >= problem.max_iterations)
    throw ConvergenceError("classical_path: minimizer did not converge, residual " +
                               std::to_string(res.newton_residual),
                           res.newton_residual, res.iterations);
  res.energy = path_energy(problem, res.path);
  return res;
}

PointerResult momentum_measurement(const PointerSetup& setup) {
  const int nk = static_cast<int>(setup.k_values.size());
  if (nk == 0 || setup.amplitudes.size() != setup.k_values.size())
    throw std::invalid_argument("momentum_measurement: need matching k values and amplitudes");
  if (!(setup.sigma > 0.0))
    throw std::invalid_argument("momentum_measurement: sigma must be positive");

  PointerResult r;
  double norm = 0.0;
  for (const Complex& c : setup.amplitudes) norm += std::norm(c);
  if (!(norm > 0.0))
    throw std::invalid_argument("momentum_measurement: all amplitudes vanish");

  const Grid& g = setup.pointer_grid;
  const double scale = setup.coupling_g * setup.interaction_tau * setup.hbar_cycle;
  for (int k = 0; k < nk; ++k) {
    r.peak_positions.push_back(scale * setup.k_values[k]);
    r.weights.push_back(std::norm(setup.amplitudes[k]) / norm);
  }
  const double margin = 5.0 * setup.sigma;
  for (double peak : r.peak_positions)
    if (peak - margin < g.x_min || peak + margin > g.x_max)
      throw std::invalid_argument("momentum_measurement: pointer grid does not cover peak at " +
                                  std::to_string(peak));

  r.marginal = Vector::Zero(g.n_points);
  for (int k = 0; k < nk; ++k)
    r.marginal += r.weights[k] * gaussian_density(g, r.peak_positions[k], setup.sigma);

  // Recover weights by integrating a window of half the smallest peak gap
  // (10 sigma for a single peak) around each expected position.
  std::vector<double> sorted = r.peak_positions;
  std::sort(sorted.begin(), sorted.end());
  double min_gap = 20.0 * setup.sigma;
  for (int i = 1; i < nk; ++i) min_gap = std::min(min_gap, sorted[i] - sorted[i - 1]);
  const double half_window = 0.5 * min_gap;

  for (int k = 0; k < nk; ++k) {
    double mass = 0.0;
    for (int i = 0; i < g.n_points; ++i)
      if (std::abs(g.point(i) - r.peak_positions[k]) <= half_window) mass += r.marginal[i] * g.dx;
    r.recovered_weights.push_back(mass);
    r.max_weight_error = std::max(r.max_weight_error, std::abs(mass - r.weights[k]));
  }
  return r;
}

CoinResult coin_two_stage(double p, long long n_samples, std::uint64_t seed) {
  if (!(p >= 0.0) || !(p <= 0.5))
    throw std::invalid_argument("coin_two_stage: p must lie in [0, 1/2] (got " +
                                std::to_string(p) + ")");
  CoinResult r;
  r.exact_heads = 1.0 - p;
  r.exact_tails = p;
  r.flip_probability = 1.0 - 2.0 * p;
  r.n_samples = n_samples;
  r.seed = seed;

  Rng rng(seed);
  for (long long i = 0; i < n_samples; ++i) {
    bool heads = rng.bernoulli(0.5);                      // reference R = (1/2, 1/2)
    if (!heads && rng.bernoulli(r.flip_probability)) heads = true;  // N corrects tails -> heads
    if (heads)
      ++r.heads;
    else
      ++r.tails;
  }
  if (n_samples > 0) {
    r.empirical_heads = static_cast<double>(r.heads) / static_cast<double>(n_samples);
    r.binomial_sigma = std::sqrt(r.exact_heads * r.exact_tails / static_cast<double>(n_samples));
  }
  return r;
}

DriftCheckResult drift_frame_check(double gamma, double v, double epsilon, double h_diff,
                                   const Grid& grid) {
  const DriftDiffusion spec{gamma, v, h_diff};
  const Factor f = build_factor(spec, grid, epsilon, h_diff);
  auto [ks, ka] = split_sym_antisym(f);

  const double center = 0.5 * (grid.x_min + grid.x_max);
  const double sigma = (grid.x_max - grid.x_min) / 10.0;
  const Vector p = gaussian_density(grid, center, sigma);
  const Vector ds = ks.apply(p) - p;
  const Vector da = ka.apply(p);

  const double diffusion = h_diff / (2.0 * gamma);
  DriftCheckResult r;
  const int lo = grid.n_points / 4;
  const int hi = grid.n_points - 1 - grid.n_points / 4;
  for (int i = lo; i <= hi; ++i) {
    const double z = grid.point(i) - center;
    const double pd1 = -p[i] * z / (sigma * sigma);
    const double pd2 = p[i] * (z * z / (sigma * sigma) - 1.0) / (sigma * sigma);
    r.sym_residual = std::max(r.sym_residual, std::abs(ds[i] / epsilon - diffusion * pd2));
    r.antisym_residual = std::max(r.antisym_residual, std::abs(da[i] / epsilon + v * pd1));
  }
  return r;
}

double drift_transport_check(double gamma, double v, double epsilon, int n_steps, double h_diff,
                             const Grid& grid) {
  const Factor drift = build_factor(DriftDiffusion{gamma, v, h_diff}, grid, epsilon, h_diff);

  const double center = 0.5 * (grid.x_min + grid.x_max) - 0.5 * v * n_steps * epsilon;
  const double sigma0 = (grid.x_max - grid.x_min) / 12.0;
  Vector p_v = gaussian_density(grid, center, sigma0);
  for (int l = 0; l < n_steps; ++l) p_v = drift.apply(p_v);

  // Driftless solution transported by v t, evaluated in closed form: the
  // kernel is the exact diffusion transition so the Gaussian stays Gaussian.
  const double t = n_steps * epsilon;
  const double sigma_t = std::sqrt(sigma0 * sigma0 + h_diff * t / gamma);
  const Vector expected = gaussian_density(grid, center + v * t, sigma_t);

  double gap = 0.0;
  const int lo = grid.n_points / 4;
  const int hi = grid.n_points - 1 - grid.n_points / 4;
  for (int i = lo; i <= hi; ++i) gap = std::max(gap, std::abs(p_v[i] - expected[i]));
  return gap;
}

}  // namespace cycleqm
