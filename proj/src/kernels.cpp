#include "cycleqm/kernels.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "cycleqm/errors.hpp"

namespace cycleqm {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kBoundaryMassLimit = 1e-10;

void check_finite(const Matrix& m, const char* who) {
  if (!m.allFinite()) throw NumericsError(std::string(who) + ": non-finite kernel entries");
}

// Mass of a Gaussian of std sigma centered at c that falls outside [lo, hi].
double gaussian_tail_mass(double c, double sigma, double lo, double hi) {
  const double sq2 = 1.4142135623730951;
  return 0.5 * std::erfc((c - lo) / (sigma * sq2)) + 0.5 * std::erfc((hi - c) / (sigma * sq2));
}

// Largest off-grid leak over columns in the central half of the grid; states
// are expected to live there, columns hugging the boundary always leak.
double boundary_mass_diagnostic(const Grid& grid, double sigma, double mean_shift) {
  const int lo = grid.n_points / 4;
  const int hi = grid.n_points - 1 - grid.n_points / 4;
  double worst = 0.0;
  for (int j = lo; j <= hi; ++j) {
    const double c = grid.point(j) + mean_shift;
    worst = std::max(worst, gaussian_tail_mass(c, sigma, grid.x_min, grid.x_max));
  }
  return worst;
}

}  // namespace

Potential1D zero_potential() {
  return [](double, double) { return 0.0; };
}

Potential1D harmonic_potential(double kappa) {
  return [kappa](double x, double) { return 0.5 * kappa * x * x; };
}

Factor Factor::compose(const Factor& g) const {
  if (g.size() != size())
    throw std::invalid_argument("Factor::compose: dimension mismatch");
  Factor out = *this;
  out.m = m * g.m * weight;
  out.includes_normalization = includes_normalization && g.includes_normalization;
  out.boundary_mass = std::max(boundary_mass, g.boundary_mass);
  return out;
}

Factor Factor::transpose() const {
  Factor out = *this;
  out.m = m.transpose();
  return out;
}

Factor Factor::identity(const Grid& grid) {
  Factor f;
  f.grid = grid;
  f.weight = grid.dx;
  f.m = Matrix::Identity(grid.n_points, grid.n_points) / grid.dx;
  f.includes_normalization = true;
  return f;
}

Factor Factor::from_matrix(Matrix m, const Grid& grid, bool normalized) {
  if (m.rows() != m.cols() || m.rows() != grid.n_points)
    throw std::invalid_argument("Factor::from_matrix: matrix must be square and match the grid");
  Factor f;
  f.m = std::move(m);
  f.grid = grid;
  f.weight = grid.dx;
  f.includes_normalization = normalized;
  return f;
}

CMatrix DynamicalMatrix::hamiltonian() const {
  return -hbar_cycle * (J_s.cast<Complex>() - Complex(0.0, 1.0) * J_a.cast<Complex>());
}

double energy_nonrel(double x_next, double x, const NonRelativistic& spec, double epsilon,
                     double t) {
  const double v = (x_next - x) / epsilon;
  return 0.5 * spec.mass * v * v +
         0.5 * (spec.potential(x, t) + spec.potential(x_next, t));
}

double build_em_energy(const Eigen::Vector3d& x_next, const Eigen::Vector3d& x,
                       const Electromagnetic& spec, double epsilon, double t) {
  const Eigen::Vector3d vel = (x_next - x) / epsilon;
  const Eigen::Vector3d mid = 0.5 * (x_next + x);
  const double V = spec.scalar_potential ? spec.scalar_potential(mid, t) : 0.0;
  const Eigen::Vector3d A =
      spec.vector_potential ? spec.vector_potential(mid, t) : Eigen::Vector3d::Zero();
  const double ec = spec.charge / spec.lightspeed;
  return 0.5 * spec.mass * vel.squaredNorm() + V + ec * vel.dot(A) +
         ec * ec / spec.mass * A.squaredNorm();
}

double energy_drift(double y_next, double y, const DriftDiffusion& spec, double epsilon) {
  const double u = (y_next - y) / epsilon;
  return 0.5 * spec.friction * u * u - spec.friction * spec.drift * u +
         0.5 * spec.friction * spec.drift * spec.drift;
}

namespace {

Factor build_nonrel_factor(const NonRelativistic& spec, const Grid& grid, double epsilon,
                           double hbar, double t) {
  const double z_eps = std::sqrt(kTwoPi * hbar * epsilon / spec.mass);
  Factor f;
  f.grid = grid;
  f.weight = grid.dx;
  f.m.resize(grid.n_points, grid.n_points);
  for (int i = 0; i < grid.n_points; ++i)
    for (int j = 0; j < grid.n_points; ++j)
      f.m(i, j) =
          std::exp(-epsilon * energy_nonrel(grid.point(i), grid.point(j), spec, epsilon, t) / hbar) /
          z_eps;
  f.boundary_mass = boundary_mass_diagnostic(grid, std::sqrt(hbar * epsilon / spec.mass), 0.0);
  return f;
}

Factor build_drift_factor(const DriftDiffusion& spec, const Grid& grid, double epsilon) {
  const double h = spec.h_diff;
  const double z_eps = std::sqrt(kTwoPi * h * epsilon / spec.friction);
  Factor f;
  f.grid = grid;
  f.weight = grid.dx;
  f.m.resize(grid.n_points, grid.n_points);
  for (int i = 0; i < grid.n_points; ++i)
    for (int j = 0; j < grid.n_points; ++j)
      f.m(i, j) = std::exp(-epsilon * energy_drift(grid.point(i), grid.point(j), spec, epsilon) / h) /
                  z_eps;
  f.boundary_mass = boundary_mass_diagnostic(grid, std::sqrt(h * epsilon / spec.friction),
                                             epsilon * spec.drift);
  return f;
}

Factor build_em_factor(const Electromagnetic& spec, const Grid& grid, double epsilon, double hbar,
                       double t) {
  const double z_eps = std::sqrt(kTwoPi * hbar * epsilon / spec.mass);
  Factor f;
  f.grid = grid;
  f.weight = grid.dx;
  f.m.resize(grid.n_points, grid.n_points);
  for (int i = 0; i < grid.n_points; ++i) {
    const Eigen::Vector3d xi(grid.point(i), 0.0, 0.0);
    for (int j = 0; j < grid.n_points; ++j) {
      const Eigen::Vector3d xj(grid.point(j), 0.0, 0.0);
      f.m(i, j) = std::exp(-epsilon * build_em_energy(xi, xj, spec, epsilon, t) / hbar) / z_eps;
    }
  }
  f.boundary_mass = boundary_mass_diagnostic(grid, std::sqrt(hbar * epsilon / spec.mass), 0.0);
  return f;
}

}  // namespace

Factor build_factor(const EnergySpec& spec, const Grid& grid, double epsilon, double hbar_cycle,
                    double t, bool strict) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("build_factor: epsilon must be positive");
  Factor f;
  if (const auto* nr = std::get_if<NonRelativistic>(&spec)) {
    if (!(nr->mass > 0.0)) throw std::invalid_argument("build_factor: mass must be positive");
    f = build_nonrel_factor(*nr, grid, epsilon, hbar_cycle, t);
  } else if (const auto* dd = std::get_if<DriftDiffusion>(&spec)) {
    if (!(dd->friction > 0.0))
      throw std::invalid_argument("build_factor: friction must be positive");
    f = build_drift_factor(*dd, grid, epsilon);
  } else if (const auto* em = std::get_if<Electromagnetic>(&spec)) {
    if (!(em->mass > 0.0)) throw std::invalid_argument("build_factor: mass must be positive");
    f = build_em_factor(*em, grid, epsilon, hbar_cycle, t);
  } else {
    throw std::invalid_argument(
        "build_factor: MeasurementCoupling lives on a product grid, use measurement_kernel");
  }
  check_finite(f.m, "build_factor");
  if (f.m.minCoeff() < 0.0)
    throw NumericsError("build_factor: negative kernel entry");
  if (strict && f.boundary_mass >= kBoundaryMassLimit)
    throw NumericsError("build_factor: boundary mass " + std::to_string(f.boundary_mass) +
                        " exceeds 1e-10; widen the grid");
  return f;
}

std::pair<Factor, Factor> split_sym_antisym(const Factor& factor) {
  if (factor.m.rows() != factor.m.cols())
    throw std::invalid_argument("split_sym_antisym: factor must be square");
  Factor ks = factor;
  Factor ka = factor;
  ks.m = 0.5 * (factor.m + factor.m.transpose());
  ka.m = 0.5 * (factor.m - factor.m.transpose());
  return {ks, ka};
}

DynamicalMatrix dynamical_matrix(const Factor& factor, double epsilon, double hbar_cycle) {
  if (!(epsilon > 0.0))
    throw std::invalid_argument("dynamical_matrix: epsilon must be positive");
  const int n = factor.size();
  DynamicalMatrix d;
  d.weight = factor.weight;
  d.hbar_cycle = hbar_cycle;
  d.J = (factor.m - Matrix::Identity(n, n) / factor.weight) / epsilon;
  d.J_s = 0.5 * (d.J + d.J.transpose());
  d.J_a = 0.5 * (d.J - d.J.transpose());
  d.expansion_norm = (factor.op() - Matrix::Identity(n, n)).cwiseAbs().rowwise().sum().maxCoeff();
  d.well_conditioned = d.expansion_norm < 0.5;
  return d;
}

Matrix truncate_two_level(const TwoLevelParams& params, double t) {
  if (!(params.omega0 > 0.0))
    throw std::invalid_argument("truncate_two_level: omega0 must be positive");
  const double drive = params.dipole * std::cos(params.omega * t);
  Matrix h(2, 2);
  h << params.E0, drive, drive, params.E1;
  return h;
}

MeasurementKernel measurement_kernel(const MeasurementCoupling& spec, const Grid& grid_sys,
                                     const Grid& grid_dev, double epsilon, double hbar_cycle) {
  if (std::abs(spec.coupling) >= 1.0)
    throw std::invalid_argument("measurement_kernel: |a| must be < 1 (got " +
                                std::to_string(spec.coupling) + ")");
  if (!(spec.system_mass > 0.0) || !(spec.device_mass > 0.0))
    throw std::invalid_argument("measurement_kernel: masses must be positive");

  const double m = spec.system_mass;
  const double M = spec.device_mass;
  const double a = spec.coupling;
  const double he = hbar_cycle * epsilon;

  Matrix cov(2, 2);
  cov << he / m, he * a / std::sqrt(m * M), he * a / std::sqrt(m * M), he / M;
  const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
  const double norm = kTwoPi * std::sqrt(det);
  Matrix cinv(2, 2);
  cinv << cov(1, 1) / det, -cov(0, 1) / det, -cov(1, 0) / det, cov(0, 0) / det;

  const int ns = grid_sys.n_points;
  const int nd = grid_dev.n_points;
  MeasurementKernel k;
  k.grid_sys = grid_sys;
  k.grid_dev = grid_dev;
  k.weight = grid_sys.dx * grid_dev.dx;
  k.coupling_g = -a / std::sqrt(m * M);
  k.covariance = cov;
  k.m.resize(ns * nd, ns * nd);
  for (int i = 0; i < ns; ++i)
    for (int I = 0; I < nd; ++I)
      for (int j = 0; j < ns; ++j)
        for (int J = 0; J < nd; ++J) {
          const double dx = grid_sys.point(i) - grid_sys.point(j);
          const double dX = grid_dev.point(I) - grid_dev.point(J);
          const double q = cinv(0, 0) * dx * dx + 2.0 * cinv(0, 1) * dx * dX +
                           cinv(1, 1) * dX * dX;
          k.m(i * nd + I, j * nd + J) = std::exp(-0.5 * q) / norm;
        }
  check_finite(k.m, "measurement_kernel");
  return k;
}

Matrix commutator(const Matrix& a, const Matrix& b, double w) {
  return (a * b - b * a) * w;
}

CMatrix commutator(const CMatrix& a, const CMatrix& b, double w) {
  return (a * b - b * a) * w;
}

}  // namespace cycleqm
