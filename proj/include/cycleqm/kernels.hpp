#pragma once

#include <functional>
#include <utility>
#include <variant>

#include "cycleqm/lattice.hpp"
#include "cycleqm/linalg.hpp"

namespace cycleqm {

// Potentials and fields are sampled as f(x, t); time-independent callers pass
// any t (builders use the step-start time).
using Potential1D = std::function<double(double x, double t)>;
using ScalarField3D = std::function<double(const Eigen::Vector3d& x, double t)>;
using VectorField3D = std::function<Eigen::Vector3d(const Eigen::Vector3d& x, double t)>;

Potential1D zero_potential();
Potential1D harmonic_potential(double kappa);

struct NonRelativistic {
  double mass = 1.0;
  Potential1D potential = zero_potential();
};

struct Electromagnetic {
  double mass = 1.0;
  double charge = 1.0;
  double lightspeed = 1.0;
  // scalar_potential is the energy entering the kernel exponent directly
  // (pass e*phi for a physical electrostatic potential phi).
  ScalarField3D scalar_potential;
  VectorField3D vector_potential;
};

struct DriftDiffusion {
  double friction = 1.0;   // gamma, plays the role of a mass
  double drift = 0.0;      // v
  double h_diff = 1.0;     // 2 k_B T, plays the role of hbar
};

struct MeasurementCoupling {
  double system_mass = 1.0;   // m
  double device_mass = 1.0;   // M
  double coupling = 0.0;      // a, |a| < 1
};

using EnergySpec =
    std::variant<NonRelativistic, Electromagnetic, DriftDiffusion, MeasurementCoupling>;

// Real kernel matrix over a grid. Entries are kernel *values* F(x_i, x_j);
// every contraction carries the quadrature weight:
//   apply:    (F mu)(x_i)   = sum_j F_ij mu_j * weight
//   compose:  (F o G)(i, j) = sum_y F_iy G_yj * weight
// The identity kernel is I/weight. op(F) = F.m * weight turns kernels into
// plain matrices and is a homomorphism for all of the above.
struct Factor {
  Matrix m;
  Grid grid;
  double weight = 1.0;            // dx
  bool includes_normalization = true;  // Z_eps division applied
  double boundary_mass = 0.0;     // diagnostic from build_factor, see below

  int size() const { return static_cast<int>(m.rows()); }
  Vector apply(const Vector& mu) const { return m * mu * weight; }
  Vector apply_transpose(const Vector& mu) const { return m.transpose() * mu * weight; }
  Factor compose(const Factor& g) const;   // this after g
  Factor transpose() const;
  Matrix op() const { return m * weight; }

  static Factor identity(const Grid& grid);
  static Factor from_matrix(Matrix m, const Grid& grid, bool normalized = true);
};

// Symmetric/antisymmetric dynamical matrix J = (F - Id)/epsilon in kernel
// form, with the induced Hamiltonian pieces H_s = -hbar J_s, H_a = -hbar J_a
// and H = H_s + H_a/i realized as H_s - i H_a.
struct DynamicalMatrix {
  Matrix J;
  Matrix J_s;
  Matrix J_a;
  double weight = 1.0;
  double hbar_cycle = 1.0;
  double expansion_norm = 0.0;    // ||op(F) - I||_inf, diagnostic
  bool well_conditioned = true;   // expansion_norm < 0.5

  CMatrix hamiltonian() const;    // -hbar (J_s - i J_a)
  Matrix hamiltonian_sym() const { return -hbar_cycle * J_s; }
  Matrix hamiltonian_antisym() const { return -hbar_cycle * J_a; }
};

struct TwoLevelParams {
  double E0 = 0.0;
  double E1 = 1.0;
  double omega = 1.0;    // drive frequency
  double omega0 = 1.0;   // transition frequency, hbar*omega0 = E1 - E0
  double dipole = 0.0;   // D
};

// Measurement kernel on the product grid (system x device). Row/column index
// flattening is idx = i_sys * n_dev + i_dev; weight = dx_sys * dx_dev.
struct MeasurementKernel {
  Matrix m;
  Grid grid_sys;
  Grid grid_dev;
  double weight = 1.0;
  double coupling_g = 0.0;   // induced coupling, g = -a/sqrt(mM)
  Matrix covariance;          // 2x2 C from the paper's Gaussian form

  int flat_index(int i_sys, int i_dev) const { return i_sys * grid_dev.n_points + i_dev; }
};

// (m/2)((x_next - x)/eps)^2 + [V(x) + V(x_next)]/2 at step-start time t.
double energy_nonrel(double x_next, double x, const NonRelativistic& spec, double epsilon,
                     double t = 0.0);

// Kinetic + midpoint V + (e/c) velocity.A(midpoint) + (e^2/mc^2) A(midpoint)^2.
double build_em_energy(const Eigen::Vector3d& x_next, const Eigen::Vector3d& x,
                       const Electromagnetic& spec, double epsilon, double t = 0.0);

// Drift-diffusion energy (gamma/2)(dy/eps)^2 - gamma v dy/eps + (gamma/2)v^2.
double energy_drift(double y_next, double y, const DriftDiffusion& spec, double epsilon);

// F(x, x') = exp(-eps H(x, x')/hbar)/Z_eps with Z_eps = sqrt(2 pi hbar eps/m_eff).
// For DriftDiffusion the spec's h_diff plays the role of hbar_cycle.
// Electromagnetic specs are built on the 1-d grid embedded as (x, 0, 0).
// MeasurementCoupling lives on a product grid; use measurement_kernel instead.
// The boundary-mass diagnostic is the largest Gaussian mass leaking off the
// grid from any column in the central half; strict mode turns a breach of
// 1e-10 into an error.
Factor build_factor(const EnergySpec& spec, const Grid& grid, double epsilon, double hbar_cycle,
                    double t = 0.0, bool strict = false);

// K_s = (F + F^T)/2, K_a = (F - F^T)/2.
std::pair<Factor, Factor> split_sym_antisym(const Factor& factor);

DynamicalMatrix dynamical_matrix(const Factor& factor, double epsilon, double hbar_cycle);

// Effective two-level Hamiltonian Ebar I - (hbar omega0/2) sigma_Z
// + D cos(omega t) sigma_X in the (|0>, |1>) basis, with hbar omega0 = E1 - E0.
Matrix truncate_two_level(const TwoLevelParams& params, double t);

MeasurementKernel measurement_kernel(const MeasurementCoupling& spec, const Grid& grid_sys,
                                     const Grid& grid_dev, double epsilon, double hbar_cycle);

// Kernel-form commutator [A, B] = A o B - B o A with quadrature weight w.
Matrix commutator(const Matrix& a, const Matrix& b, double w);
CMatrix commutator(const CMatrix& a, const CMatrix& b, double w);

}  // namespace cycleqm
