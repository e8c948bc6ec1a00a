#pragma once

#include <utility>
#include <vector>

#include "cycleqm/cycle.hpp"
#include "cycleqm/kernels.hpp"

namespace cycleqm {

// The pair of mutually transposed real dynamics behind the self-referential
// coupling; with P_B = P_A^T at the start the lock holds at every step.
struct SrcState {
  Matrix P_A;
  Matrix P_B;
  double weight = 1.0;
  int step_index = 0;

  double transpose_defect() const { return (P_B - P_A.transpose()).cwiseAbs().maxCoeff(); }
};

// Complex Hermitian density kernel, trace(rho)*weight = 1. Sign convention:
// rho = P_s + P_a/i with 1/i = -i, so Re(rho) = P_s and Im(rho) = -P_a.
struct DensityMatrix {
  CMatrix rho;
  double weight = 1.0;
  double hbar_cycle = 1.0;

  double trace_mass() const { return rho.trace().real() * weight; }
  double hermiticity_defect() const { return (rho - rho.adjoint()).cwiseAbs().maxCoeff(); }
  double purity() const;                       // Tr[(rho w)^2]
  Vector position_marginal() const;            // Re diag(rho)
};

// Paired update dP_A = eps([J_a, P_A] - [J_s, P_B]),
//               dP_B = eps([J_a, P_B] + [J_s, P_A]).
SrcState src_step(const SrcState& state, const DynamicalMatrix& J, double epsilon);

// rho = (P + P^T)/2 - i (P - P^T)/2; requires trace(P)*weight = 1 within 1e-8.
DensityMatrix assemble_density(const Matrix& P, double weight, double hbar_cycle);
DensityMatrix assemble_density(const SrcState& state, double hbar_cycle);

// Inverse of assemble_density: (P_s, P_a) = (Re rho, -Im rho); P = P_s + P_a.
std::pair<Matrix, Matrix> decompose_pair(const DensityMatrix& rho);

// rho' = rho - (i eps/hbar) [H, rho] with kernel-form H (Hermitian within
// 1e-12 relative); preserves trace and Hermiticity exactly.
DensityMatrix vn_step(const DensityMatrix& rho, const CMatrix& hamiltonian, double epsilon);

// P_0 = Ftilde o Ftilde^T, normalized to unit trace mass. Symmetric and
// Cauchy-Schwarz consistent: P_0(x,x') <= sqrt(p_0(x) p_0(x')).
ProbabilityMatrix initial_state(const Factor& f_tilde);

// rho_prep = U rho U^dag with U = U_m ... U_0, U_l = Id - i eps H_l / hbar.
// The first-order steps are not exactly unitary; the defect ||U U^dag - Id||
// is reported through *unitarity_defect when non-null.
DensityMatrix prepare_state(const DensityMatrix& rho0, const std::vector<CMatrix>& hamiltonians,
                            double epsilon, double* unitarity_defect = nullptr);

// Dense ground truth: rho(t) = exp(-iHt/hbar) rho exp(+iHt/hbar) via
// eigendecomposition of the Hermitian operator form of H.
DensityMatrix oracle_evolve(const DensityMatrix& rho0, const CMatrix& hamiltonian, double t);

}  // namespace cycleqm
