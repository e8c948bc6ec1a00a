#include "cycleqm/srcq.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "cycleqm/errors.hpp"

namespace cycleqm {

namespace {

void check_hermitian(const CMatrix& h, const char* who) {
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  const double defect = (h - h.adjoint()).cwiseAbs().maxCoeff();
  if (defect > 1e-12 * scale)
    throw NumericsError(std::string(who) + ": matrix is not Hermitian (defect " +
                        std::to_string(defect) + ")");
}

}  // namespace

double DensityMatrix::purity() const {
  const CMatrix op = rho * weight;
  return (op * op).trace().real();
}

Vector DensityMatrix::position_marginal() const {
  return rho.diagonal().real();
}

SrcState src_step(const SrcState& state, const DynamicalMatrix& J, double epsilon) {
  SrcState out = state;
  const double w = state.weight;
  out.P_A = state.P_A + epsilon * (commutator(J.J_a, state.P_A, w) -
                                   commutator(J.J_s, state.P_B, w));
  out.P_B = state.P_B + epsilon * (commutator(J.J_a, state.P_B, w) +
                                   commutator(J.J_s, state.P_A, w));
  out.step_index = state.step_index + 1;
  return out;
}

DensityMatrix assemble_density(const Matrix& P, double weight, double hbar_cycle) {
  const double tr = P.trace() * weight;
  if (std::abs(tr - 1.0) > 1e-8)
    throw NumericsError("assemble_density: trace mass " + std::to_string(tr) +
                        " violates unit normalization");
  DensityMatrix d;
  d.weight = weight;
  d.hbar_cycle = hbar_cycle;
  const Matrix ps = 0.5 * (P + P.transpose());
  const Matrix pa = 0.5 * (P - P.transpose());
  d.rho = ps.cast<Complex>() - Complex(0.0, 1.0) * pa.cast<Complex>();
  return d;
}

DensityMatrix assemble_density(const SrcState& state, double hbar_cycle) {
  // P_B tracks P_A^T, so the symmetric/antisymmetric split of P_A carries
  // the full pair; assemble from P_A directly.
  return assemble_density(state.P_A, state.weight, hbar_cycle);
}

std::pair<Matrix, Matrix> decompose_pair(const DensityMatrix& rho) {
  check_hermitian(rho.rho, "decompose_pair");
  return {rho.rho.real(), -rho.rho.imag()};
}

DensityMatrix vn_step(const DensityMatrix& rho, const CMatrix& hamiltonian, double epsilon) {
  check_hermitian(hamiltonian, "vn_step");
  DensityMatrix out = rho;
  out.rho = rho.rho - Complex(0.0, epsilon / rho.hbar_cycle) *
                          commutator(hamiltonian, rho.rho, rho.weight);
  return out;
}

ProbabilityMatrix initial_state(const Factor& f_tilde) {
  if (!f_tilde.m.allFinite()) throw NumericsError("initial_state: non-finite factor");
  Matrix P = f_tilde.m * f_tilde.m.transpose() * f_tilde.weight;
  const double tr = P.trace() * f_tilde.weight;
  if (!(tr > 0.0)) throw NumericsError("initial_state: zero trace, factor has no support");
  ProbabilityMatrix out;
  out.P = P / tr;
  out.weight = f_tilde.weight;
  out.step_index = 0;
  return out;
}

DensityMatrix prepare_state(const DensityMatrix& rho0, const std::vector<CMatrix>& hamiltonians,
                            double epsilon, double* unitarity_defect) {
  const auto n = rho0.rho.rows();
  const double w = rho0.weight;
  CMatrix id = CMatrix::Identity(n, n) / w;
  CMatrix u = id;
  for (const CMatrix& h : hamiltonians) {
    check_hermitian(h, "prepare_state");
    const CMatrix step = id - Complex(0.0, epsilon / rho0.hbar_cycle) * h;
    u = step * u * w;  // ordered product U_m ... U_0
  }
  DensityMatrix out = rho0;
  out.rho = u * rho0.rho * u.adjoint() * w * w;
  if (unitarity_defect != nullptr)
    *unitarity_defect = (u * u.adjoint() * w - id).cwiseAbs().maxCoeff() * w;
  return out;
}

DensityMatrix oracle_evolve(const DensityMatrix& rho0, const CMatrix& hamiltonian, double t) {
  check_hermitian(hamiltonian, "oracle_evolve");
  // Work in operator form: op(H) = H w is Hermitian as a plain matrix and
  // conjugation by exp(-i op(H) t / hbar) maps kernels to kernels.
  const CMatrix h_op = hamiltonian * rho0.weight;
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(h_op);
  if (eig.info() != Eigen::Success)
    throw NumericsError("oracle_evolve: eigendecomposition failed");
  const Vector phase = eig.eigenvalues() * (-t / rho0.hbar_cycle);
  CVector u_diag(phase.size());
  for (Eigen::Index i = 0; i < phase.size(); ++i)
    u_diag[i] = std::polar(1.0, phase[i]);
  const CMatrix u = eig.eigenvectors() * u_diag.asDiagonal() * eig.eigenvectors().adjoint();
  DensityMatrix out = rho0;
  out.rho = u * rho0.rho * u.adjoint();
  return out;
}

}  // namespace cycleqm
