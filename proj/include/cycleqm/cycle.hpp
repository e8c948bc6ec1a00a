#pragma once

#include <vector>

#include "cycleqm/kernels.hpp"
#include "cycleqm/lattice.hpp"

namespace cycleqm {

// Real square matrix whose diagonal carries the single-time marginals:
// trace(P) * weight = 1 after normalization.
struct ProbabilityMatrix {
  Matrix P;
  double weight = 1.0;
  int step_index = 0;

  Vector diagonal_marginal() const { return P.diagonal(); }
  double trace_mass() const { return P.trace() * weight; }
};

// Maximum-caliber cycle: ordered factors F_0 ... F_{k-1} (k = 2n) on a shared
// grid, path weight prop. to exp(-(lambda/T) sum_l H_l eps) and
// hbar_cycle = T/lambda.
struct CycleModel {
  std::vector<Factor> factors;
  Grid grid;
  double lambda = 1.0;
  double total_T = 1.0;
  double hbar_cycle = 1.0;
  double epsilon = 0.0;
  double log_Z = 0.0;

  int k() const { return static_cast<int>(factors.size()); }
  int n() const { return k() / 2; }
  int n_states() const { return grid.n_points; }
};

// Endpoint joint p(x0, xn) plus endpoint-conditioned transition kernels
// P_l(x_{l+1} | x_l, x_n) for l = 0 .. n-2, all as probability masses.
struct BernsteinForm {
  Matrix endpoint_joint;                      // (x0, xn)
  std::vector<std::vector<Matrix>> conditionals;  // [l][xn](x_{l+1}, x_l)

  double reconstruct_path_prob(const std::vector<int>& external_path) const;
};

// Builds the cycle from per-step energy specs (size k = 2n, or size 1 to
// broadcast one spec to every step). Factors are sampled at step-start times.
CycleModel maxcal_cycle(const std::vector<EnergySpec>& energy_specs, double lambda,
                        const TimeMesh& mesh, const Grid& grid);

// Same model from prebuilt factors (k must be even and all on one grid).
CycleModel make_cycle_model(std::vector<Factor> factors, double lambda, const TimeMesh& mesh,
                            const Grid& grid);

// Probability mass of the closed path (x_0 ... x_{k-1}), x_k = x_0:
// prod_l F_l(x_{l+1}, x_l) * dx^k / Z.
double cycle_path_prob(const CycleModel& model, const std::vector<int>& path);

// P_l = F_{l-1} ... F_0 Ftilde_n ... F_l / Z (cyclic permutation of the full
// ordered product), valid for 0 <= l <= k.
ProbabilityMatrix marginal_matrix(const CycleModel& model, int step);

// P' = F P F^{-1}; guarded by a condition estimate on op(F).
ProbabilityMatrix step_probability_matrix(const ProbabilityMatrix& P, const Factor& factor,
                                          double condition_limit = 1e12);

// Euler form of the imaginary-time von Neumann update, P' = P + eps [J, P].
ProbabilityMatrix imaginary_vn_step(const ProbabilityMatrix& P, const DynamicalMatrix& J,
                                    double epsilon);

// Objectivity mirroring: extend F_0 ... F_{n-1} to the full cycle with
// F_{2n-1-l} = F_l^T.
std::vector<Factor> mirror_factors(const std::vector<Factor>& external);

// Endpoint-conditioned decomposition of the external half of the cycle.
// Guarded to n_states^(n+1) <= 10^7 enumerable paths.
BernsteinForm bernstein_decompose(const CycleModel& model);

// Ftilde_n = F_{k-1} o ... o F_n, the internal half summarized as one kernel.
Factor internal_half_kernel(const CycleModel& model);

}  // namespace cycleqm
