#pragma once

#include <utility>
#include <vector>

#include "cycleqm/kernels.hpp"
#include "cycleqm/lattice.hpp"

namespace cycleqm {

// Forward and backward belief-propagation messages along an open chain of
// n factors; forward[l] and backward[l] live at node l = 0 .. n. Global
// sqrt(Z)-style normalization is tracked as scalar log offsets instead of
// being folded into the vectors.
struct MessagePair {
  std::vector<Vector> forward;
  std::vector<Vector> backward;
  Grid grid;
  double log_offset_forward = 0.0;
  double log_offset_backward = 0.0;

  int n_nodes() const { return static_cast<int>(forward.size()); }
};

struct BridgeProblem {
  std::vector<Factor> factors;  // external chain F_0 ... F_{n-1}
  Vector p0;                    // initial marginal density, integrates to 1
  Vector pn;                    // final marginal density
  Grid grid;
  double tolerance = 1e-10;     // L1 on both endpoint Born products
  int max_iterations = 10000;
  bool clip_zeros = false;      // opt-in: clip endpoint marginals at 1e-30
};

struct BridgeResult {
  MessagePair messages;
  double residual_initial = 0.0;
  double residual_final = 0.0;
  int sweeps = 0;
};

// mu'(x) = sum_{x'} F(x, x') mu(x') dx.
Vector bp_forward(const Vector& message, const Factor& factor);

// mu'(x) = sum_{x'} mu(x') F(x', x) dx.
Vector bp_backward(const Vector& message, const Factor& factor);

// p_l(x) = mu_fwd(x) mu_bwd(x), renormalized to integrate to 1.
Vector born_marginal(const MessagePair& pair, int step);

// Fixed-endpoint bridge on the chain: alternating endpoint rescaling
// (Fortet / iterative proportional fitting) until both Born products match
// p0 and pn within tolerance.
BridgeResult solve_bridge(const BridgeProblem& problem);

// Row-stochastic forward transition of the solved bridge,
// P+_l(x_{l+1} | x_l) = F_l(x_{l+1}, x_l) mu_bwd[l+1](x_{l+1}) / mu_bwd[l](x_l);
// columns integrate to 1 against the grid weight.
Matrix bridge_forward_transition(const MessagePair& pair, const Factor& factor, int step);

// Square-root Markov kernel of a discrete chain step. forward_transition is a
// column-stochastic table P+(x_{l+1} | x_l); marginals are probability masses.
// K(x_{l+1}, x_l) = sqrt(P+(x_{l+1}|x_l) P-(x_l|x_{l+1})) with P- from Bayes
// inversion. Throws if p_next differs from P+ applied to p by more than 1e-10.
Matrix sqrt_markov_kernel(const Matrix& forward_transition, const Vector& p, const Vector& p_next);

struct ContinuumResidual {
  double forward = 0.0;   // sup |hbar dmu/dt - [(hbar^2/2m) d2/dx2 - V] mu|
  double backward = 0.0;  // sup |hbar dmu/dt + [(hbar^2/2m) d2/dx2 - V] mu|
};

// Finite-difference residual of the imaginary-time Schroedinger equation and
// its adjoint on a message chain sampled every epsilon, interior nodes only.
ContinuumResidual continuum_residual(const MessagePair& pair, const NonRelativistic& spec,
                                     double epsilon, double lambda, double total_T);

}  // namespace cycleqm
