#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cycleqm/bridge.hpp"
#include "cycleqm/kernels.hpp"
#include "cycleqm/lattice.hpp"

namespace cycleqm {

// --- Two-slit -------------------------------------------------------------

// Delta-slit model: the source sits at x = 0, the two slits at +-x_slit, all
// three on the screen grid. F_0 carries source -> slits, F_1 slits -> screen;
// G_l are the internal factors (G_l = F_l^T when objectivity mode is on).
struct SlitSetup {
  Grid screen_grid;
  double x_slit = 1.0;
  Factor F0, F1, G0, G1;
  int source_index = 0;
  int slit_plus_index = 0;
  int slit_minus_index = 0;
};

SlitSetup make_two_slit_setup(const Grid& screen_grid, double x_slit, double mass,
                              double tau_source_to_slits, double tau_slits_to_screen,
                              double hbar_cycle, bool objectivity = true);

struct TwoSlitResult {
  Vector p_plus;            // single-slit marginals, normalized densities
  Vector p_minus;
  Vector p_both;            // both slits open, normalized
  Vector p_both_raw;        // raw 4-term path sum before normalization
  Vector closed_form;       // cosh interference expression
  Vector interference;      // C * sqrt(p+ p-) cosh(dS)
  double Z_one = 0.0;
  double Z_both = 0.0;
  double C = 0.0;
  double closed_form_gap = 0.0;    // max |p_both - closed_form|
  double non_additivity_l1 = 0.0;  // || p_both - (p+ + p-)/2 ||_1
};

TwoSlitResult two_slit(const SlitSetup& setup);

// --- Classical limit --------------------------------------------------------

struct PathProblem {
  double x_start = 0.0;
  double x_end = 1.0;
  int n_steps = 8;    // >= 2
  double epsilon = 0.1;
  double mass = 1.0;
  std::function<double(double)> potential = [](double) { return 0.0; };
  std::function<double(double)> potential_deriv = [](double) { return 0.0; };
  std::function<double(double)> potential_deriv2 = [](double) { return 0.0; };
  double tolerance = 1e-12;
  int max_iterations = 200;
};

struct PathResult {
  std::vector<double> path;       // n_steps + 1 nodes, endpoints fixed
  double newton_residual = 0.0;   // max |m (x+ - 2x + x-)/eps^2 - V'(x)|
  double energy = 0.0;            // sum of step energies at the minimizer
  int iterations = 0;
  bool used_gradient_fallback = false;  // Hessian went indefinite
};

PathResult classical_path(const PathProblem& problem);

// --- Pointer-based momentum measurement -------------------------------------

struct PointerSetup {
  std::vector<double> k_values;            // wavenumber grid
  std::vector<Complex> amplitudes;         // c_k, normalized internally
  double sigma = 0.05;                     // pointer width
  double coupling_g = 1.0;
  double interaction_tau = 1.0;
  double hbar_cycle = 1.0;
  Grid pointer_grid;
};

struct PointerResult {
  Vector marginal;                      // P_dev(X) on the pointer grid
  std::vector<double> peak_positions;   // g tau hbar k
  std::vector<double> weights;          // |c_k|^2 / norm
  std::vector<double> recovered_weights;  // integrated peak masses
  double max_weight_error = 0.0;
};

PointerResult momentum_measurement(const PointerSetup& setup);

// --- Coin decomposition ------------------------------------------------------

struct CoinResult {
  double exact_heads = 0.0;
  double exact_tails = 0.0;
  double flip_probability = 0.0;   // 1 - 2p applied to stage-1 tails
  long long heads = 0;
  long long tails = 0;
  long long n_samples = 0;
  std::uint64_t seed = 0;
  double empirical_heads = 0.0;
  double binomial_sigma = 0.0;     // std of the empirical frequency
};

CoinResult coin_two_stage(double p, long long n_samples, std::uint64_t seed);

// --- Drift / moving-frame diffusion checks -----------------------------------

struct DriftCheckResult {
  double sym_residual = 0.0;      // sup |D_s p / eps - (h/2 gamma) p''|
  double antisym_residual = 0.0;  // sup |D_a p / eps + v p'|
};

// Evaluated on a Gaussian test density over the central half of the grid.
DriftCheckResult drift_frame_check(double gamma, double v, double epsilon, double h_diff,
                                   const Grid& grid);

// Evolves a density n_steps with the drift kernel and compares against the
// driftless evolution transported by v t; returns the sup-norm gap on the
// central half of the grid.
double drift_transport_check(double gamma, double v, double epsilon, int n_steps, double h_diff,
                             const Grid& grid);

}  // namespace cycleqm
