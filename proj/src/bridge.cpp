#include "cycleqm/bridge.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "cycleqm/errors.hpp"

namespace cycleqm {

namespace {

double l1_distance(const Vector& a, const Vector& b, double w) {
  return (a - b).cwiseAbs().sum() * w;
}

void check_dims(const Vector& message, const Factor& factor, const char* who) {
  if (message.size() != factor.size())
    throw std::invalid_argument(std::string(who) + ": message size " +
                                std::to_string(message.size()) + " does not match factor size " +
                                std::to_string(factor.size()));
}

}  // namespace

Vector bp_forward(const Vector& message, const Factor& factor) {
  check_dims(message, factor, "bp_forward");
  return factor.apply(message);
}

Vector bp_backward(const Vector& message, const Factor& factor) {
  check_dims(message, factor, "bp_backward");
  return factor.apply_transpose(message);
}

Vector born_marginal(const MessagePair& pair, int step) {
  if (step < 0 || step >= pair.n_nodes())
    throw std::invalid_argument("born_marginal: step out of range");
  Vector p = pair.forward[step].cwiseProduct(pair.backward[step]);
  const double mass = p.sum() * pair.grid.dx;
  if (!(mass > 0.0)) throw NumericsError("born_marginal: all-zero Born product");
  return p / mass;
}

BridgeResult solve_bridge(const BridgeProblem& problem) {
  const int n = static_cast<int>(problem.factors.size());
  if (n < 1) throw std::invalid_argument("solve_bridge: empty factor chain");
  const int s = problem.grid.n_points;
  const double w = problem.grid.dx;
  if (problem.p0.size() != s || problem.pn.size() != s)
    throw std::invalid_argument("solve_bridge: endpoint marginals must match the grid");

  Vector p0 = problem.p0;
  Vector pn = problem.pn;
  for (Vector* p : {&p0, &pn}) {
    if (p->minCoeff() <= 0.0) {
      if (!problem.clip_zeros)
        throw NumericsError(
            "solve_bridge: endpoint marginals must be strictly positive "
            "(set clip_zeros to clip at 1e-30)");
      *p = p->cwiseMax(1e-30);
    }
  }

  MessagePair msgs;
  msgs.grid = problem.grid;
  msgs.forward.assign(n + 1, Vector::Ones(s));
  msgs.backward.assign(n + 1, Vector::Ones(s));
  for (int l = n - 1; l >= 0; --l)
    msgs.backward[l] = bp_backward(msgs.backward[l + 1], problem.factors[l]);

  BridgeResult result;
  for (int sweep = 1; sweep <= problem.max_iterations; ++sweep) {
    if (msgs.backward[0].minCoeff() <= 0.0)
      throw NumericsError("solve_bridge: zero-support backward message at node 0");
    msgs.forward[0] = p0.cwiseQuotient(msgs.backward[0]);
    for (int l = 0; l < n; ++l)
      msgs.forward[l + 1] = bp_forward(msgs.forward[l], problem.factors[l]);

    if (msgs.forward[n].minCoeff() <= 0.0)
      throw NumericsError("solve_bridge: zero-support forward message at node n");
    msgs.backward[n] = pn.cwiseQuotient(msgs.forward[n]);
    for (int l = n - 1; l >= 0; --l)
      msgs.backward[l] = bp_backward(msgs.backward[l + 1], problem.factors[l]);

    result.residual_initial = l1_distance(msgs.forward[0].cwiseProduct(msgs.backward[0]), p0, w);
    result.residual_final = l1_distance(msgs.forward[n].cwiseProduct(msgs.backward[n]), pn, w);
    result.sweeps = sweep;

    // Balance the gauge: push the overall scale into the log offsets so long
    // chains cannot drift out of double range.
    const double peak = msgs.forward[n].maxCoeff();
    if (peak > 0.0 && (peak > 1e50 || peak < 1e-50)) {
      const double c = std::sqrt(peak);
      for (Vector& v : msgs.forward) v /= c;
      for (Vector& v : msgs.backward) v *= c;
      msgs.log_offset_forward += std::log(c);
      msgs.log_offset_backward -= std::log(c);
    }

    if (result.residual_initial <= problem.tolerance &&
        result.residual_final <= problem.tolerance) {
      result.messages = std::move(msgs);
      return result;
    }
  }
  throw ConvergenceError("solve_bridge: no convergence after " +
                             std::to_string(problem.max_iterations) +
                             " sweeps; endpoint residuals " +
                             std::to_string(result.residual_initial) + " / " +
                             std::to_string(result.residual_final),
                         std::max(result.residual_initial, result.residual_final),
                         problem.max_iterations);
}

Matrix bridge_forward_transition(const MessagePair& pair, const Factor& factor, int step) {
  if (step < 0 || step + 1 >= pair.n_nodes())
    throw std::invalid_argument("bridge_forward_transition: step out of range");
  const Vector& bwd_next = pair.backward[step + 1];
  const Vector& bwd_here = pair.backward[step];
  Matrix t = factor.m;
  for (int j = 0; j < t.cols(); ++j) {
    if (bwd_here[j] <= 0.0)
      throw NumericsError("bridge_forward_transition: zero-support backward message");
    for (int i = 0; i < t.rows(); ++i) t(i, j) *= bwd_next[i] / bwd_here[j];
  }
  return t;
}

Matrix sqrt_markov_kernel(const Matrix& forward_transition, const Vector& p,
                          const Vector& p_next) {
  const int s = static_cast<int>(p.size());
  if (forward_transition.rows() != s || forward_transition.cols() != s ||
      p_next.size() != s)
    throw std::invalid_argument("sqrt_markov_kernel: dimension mismatch");
  const Vector propagated = forward_transition * p;
  const double residual = (propagated - p_next).cwiseAbs().sum();
  if (residual > 1e-10)
    throw NumericsError("sqrt_markov_kernel: marginals inconsistent with the transition "
                        "table, L1 residual " +
                        std::to_string(residual));
  Matrix k = Matrix::Zero(s, s);
  for (int j = 0; j < s; ++j)
    for (int i = 0; i < s; ++i) {
      if (forward_transition(i, j) <= 0.0) continue;
      if (p_next[i] <= 0.0) continue;
      // Bayes inversion: P-(x_l | x_{l+1}) = P+(x_{l+1} | x_l) p(x_l) / p(x_{l+1}).
      const double backward = forward_transition(i, j) * p[j] / p_next[i];
      k(i, j) = std::sqrt(forward_transition(i, j) * backward);
    }
  return k;
}

ContinuumResidual continuum_residual(const MessagePair& pair, const NonRelativistic& spec,
                                     double epsilon, double lambda, double total_T) {
  const int n = pair.n_nodes() - 1;
  if (n < 1) throw std::invalid_argument("continuum_residual: need at least one step");
  const double hbar = total_T / lambda;
  const Grid& g = pair.grid;
  const double dx2 = g.dx * g.dx;

  ContinuumResidual res;
  for (int l = 0; l < n; ++l) {
    const double t = l * epsilon;
    for (int i = 1; i + 1 < g.n_points; ++i) {
      const double V = spec.potential(g.point(i), t);
      const auto second = [&](const Vector& v) {
        return (v[i + 1] - 2.0 * v[i] + v[i - 1]) / dx2;
      };
      const double dmu_f = (pair.forward[l + 1][i] - pair.forward[l][i]) / epsilon;
      const double op_f =
          hbar * hbar / (2.0 * spec.mass) * second(pair.forward[l]) - V * pair.forward[l][i];
      res.forward = std::max(res.forward, std::abs(hbar * dmu_f - op_f));

      const double dmu_b = (pair.backward[l + 1][i] - pair.backward[l][i]) / epsilon;
      const double op_b =
          hbar * hbar / (2.0 * spec.mass) * second(pair.backward[l + 1]) -
          V * pair.backward[l + 1][i];
      res.backward = std::max(res.backward, std::abs(hbar * dmu_b + op_b));
    }
  }
  return res;
}

}  // namespace cycleqm
