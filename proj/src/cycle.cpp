#include "cycleqm/cycle.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "cycleqm/errors.hpp"

namespace cycleqm {

namespace {

// Running max-rescaled kernel product; scale drift goes into log_scale so the
// matrices stay O(1) no matter how long the cycle is.
struct ScaledKernel {
  Matrix m;
  double log_scale = 0.0;

  void rescale() {
    const double peak = m.cwiseAbs().maxCoeff();
    if (peak > 0.0 && (peak > 1e100 || peak < 1e-100)) {
      m /= peak;
      log_scale += std::log(peak);
    }
  }
};

ScaledKernel ordered_product(const std::vector<Factor>& factors, int begin, int end, double w,
                             int n) {
  // F_{end-1} o ... o F_{begin}; identity kernel if the range is empty.
  ScaledKernel acc{Matrix::Identity(n, n) / w, 0.0};
  for (int l = begin; l < end; ++l) {
    acc.m = factors[l].m * acc.m * w;
    acc.rescale();
  }
  return acc;
}

}  // namespace

CycleModel make_cycle_model(std::vector<Factor> factors, double lambda, const TimeMesh& mesh,
                            const Grid& grid) {
  if (factors.empty() || factors.size() % 2 != 0)
    throw std::invalid_argument("make_cycle_model: factor count must be even and non-zero");
  if (static_cast<int>(factors.size()) != mesh.cycle_steps)
    throw std::invalid_argument("make_cycle_model: factor count " +
                                std::to_string(factors.size()) + " does not match mesh k = " +
                                std::to_string(mesh.cycle_steps));
  for (const Factor& f : factors)
    if (f.size() != grid.n_points)
      throw std::invalid_argument("make_cycle_model: all factors must share the model grid");
  if (!(lambda > 0.0)) throw std::invalid_argument("make_cycle_model: lambda must be positive");

  CycleModel model;
  model.factors = std::move(factors);
  model.grid = grid;
  model.lambda = lambda;
  model.total_T = mesh.total_T;
  model.hbar_cycle = mesh.total_T / lambda;
  model.epsilon = mesh.epsilon;

  ScaledKernel full = ordered_product(model.factors, 0, model.k(), grid.dx, grid.n_points);
  const double tr = full.m.trace() * grid.dx;
  if (!(tr > 0.0)) throw NumericsError("make_cycle_model: non-positive cycle normalization");
  model.log_Z = std::log(tr) + full.log_scale;
  return model;
}

CycleModel maxcal_cycle(const std::vector<EnergySpec>& energy_specs, double lambda,
                        const TimeMesh& mesh, const Grid& grid) {
  if (!(lambda > 0.0)) throw std::invalid_argument("maxcal_cycle: lambda must be positive");
  const int k = mesh.cycle_steps;
  if (energy_specs.size() != 1 && static_cast<int>(energy_specs.size()) != k)
    throw std::invalid_argument("maxcal_cycle: need 1 or k = " + std::to_string(k) +
                                " energy specs, got " + std::to_string(energy_specs.size()));
  const double hbar = mesh.total_T / lambda;
  std::vector<Factor> factors;
  factors.reserve(k);
  for (int l = 0; l < k; ++l) {
    const EnergySpec& spec = energy_specs.size() == 1 ? energy_specs[0] : energy_specs[l];
    factors.push_back(build_factor(spec, grid, mesh.epsilon, hbar, l * mesh.epsilon));
  }
  return make_cycle_model(std::move(factors), lambda, mesh, grid);
}

double cycle_path_prob(const CycleModel& model, const std::vector<int>& path) {
  const int k = model.k();
  if (static_cast<int>(path.size()) != k)
    throw std::invalid_argument("cycle_path_prob: path length " + std::to_string(path.size()) +
                                " does not match k = " + std::to_string(k));
  double log_w = 0.0;
  for (int l = 0; l < k; ++l) {
    const double f = model.factors[l].m(path[(l + 1) % k], path[l]);
    if (f <= 0.0) return 0.0;
    log_w += std::log(f);
  }
  log_w += k * std::log(model.grid.dx);
  return std::exp(log_w - model.log_Z);
}

ProbabilityMatrix marginal_matrix(const CycleModel& model, int step) {
  const int k = model.k();
  if (step < 0 || step > k)
    throw std::invalid_argument("marginal_matrix: step must lie in [0, k]");
  const int l = step % k;
  const double w = model.grid.dx;
  const int n = model.n_states();

  ScaledKernel prefix = ordered_product(model.factors, 0, l, w, n);
  ScaledKernel suffix = ordered_product(model.factors, l, k, w, n);
  Matrix P = prefix.m * suffix.m * w;
  const double tr = P.trace() * w;
  if (!(tr > 0.0)) throw NumericsError("marginal_matrix: non-positive trace");
  ProbabilityMatrix out;
  out.P = P / tr;
  out.weight = w;
  out.step_index = step;
  return out;
}

ProbabilityMatrix step_probability_matrix(const ProbabilityMatrix& P, const Factor& factor,
                                          double condition_limit) {
  if (factor.size() != P.P.rows())
    throw std::invalid_argument("step_probability_matrix: dimension mismatch");
  const Matrix A = factor.op();
  Eigen::PartialPivLU<Matrix> lu(A);
  const Matrix Ainv = lu.inverse();
  const double cond = A.cwiseAbs().colwise().sum().maxCoeff() *
                      Ainv.cwiseAbs().colwise().sum().maxCoeff();
  if (!(cond < condition_limit))
    throw SingularFactorError("step_probability_matrix: factor condition estimate " +
                                  std::to_string(cond) + " exceeds guard " +
                                  std::to_string(condition_limit) +
                                  "; fall back to marginal_matrix products",
                              cond);
  ProbabilityMatrix out = P;
  out.P = A * P.P * Ainv;
  out.step_index = P.step_index + 1;
  return out;
}

ProbabilityMatrix imaginary_vn_step(const ProbabilityMatrix& P, const DynamicalMatrix& J,
                                    double epsilon) {
  ProbabilityMatrix out = P;
  out.P = P.P + epsilon * commutator(J.J, P.P, P.weight);
  out.step_index = P.step_index + 1;
  return out;
}

std::vector<Factor> mirror_factors(const std::vector<Factor>& external) {
  const int n = static_cast<int>(external.size());
  std::vector<Factor> full(2 * n, external.empty() ? Factor{} : external[0]);
  for (int l = 0; l < n; ++l) {
    full[l] = external[l];
    full[2 * n - 1 - l] = external[l].transpose();
  }
  return full;
}

Factor internal_half_kernel(const CycleModel& model) {
  ScaledKernel s =
      ordered_product(model.factors, model.n(), model.k(), model.grid.dx, model.n_states());
  Factor f = Factor::from_matrix(s.m * std::exp(s.log_scale), model.grid);
  return f;
}

double BernsteinForm::reconstruct_path_prob(const std::vector<int>& external_path) const {
  const int n = static_cast<int>(conditionals.size()) + 1;  // steps on the external half
  if (static_cast<int>(external_path.size()) != n + 1)
    throw std::invalid_argument("BernsteinForm: external path must have n + 1 nodes");
  const int xn = external_path.back();
  double p = endpoint_joint(external_path[0], xn);
  for (int l = 0; l + 1 < n; ++l)
    p *= conditionals[l][xn](external_path[l + 1], external_path[l]);
  return p;
}

BernsteinForm bernstein_decompose(const CycleModel& model) {
  const int n = model.n();
  const int s = model.n_states();
  const double w = model.grid.dx;
  if (std::pow(static_cast<double>(s), n + 1) > 1e7)
    throw std::invalid_argument("bernstein_decompose: enumeration budget exceeded (" +
                                std::to_string(s) + " states over " + std::to_string(n + 1) +
                                " nodes)");

  const Factor ftilde = internal_half_kernel(model);

  // Prefixes A_l (x_l <- x_0) and suffixes B_l (x_n <- x_l) of the external chain.
  std::vector<Matrix> A(n + 1), B(n + 1);
  A[0] = Matrix::Identity(s, s) / w;
  for (int l = 0; l < n; ++l) A[l + 1] = model.factors[l].m * A[l] * w;
  B[n] = Matrix::Identity(s, s) / w;
  for (int l = n - 1; l >= 0; --l) B[l] = B[l + 1] * model.factors[l].m * w;

  BernsteinForm form;
  // Endpoint joint mass p(x0, xn) prop. to Ftilde(x0, xn) * B_0(xn, x0).
  form.endpoint_joint.resize(s, s);
  for (int x0 = 0; x0 < s; ++x0)
    for (int xn = 0; xn < s; ++xn)
      form.endpoint_joint(x0, xn) = ftilde.m(x0, xn) * B[0](xn, x0);
  const double total = form.endpoint_joint.sum();
  if (!(total > 0.0)) throw NumericsError("bernstein_decompose: cycle has no support");
  form.endpoint_joint /= total;

  // P_l(x_{l+1} | x_l, xn) prop. to B_{l+1}(xn, x_{l+1}) F_l(x_{l+1}, x_l).
  form.conditionals.resize(n > 1 ? n - 1 : 0);
  for (int l = 0; l + 1 < n; ++l) {
    form.conditionals[l].assign(s, Matrix::Zero(s, s));
    for (int xn = 0; xn < s; ++xn) {
      Matrix& cond = form.conditionals[l][xn];
      for (int xl = 0; xl < s; ++xl) {
        double mass = 0.0;
        for (int xl1 = 0; xl1 < s; ++xl1) {
          cond(xl1, xl) = B[l + 1](xn, xl1) * model.factors[l].m(xl1, xl);
          mass += cond(xl1, xl);
        }
        if (mass > 0.0) cond.col(xl) /= mass;
      }
    }
  }
  return form;
}

}  // namespace cycleqm
