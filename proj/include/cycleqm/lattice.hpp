#pragma once

#include "cycleqm/linalg.hpp"

namespace cycleqm {

// Uniform 1-d position grid. Point i sits at x_min + i*dx, with
// dx = (x_max - x_min)/(n_points - 1). Discrete state spaces (coins,
// two-level systems, toy chains) are grids with dx = 1.
struct Grid {
  double x_min = 0.0;
  double x_max = 1.0;
  int n_points = 2;
  double dx = 1.0;

  double point(int i) const { return x_min + i * dx; }
  int nearest_index(double x) const;
  bool contains_point(double x, double rel_tol = 1e-9) const;
  Vector points() const;
};

Grid make_grid(double x_min, double x_max, int n_points);

// Cycle time discretization: k = 2n steps of size epsilon, total
// duration T = (k + 1) * epsilon.
struct TimeMesh {
  double epsilon = 0.0;
  int n_steps = 0;
  int cycle_steps = 0;
  double total_T = 0.0;
};

TimeMesh make_time_mesh(double epsilon, int n_steps);

// Riemann quadrature of grid samples: sum(v) * dx.
double integrate(const Grid& grid, const Vector& values);

}  // namespace cycleqm
