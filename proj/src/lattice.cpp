#include "cycleqm/lattice.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cycleqm {

int Grid::nearest_index(double x) const {
  int i = static_cast<int>(std::lround((x - x_min) / dx));
  if (i < 0) i = 0;
  if (i >= n_points) i = n_points - 1;
  return i;
}

bool Grid::contains_point(double x, double rel_tol) const {
  const int i = nearest_index(x);
  return std::abs(point(i) - x) <= rel_tol * dx;
}

Vector Grid::points() const {
  Vector xs(n_points);
  for (int i = 0; i < n_points; ++i) xs[i] = point(i);
  return xs;
}

Grid make_grid(double x_min, double x_max, int n_points) {
  if (!(x_max > x_min))
    throw std::invalid_argument("make_grid: degenerate range, x_max must exceed x_min (got [" +
                                std::to_string(x_min) + ", " + std::to_string(x_max) + "])");
  if (n_points < 2)
    throw std::invalid_argument("make_grid: n_points must be >= 2 (got " +
                                std::to_string(n_points) + ")");
  Grid g;
  g.x_min = x_min;
  g.x_max = x_max;
  g.n_points = n_points;
  g.dx = (x_max - x_min) / static_cast<double>(n_points - 1);
  return g;
}

TimeMesh make_time_mesh(double epsilon, int n_steps) {
  if (!(epsilon > 0.0))
    throw std::invalid_argument("make_time_mesh: epsilon must be positive (got " +
                                std::to_string(epsilon) + ")");
  if (n_steps < 1)
    throw std::invalid_argument("make_time_mesh: n_steps must be >= 1 (got " +
                                std::to_string(n_steps) + ")");
  TimeMesh m;
  m.epsilon = epsilon;
  m.n_steps = n_steps;
  m.cycle_steps = 2 * n_steps;
  m.total_T = (m.cycle_steps + 1) * epsilon;
  return m;
}

double integrate(const Grid& grid, const Vector& values) {
  return values.sum() * grid.dx;
}

}  // namespace cycleqm
