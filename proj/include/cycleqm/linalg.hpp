#pragma once

#include <Eigen/Dense>
#include <complex>

namespace cycleqm {

using Matrix  = Eigen::MatrixXd;
using Vector  = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

}  // namespace cycleqm
