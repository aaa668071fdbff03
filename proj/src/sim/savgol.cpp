#include "hsa/sim/savgol.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "hsa/error.hpp"

namespace hsa::sim {

namespace {

// Weights w such that sum_j w_j y_j is the fitted polynomial's derivative (per sample) at
// sample index `eval` of an n-sample window.
Eigen::VectorXd derivative_weights(std::size_t n, std::size_t eval, int order) {
  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd V(rows, order + 1);
  for (Eigen::Index j = 0; j < rows; ++j) {
    const double tau = static_cast<double>(j) - static_cast<double>(eval);
    double pw = 1.0;
    for (int c = 0; c <= order; ++c) {
      V(j, c) = pw;
      pw *= tau;
    }
  }
  // Row 1 of the pseudo-inverse gives the linear coefficient, i.e. dy/dtau at tau = 0.
  const Eigen::MatrixXd pinv = V.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(rows, rows));
  return pinv.row(1).transpose();
}

}  // namespace

int savgol_window_length(double window, double dt) {
  if (!(window > 0.0) || !(dt > 0.0)) {
    throw InvalidArgument("savgol: window and dt must be > 0");
  }
  return 2 * static_cast<int>(std::lround(window / (2.0 * dt))) + 1;
}

std::vector<double> savgol_derivative(const std::vector<double>& signal, double window,
                                      int poly_order, double dt) {
  if (poly_order < 1) throw InvalidArgument("savgol_derivative: poly_order must be >= 1");
  const int len = savgol_window_length(window, dt);
  if (len < poly_order + 1) {
    throw InvalidArgument("savgol_derivative: window spans fewer than poly_order + 1 samples");
  }
  const auto n = signal.size();
  const auto L = static_cast<std::size_t>(len);
  if (n < L) throw InvalidArgument("savgol_derivative: signal shorter than the window");

  const std::size_t half = L / 2;
  std::vector<double> out(n);
  const Eigen::VectorXd centre = derivative_weights(L, half, poly_order);
  for (std::size_t i = half; i + half < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < L; ++j) acc += centre(static_cast<Eigen::Index>(j)) * signal[i - half + j];
    out[i] = acc / dt;
  }
  for (std::size_t i = 0; i < half; ++i) {
    const Eigen::VectorXd w_head = derivative_weights(L, i, poly_order);
    const Eigen::VectorXd w_tail = derivative_weights(L, L - 1 - i, poly_order);
    double head = 0.0, tail = 0.0;
    for (std::size_t j = 0; j < L; ++j) {
      head += w_head(static_cast<Eigen::Index>(j)) * signal[j];
      tail += w_tail(static_cast<Eigen::Index>(j)) * signal[n - L + j];
    }
    out[i] = head / dt;
    out[n - 1 - i] = tail / dt;
  }
  return out;
}

double local_poly_derivative(const double* y, std::size_t n, std::size_t eval, int poly_order,
                             double dt) {
  if (n < 2) return 0.0;
  if (eval >= n) throw InvalidArgument("local_poly_derivative: eval index out of range");
  const int order = std::min<int>(poly_order, static_cast<int>(n) - 1);
  const Eigen::VectorXd w = derivative_weights(n, eval, order);
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) acc += w(static_cast<Eigen::Index>(j)) * y[j];
  return acc / dt;
}

}  // namespace hsa::sim
