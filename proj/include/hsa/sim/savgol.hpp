#pragma once

#include <cstddef>
#include <vector>

namespace hsa::sim {

// Number of samples in a Savitzky-Golay window of `window` seconds: the odd count
// 2 round(window / (2 dt)) + 1.
int savgol_window_length(double window, double dt);

// First derivative by local least-squares polynomial fits. Interior points use the
// centred window; the first and last half-windows reuse the window at the edge and
// evaluate the fit off-centre. Throws InvalidArgument if the window holds fewer than
// poly_order + 1 samples or the signal is shorter than the window.
std::vector<double> savgol_derivative(const std::vector<double>& signal, double window,
                                      int poly_order, double dt);

// Derivative at sample `eval` of a polynomial fit of degree min(poly_order, n - 1)
// through y[0..n). Used for causal (trailing-window) estimates; returns 0 for n < 2.
double local_poly_derivative(const double* y, std::size_t n, std::size_t eval, int poly_order,
                             double dt);

}  // namespace hsa::sim
