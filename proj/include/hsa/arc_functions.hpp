#pragma once

#include <cmath>

namespace hsa::detail {

// The planar constant-strain pose at arclength s is
//   p(s) = s * [ S(x)  -C(x) ] [ sigma_x ]      x = kappa * s
//              [ C(x)   S(x) ] [ sigma_y ]
// with S(x) = sin(x)/x and C(x) = (1 - cos(x))/x. Dynamics needs the first two
// derivatives as well; the closed forms cancel catastrophically near x = 0, so
// below |x| < 1 the Taylor series is summed instead (terms decay like 1/n!).
struct ArcFunctions {
  double S, dS, ddS;
  double C, dC, ddC;
};

inline ArcFunctions arc_functions(double x) {
  ArcFunctions f{};
  if (std::abs(x) >= 1.0) {
    const double s = std::sin(x), c = std::cos(x);
    const double x2 = x * x, x3 = x2 * x;
    f.S = s / x;
    f.dS = (x * c - s) / x2;
    f.ddS = (-x2 * s - 2.0 * x * c + 2.0 * s) / x3;
    f.C = (1.0 - c) / x;
    f.dC = (x * s - (1.0 - c)) / x2;
    f.ddC = (x2 * c - 2.0 * x * s + 2.0 * (1.0 - c)) / x3;
    return f;
  }
  // S(x) = sum_k (-1)^k x^(2k) / (2k+1)!,  C(x) = sum_k (-1)^k x^(2k+1) / (2k+2)!
  constexpr int kTerms = 11;
  double fact = 1.0;     // (2k+1)!
  double xn = 1.0;       // x^(2k)
  double xn_prev = 0.0;  // x^(2k-2)
  double sign = 1.0;
  for (int k = 0; k < kTerms; ++k) {
    const int n = 2 * k;
    if (k > 0) fact *= static_cast<double>(n) * (n + 1);
    const double a = sign / fact;              // coefficient of x^n in S
    const double b = sign / (fact * (n + 2));  // coefficient of x^(n+1) in C
    f.S += a * xn;
    f.dS += a * n * xn_prev * x;
    f.ddS += a * n * (n - 1) * xn_prev;
    f.C += b * xn * x;
    f.dC += b * (n + 1) * xn;
    f.ddC += b * (n + 1) * n * xn_prev * x;
    xn_prev = xn;
    xn *= x * x;
    sign = -sign;
  }
  return f;
}

}  // namespace hsa::detail
