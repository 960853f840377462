#pragma once

#include <span>

#include "stokeshs/types.hpp"

namespace shs {

/// d^k/dx^k d^m/dt^m of the 1-D heat kernel Gamma_1(x,t) = (4 pi t)^{-1/2} e^{-x^2/(4t)}.
/// Identically 0 for t <= 0. Spatial derivatives use the Hermite recursion;
/// time derivatives are converted to spatial ones through d_t = d_x^2.
double gamma1(double x, double t, int k = 0, int m = 0);

/// out[k] = d^k/dx^k Gamma_1(x,t) for k = 0..max_k in one Hermite sweep.
void gamma1_stack(double x, double t, int max_k, double* out);

/// Derivative of the n-dimensional heat kernel Gamma(x,t) = prod_j Gamma_1(x_j,t).
/// x has n entries (x', x_n); d.l applies to the first n-1 coordinates, d.k to
/// the last, d.m to time. Time derivatives are realized as Delta^m distributed
/// over the product factors (the Leibniz route agrees; see tests).
double heat_kernel(std::span<const double> x, double t, const DerivMultiIndex& d);

/// Spatial derivative (|d| <= 3) of the fundamental solution E of -Delta:
/// E = |x|^{2-n} / (n(n-2)|B_1|) for n >= 3, E = -(2 pi)^{-1} log|x| for n = 2.
double laplace_E(std::span<const double> x, std::span<const int> d);

/// Volume of the unit ball in R^n.
double unit_ball_volume(int n);

/// 1/(n(n-2)|B_1|), the constant in E for n >= 3.
double laplace_E_constant(int n);

namespace kernel_detail {
/// phi-stack for E as a function of s = |x|^2: returns phi^{(0..3)}(s).
void laplace_phi_stack(int n, double s, double out[4]);
}  // namespace kernel_detail

}  // namespace shs
