#pragma once

namespace shs {

/// Exponentially scaled modified Bessel functions, e^{-z} I_0(z) and e^{-z} I_1(z),
/// for z >= 0. These appear when the angular part of a tangential Gaussian
/// convolution against a radial kernel is integrated out:
///   \int_0^{2pi} e^{-(r^2+rho^2-2 r rho cos θ)/(4t)} dθ
///     = 2 pi e^{-(r-rho)^2/(4t)} i0e(r rho / (2t)).
/// The scaled form stays bounded for arbitrarily large arguments where the
/// unscaled I_0 overflows.
double i0e(double z);
double i1e(double z);

/// d/dz of the scaled functions (used by radial derivative chains):
///   i0e'(z) = i1e(z) - i0e(z)
///   i1e'(z) = i0e(z) - i1e(z) (1 + 1/z), with the z -> 0 limit 1/2 handled.
double i0e_prime(double z);
double i1e_prime(double z);

/// e^{-z} I_n(z) for integer order n >= 0.
double ive(int n, double z);

/// out[m] = d^m/dz^m [e^{-z} I_0(z)] for m = 0..max_order (max_order <= 6),
/// assembled from d^m I_0 = 2^{-m} sum_k C(m,k) I_{|m-2k|}.
void i0e_deriv_stack(double z, int max_order, double* out);

}  // namespace shs
