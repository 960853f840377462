#include "stokeshs/bessel.hpp"

#include <cmath>
#include <stdexcept>

namespace shs {

namespace {

// Power series of I_nu truncated when terms stop contributing. Used for
// moderate z where exp(-z) does not underflow the result badly.
double i0_series(double z) {
    const double q = 0.25 * z * z;
    double term = 1.0, sum = 1.0;
    for (int m = 1; m < 200; ++m) {
        term *= q / (static_cast<double>(m) * m);
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

double i1_series(double z) {
    const double q = 0.25 * z * z;
    double term = 0.5 * z, sum = term;
    for (int m = 1; m < 200; ++m) {
        term *= q / (static_cast<double>(m) * (m + 1));
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

// Asymptotic expansion e^{-z} I_nu(z) ~ (2 pi z)^{-1/2} sum_k a_k(nu)/z^k,
// a_k(nu) = prod_{j=1..k} (4 nu^2 - (2j-1)^2) / (8 j). Truncated at the
// smallest term; for z >= 30 the truncation error is below 1e-16.
double ive_asymptotic(double nu, double z) {
    const double mu = 4.0 * nu * nu;
    double term = 1.0, sum = 1.0;
    double prev = 1e300;
    for (int k = 1; k < 30; ++k) {
        const double f = (mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * k * z);
        term *= -f;
        if (std::abs(term) > prev) break;  // divergence onset
        sum += term;
        prev = std::abs(term);
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum / std::sqrt(2.0 * M_PI * z);
}

constexpr double kSeriesCut = 30.0;

}  // namespace

double i0e(double z) {
    if (z < 0) throw std::invalid_argument("i0e: z must be >= 0");
    if (z < kSeriesCut) return std::exp(-z) * i0_series(z);
    return ive_asymptotic(0.0, z);
}

double i1e(double z) {
    if (z < 0) throw std::invalid_argument("i1e: z must be >= 0");
    if (z < kSeriesCut) return std::exp(-z) * i1_series(z);
    return ive_asymptotic(1.0, z);
}

double i0e_prime(double z) { return i1e(z) - i0e(z); }

double i1e_prime(double z) {
    if (z < 1e-8) {
        // i1e(z) = z/2 - z^2/2 + ... ; derivative -> 1/2 - z + O(z^2)
        return 0.5 - z;
    }
    return i0e(z) - i1e(z) * (1.0 + 1.0 / z);
}

double ive(int n, double z) {
    if (n < 0) throw std::invalid_argument("ive: order must be >= 0");
    if (z < 0) throw std::invalid_argument("ive: z must be >= 0");
    if (z < kSeriesCut) {
        const double q = 0.25 * z * z;
        double term = 1.0;
        for (int j = 1; j <= n; ++j) term *= 0.5 * z / j;
        double sum = term;
        for (int m = 1; m < 250 && term != 0.0; ++m) {
            term *= q / (static_cast<double>(m) * (m + n));
            sum += term;
            if (term < 1e-18 * sum) break;
        }
        return std::exp(-z) * sum;
    }
    return ive_asymptotic(static_cast<double>(n), z);
}

void i0e_deriv_stack(double z, int max_order, double* out) {
    if (max_order < 0 || max_order > 6) throw std::invalid_argument("i0e_deriv_stack: order 0..6");
    double iv[7];
    for (int n = 0; n <= max_order; ++n) iv[n] = ive(n, z);
    // d^m/dz^m I_0 = 2^{-m} sum_k C(m,k) I_{|m-2k|}; fold e^{-z} by Leibniz.
    double di0[7];  // scaled d^m I_0, i.e. e^{-z} (d^m I_0)(z)
    double binom[7][7] = {};
    for (int m = 0; m <= 6; ++m) {
        binom[m][0] = 1.0;
        for (int k = 1; k <= m; ++k)
            binom[m][k] = binom[m - 1][k - 1] + ((k <= m - 1) ? binom[m - 1][k] : 0.0);
    }
    for (int m = 0; m <= max_order; ++m) {
        double s = 0.0;
        for (int k = 0; k <= m; ++k) s += binom[m][k] * iv[std::abs(m - 2 * k)];
        di0[m] = std::ldexp(s, -m);
    }
    for (int m = 0; m <= max_order; ++m) {
        double s = 0.0;
        for (int j = 0; j <= m; ++j) {
            const double sign = ((m - j) % 2 == 0) ? 1.0 : -1.0;
            s += binom[m][j] * sign * di0[j];
        }
        out[m] = s;
    }
}

}  // namespace shs
