#include "stokeshs/kernels.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace shs {

double gamma1(double x, double t, int k, int m) {
    if (k < 0 || m < 0) throw std::invalid_argument("gamma1: orders must be >= 0");
    if (t <= 0.0) return 0.0;
    const int K = k + 2 * m;  // d_t = d_x^2 for the 1-D kernel
    const double u = x / (2.0 * std::sqrt(t));
    const double expo = -u * u;
    if (expo < -745.0) return 0.0;  // below smallest normal: truncate to exact 0
    const double base = std::exp(expo) / std::sqrt(4.0 * M_PI * t);
    if (K == 0) return base;
    // physicists' Hermite polynomials: d^K/du^K e^{-u^2} = (-1)^K H_K(u) e^{-u^2}
    double hm1 = 1.0, h = 2.0 * u;
    const double inv = -0.5 / std::sqrt(t);
    double scale = inv;
    for (int j = 1; j < K; ++j) {
        const double hp = 2.0 * u * h - 2.0 * j * hm1;
        hm1 = h;
        h = hp;
        scale *= inv;
    }
    return base * h * scale;
}

void gamma1_stack(double x, double t, int max_k, double* out) {
    if (t <= 0.0) {
        for (int k = 0; k <= max_k; ++k) out[k] = 0.0;
        return;
    }
    const double u = x / (2.0 * std::sqrt(t));
    const double expo = -u * u;
    if (expo < -745.0) {
        for (int k = 0; k <= max_k; ++k) out[k] = 0.0;
        return;
    }
    const double base = std::exp(expo) / std::sqrt(4.0 * M_PI * t);
    out[0] = base;
    if (max_k == 0) return;
    const double inv = -0.5 / std::sqrt(t);
    double hm1 = 1.0, h = 2.0 * u, scale = inv;
    out[1] = base * h * scale;
    for (int k = 2; k <= max_k; ++k) {
        const double hp = 2.0 * u * h - 2.0 * (k - 1) * hm1;
        hm1 = h;
        h = hp;
        scale *= inv;
        out[k] = base * h * scale;
    }
}

double heat_kernel(std::span<const double> x, double t, const DerivMultiIndex& d) {
    const int n = static_cast<int>(x.size());
    if (n < 2) throw std::invalid_argument("heat_kernel: need n >= 2 coordinates");
    if (static_cast<int>(d.l.size()) != n - 1)
        throw std::invalid_argument("heat_kernel: multi-index size mismatch");
    if (t <= 0.0) return 0.0;

    std::vector<int> base_order(n);
    for (int j = 0; j < n - 1; ++j) base_order[j] = d.l[j];
    base_order[n - 1] = d.k;

    if (d.m == 0) {
        double prod = 1.0;
        for (int j = 0; j < n; ++j) {
            prod *= gamma1(x[j], t, base_order[j], 0);
            if (prod == 0.0) return 0.0;
        }
        return prod;
    }

    // Delta^m expanded multinomially over coordinates: each composition
    // (m_1,...,m_n) of m contributes m!/(prod m_j!) with 2 m_j extra
    // x_j-derivatives on factor j.
    double sum = 0.0;
    std::vector<int> comp(n, 0);
    double mfact = 1.0;
    for (int j = 2; j <= d.m; ++j) mfact *= j;
    auto factorial = [](int v) {
        double f = 1.0;
        for (int j = 2; j <= v; ++j) f *= j;
        return f;
    };
    // enumerate compositions recursively
    std::function<void(int, int)> rec = [&](int idx, int rem) {
        if (idx == n - 1) {
            comp[idx] = rem;
            double coef = mfact;
            for (int j = 0; j < n; ++j) coef /= factorial(comp[j]);
            double prod = coef;
            for (int j = 0; j < n && prod != 0.0; ++j)
                prod *= gamma1(x[j], t, base_order[j] + 2 * comp[j], 0);
            sum += prod;
            return;
        }
        for (int v = 0; v <= rem; ++v) {
            comp[idx] = v;
            rec(idx + 1, rem - v);
        }
    };
    rec(0, d.m);
    return sum;
}

double unit_ball_volume(int n) {
    return std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

double laplace_E_constant(int n) {
    if (n < 3) throw std::invalid_argument("laplace_E_constant: requires n >= 3");
    return 1.0 / (n * (n - 2) * unit_ball_volume(n));
}

namespace kernel_detail {

void laplace_phi_stack(int n, double s, double out[4]) {
    if (n == 2) {
        const double c = -1.0 / (4.0 * M_PI);
        out[0] = c * std::log(s);
        out[1] = c / s;
        out[2] = -c / (s * s);
        out[3] = 2.0 * c / (s * s * s);
        return;
    }
    const double p = 0.5 * (2.0 - n);
    const double c = laplace_E_constant(n);
    out[0] = c * std::pow(s, p);
    out[1] = c * p * std::pow(s, p - 1.0);
    out[2] = c * p * (p - 1.0) * std::pow(s, p - 2.0);
    out[3] = c * p * (p - 1.0) * (p - 2.0) * std::pow(s, p - 3.0);
}

}  // namespace kernel_detail

double laplace_E(std::span<const double> x, std::span<const int> d) {
    const int n = static_cast<int>(x.size());
    if (n < 2) throw std::invalid_argument("laplace_E: need n >= 2");
    if (static_cast<int>(d.size()) != n) throw std::invalid_argument("laplace_E: index size mismatch");
    double s = 0.0;
    for (double v : x) s += v * v;
    if (s == 0.0) throw SingularPoint("laplace_E: evaluation at the origin");

    int order = 0;
    std::vector<int> idx;
    for (int j = 0; j < n; ++j) {
        if (d[j] < 0) throw std::invalid_argument("laplace_E: negative derivative order");
        order += d[j];
        for (int r = 0; r < d[j]; ++r) idx.push_back(j);
    }
    if (order > 3) throw std::invalid_argument("laplace_E: derivative order above 3");

    double phi[4];
    kernel_detail::laplace_phi_stack(n, s, phi);
    switch (order) {
        case 0:
            return phi[0];
        case 1:
            return 2.0 * x[idx[0]] * phi[1];
        case 2: {
            const int i = idx[0], j = idx[1];
            return 4.0 * x[i] * x[j] * phi[2] + (i == j ? 2.0 * phi[1] : 0.0);
        }
        default: {
            const int i = idx[0], j = idx[1], k = idx[2];
            double delta_part = 0.0;
            if (i == j) delta_part += x[k];
            if (i == k) delta_part += x[j];
            if (j == k) delta_part += x[i];
            return 8.0 * x[i] * x[j] * x[k] * phi[3] + 4.0 * delta_part * phi[2];
        }
    }
}

}  // namespace shs
