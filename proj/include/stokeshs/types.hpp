#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace shs {

/// Ambient dimension n of the half-space R^n_+. Kernel evaluation accepts any
/// n >= 2; the quadrature-backed potential and solution paths support n in {2,3}.
struct Dimension {
    int n;
    explicit Dimension(int n_) : n(n_) {
        if (n < 2) throw std::invalid_argument("Dimension: n must be >= 2");
    }
    int tangential() const { return n - 1; }
};

/// Point (x', x_n, t) in the closed half-space times time.
struct SpaceTimePoint {
    std::vector<double> x_prime;  // n-1 tangential coordinates
    double x_n = 0.0;             // normal coordinate, >= 0
    double t = 0.0;

    SpaceTimePoint() = default;
    SpaceTimePoint(std::vector<double> xp, double xn, double time)
        : x_prime(std::move(xp)), x_n(xn), t(time) {
        if (x_n < 0) throw std::invalid_argument("SpaceTimePoint: x_n must be >= 0");
    }
    int dim() const { return static_cast<int>(x_prime.size()) + 1; }
    double radius2() const {
        double s = x_n * x_n;
        for (double v : x_prime) s += v * v;
        return s;
    }
    double tangential_radius() const {
        double s = 0;
        for (double v : x_prime) s += v * v;
        return std::sqrt(s);
    }
};

/// Derivative multi-index: l over tangential coordinates, k normal, m temporal.
/// Parabolic order |l| + k + 2m is capped to keep the closed-form recursions cheap.
struct DerivMultiIndex {
    std::vector<int> l;  // size n-1
    int k = 0;
    int m = 0;

    DerivMultiIndex() = default;
    DerivMultiIndex(std::vector<int> l_, int k_, int m_) : l(std::move(l_)), k(k_), m(m_) {}

    static DerivMultiIndex none(int n) { return DerivMultiIndex(std::vector<int>(n - 1, 0), 0, 0); }

    int l_total() const {
        int s = 0;
        for (int v : l) s += v;
        return s;
    }
    int parabolic_order() const { return l_total() + k + 2 * m; }
    bool is_zero() const { return l_total() == 0 && k == 0 && m == 0; }
    void validate(int max_order = 4) const {
        for (int v : l)
            if (v < 0) throw std::invalid_argument("DerivMultiIndex: negative entry");
        if (k < 0 || m < 0) throw std::invalid_argument("DerivMultiIndex: negative entry");
        if (parabolic_order() > max_order)
            throw std::invalid_argument("DerivMultiIndex: order above configured cap");
    }
};

struct NonConvergence : std::runtime_error {
    double value;
    double err_est;
    NonConvergence(const std::string& what, double v, double e)
        : std::runtime_error(what), value(v), err_est(e) {}
};

struct DimensionUnsupported : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SingularPoint : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateDivision : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonDifferentiable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RegionViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace shs
