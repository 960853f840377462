#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "stokeshs/bessel.hpp"
#include "stokeshs/kernels.hpp"
#include "stokeshs/potentials.hpp"
#include "stokeshs/radial.hpp"

using namespace shs;

namespace {

QuadratureSpec tol(double abs, double rel) {
    QuadratureSpec s;
    s.abs_tol = abs;
    s.rel_tol = rel;
    s.max_subdivisions = 20000;
    return s;
}

SpaceTimePoint pt3(double x1, double x2, double xn, double t) {
    return SpaceTimePoint({x1, x2}, xn, t);
}

DerivMultiIndex d3(int l1, int l2, int k, int m) { return DerivMultiIndex({l1, l2}, k, m); }

}  // namespace

TEST_CASE("radial chain helpers against finite differences") {
    // radial test function F(r) = exp(-r^2/3) + 1/(1+r^2), analytic stack
    auto F = [](double r) { return std::exp(-r * r / 3.0) + 1.0 / (1.0 + r * r); };
    auto Fstack = [&](double r, double* out) {
        const double e = std::exp(-r * r / 3.0);
        const double q = 1.0 + r * r;
        out[0] = e + 1.0 / q;
        out[1] = -2.0 * r / 3.0 * e - 2.0 * r / (q * q);
        out[2] = (-2.0 / 3.0 + 4.0 * r * r / 9.0) * e + (6.0 * r * r - 2.0) / (q * q * q);
        out[3] = (4.0 * r / 3.0 - 8.0 * r * r * r / 27.0) * e +
                 24.0 * r * (1.0 - r * r) / std::pow(q, 4);
        out[4] = (4.0 / 3.0 - 16.0 * r * r / 9.0 + 16.0 * std::pow(r, 4) / 81.0) * e +
                 (24.0 - 240.0 * r * r + 120.0 * std::pow(r, 4)) / std::pow(q, 5);
    };
    const double x1 = 0.8, x2 = -0.6;
    const double r = std::hypot(x1, x2);
    double st[5];
    Fstack(r, st);
    auto chain = RadialChain::from_stack(std::span<const double>(st, 5), r, 4);

    // compare with direct 2-D finite differences of F(|w|)
    auto F2 = [&](double a, double b) { return F(std::hypot(a, b)); };
    const double h = 1e-3;
    const double d1 = (F2(x1 + h, x2) - F2(x1 - h, x2)) / (2 * h);
    CHECK(chain.deriv(x1, x2, 1, 0) == doctest::Approx(d1).epsilon(1e-6));
    const double d11 = (F2(x1 + h, x2) - 2 * F2(x1, x2) + F2(x1 - h, x2)) / (h * h);
    CHECK(chain.deriv(x1, x2, 2, 0) == doctest::Approx(d11).epsilon(1e-5));
    const double d12 = (F2(x1 + h, x2 + h) - F2(x1 + h, x2 - h) - F2(x1 - h, x2 + h) +
                        F2(x1 - h, x2 - h)) /
                       (4 * h * h);
    CHECK(chain.deriv(x1, x2, 1, 1) == doctest::Approx(d12).epsilon(1e-5));
    // third order mixed (2,1)
    const double d112 = (F2(x1 + h, x2 + h) - 2 * F2(x1, x2 + h) + F2(x1 - h, x2 + h) -
                         F2(x1 + h, x2 - h) + 2 * F2(x1, x2 - h) - F2(x1 - h, x2 - h)) /
                        (2 * h * h * h);
    CHECK(chain.deriv(x1, x2, 2, 1) == doctest::Approx(d112).epsilon(2e-4));
}

TEST_CASE("W profile: closed form vs radial quadrature vs direct n=2 analogue") {
    auto spec = tol(1e-12, 1e-12);
    TangentialEProfile Wc(3, TangentialEProfile::Backend::Closed3d, spec);
    TangentialEProfile Wq(3, TangentialEProfile::Backend::RadialQuad3d, spec);
    for (double r : {0.0, 0.4, 1.5, 4.0}) {
        for (double t : {0.05, 0.3, 1.0}) {
            double sc[5], sq[5];
            Wc.r_stack(r, t, 4, sc);
            Wq.r_stack(r, t, 4, sq);
            double scale = 0.0;
            for (int m = 0; m <= 4; ++m) scale = std::max(scale, std::abs(sc[m]));
            for (int m = 0; m <= 4; ++m) CHECK(std::abs(sc[m] - sq[m]) <= 1e-8 * scale);
        }
    }
    // s-chain consistency: d/ds W = W_r/(2r)
    double st[3], ss[2];
    Wc.r_stack(1.3, 0.4, 2, st);
    Wc.s_stack(1.3 * 1.3, 0.4, 1, ss);
    CHECK(ss[0] == doctest::Approx(st[0]).epsilon(1e-13));
    CHECK(ss[1] == doctest::Approx(st[1] / (2.0 * 1.3)).epsilon(1e-12));
}

TEST_CASE("K radial quadrature vs 2-D oracle and closed form") {
    auto spec = tol(1e-12, 1e-11);
    // spec example point: x' = (3,0), t = 0.1
    const std::array<double, 2> xp = {3.0, 0.0};
    const double K = K_eval(xp, 0.1, spec);

    // oracle: 2-D adaptive quadrature in polar coordinates about z' = 0
    auto f = [&](std::span<const double> p) {
        const double rho = p[0], th = p[1];
        const double dx = 3.0 - rho * std::cos(th), dy = -rho * std::sin(th);
        return std::exp(-(dx * dx + dy * dy) / 0.4);  // |z'|^{-1} * rho = 1
    };
    const double R = gaussian_truncation_radius(0.1, 1.0, spec, 2.0);
    Box box{{{0.0, 3.0 + R}, {0.0, 2.0 * M_PI}}};
    const double Kref = integrate_nd(f, box, tol(1e-12, 1e-10)).value;
    CHECK(K == doctest::Approx(Kref).epsilon(1e-9));
    CHECK(K == doctest::Approx(K_closed3(3.0, 0.1)).epsilon(1e-10));
}

TEST_CASE("K bounds from the kernel comparison lemma, m = 2") {
    auto spec = tol(1e-12, 1e-11);
    const double r = 3.0, s = 0.1;
    const int n = 3;
    const std::array<double, 2> xp = {r, 0.0};
    const double K = K_eval(xp, s, spec);
    const double m = 2.0;
    const double lower = std::pow(m / ((m + 1.0) * r), n - 2) * std::pow(s, 0.5 * (n - 1)) *
                         std::pow(4.0 * M_PI, 0.5 * (n - 1)) *
                         (1.0 - std::pow(2.0, 0.25 * (n - 1)) *
                                    std::exp(-r * r / (8.0 * m * m * s)));
    CHECK(K >= lower);
    // upper bound with a concrete constant C = 4 for the tail term
    const double upper_main = std::pow(m / ((m - 1.0) * r), n - 2) *
                              std::pow(s, 0.5 * (n - 1)) * std::pow(4.0 * M_PI, 0.5 * (n - 1));
    const double tail = 4.0 / std::pow(r, n - 2) * std::pow(s, 0.5 * (n - 1)) *
                        std::exp(-r * r / (8.0 * m * m * s));
    CHECK(K <= upper_main + tail);
}

TEST_CASE("A radial path vs spec oracle at x' = 0") {
    // A((0,0,1), t=0.5): polar reduction of the defining integral to 1-D
    auto spec = tol(1e-12, 1e-11);
    const auto x = pt3(0.0, 0.0, 1.0, 0.5);
    const double A = A_eval(x, d3(0, 0, 0, 0), spec);

    // oracle: 1-D radial integral (4 pi t)^{-1/2} int Gamma'(rho) E(rho, xn) 2 pi rho drho
    const double t = 0.5, xn = 1.0;
    auto f = [&](double rho) {
        const double gp = std::exp(-rho * rho / (4.0 * t)) / (4.0 * M_PI * t);
        const double E = 1.0 / (4.0 * M_PI * std::hypot(rho, xn));
        return 2.0 * M_PI * rho * gp * E;
    };
    const double R = gaussian_truncation_radius(t, 1.0, spec, 2.0);
    const double ref = integrate_1d(f, 0.0, R, tol(1e-13, 1e-12)).value / std::sqrt(4.0 * M_PI * t);
    CHECK(A == doctest::Approx(ref).epsilon(1e-10));
}

TEST_CASE("A parity and direct-path agreement with derivatives") {
    auto spec = tol(1e-11, 1e-10);
    // x' -> -x' invariance
    const double a1 = A_eval(pt3(0.7, -0.4, 0.8, 0.3), d3(0, 0, 0, 0), spec);
    const double a2 = A_eval(pt3(-0.7, 0.4, 0.8, 0.3), d3(0, 0, 0, 0), spec);
    CHECK(a1 == doctest::Approx(a2).epsilon(1e-12));

    for (const auto& d : {d3(0, 0, 0, 0), d3(1, 0, 0, 0), d3(1, 1, 0, 0), d3(0, 0, 1, 0),
                          d3(1, 0, 1, 0), d3(0, 0, 2, 0), d3(0, 0, 0, 1), d3(2, 0, 0, 0)}) {
        const auto x = pt3(1.1, 0.5, 0.6, 0.35);
        const double radial = A_eval(x, d, spec);
        const double direct = A_eval_direct(x, d, tol(1e-11, 1e-10));
        const double scale = std::abs(direct) + 1e-12;
        CHECK(std::abs(radial - direct) / scale < 1e-7);
    }
}

TEST_CASE("A time derivative against finite differences") {
    auto spec = tol(1e-12, 1e-11);
    const auto x = pt3(1.0, 0.3, 0.7, 0.4);
    const double dt = A_eval(x, d3(0, 0, 0, 1), spec);
    auto f = [&](double tt) {
        auto xx = x;
        xx.t = tt;
        return A_eval(xx, d3(0, 0, 0, 0), spec);
    };
    const double h = 1e-5;
    const double fd1 = (f(x.t + h) - f(x.t - h)) / (2 * h);
    const double fd2 = (f(x.t + 0.5 * h) - f(x.t - 0.5 * h)) / h;
    CHECK(dt == doctest::Approx((4 * fd2 - fd1) / 3).epsilon(1e-7));
}

TEST_CASE("A envelope: |d^l d_t^m A| <= C t^{-m-1/2} (|x|^2+t)^{-(l+n-2)/2}") {
    auto spec = tol(1e-10, 1e-9);
    std::mt19937 rng(29);
    std::uniform_real_distribution<double> ux(-3.0, 3.0), un(0.1, 2.0), ut(0.05, 1.5);
    struct Combo {
        DerivMultiIndex d;
        int l;
        int m;
    };
    std::vector<Combo> combos = {{d3(0, 0, 0, 0), 0, 0}, {d3(1, 0, 0, 0), 1, 0},
                                 {d3(1, 1, 0, 0), 2, 0}, {d3(0, 0, 0, 1), 0, 1}};
    for (const auto& c : combos) {
        double max_ratio = 0.0;
        for (int trial = 0; trial < 40; ++trial) {
            const auto x = pt3(ux(rng), ux(rng), un(rng), ut(rng));
            const double v = A_eval(x, c.d, spec);
            const double env = std::pow(x.t, -c.m - 0.5) *
                               std::pow(x.radius2() + x.t, -0.5 * (c.l + 1.0));
            max_ratio = std::max(max_ratio, std::abs(v) / env);
        }
        CHECK(max_ratio < 10.0);  // constant-free sanity: ratio finite and modest
        CHECK(max_ratio > 0.0);
    }
}

TEST_CASE("B: normal-derivative factor relation holds exactly") {
    auto spec = tol(1e-11, 1e-10);
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> ux(-2.0, 2.0), un(0.1, 1.5), ut(0.05, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const auto x = pt3(ux(rng), ux(rng), un(rng), ut(rng));
        const double B = B_eval(x, d3(0, 0, 0, 0), spec);
        const double dnB = B_eval(x, d3(0, 0, 1, 0), spec);
        CHECK(dnB + (x.x_n / (2.0 * x.t)) * B == doctest::Approx(0.0).epsilon(1e-10));
    }
}

TEST_CASE("B satisfies the heat equation (quadrature residual)") {
    auto spec = tol(1e-11, 1e-10);
    std::mt19937 rng(37);
    std::uniform_real_distribution<double> ux(-1.5, 1.5), un(0.2, 1.5), ut(0.1, 1.0);
    for (int trial = 0; trial < 8; ++trial) {
        const auto x = pt3(ux(rng), ux(rng), un(rng), ut(rng));
        const double bt = B_eval(x, d3(0, 0, 0, 1), spec);
        const double lap = B_eval(x, d3(2, 0, 0, 0), spec) + B_eval(x, d3(0, 2, 0, 0), spec) +
                           B_eval(x, d3(0, 0, 2, 0), spec);
        const double scale = std::abs(bt) + std::abs(lap) + 1e-12;
        CHECK(std::abs(bt - lap) / scale < 1e-7);
    }
}

TEST_CASE("B strategies agree: direct quadrature vs K-factorized") {
    auto spec = tol(1e-10, 1e-9);
    const auto x0 = pt3(1.0, 0.0, 0.5, 0.3);
    const double s1 = B_eval(x0, d3(0, 0, 0, 0), spec, BStrategy::Direct);
    const double s2 = B_eval(x0, d3(0, 0, 0, 0), spec, BStrategy::KFactorized);
    CHECK(std::abs(s1 - s2) / std::abs(s1) < 1e-6);

    std::mt19937 rng(41);
    std::uniform_real_distribution<double> ux(-2.0, 2.0), un(0.1, 1.2), ut(0.05, 0.8);
    for (int trial = 0; trial < 8; ++trial) {
        const auto x = pt3(ux(rng), ux(rng), un(rng), ut(rng));
        const double a = B_eval(x, d3(0, 0, 0, 0), spec, BStrategy::Direct);
        const double b = B_eval(x, d3(0, 0, 0, 0), spec, BStrategy::KFactorized);
        CHECK(std::abs(a - b) / (std::abs(a) + 1e-300) < 1e-6);
    }
}

TEST_CASE("C relations: rel-C1 and rel-C2 via one-sided differences") {
    auto spec = tol(1e-11, 1e-11);
    std::mt19937 rng(43);
    std::uniform_real_distribution<double> ux(0.5, 2.0), un(0.3, 1.2), ut(0.2, 0.8);
    for (int trial = 0; trial < 4; ++trial) {
        const auto x = pt3(ux(rng), 0.5 * ux(rng), un(rng), ut(rng));

        // LHS by one-sided finite differences of C_eval base values
        auto dC = [&](int i) {
            const double h = 1e-3;
            double v[4];
            for (int j = 0; j < 4; ++j) {
                auto xx = x;
                xx.x_n = x.x_n + j * h;
                v[j] = C_eval(i, xx, d3(0, 0, 0, 0), spec);
            }
            // 3rd-order one-sided first derivative
            return (-11.0 * v[0] / 6.0 + 3.0 * v[1] - 1.5 * v[2] + v[3] / 3.0) / h;
        };

        // rel-C1 for i = 0: d_n C_0 = d_0 C_2 + d_0 d_n B
        const double lhs1 = dC(0);
        const double rhs1 = C_eval(2, x, d3(1, 0, 0, 0), spec) + B_eval(x, d3(1, 0, 1, 0), spec);
        CHECK(std::abs(lhs1 - rhs1) / (std::abs(rhs1) + 1e-12) < 1e-5);

        // rel-C2: d_n C_n = -sum_k d_k C_k - (1/2) d_n Gamma
        const double lhs2 = dC(2);
        std::vector<double> xv = {x.x_prime[0], x.x_prime[1], x.x_n};
        const double rhs2 = -C_eval(0, x, d3(1, 0, 0, 0), spec) -
                            C_eval(1, x, d3(0, 1, 0, 0), spec) -
                            0.5 * heat_kernel(xv, x.t, d3(0, 0, 1, 0));
        CHECK(std::abs(lhs2 - rhs2) / (std::abs(rhs2) + 1e-12) < 1e-5);
    }
}

TEST_CASE("C base value against the direct nested oracle") {
    auto spec = tol(1e-9, 1e-8);
    const auto x = pt3(0.9, 0.4, 0.6, 0.4);
    for (int i : {0, 2}) {
        const double fast = C_eval(i, x, d3(0, 0, 0, 0), spec);
        const double slow = C_eval_direct(i, x, tol(1e-9, 1e-8));
        CHECK(std::abs(fast - slow) / (std::abs(slow) + 1e-12) < 1e-5);
    }
}

TEST_CASE("C envelope sanity") {
    // |d^l d_n^k d_t^m C_i| <~ t^{-m-1/2} (|x|^2+t)^{-(l+n-1)/2} (x_n^2+t)^{-k/2}
    auto spec = tol(1e-10, 1e-9);
    std::mt19937 rng(47);
    std::uniform_real_distribution<double> ux(0.5, 2.5), un(0.2, 1.5), ut(0.1, 1.0);
    double max_ratio = 0.0;
    for (int trial = 0; trial < 15; ++trial) {
        const auto x = pt3(ux(rng), ux(rng), un(rng), ut(rng));
        const double v = C_eval(0, x, d3(1, 0, 0, 0), spec);
        const double env = std::pow(x.t, -0.5) * std::pow(x.radius2() + x.t, -1.5);
        max_ratio = std::max(max_ratio, std::abs(v) / env);
    }
    CHECK(max_ratio < 10.0);
}

TEST_CASE("golovkin regular part") {
    auto spec = tol(1e-10, 1e-9);
    const auto x = pt3(1.0, 0.0, 0.5, 0.2);

    // off-diagonal tangential: equals -4 d_j C_i exactly
    const double g01 = golovkin_regular(0, 1, x, 0.2, spec);
    const double c01 = C_eval(0, x, d3(0, 1, 0, 0), spec);
    CHECK(g01 == doctest::Approx(-4.0 * c01).epsilon(1e-12));

    // diagonal: -2 d_n Gamma - 4 d_1 C_1, parts cross-checked independently
    const double g11 = golovkin_regular(0, 0, x, 0.2, spec);
    std::vector<double> xv = {1.0, 0.0, 0.5};
    const double part1 = -2.0 * heat_kernel(xv, 0.2, d3(0, 0, 1, 0));
    const double part2 = -4.0 * C_eval(0, x, d3(1, 0, 0, 0), spec);
    CHECK(g11 == doctest::Approx(part1 + part2).epsilon(1e-11));

    // decay against the kernel envelope at growing |x|
    double prev_ratio = 0.0;
    for (double R : {4.0, 8.0, 16.0}) {
        const auto xr = pt3(R, 0.0, 0.5, 0.2);
        const double v = golovkin_regular(0, 1, xr, 0.2, spec);
        const double env = std::pow(0.2, -0.5) * std::pow(xr.radius2() + 0.2, -2.0);
        const double ratio = std::abs(v) / env;
        CHECK(ratio < 50.0);
        if (prev_ratio > 0) CHECK(ratio < 5.0 * prev_ratio + 1.0);
        prev_ratio = ratio;
    }
}

TEST_CASE("J from the B factorization: bounded by sqrt(t), x_n-independent") {
    auto spec = tol(1e-11, 1e-10);
    std::mt19937 rng(53);
    std::uniform_real_distribution<double> ur(1.0, 5.0), uth(0.0, 2.0 * M_PI), ut(0.02, 1.0);
    double max_ratio = 0.0;
    for (int trial = 0; trial < 30; ++trial) {
        const double r = ur(rng), th = uth(rng), t = ut(rng);
        const auto x = SpaceTimePoint({r * std::cos(th), r * std::sin(th)}, 0.4, t);
        const double J = bjn_decomposition(0, x, spec);
        max_ratio = std::max(max_ratio, std::abs(J) / std::sqrt(t));
    }
    CHECK(max_ratio < 2.0);
    CHECK(max_ratio > 0.0);

    // J is a function of (x', t) only: two different x_n give the same value
    const auto xa = SpaceTimePoint({2.0, 0.0}, 0.3, 0.25);
    const auto xb = SpaceTimePoint({2.0, 0.0}, 0.9, 0.25);
    const double Ja = bjn_decomposition(0, xa, spec);
    const double Jb = bjn_decomposition(0, xb, spec);
    CHECK(Ja == doctest::Approx(Jb).epsilon(1e-6));

    // frozen reference at the spec point (2,0), t = 0.25 (cross-checked above)
    CHECK(Ja == doctest::Approx(-0.00640788).epsilon(2e-4));

    // degenerate division reported when the Gaussian underflows
    const auto far = SpaceTimePoint({2.0, 0.0}, 500.0, 1e-4);
    CHECK_THROWS_AS((void)bjn_decomposition(0, far, spec), DegenerateDivision);
}

TEST_CASE("A and B radial symmetry under coordinate permutation and sign flips") {
    auto spec = tol(1e-11, 1e-10);
    const double v1 = B_eval(pt3(0.8, -0.3, 0.4, 0.3), d3(0, 0, 0, 0), spec);
    const double v2 = B_eval(pt3(-0.3, 0.8, 0.4, 0.3), d3(0, 0, 0, 0), spec);
    const double v3 = B_eval(pt3(0.3, 0.8, 0.4, 0.3), d3(0, 0, 0, 0), spec);
    CHECK(v1 == doctest::Approx(v2).epsilon(1e-12));
    CHECK(v1 == doctest::Approx(v3).epsilon(1e-12));

    // rotation invariance to quadrature tolerance
    const double r = std::hypot(0.8, 0.3);
    const double v4 = A_eval(pt3(r, 0.0, 0.4, 0.3), d3(0, 0, 0, 0), spec);
    const double v5 = A_eval(pt3(0.8, 0.3, 0.4, 0.3), d3(0, 0, 0, 0), spec);
    CHECK(v4 == doctest::Approx(v5).epsilon(1e-10));
}

TEST_CASE("n=2 potentials baseline") {
    auto spec = tol(1e-10, 1e-9);
    const SpaceTimePoint x({1.2}, 0.5, 0.3);
    const DerivMultiIndex d0({0}, 0, 0);
    const double A2 = A_eval(x, d0, spec);
    const double A2d = A_eval_direct(x, d0, spec);
    CHECK(A2 == doctest::Approx(A2d).epsilon(1e-8));

    const double B2 = B_eval(x, d0, spec);
    const double B2d = B_eval(x, d0, spec, BStrategy::Direct);
    CHECK(B2 == doctest::Approx(B2d).epsilon(1e-8));

    // rel-C2 at n=2: d_n C_n = -d_1 C_1 - (1/2) d_n Gamma
    const double h = 1e-3;
    double v[4];
    for (int j = 0; j < 4; ++j) {
        auto xx = x;
        xx.x_n = x.x_n + j * h;
        v[j] = C_eval(1, xx, d0, spec);
    }
    const double lhs = (-11.0 * v[0] / 6.0 + 3.0 * v[1] - 1.5 * v[2] + v[3] / 3.0) / h;
    const std::vector<double> xv = {1.2, 0.5};
    const double rhs = -C_eval(0, x, DerivMultiIndex({1}, 0, 0), spec) -
                       0.5 * heat_kernel(xv, 0.3, DerivMultiIndex({0}, 1, 0));
    CHECK(std::abs(lhs - rhs) / (std::abs(rhs) + 1e-12) < 1e-5);
}
