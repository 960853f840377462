#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "stokeshs/potentials.hpp"
#include "stokeshs/solution.hpp"

using namespace shs;

namespace {

BoundaryData thm3_data(int n, double a, int k) {
    BoundaryData g{Dimension(n)};
    g.components[k].amplitude = 1.0;
    g.components[k].spatial =
        std::make_shared<SpatialProfile>(BumpProduct{BumpFactor::defaults(n), n});
    g.components[k].temporal = std::make_shared<TemporalProfile>(TemporalProfile::power_cusp(a));
    return g;
}

BoundaryData smooth_time_data(int n, int k) {
    BoundaryData g{Dimension(n)};
    g.components[k].amplitude = 1.0;
    g.components[k].spatial =
        std::make_shared<SpatialProfile>(BumpProduct{BumpFactor::defaults(n), n});
    g.components[k].temporal = std::make_shared<TemporalProfile>(TemporalProfile::smooth_bump());
    return g;
}

SolutionConfig cfg_tol(double rel) {
    SolutionConfig cfg;
    cfg.quad.rel_tol = rel;
    cfg.quad.abs_tol = rel * 1e-3;
    return cfg;
}

DerivMultiIndex d3(int l1, int l2, int k, int m) { return DerivMultiIndex({l1, l2}, k, m); }

}  // namespace

TEST_CASE("zero data and causality give exact zero") {
    BoundaryData g{Dimension(3)};
    SolutionEvaluator ev(g, cfg_tol(1e-6));
    const SpaceTimePoint x({1.0, 0.5}, 0.5, 0.7);
    CHECK(ev.velocity(0, x).value == 0.0);

    // power-cusp data is supported in s >= 1/4: t below that gives exact 0
    auto g3 = thm3_data(3, 0.5, 0);
    SolutionEvaluator ev3(g3, cfg_tol(1e-6));
    SpaceTimePoint xc = x;
    xc.t = 0.2;
    const auto r = ev3.velocity(0, xc);
    CHECK(r.value == 0.0);
    CHECK(ev3.pressure(xc) == 0.0);
}

TEST_CASE("term breakdown sums to the value") {
    auto g = thm3_data(3, 0.5, 0);
    SolutionEvaluator ev(g, cfg_tol(1e-5));
    const SpaceTimePoint x({1.5, 0.4}, 0.6, 0.9);
    for (int i = 0; i < 3; ++i) {
        const auto r = ev.velocity(i, x);
        double sum = 0.0;
        for (const auto& [k, v] : r.terms) sum += v;
        CHECK(r.value == doctest::Approx(sum).epsilon(1e-12));
    }
}

TEST_CASE("velocity against the direct kernel-quadrature oracle") {
    // independent path: nested (s, y') quadrature of the regular Golovkin
    // kernel from the potentials module (different reductions, substitutions)
    auto g = thm3_data(3, 0.5, 0);
    SolutionEvaluator ev(g, cfg_tol(1e-6));
    const SpaceTimePoint x({2.0, 0.0}, 0.5, 1.0);
    const auto fast = ev.velocity(0, x);

    QuadratureSpec pspec;
    pspec.abs_tol = 1e-9;
    pspec.rel_tol = 1e-7;
    QuadratureSpec outer;
    outer.abs_tol = 1e-7;
    outer.rel_tol = 1e-4;
    outer.max_subdivisions = 600;
    const auto& G = std::get<BumpProduct>(g.components[0].spatial->variant()).factor;
    auto time_integrand = [&](double s) {
        const double gt = g.components[0].temporal->eval(s, 0);
        if (gt == 0.0) return 0.0;
        auto fy = [&](std::span<const double> y) {
            const double gs = G.eval(y[0]) * G.eval(y[1]);
            if (gs == 0.0) return 0.0;
            SpaceTimePoint w({x.x_prime[0] - y[0], x.x_prime[1] - y[1]}, x.x_n, 0.0);
            return golovkin_regular(0, 0, w, x.t - s, pspec) * gs;
        };
        Box box{{{-G.r(), G.r()}, {-G.r(), G.r()}}};
        QuadratureSpec yspec;
        yspec.abs_tol = 1e-8;
        yspec.rel_tol = 1e-5;
        return integrate_nd(fy, box, yspec).value * gt;
    };
    const double ref = integrate_1d(time_integrand, 0.25, 1.0, outer).value;
    CHECK(fast.value == doctest::Approx(ref).epsilon(2e-4));
}

TEST_CASE("normal derivative matches finite differences") {
    auto g = thm3_data(3, 0.5, 0);
    SolutionEvaluator ev(g, cfg_tol(1e-6));
    const SpaceTimePoint x({2.0, 0.3}, 0.45, 1.0);

    const double an = ev.velocity_derivative(0, d3(0, 0, 1, 0), x).value;
    const double h = 5e-3;
    auto up = x, um = x;
    up.x_n += h;
    um.x_n -= h;
    auto u2p = x, u2m = x;
    u2p.x_n += 0.5 * h;
    u2m.x_n -= 0.5 * h;
    const double f1 = (ev.velocity(0, up).value - ev.velocity(0, um).value) / (2 * h);
    const double f2 = (ev.velocity(0, u2p).value - ev.velocity(0, u2m).value) / h;
    const double fd = (4.0 * f2 - f1) / 3.0;
    CHECK(an == doctest::Approx(fd).epsilon(1e-4));
}

TEST_CASE("second normal derivative (K-route) matches finite differences") {
    auto g = thm3_data(3, 0.25, 0);
    SolutionEvaluator ev(g, cfg_tol(1e-6));
    const SpaceTimePoint x({2.0, 0.5}, 0.4, 1.0);

    const auto r = ev.velocity_derivative(0, d3(0, 0, 2, 0), x);
    const double h = 4e-3;
    auto up = x, um = x;
    up.x_n += h;
    um.x_n -= h;
    const double dp = ev.velocity_derivative(0, d3(0, 0, 1, 0), up).value;
    const double dm = ev.velocity_derivative(0, d3(0, 0, 1, 0), um).value;
    const double fd = (dp - dm) / (2 * h);
    CHECK(r.value == doctest::Approx(fd).epsilon(5e-4));

    CHECK(r.terms.count("K25"));
    CHECK(r.terms.count("K26"));
    CHECK(r.terms.count("K27"));
    CHECK(r.terms.count("K28"));
}

TEST_CASE("divergence-free at interior points") {
    auto g = thm3_data(3, 0.5, 0);
    SolutionEvaluator ev(g, cfg_tol(3e-6));
    std::mt19937 rng(71);
    std::uniform_real_distribution<double> ur(1.2, 3.0), uth(0.0, 2 * M_PI), un(0.3, 1.0),
        ut(0.5, 1.3);
    for (int trial = 0; trial < 3; ++trial) {
        const double r = ur(rng), th = uth(rng);
        const SpaceTimePoint x({r * std::cos(th), r * std::sin(th)}, un(rng), ut(rng));
        std::vector<VelocityRequest> reqs = {{0, d3(1, 0, 0, 0)},
                                             {1, d3(0, 1, 0, 0)},
                                             {2, d3(0, 0, 1, 0)}};
        const auto rs = ev.evaluate(x, reqs);
        const double div = rs[0].value + rs[1].value + rs[2].value;
        double scale = 0.0;
        for (const auto& rr : rs) scale = std::max(scale, std::abs(rr.value));
        CHECK(std::abs(div) <= 2e-5 * scale + 1e-10);
    }
}

TEST_CASE("time derivative moves onto the data profile") {
    auto g = smooth_time_data(3, 0);
    SolutionEvaluator ev(g, cfg_tol(1e-6));
    const SpaceTimePoint x({1.8, 0.2}, 0.5, 0.95);
    const double an = ev.velocity_derivative(0, d3(0, 0, 0, 1), x).value;
    const double h = 1e-4;
    auto tp = x, tm = x;
    tp.t += h;
    tm.t -= h;
    const double fd = (ev.velocity(0, tp).value - ev.velocity(0, tm).value) / (2 * h);
    CHECK(an == doctest::Approx(fd).epsilon(1e-4));
}

TEST_CASE("K28 equals the velocity_derivative sub-term and is odd") {
    auto g = thm3_data(3, 0.25, 0);
    SolutionEvaluator ev(g, cfg_tol(1e-7));
    const SpaceTimePoint x({2.5, 1.0}, 0.1, 1.0);
    const auto k = ev.k28_term(1, 0, x);
    CHECK(k.K28 == doctest::Approx(k.K281 + k.K282).epsilon(1e-12));

    const auto r = ev.velocity_derivative(1, d3(0, 0, 2, 0), x);
    CHECK(k.K28 == doctest::Approx(r.terms.at("K28")).epsilon(1e-6));

    auto xi = x;
    xi.x_prime[1] = -xi.x_prime[1];
    const auto ki = ev.k28_term(1, 0, xi);
    CHECK(ki.K28 == doctest::Approx(-k.K28).epsilon(1e-6));
    auto xk = x;
    xk.x_prime[0] = -xk.x_prime[0];
    const auto kk = ev.k28_term(1, 0, xk);
    CHECK(kk.K28 == doctest::Approx(-k.K28).epsilon(1e-6));
}

TEST_CASE("boundary cases: trace and outside-support zero") {
    auto g = thm3_data(3, 0.5, 0);
    SolutionEvaluator ev(g, cfg_tol(1e-5));

    const SpaceTimePoint xin({0.1, 0.05}, 0.0, 0.8);
    const auto rin = ev.velocity(0, xin);
    CHECK(rin.trace_at_support);
    const std::array<int, 2> l0 = {0, 0};
    CHECK(rin.value == doctest::Approx(eval_g(g, 0, xin.x_prime, 0.8, l0, 0)));

    const SpaceTimePoint xout({3.0, 0.0}, 0.0, 0.8);
    const auto rout = ev.velocity(0, xout);
    CHECK(!rout.trace_at_support);
    CHECK(rout.value == 0.0);

    CHECK_THROWS_AS((void)ev.velocity_derivative(0, d3(0, 0, 1, 0), xin), SingularPoint);
}

TEST_CASE("boundary trace trend toward the data") {
    auto g = thm3_data(3, 0.5, 0);
    SolutionEvaluator ev(g, cfg_tol(1e-5));
    const std::vector<double> xp = {0.15, -0.1};
    const double t = 0.8;
    const std::array<int, 2> l0 = {0, 0};
    const double gval = eval_g(g, 0, xp, t, l0, 0);
    REQUIRE(gval > 0.1);
    double prev_gap = 1e9;
    for (int j : {3, 5, 7}) {
        const SpaceTimePoint x(xp, std::pow(2.0, -j), t);
        const double u = ev.velocity(0, x).value;
        const double gap = std::abs(u - gval);
        CHECK(gap < prev_gap + 1e-4);
        prev_gap = gap;
    }
    CHECK(prev_gap <= 0.05 * std::abs(gval));
}

TEST_CASE("pressure gradient consistent with finite differences") {
    auto g = thm3_data(3, 0.5, 0);
    SolutionEvaluator ev(g, cfg_tol(1e-6));
    const SpaceTimePoint x({1.6, 0.4}, 0.7, 0.8);
    const auto grad = ev.pressure_gradient(x);
    REQUIRE(grad.size() == 3);
    const double h = 2e-4;
    for (int q = 0; q < 3; ++q) {
        auto xp = x, xm = x;
        if (q < 2) {
            xp.x_prime[q] += h;
            xm.x_prime[q] -= h;
        } else {
            xp.x_n += h;
            xm.x_n -= h;
        }
        const double fd = (ev.pressure(xp) - ev.pressure(xm)) / (2 * h);
        CHECK(grad[q] == doctest::Approx(fd).epsilon(2e-3));
    }
}

TEST_CASE("PDE residual with pressure at an interior point") {
    auto g = smooth_time_data(3, 0);
    SolutionEvaluator ev(g, cfg_tol(1e-6));
    const SpaceTimePoint x({1.7, 0.3}, 0.6, 0.95);

    for (int i = 0; i < 3; ++i) {
        const double ut = ev.velocity_derivative(i, d3(0, 0, 0, 1), x).value;
        std::vector<VelocityRequest> reqs = {
            {i, d3(2, 0, 0, 0)}, {i, d3(0, 2, 0, 0)}, {i, d3(0, 0, 2, 0)}};
        const auto rs = ev.evaluate(x, reqs);
        const double lap = rs[0].value + rs[1].value + rs[2].value;
        const double gp = ev.pressure_gradient(x)[i];
        const double resid = ut - lap + gp;
        const double scale = std::abs(ut) + std::abs(lap) + std::abs(gp) + 1e-10;
        CHECK(std::abs(resid) / scale < 2e-3);
    }
}

TEST_CASE("n=2 sanity: causality and a plain value") {
    BoundaryData g{Dimension(2)};
    g.components[0].amplitude = 1.0;
    g.components[0].spatial =
        std::make_shared<SpatialProfile>(BumpProduct{BumpFactor::defaults(2), 2});
    g.components[0].temporal = std::make_shared<TemporalProfile>(TemporalProfile::power_cusp(0.5));
    SolutionEvaluator ev(g, cfg_tol(1e-5));
    const SpaceTimePoint x({1.5}, 0.5, 0.2);
    CHECK(ev.velocity(0, x).value == 0.0);
    SpaceTimePoint x2 = x;
    x2.t = 0.9;
    const auto r = ev.velocity(0, x2);
    CHECK(std::isfinite(r.value));
    CHECK(r.value != 0.0);
}
