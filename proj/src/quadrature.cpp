#include "stokeshs/quadrature.hpp"

#include <cmath>

namespace shs {

IntegralResult integrate_1d(const std::function<double(double)>& f, double a, double b,
                            const QuadratureSpec& spec) {
    bool converged = true;
    IntegralResult r = detail::integrate_with_cusps(f, a, b, spec, &converged);
    if (!converged) {
        const double tol = std::max(spec.abs_tol, spec.rel_tol * std::abs(r.value));
        if (r.err_est > tol)
            throw NonConvergence("integrate_1d: subdivision budget exhausted", r.value, r.err_est);
    }
    return r;
}

namespace {

IntegralResult integrate_nd_rec(const std::function<double(std::span<const double>)>& f,
                                const Box& box, const QuadratureSpec& spec, int level,
                                std::vector<double>& point, double* inner_err) {
    const int d = box.dim();
    const int axis = level;
    QuadratureSpec inner = spec;
    // tightened inner tolerances keep the iterated estimate roughly honest
    inner.abs_tol = spec.abs_tol * 0.3;
    inner.rel_tol = spec.rel_tol * 0.3;
    inner.cusp_left.reset();
    inner.cusp_right.reset();

    double worst_inner = 0.0;
    auto integrand = [&](double x) {
        point[axis] = x;
        if (axis + 1 == d) return f(std::span<const double>(point.data(), d));
        double ie = 0.0;
        IntegralResult r = integrate_nd_rec(f, box, inner, axis + 1, point, &ie);
        worst_inner = std::max(worst_inner, ie + r.err_est);
        return r.value;
    };

    QuadratureSpec level_spec = (level == 0) ? spec : inner;
    bool converged = true;
    IntegralResult r =
        detail::integrate_with_cusps(integrand, box.bounds[axis][0], box.bounds[axis][1],
                                     level_spec, &converged);
    const double width = box.bounds[axis][1] - box.bounds[axis][0];
    if (inner_err) *inner_err = worst_inner * std::abs(width);
    if (!converged && level == 0) {
        const double tol = std::max(spec.abs_tol, spec.rel_tol * std::abs(r.value));
        if (r.err_est > tol)
            throw NonConvergence("integrate_nd: subdivision budget exhausted", r.value, r.err_est);
    }
    if (level == 0) r.err_est += worst_inner * std::abs(width);
    return r;
}

}  // namespace

IntegralResult integrate_nd(const std::function<double(std::span<const double>)>& f,
                            const Box& box, const QuadratureSpec& spec) {
    const int d = box.dim();
    if (d < 1 || d > 3) throw DimensionUnsupported("integrate_nd: dimension must be 1..3");
    std::vector<double> point(d, 0.0);
    return integrate_nd_rec(f, box, spec, 0, point, nullptr);
}

IntegralResult integrate_region(const std::function<double(std::span<const double>)>& f,
                                const Region& region, const QuadratureSpec& spec) {
    switch (region.kind) {
        case Region::Kind::Interval:
        case Region::Kind::BoxNd:
            return integrate_nd(f, region.box, spec);
        case Region::Kind::HalfLineInNormal: {
            // u = s/(1-s) maps [0,1) to [0,inf); integrands must decay.
            auto g = [&](std::span<const double> s) {
                const double u = s[0] / (1.0 - s[0]);
                const double jac = 1.0 / ((1.0 - s[0]) * (1.0 - s[0]));
                const double x[1] = {u};
                return f(std::span<const double>(x, 1)) * jac;
            };
            Box unit{{{0.0, 1.0 - 1e-14}}};
            return integrate_nd(g, unit, spec);
        }
        case Region::Kind::TangentialBall: {
            if (region.center.size() == 1) {
                Box b{{{region.center[0] - region.radius, region.center[0] + region.radius}}};
                return integrate_nd(f, b, spec);
            }
            if (region.center.size() != 2)
                throw DimensionUnsupported("tangential ball supported in 1 or 2 dims");
            auto g = [&](std::span<const double> p) {
                const double rho = p[0], th = p[1];
                const double x[2] = {region.center[0] + rho * std::cos(th),
                                     region.center[1] + rho * std::sin(th)};
                return rho * f(std::span<const double>(x, 2));
            };
            Box b{{{0.0, region.radius}, {0.0, 2.0 * M_PI}}};
            return integrate_nd(g, b, spec);
        }
    }
    throw std::logic_error("integrate_region: unknown kind");
}

double gaussian_truncation_radius(double t, double scale, const QuadratureSpec& spec,
                                  double poly_power) {
    if (!(t > 0)) throw std::invalid_argument("gaussian_truncation_radius: t must be > 0");
    const double eps = spec.gaussian_truncation_eps * std::max(scale, 1e-300);
    const double L = std::log(1.0 / eps);
    if (poly_power <= 0.0) return 2.0 * std::sqrt(t * std::max(L, 1.0));
    // solve u - p log(1+u) = L for u = R^2/(4t) by a few Newton steps
    double u = std::max(L, 1.0);
    for (int it = 0; it < 60; ++it) {
        const double g = u - poly_power * std::log1p(u) - L;
        const double dg = 1.0 - poly_power / (1.0 + u);
        const double step = g / std::max(dg, 1e-6);
        u -= step;
        if (u <= 0) u = 1e-8;
        if (std::abs(step) < 1e-12 * (1.0 + u)) break;
    }
    return 2.0 * std::sqrt(t * u);
}

double gaussian_truncation_radius(std::span<const double> /*center*/, double t, double scale,
                                  const QuadratureSpec& spec) {
    return gaussian_truncation_radius(t, scale, spec, 0.0);
}

}  // namespace shs
