#include "stokeshs/potentials.hpp"

#include <algorithm>
#include <cmath>

#include "stokeshs/bessel.hpp"
#include "stokeshs/radial.hpp"

namespace shs {

namespace {

constexpr double kC3 = 1.0 / (4.0 * M_PI);  // E-constant for n = 3

// Composite chain f = u(z(r)) with z quadratic in r (z''' = 0), orders 0..6.
void quadratic_chain(const double* u, double z1, double z2, int max_m, double* f) {
    f[0] = u[0];
    if (max_m >= 1) f[1] = u[1] * z1;
    if (max_m >= 2) f[2] = u[2] * z1 * z1 + u[1] * z2;
    if (max_m >= 3) f[3] = u[3] * z1 * z1 * z1 + 3.0 * u[2] * z1 * z2;
    if (max_m >= 4)
        f[4] = u[4] * std::pow(z1, 4) + 6.0 * u[3] * z1 * z1 * z2 + 3.0 * u[2] * z2 * z2;
    if (max_m >= 5)
        f[5] = u[5] * std::pow(z1, 5) + 10.0 * u[4] * std::pow(z1, 3) * z2 +
               15.0 * u[3] * z1 * z2 * z2;
    if (max_m >= 6)
        f[6] = u[6] * std::pow(z1, 6) + 15.0 * u[5] * std::pow(z1, 4) * z2 +
               45.0 * u[4] * z1 * z1 * z2 * z2 + 15.0 * u[3] * std::pow(z2, 3);
}

// r-derivative stack (orders 0..max_m <= 6) of the radial convolution weight
// w(r, rho) = exp(-(r-rho)^2/(4t)) i0e(r rho / (2t)).
void weight_stack(double r, double rho, double t, int max_m, double* w) {
    const double g = -(r - rho) * (r - rho) / (4.0 * t);
    if (g < -745.0) {
        for (int m = 0; m <= max_m; ++m) w[m] = 0.0;
        return;
    }
    const double E = std::exp(g);
    const double g1 = -(r - rho) / (2.0 * t);
    const double g2 = -1.0 / (2.0 * t);
    // Bell polynomials of (g1, g2, 0, ...): derivative stack of exp(g)
    double B[7];
    B[0] = 1.0;
    B[1] = g1;
    B[2] = g2 + g1 * g1;
    B[3] = 3.0 * g1 * g2 + g1 * g1 * g1;
    B[4] = 3.0 * g2 * g2 + 6.0 * g1 * g1 * g2 + std::pow(g1, 4);
    B[5] = 15.0 * g1 * g2 * g2 + 10.0 * std::pow(g1, 3) * g2 + std::pow(g1, 5);
    B[6] = 15.0 * std::pow(g2, 3) + 45.0 * g1 * g1 * g2 * g2 +
           15.0 * std::pow(g1, 4) * g2 + std::pow(g1, 6);
    const double z = r * rho / (2.0 * t);
    const double c = rho / (2.0 * t);
    double u[7];
    i0e_deriv_stack(z, std::min(max_m, 6), u);
    static const double binom[7][7] = {
        {1, 0, 0, 0, 0, 0, 0},    {1, 1, 0, 0, 0, 0, 0},    {1, 2, 1, 0, 0, 0, 0},
        {1, 3, 3, 1, 0, 0, 0},    {1, 4, 6, 4, 1, 0, 0},    {1, 5, 10, 10, 5, 1, 0},
        {1, 6, 15, 20, 15, 6, 1}};
    for (int m = 0; m <= max_m; ++m) {
        double s = 0.0;
        double cj = 1.0;
        for (int j = 0; j <= m; ++j) {
            s += binom[m][j] * B[m - j] * u[j] * cj;
            cj *= c;
        }
        w[m] = E * s;
    }
}

// d^b/dz_n^b of E((z', z_n)) evaluated on the slab, via the shared phi-chain.
double e_slice_deriv(int n, double rho, double z_n, int b) {
    if (n == 3) {
        const double x[3] = {rho, 0.0, z_n};
        const int d[3] = {0, 0, b};
        return laplace_E(std::span<const double>(x, 3), std::span<const int>(d, 3));
    }
    const double x[2] = {rho, z_n};
    const int d[2] = {0, b};
    return laplace_E(std::span<const double>(x, 2), std::span<const int>(d, 2));
}

std::vector<double> sorted_seeds(std::initializer_list<double> vals, double lo, double hi) {
    std::vector<double> pts{lo, hi};
    for (double v : vals)
        if (v > lo && v < hi) pts.push_back(v);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

}  // namespace

// --- TangentialEProfile ---

TangentialEProfile::TangentialEProfile(int n, Backend backend, QuadratureSpec spec)
    : n_(n), backend_(backend), spec_(spec) {
    if (n == 3 && backend == Backend::Direct2d)
        throw std::invalid_argument("TangentialEProfile: Direct2d backend is the n=2 path");
    if (n == 2 && backend != Backend::Direct2d)
        throw std::invalid_argument("TangentialEProfile: n=2 uses the Direct2d backend");
}

void TangentialEProfile::r_stack(double r, double t, int max_r, double* out) const {
    if (!(t > 0)) throw std::invalid_argument("TangentialEProfile: t must be > 0");
    if (backend_ == Backend::Closed3d) {
        if (max_r > 6) throw std::invalid_argument("TangentialEProfile: order cap 6");
        const double C = std::sqrt(M_PI) / (8.0 * M_PI * std::sqrt(t));
        double u[7];
        i0e_deriv_stack(r * r / (8.0 * t), std::min(max_r, 6), u);
        double f[7];
        quadratic_chain(u, r / (4.0 * t), 1.0 / (4.0 * t), max_r, f);
        for (int m = 0; m <= max_r; ++m) out[m] = C * f[m];
        return;
    }
    if (backend_ == Backend::RadialQuad3d) {
        if (max_r > 4) throw std::invalid_argument("TangentialEProfile: quad backend order cap 4");
        const double R = gaussian_truncation_radius(t, 1.0, spec_, 4.0);
        const double lo = std::max(0.0, r - R), hi = r + R;
        AdaptiveGK drv(max_r + 1, spec_.abs_tol, spec_.rel_tol, spec_.max_subdivisions);
        auto f = [&](double rho, double* o) { weight_stack(r, rho, t, max_r, o); };
        std::vector<double> val(max_r + 1), err(max_r + 1);
        auto seeds = sorted_seeds({r}, lo, hi);
        if (!drv.run(f, std::span<const double>(seeds), val.data(), err.data()))
            throw NonConvergence("TangentialEProfile: radial integral", val[0], err[0]);
        for (int m = 0; m <= max_r; ++m) out[m] = kC3 / (2.0 * t) * val[m];
        return;
    }
    // n = 2: W(x1, t) = int Gamma_1(x1 - z, t) E((z,0)) dz, derivatives on the kernel
    if (max_r > 4) throw std::invalid_argument("TangentialEProfile: order cap 4 (n=2)");
    const double R = gaussian_truncation_radius(t, 1.0, spec_, 4.0);
    AdaptiveGK drv(max_r + 1, spec_.abs_tol, spec_.rel_tol, spec_.max_subdivisions);
    auto f = [&](double z, double* o) {
        const double e0 = -std::log(std::abs(z)) / (2.0 * M_PI);
        for (int m = 0; m <= max_r; ++m) o[m] = gamma1(r - z, t, m, 0) * e0;
    };
    std::vector<double> val(max_r + 1), err(max_r + 1);
    auto seeds = sorted_seeds({0.0, r}, r - R, r + R);
    if (!drv.run(f, std::span<const double>(seeds), val.data(), err.data()))
        throw NonConvergence("TangentialEProfile: n=2 integral", val[0], err[0]);
    for (int m = 0; m <= max_r; ++m) out[m] = val[m];
}

double TangentialEProfile::t_deriv(double r, double t, int r_order) const {
    // d_t W = Delta' W in n-1 tangential dimensions
    double st[7];
    r_stack(r, t, std::min(r_order + 2, 6), st);
    if (n_ == 2) return st[r_order + 2];  // 1-D heat equation
    if (r < 1e-10) {
        if (r_order == 0) return 2.0 * st[2];  // radial limit of W_rr + W_r/r
        throw std::invalid_argument("TangentialEProfile::t_deriv: derivative on the axis");
    }
    // Delta' W = W_rr + W_r / r; r-derivative stack of W_r/r via f1 recursion
    double f1[5];
    f1[0] = st[1] / r;
    for (int m = 1; m <= r_order && m <= 4; ++m) f1[m] = (st[m + 1] - m * f1[m - 1]) / r;
    return st[r_order + 2] + f1[r_order];
}

void TangentialEProfile::s_stack(double s, double t, int max_m, double* out) const {
    if (backend_ != Backend::Closed3d)
        throw std::invalid_argument("TangentialEProfile::s_stack: closed n=3 backend only");
    if (max_m > 4) throw std::invalid_argument("TangentialEProfile::s_stack: order cap 4");
    const double C = std::sqrt(M_PI) / (8.0 * M_PI * std::sqrt(t));
    double u[7];
    i0e_deriv_stack(s / (8.0 * t), max_m, u);
    double scale = C;
    for (int m = 0; m <= max_m; ++m) {
        out[m] = scale * u[m];
        scale /= 8.0 * t;
    }
}

// --- AScriptProfile ---

AScriptProfile::AScriptProfile(int n, QuadratureSpec spec) : n_(n), spec_(spec) {
    if (n != 2 && n != 3) throw DimensionUnsupported("AScriptProfile: n in {2,3}");
}

void AScriptProfile::eval_stack(double r, double z_n, double t, int max_r, int max_z,
                                double* out) const {
    if (!(t > 0)) throw std::invalid_argument("AScriptProfile: t must be > 0");
    if (max_r > 6 || max_z > 3) throw std::invalid_argument("AScriptProfile: order caps (6,3)");
    const int cols = max_z + 1;
    const int m = (max_r + 1) * cols;
    const double R = gaussian_truncation_radius(t, 1.0, spec_, 4.0);

    if (n_ == 3) {
        const double lo = std::max(0.0, r - R), hi = r + R;
        AdaptiveGK drv(m, spec_.abs_tol, spec_.rel_tol, spec_.max_subdivisions);
        auto f = [&](double rho, double* o) {
            double w[7];
            weight_stack(r, rho, t, max_r, w);
            for (int b = 0; b <= max_z; ++b) {
                const double e = e_slice_deriv(3, rho, z_n, b) * rho;
                for (int a = 0; a <= max_r; ++a) o[a * cols + b] = e * w[a];
            }
        };
        std::vector<double> val(m), err(m);
        auto seeds = sorted_seeds({z_n, 4.0 * z_n, r}, lo, hi);
        if (!drv.run(f, std::span<const double>(seeds), val.data(), err.data()))
            throw NonConvergence("AScriptProfile: radial integral", val[0], err[0]);
        for (int q = 0; q < m; ++q) out[q] = val[q] / (2.0 * t);
        return;
    }

    // n = 2: 1-D tangential integral, kernel-side r-derivatives
    AdaptiveGK drv(m, spec_.abs_tol, spec_.rel_tol, spec_.max_subdivisions);
    auto f = [&](double z, double* o) {
        for (int b = 0; b <= max_z; ++b) {
            const double e = e_slice_deriv(2, z, z_n, b);
            for (int a = 0; a <= max_r; ++a) o[a * cols + b] = gamma1(r - z, t, a, 0) * e;
        }
    };
    std::vector<double> val(m), err(m);
    auto seeds = sorted_seeds({0.0, r}, r - R, r + R);
    if (!drv.run(f, std::span<const double>(seeds), val.data(), err.data()))
        throw NonConvergence("AScriptProfile: n=2 integral", val[0], err[0]);
    for (int q = 0; q < m; ++q) out[q] = val[q];
}

// --- A ---

namespace {

// Cartesian derivative of A from script-A stacks (radial reduction for n = 3,
// direct 1-D tangential integral for n = 2).
double a_eval_radial(const SpaceTimePoint& x, const DerivMultiIndex& d,
                     const QuadratureSpec& spec) {
    const int n = x.dim();
    const int lt = d.l_total();
    const int need_r = lt + 2 * d.m;
    AScriptProfile prof(n, spec);
    const double r = (n == 3) ? x.tangential_radius() : x.x_prime[0];
    const int cols = d.k + 1;
    std::vector<double> stack((need_r + 1) * cols);
    prof.eval_stack(r, x.x_n, x.t, need_r, d.k, stack.data());

    std::vector<double> ck(need_r + 1);
    for (int a = 0; a <= need_r; ++a) ck[a] = stack[a * cols + d.k];

    auto cart = [&](std::span<const double> rs) {
        if (n == 2) return rs[lt];
        auto chain = RadialChain::from_stack(rs, std::max(r, 1e-300), lt);
        return chain.deriv(x.x_prime[0], x.x_prime[1], d.l[0], d.l[1]);
    };

    const double g0 = gamma1(0.0, x.t, 0, 0);
    if (d.m == 0) return g0 * cart(std::span<const double>(ck.data(), lt + 1));

    // d_t A = d_t Gamma_1(0,t) scriptA + Gamma_1(0,t) Delta' scriptA
    const double g0t = gamma1(0.0, x.t, 0, 1);
    const double piece1 = g0t * cart(std::span<const double>(ck.data(), lt + 1));
    std::vector<double> lap(lt + 1);
    if (n == 2) {
        for (int a = 0; a <= lt; ++a) lap[a] = ck[a + 2];
    } else {
        std::vector<double> f1(lt + 1);
        const double rr = std::max(r, 1e-300);
        f1[0] = ck[1] / rr;
        for (int mm = 1; mm <= lt; ++mm) f1[mm] = (ck[mm + 1] - mm * f1[mm - 1]) / rr;
        for (int a = 0; a <= lt; ++a) lap[a] = ck[a + 2] + f1[a];
    }
    return piece1 + g0 * cart(std::span<const double>(lap.data(), lt + 1));
}

}  // namespace

double A_eval(const SpaceTimePoint& x, const DerivMultiIndex& d, const QuadratureSpec& spec) {
    d.validate(5);
    if (!(x.t > 0)) throw std::invalid_argument("A_eval: t must be > 0");
    if (x.x_n == 0.0 && d.k >= 1)
        throw SingularPoint("A_eval: normal derivative on the boundary");
    return a_eval_radial(x, d, spec);
}

double A_eval_direct(const SpaceTimePoint& x, const DerivMultiIndex& d,
                     const QuadratureSpec& spec) {
    const int n = x.dim();
    if (!(x.t > 0)) throw std::invalid_argument("A_eval_direct: t must be > 0");
    const double R = gaussian_truncation_radius(x.t, 1.0, spec, 4.0);
    DerivMultiIndex kernel_d = d;
    kernel_d.k = 0;
    std::vector<int> e_idx(n, 0);
    e_idx[n - 1] = d.k;

    if (n == 2) {
        auto f = [&](double z) {
            const double w[2] = {x.x_prime[0] - z, 0.0};
            const double zz[2] = {z, x.x_n};
            return heat_kernel(std::span<const double>(w, 2), x.t, kernel_d) *
                   laplace_E(std::span<const double>(zz, 2), e_idx);
        };
        const double a = x.x_prime[0] - R, b = x.x_prime[0] + R;
        double total = 0.0;
        for (auto [lo, hi] : {std::pair{a, std::min(0.0, b)}, std::pair{std::max(a, 0.0), b}})
            if (hi > lo) total += integrate_1d(f, lo, hi, spec).value;
        return total;
    }
    // polar around the E-singularity at z' = 0
    const double r = x.tangential_radius();
    auto f = [&](std::span<const double> p) {
        const double rho = p[0], th = p[1];
        const double z1 = rho * std::cos(th), z2 = rho * std::sin(th);
        const double w[3] = {x.x_prime[0] - z1, x.x_prime[1] - z2, 0.0};
        const double zz[3] = {z1, z2, x.x_n};
        return rho * heat_kernel(std::span<const double>(w, 3), x.t, kernel_d) *
               laplace_E(std::span<const double>(zz, 3), e_idx);
    };
    Box box{{{0.0, r + R}, {0.0, 2.0 * M_PI}}};
    return integrate_nd(f, box, spec).value;
}

// --- K ---

double K_eval(std::span<const double> x_prime, double t, const QuadratureSpec& spec, int n) {
    if (n != 3) throw DimensionUnsupported("K_eval: implemented for n = 3");
    if (!(t > 0)) throw std::invalid_argument("K_eval: t must be > 0");
    double r2 = 0;
    for (double v : x_prime) r2 += v * v;
    const double r = std::sqrt(r2);
    const double R = gaussian_truncation_radius(t, 1.0, spec, 2.0);
    const double lo = std::max(0.0, r - R), hi = r + R;
    auto f = [&](double rho) {
        double w;
        weight_stack(r, rho, t, 0, &w);
        return w;
    };
    return 2.0 * M_PI * integrate_1d(f, lo, hi, spec).value;
}

double K_closed3(double r, double t) {
    return 2.0 * M_PI * std::sqrt(M_PI * t) * i0e(r * r / (8.0 * t));
}

// --- B ---

namespace {

double b_eval_product(const SpaceTimePoint& x, const DerivMultiIndex& d,
                      const QuadratureSpec& spec, TangentialEProfile::Backend backend) {
    const int n = x.dim();
    TangentialEProfile W(n, backend, spec);
    const double r = (n == 3) ? x.tangential_radius() : x.x_prime[0];
    const int lt = d.l_total();

    auto cart = [&](std::span<const double> rs) {
        if (n == 2) return rs[lt];
        auto chain = RadialChain::from_stack(rs, std::max(r, 1e-300), lt);
        return chain.deriv(x.x_prime[0], x.x_prime[1], d.l[0], d.l[1]);
    };

    double total = 0.0;
    for (int m1 = 0; m1 <= d.m; ++m1) {
        const int m2 = d.m - m1;
        double binom = 1.0;
        for (int j = 0; j < m1; ++j) binom = binom * (d.m - j) / (j + 1);
        const double gpart = gamma1(x.x_n, x.t, d.k, m1);
        if (gpart == 0.0) continue;
        double wpart;
        if (m2 == 0) {
            std::vector<double> rs(lt + 1);
            W.r_stack(r, x.t, lt, rs.data());
            wpart = cart(rs);
        } else if (m2 == 1) {
            if (n == 2) {
                wpart = W.t_deriv(r, x.t, lt);
            } else {
                // Cartesian derivative of Delta'W built from a two-orders-higher stack
                std::vector<double> rs(lt + 3);
                W.r_stack(r, x.t, lt + 2, rs.data());
                std::vector<double> lap(lt + 1), f1(lt + 1);
                const double rr = std::max(r, 1e-300);
                f1[0] = rs[1] / rr;
                for (int mm = 1; mm <= lt; ++mm) f1[mm] = (rs[mm + 1] - mm * f1[mm - 1]) / rr;
                for (int a = 0; a <= lt; ++a) lap[a] = rs[a + 2] + f1[a];
                wpart = cart(lap);
            }
        } else {
            throw std::invalid_argument("B_eval: time order cap 1");
        }
        total += binom * gpart * wpart;
    }
    return total;
}

double b_eval_direct(const SpaceTimePoint& x, const DerivMultiIndex& d,
                     const QuadratureSpec& spec) {
    const int n = x.dim();
    const double R = gaussian_truncation_radius(x.t, 1.0, spec, 4.0);
    if (n == 2) {
        auto f = [&](double z) {
            const double w[2] = {x.x_prime[0] - z, x.x_n};
            const double e0 = -std::log(std::abs(z)) / (2.0 * M_PI);
            return heat_kernel(std::span<const double>(w, 2), x.t, d) * e0;
        };
        const double r = x.x_prime[0];
        double total = 0.0;
        for (auto [lo, hi] :
             {std::pair{r - R, std::min(0.0, r + R)}, std::pair{std::max(0.0, r - R), r + R}})
            if (hi > lo) total += integrate_1d(f, lo, hi, spec).value;
        return total;
    }
    const double r = x.tangential_radius();
    auto f = [&](std::span<const double> p) {
        const double rho = p[0], th = p[1];
        const double z1 = rho * std::cos(th), z2 = rho * std::sin(th);
        const double w[3] = {x.x_prime[0] - z1, x.x_prime[1] - z2, x.x_n};
        // polar Jacobian rho cancels the E(z',0) = 1/(4 pi rho) singularity
        return heat_kernel(std::span<const double>(w, 3), x.t, d) * kC3;
    };
    Box box{{{0.0, r + R}, {0.0, 2.0 * M_PI}}};
    return integrate_nd(f, box, spec).value;
}

}  // namespace

double B_eval(const SpaceTimePoint& x, const DerivMultiIndex& d, const QuadratureSpec& spec,
              BStrategy strategy) {
    d.validate(6);
    if (!(x.t > 0)) throw std::invalid_argument("B_eval: t must be > 0");
    const int n = x.dim();
    if (strategy == BStrategy::Direct) return b_eval_direct(x, d, spec);
    if (n == 2) return b_eval_product(x, d, spec, TangentialEProfile::Backend::Direct2d);
    return b_eval_product(x, d, spec, TangentialEProfile::Backend::RadialQuad3d);
}

// --- C ---

namespace {

// Base-case evaluation (no normal derivatives): slab integral of
// dGamma_1(x_n - z_n, t) against tangential derivatives of script-A columns.
double c_eval_base(int i, const SpaceTimePoint& x, std::vector<int> l, int m,
                   const QuadratureSpec& spec) {
    const int n = x.dim();
    if (x.x_n == 0.0) return 0.0;  // empty slab
    QuadratureSpec inner = spec;
    inner.abs_tol *= 0.2;
    inner.rel_tol *= 0.2;
    AScriptProfile prof(n, inner);
    const double r = (n == 3) ? x.tangential_radius() : x.x_prime[0];

    const bool normal_component = (i == n - 1);
    std::vector<int> lfull = l;
    if (!normal_component) lfull[i] += 1;
    int lt = 0;
    for (int v : lfull) lt += v;
    const int zcol = normal_component ? 1 : 0;
    const int max_r = lt + (m > 0 ? 2 : 0);
    const int cols = zcol + 1;

    const int l1 = lfull[0];
    const int l2 = (n == 3) ? lfull[1] : 0;

    auto cart = [&](std::span<const double> rs) {
        if (n == 2) return rs[lt];
        auto chain = RadialChain::from_stack(rs, std::max(r, 1e-300), lt);
        return chain.deriv(x.x_prime[0], x.x_prime[1], l1, l2);
    };

    auto integrand = [&](double z_n) {
        std::vector<double> stack((max_r + 1) * cols);
        prof.eval_stack(r, z_n, x.t, max_r, zcol, stack.data());
        std::vector<double> ck(max_r + 1);
        for (int a = 0; a <= max_r; ++a) ck[a] = stack[a * cols + zcol];

        double total = 0.0;
        for (int m1 = 0; m1 <= m; ++m1) {
            const int m2 = m - m1;
            double binom = 1.0;
            for (int j = 0; j < m1; ++j) binom = binom * (m - j) / (j + 1);
            const double gpart = gamma1(x.x_n - z_n, x.t, 1, m1);
            if (gpart == 0.0) continue;
            double apart;
            if (m2 == 0) {
                apart = cart(std::span<const double>(ck.data(), lt + 1));
            } else {
                // d_t scriptA = Delta' scriptA (heat flow of the tangential factor)
                std::vector<double> lap(lt + 1);
                if (n == 2) {
                    for (int a = 0; a <= lt; ++a) lap[a] = ck[a + 2];
                } else {
                    std::vector<double> f1(lt + 1);
                    const double rr = std::max(r, 1e-300);
                    f1[0] = ck[1] / rr;
                    for (int mm = 1; mm <= lt; ++mm)
                        f1[mm] = (ck[mm + 1] - mm * f1[mm - 1]) / rr;
                    for (int a = 0; a <= lt; ++a) lap[a] = ck[a + 2] + f1[a];
                }
                apart = cart(std::span<const double>(lap.data(), lt + 1));
            }
            total += binom * gpart * apart;
        }
        return total;
    };

    // the dGamma_1 factor peaks near z_n = x_n - sqrt(2t); seed it when inside
    const double peak = x.x_n - std::sqrt(2.0 * x.t);
    std::vector<double> seeds{0.0, x.x_n};
    if (peak > 0.0 && peak < x.x_n) seeds.insert(seeds.begin() + 1, peak);
    double total = 0.0;
    for (size_t s = 0; s + 1 < seeds.size(); ++s)
        total += integrate_1d(integrand, seeds[s], seeds[s + 1], spec).value;
    return total;
}

double b_deriv_for_rewrite(const SpaceTimePoint& x, const std::vector<int>& l, int k, int m,
                           const QuadratureSpec& spec) {
    DerivMultiIndex d(l, k, m);
    const int n = x.dim();
    if (n == 2) return b_eval_product(x, d, spec, TangentialEProfile::Backend::Direct2d);
    return b_eval_product(x, d, spec, TangentialEProfile::Backend::Closed3d);
}

double c_deriv(int i, const SpaceTimePoint& x, std::vector<int> l, int k, int m,
               const QuadratureSpec& spec) {
    const int n = x.dim();
    if (k == 0) return c_eval_base(i, x, l, m, spec);
    if (i < n - 1) {
        // d_n C_i = d_i C_n + d_i d_n B
        std::vector<int> li = l;
        li[i] += 1;
        return c_deriv(n - 1, x, li, k - 1, m, spec) + b_deriv_for_rewrite(x, li, k, m, spec);
    }
    // d_n C_n = -sum_p d_p C_p - (1/2) d_n Gamma
    double total = 0.0;
    for (int p = 0; p < n - 1; ++p) {
        std::vector<int> lp = l;
        lp[p] += 1;
        total -= c_deriv(p, x, lp, k - 1, m, spec);
    }
    std::vector<double> xv(x.x_prime);
    xv.push_back(x.x_n);
    total -= 0.5 * heat_kernel(xv, x.t, DerivMultiIndex(l, k, m));
    return total;
}

}  // namespace

double C_eval(int i, const SpaceTimePoint& x, const DerivMultiIndex& d,
              const QuadratureSpec& spec) {
    const int n = x.dim();
    if (i < 0 || i >= n) throw std::invalid_argument("C_eval: component out of range");
    if (!(x.t > 0)) throw std::invalid_argument("C_eval: t must be > 0");
    if (d.l_total() + d.k > 3 || d.m > 1)
        throw std::invalid_argument("C_eval: supports |l|+k <= 3, m <= 1");
    return c_deriv(i, x, d.l, d.k, d.m, spec);
}

double C_eval_direct(int i, const SpaceTimePoint& x, const QuadratureSpec& spec) {
    const int n = x.dim();
    if (n != 3) throw DimensionUnsupported("C_eval_direct: n = 3 oracle");
    if (x.x_n == 0.0) return 0.0;
    const double R = gaussian_truncation_radius(x.t, 1.0, spec, 4.0);
    const double rmax = x.tangential_radius() + R;
    QuadratureSpec inner = spec;
    inner.abs_tol *= 0.3;
    inner.rel_tol *= 0.3;
    auto f = [&](double z_n) {
        auto g = [&](std::span<const double> p) {
            const double rho = p[0], th = p[1];
            const double z1 = rho * std::cos(th), z2 = rho * std::sin(th);
            const std::array<double, 2> w = {x.x_prime[0] - z1, x.x_prime[1] - z2};
            double gp = 1.0;
            for (double c : w) gp *= gamma1(c, x.t, 0, 0);
            const double zz[3] = {z1, z2, z_n};
            int didx[3] = {0, 0, 0};
            didx[i] = 1;
            return rho * gp * laplace_E(std::span<const double>(zz, 3),
                                        std::span<const int>(didx, 3));
        };
        Box box{{{0.0, rmax}, {0.0, 2.0 * M_PI}}};
        return gamma1(x.x_n - z_n, x.t, 1, 0) * integrate_nd(g, box, inner).value;
    };
    return integrate_1d(f, 0.0, x.x_n, spec).value;
}

double golovkin_regular(int i, int j, const SpaceTimePoint& x, double t,
                        const QuadratureSpec& spec) {
    const int n = x.dim();
    if (i < 0 || i >= n || j < 0 || j >= n)
        throw std::invalid_argument("golovkin_regular: indices out of range");
    SpaceTimePoint xt = x;
    xt.t = t;
    std::vector<double> xv(x.x_prime);
    xv.push_back(x.x_n);
    double total = 0.0;
    if (i == j)
        total -= 2.0 * heat_kernel(xv, t, DerivMultiIndex(std::vector<int>(n - 1, 0), 1, 0));
    DerivMultiIndex dj(std::vector<int>(n - 1, 0), 0, 0);
    if (j < n - 1) dj.l[j] = 1;
    else dj.k = 1;
    total -= 4.0 * C_eval(i, xt, dj, spec);
    return total;
}

double bjn_decomposition(int j, const SpaceTimePoint& x, const QuadratureSpec& spec) {
    const int n = x.dim();
    if (j < 0 || j >= n - 1) throw std::invalid_argument("bjn_decomposition: tangential j");
    const double dgn = gamma1(x.x_n, x.t, 1, 0);
    if (dgn == 0.0) throw DegenerateDivision("bjn_decomposition: d_n Gamma_1 underflows");
    DerivMultiIndex d(std::vector<int>(n - 1, 0), 1, 0);
    d.l[j] = 1;
    const double djnB = b_eval_direct(x, d, spec);
    std::vector<double> xb(x.x_prime);
    xb.push_back(0.0);
    std::vector<int> de(n, 0);
    de[j] = 1;
    const double djE = laplace_E(xb, de);
    return djnB / dgn - djE;
}

}  // namespace shs
