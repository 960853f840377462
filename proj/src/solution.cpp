#include "stokeshs/solution.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "stokeshs/kernels.hpp"
#include "stokeshs/potentials.hpp"
#include "stokeshs/radial.hpp"

namespace shs {

namespace {

struct Prim {
    enum class Type { Psi, Gamma, B };
    Type type;
    int comp = 0;               // Psi: C-component the slab profile belongs to
    std::array<int, 2> l{0, 0};
    int k = 0;                  // Gamma/B: normal-derivative order on the Gamma_1 factor
    int gt = 0;                 // derivative order applied to the temporal profile

    bool operator<(const Prim& o) const {
        auto key = [](const Prim& p) {
            return std::tuple(static_cast<int>(p.type), p.comp, p.l[0], p.l[1], p.k, p.gt);
        };
        return key(*this) < key(o);
    }
};

struct TermRef {
    int prim;
    double coeff;
    std::string label;
};

struct ETermSpec {
    std::array<int, 2> l{0, 0};
    int k = 0;
    int icomp = 0;  // the d_i E index of the instantaneous kernel
    int gt = 0;
    double coeff = 0;
    std::string label;
};

// labels: base decomposition uses gamma/C/B/E; the second-normal-derivative
// route exposes the named split K1/K25/K26/K27/K28
struct LabelSet {
    std::string gamma_base, psi, gamma_c, b_space, b_time;
};

}  // namespace

struct SolutionEvaluator::Assembly {
    std::vector<Prim> prims;
    std::map<Prim, int> index;
    std::vector<std::vector<TermRef>> req_terms;
    std::vector<std::vector<ETermSpec>> req_eterms;

    int prim_id(const Prim& p) {
        auto it = index.find(p);
        if (it != index.end()) return it->second;
        const int id = static_cast<int>(prims.size());
        prims.push_back(p);
        index.emplace(p, id);
        return id;
    }
};

namespace {

// expansion of [d^l d_n^k C_i * g^S] into primitives via the C-relations
void expand_c(int i, std::array<int, 2> l, int k, int gt, double coeff, int n,
              const LabelSet& lab, SolutionEvaluator::Assembly& as,
              std::vector<TermRef>& out);

void expand_b(std::array<int, 2> l, int k, int gt, double coeff, int n, const LabelSet& lab,
              SolutionEvaluator::Assembly& as, std::vector<TermRef>& out) {
    if (k <= 1) {
        const int id = as.prim_id({Prim::Type::B, 0, l, k, gt});
        out.push_back({id, coeff, gt > 0 ? lab.b_time : lab.b_space});
        return;
    }
    // d_n^k B = d_n^{k-2} (d_t B - Delta' B); the time derivative is moved
    // onto the temporal profile by parts (supported data, zero boundary terms)
    const int id = as.prim_id({Prim::Type::B, 0, l, k - 2, gt + 1});
    out.push_back({id, coeff, lab.b_time});
    for (int p = 0; p < n - 1; ++p) {
        auto lp = l;
        lp[p] += 2;
        expand_b(lp, k - 2, gt, -coeff, n, lab, as, out);
    }
}

void expand_c(int i, std::array<int, 2> l, int k, int gt, double coeff, int n,
              const LabelSet& lab, SolutionEvaluator::Assembly& as,
              std::vector<TermRef>& out) {
    if (k == 0) {
        const int id = as.prim_id({Prim::Type::Psi, i, l, 0, gt});
        out.push_back({id, coeff, lab.psi});
        return;
    }
    if (i < n - 1) {
        auto li = l;
        li[i] += 1;
        expand_c(n - 1, li, k - 1, gt, coeff, n, lab, as, out);
        expand_b(li, k, gt, coeff, n, lab, as, out);
        return;
    }
    for (int p = 0; p < n - 1; ++p) {
        auto lp = l;
        lp[p] += 1;
        expand_c(p, lp, k - 1, gt, -coeff, n, lab, as, out);
    }
    const int id = as.prim_id({Prim::Type::Gamma, 0, l, k, gt});
    out.push_back({id, -0.5 * coeff, lab.gamma_c});
}

}  // namespace

SolutionEvaluator::SolutionEvaluator(const BoundaryData& g, const SolutionConfig& cfg)
    : g_(g), cfg_(cfg) {
    const int n = g_.n.n;
    if (n != 2 && n != 3)
        throw DimensionUnsupported("SolutionEvaluator: quadrature-backed paths need n in {2,3}");
    smooth_.resize(n);
    QuadratureSpec sspec = cfg_.quad;
    for (int j = 0; j < n; ++j) {
        if (!g_.active(j)) continue;
        smooth_[j] = std::make_shared<SmoothedSpatial>(g_.components[j].spatial, n, sspec);
    }
}

void SolutionEvaluator::assemble(int j, const SpaceTimePoint& x,
                                 std::span<const VelocityRequest> requests,
                                 Assembly& as) const {
    const int n = g_.n.n;
    as.req_terms.assign(requests.size(), {});
    as.req_eterms.assign(requests.size(), {});
    for (size_t r = 0; r < requests.size(); ++r) {
        const auto& rq = requests[r];
        const int i = rq.i;
        std::array<int, 2> dl{0, 0};
        for (size_t q = 0; q < rq.d.l.size(); ++q) dl[q] = rq.d.l[q];
        const int dk = rq.d.k;
        const int dm = rq.d.m;

        const bool k_route = (dk == 2 && rq.d.l_total() == 0 && dm == 0 && i < n - 1);
        LabelSet lab;
        if (k_route) {
            lab = {"K1", "K25", "K26", "K27", "K28"};
        } else {
            lab = {"gamma", "C", "C", "B", "B"};
        }

        // Gamma part of the kernel: -2 delta_ij d_n Gamma
        if (i == j) {
            const int id = as.prim_id({Prim::Type::Gamma, 0, dl, dk + 1, dm});
            as.req_terms[r].push_back({id, -2.0, lab.gamma_base});
        }
        // C part: -4 d_j C_i, with the data-component derivative tangential or normal
        if (j < n - 1) {
            auto lj = dl;
            lj[j] += 1;
            expand_c(i, lj, dk, dm, -4.0, n, lab, as, as.req_terms[r]);
        } else {
            expand_c(i, dl, dk + 1, dm, -4.0, n, lab, as, as.req_terms[r]);
            // instantaneous part of K_in: -2 d_i E(x) delta(t)
            ETermSpec e;
            e.l = dl;
            e.k = dk;
            e.icomp = i;
            e.gt = dm;
            e.coeff = -2.0;
            e.label = "E";
            as.req_eterms[r].push_back(e);
        }
        (void)x;
    }
}

namespace {

// slab-fused radial profiles for the Psi sweep (n = 3):
//   R_tan(rho) = int_0^{xn} dGamma_1(xn - zn, tau) * (-rho / (4 pi q^{3/2})) dzn
//   R_nor(rho) = int_0^{xn} dGamma_1(xn - zn, tau) * (-zn  / (4 pi q^{3/2})) dzn
void slab_profiles(double rho, double xn, double tau, double abs_tol, double rel_tol,
                   double* r_tan, double* r_nor) {
    if (xn <= 0.0) {
        *r_tan = 0.0;
        *r_nor = 0.0;
        return;
    }
    AdaptiveGK drv(2, abs_tol, rel_tol, 24, true);
    auto f = [&](double zn, double* out) {
        const double g = gamma1(xn - zn, tau, 1, 0);
        const double q = rho * rho + zn * zn;
        const double s = g / (4.0 * M_PI * q * std::sqrt(q));
        out[0] = -rho * s;
        out[1] = -zn * s;
    };
    std::vector<double> seeds{0.0};
    if (rho < xn) seeds.push_back(std::min(4.0 * rho, 0.5 * xn));
    // cover the full extent of the dGamma_1 spike at the z_n = x_n end
    const double sq = std::sqrt(tau);
    for (double c : {1.4, 4.0, 12.0, 30.0}) {
        const double p = xn - c * sq;
        if (p > 0 && p < xn) seeds.push_back(p);
    }
    seeds.push_back(xn);
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
    double val[2], err[2];
    drv.run(f, std::span<const double>(seeds), val, err);
    *r_tan = val[0];
    *r_nor = val[1];
}

struct PsiNeed {
    int comp;
    std::array<int, 2> l;
};

// fused tangential sweep: Psi[comp, l] = int d^l h(x'-z') G_comp(z') dz'
void psi_sweep3(const SmoothedSpatial& h, const SpaceTimePoint& x, double tau,
                std::span<const PsiNeed> needs, double abs_tol, double rel_tol, double* out,
                double* err_out) {
    const int m = static_cast<int>(needs.size());
    const double r0 = x.tangential_radius();
    const double phi0 = (r0 > 0) ? std::atan2(x.x_prime[1], x.x_prime[0]) : 0.0;

    // with even product data and the point on a symmetry axis, components of
    // odd total parity in the mirrored coordinate vanish exactly
    bool sym[2] = {false, false};
    if (h.is_product()) {
        for (int c = 0; c < 2; ++c) {
            const auto sup = h.profile().support_box().bounds[c];
            sym[c] = (x.x_prime[c] == 0.0) && (sup[0] == -sup[1]);
        }
    }
    std::vector<int> skip(m, 0);
    for (int q = 0; q < m; ++q) {
        for (int c = 0; c < 2; ++c) {
            if (!sym[c]) continue;
            const int parity = needs[q].l[c] + ((needs[q].comp == c) ? 1 : 0);
            if (parity % 2 == 1) skip[q] = 1;
        }
    }
    bool all_skipped = true;
    for (int q = 0; q < m; ++q) all_skipped = all_skipped && skip[q];
    if (all_skipped) {
        for (int q = 0; q < m; ++q) out[q] = err_out[q] = 0.0;
        return;
    }

    // radial reach of the smoothed data support
    double W2 = 0.0;
    for (int c = 0; c < 2; ++c) {
        const auto s = h.effective_support(c, tau);
        W2 += std::max(s[0] * s[0], s[1] * s[1]);
    }
    const double W = std::sqrt(W2);
    const double lo = std::max(0.0, r0 - W), hi = r0 + W;
    if (!(hi > lo)) {
        for (int c = 0; c < m; ++c) out[c] = err_out[c] = 0.0;
        return;
    }

    AdaptiveGK rho_drv(m, abs_tol, rel_tol, 120, true);
    std::vector<double> theta_val(m), theta_err(m);
    auto rho_f = [&](double rho, double* o) {
        // angular restriction to the arc meeting the data support
        double psi_max = M_PI;
        if (r0 > 0 && rho > 0) {
            const double c = (rho * rho + r0 * r0 - W2) / (2.0 * rho * r0);
            if (c >= 1.0) {
                for (int q = 0; q < m; ++q) o[q] = 0.0;
                return;
            }
            if (c > -1.0) psi_max = std::acos(c);
        }
        double r_tan, r_nor;
        slab_profiles(rho, x.x_n, tau, abs_tol * 0.3, rel_tol, &r_tan, &r_nor);
        AdaptiveGK th_drv(m, abs_tol * 0.5, rel_tol, 24, true);
        auto th_f = [&](double psi, double* to) {
            const double th = phi0 + psi;
            const double e1 = std::cos(th), e2 = std::sin(th);
            const double w[2] = {x.x_prime[0] - rho * e1, x.x_prime[1] - rho * e2};
            double hv[2][4];
            h.factor_values(std::span<const double>(w, 2), tau, hv);
            for (int q = 0; q < m; ++q) {
                const auto& nd = needs[q];
                const double hval = hv[0][nd.l[0]] * hv[1][nd.l[1]];
                double dir;
                double rprof;
                if (nd.comp == 0) {
                    dir = e1;
                    rprof = r_tan;
                } else if (nd.comp == 1) {
                    dir = e2;
                    rprof = r_tan;
                } else {
                    dir = 1.0;
                    rprof = r_nor;
                }
                to[q] = hval * dir * rprof;
            }
        };
        const bool okt = th_drv.run(th_f, -psi_max, psi_max, theta_val.data(), theta_err.data());
        (void)okt;
        for (int q = 0; q < m; ++q) o[q] = skip[q] ? 0.0 : rho * theta_val[q];
    };

    std::vector<double> seeds{lo, hi};
    if (lo == 0.0) {
        for (double s : {x.x_n, 4.0 * x.x_n, 0.25 * hi})
            if (s > lo && s < hi) seeds.push_back(s);
    }
    if (r0 > lo && r0 < hi) seeds.push_back(r0);
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
    rho_drv.run(rho_f, std::span<const double>(seeds), out, err_out);
    for (int q = 0; q < m; ++q)
        if (skip[q]) out[q] = err_out[q] = 0.0;
}

// n = 2 variant: 1-D tangential integral with the odd/even slab kernels
void psi_sweep2(const SmoothedSpatial& h, const SpaceTimePoint& x, double tau,
                std::span<const PsiNeed> needs, double abs_tol, double rel_tol, double* out,
                double* err_out) {
    const int m = static_cast<int>(needs.size());
    const auto sup = h.effective_support(0, tau);
    const double x1 = x.x_prime[0];
    const double lo = x1 - std::max(std::abs(sup[0]), std::abs(sup[1]));
    const double hi = x1 + std::max(std::abs(sup[0]), std::abs(sup[1]));
    AdaptiveGK drv(m, abs_tol, rel_tol, 120, true);
    auto f = [&](double z1, double* o) {
        double g_tan = 0.0, g_nor = 0.0;
        if (x.x_n > 0.0) {
            AdaptiveGK zn_drv(2, abs_tol * 0.3, rel_tol, 16, true);
            auto zf = [&](double zn, double* zo) {
                const double g = gamma1(x.x_n - zn, tau, 1, 0);
                const double q = z1 * z1 + zn * zn;
                zo[0] = -g * z1 / (2.0 * M_PI * q);
                zo[1] = -g * zn / (2.0 * M_PI * q);
            };
            std::vector<double> zseeds{0.0};
            for (double c : {1.4, 4.0, 12.0, 30.0}) {
                const double p = x.x_n - c * std::sqrt(tau);
                if (p > 0 && p < x.x_n) zseeds.push_back(p);
            }
            zseeds.push_back(x.x_n);
            std::sort(zseeds.begin(), zseeds.end());
            double val[2], err[2];
            zn_drv.run(zf, std::span<const double>(zseeds), val, err);
            g_tan = val[0];
            g_nor = val[1];
        }
        const double w[1] = {x1 - z1};
        for (int q = 0; q < m; ++q) {
            const auto& nd = needs[q];
            const int l[1] = {nd.l[0]};
            const double hval = h.eval(std::span<const double>(w, 1),
                                       std::span<const int>(l, 1), tau);
            o[q] = hval * (nd.comp == 0 ? g_tan : g_nor);
        }
    };
    std::vector<double> seeds{lo, hi};
    for (double s : {-4.0 * x.x_n, -x.x_n, 0.0, x.x_n, 4.0 * x.x_n})
        if (s > lo && s < hi) seeds.push_back(s);
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
    drv.run(f, std::span<const double>(seeds), out, err_out);
}

// [d^l W * g^S](x') for the B-type primitives, one y'-sweep for all l-combos
void wconv_sweep(const SpatialProfile& gs, const SpaceTimePoint& x, double tau,
                 std::span<const std::array<int, 2>> lneeds, const QuadratureSpec& spec,
                 double abs_tol, double rel_tol, double* out, double* err_out) {
    const int n = x.dim();
    const int m = static_cast<int>(lneeds.size());
    const auto& box = gs.support_box();
    if (n == 2) {
        TangentialEProfile W(2, TangentialEProfile::Backend::Direct2d, spec);
        AdaptiveGK drv(m, abs_tol, rel_tol, 200, true);
        int max_l = 0;
        for (const auto& l : lneeds) max_l = std::max(max_l, l[0]);
        auto f = [&](double y1, double* o) {
            double st[5];
            W.r_stack(x.x_prime[0] - y1, tau, max_l, st);
            const double y[1] = {y1};
            const int l0[1] = {0};
            const double g = gs.eval(std::span<const double>(y, 1), std::span<const int>(l0, 1));
            for (int q = 0; q < m; ++q) o[q] = g * st[lneeds[q][0]];
        };
        drv.run(f, box.bounds[0][0], box.bounds[0][1], out, err_out);
        return;
    }
    TangentialEProfile W(3, TangentialEProfile::Backend::Closed3d, spec);
    int max_l = 0;
    for (const auto& l : lneeds) max_l = std::max(max_l, l[0] + l[1]);
    AdaptiveGK drv(m, abs_tol, rel_tol, 120, true);
    // iterated 1-D adaptive over the support box
    auto fy2 = [&](double y1, double* o) {
        AdaptiveGK inner(m, abs_tol * 0.2, rel_tol * 0.3, 80, true);
        auto f = [&](double y2, double* io) {
            const double w1 = x.x_prime[0] - y1, w2 = x.x_prime[1] - y2;
            double ss[5];
            W.s_stack(w1 * w1 + w2 * w2, tau, std::min(max_l, 4), ss);
            SquareRadialChain chain;
            for (int q = 0; q <= std::min(max_l, 4); ++q) chain.fs[q] = ss[q];
            const double y[2] = {y1, y2};
            const int l0[2] = {0, 0};
            const double g = gs.eval(std::span<const double>(y, 2), std::span<const int>(l0, 2));
            for (int q = 0; q < m; ++q)
                io[q] = g * chain.deriv(w1, w2, lneeds[q][0], lneeds[q][1]);
        };
        std::vector<double> val(m), err(m);
        inner.run(f, box.bounds[1][0], box.bounds[1][1], val.data(), err.data());
        for (int q = 0; q < m; ++q) o[q] = val[q];
    };
    drv.run(fy2, box.bounds[0][0], box.bounds[0][1], out, err_out);
}

// time-integration pieces for one data component
struct TimePiece {
    double a, b;
    double cusp_exponent = 0.0;  // (tau - a)^{cusp} behaviour at the left end; 0 = none
};

std::vector<TimePiece> time_pieces(const TemporalProfile& gt, double t, double x_n,
                                   int max_gt_order, double gauss_scale) {
    std::vector<TimePiece> out;
    const auto sup = gt.support();
    const double lo = std::max(0.0, t - sup[1]);
    const double hi = t - sup[0];
    if (!(hi > lo) || !(t > sup[0])) return out;

    std::vector<double> cuts{lo, hi};
    for (double s : gt.breakpoints(sup[0], sup[1])) {
        const double tauv = t - s;
        if (tauv > lo && tauv < hi) cuts.push_back(tauv);
    }
    // geometric ladder at the Gaussian time scale: below it the integrand is
    // flat zero, across it the exp(-c/tau) transition is resolved per piece
    const double c_scale = std::max(gauss_scale, 0.25 * x_n * x_n);
    if (c_scale > 0) {
        for (double f : {1.0 / 1024.0, 1.0 / 256.0, 1.0 / 64.0, 1.0 / 16.0, 1.0 / 4.0, 1.0,
                         4.0, 16.0, 64.0}) {
            const double tauv = f * c_scale;
            if (tauv > lo && tauv < hi) cuts.push_back(tauv);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (size_t i = 0; i + 1 < cuts.size(); ++i) out.push_back({cuts[i], cuts[i + 1], 0.0});

    // the power-cusp profile has (1-s)^a at s = 1; in tau that endpoint is
    // t - 1 and only enters the integration range when t >= 1
    if (gt.kind() == TemporalKind::PowerCusp && t - 1.0 >= 0.0 && !out.empty() &&
        std::abs(out.front().a - (t - 1.0)) < 1e-13) {
        out.front().cusp_exponent = gt.param_a() - std::min(max_gt_order, 1);
    }
    return out;
}

}  // namespace

namespace {

// Chebyshev-Gauss-Lobatto proxy of a smooth vector function on [0,1]. The
// Psi sweeps are analytic in tau inside each time piece, so sampling them at
// CGL nodes and integrating the barycentric interpolant replaces hundreds of
// tangential sweeps by a few dozen. The trailing-coefficient tail supplies an
// error estimate per component.
struct ChebProxy {
    int n = 0;                     // node count
    std::vector<double> nodes;     // CGL nodes in [0,1]
    std::vector<double> vals;      // node x comp
    std::vector<double> tail_err;  // per comp
    int comps = 0;

    static std::vector<double> cgl_nodes(int n) {
        std::vector<double> x(n);
        for (int j = 0; j < n; ++j) x[j] = 0.5 * (1.0 - std::cos(M_PI * j / (n - 1)));
        return x;
    }

    void compute_tail() {
        // coefficients of T_k on the CGL grid by the discrete cosine sum
        const int N = n - 1;
        tail_err.assign(comps, 0.0);
        std::vector<double> scale(comps, 0.0);
        for (int c = 0; c < comps; ++c) {
            for (int k = N - 2; k <= N; ++k) {
                double a = 0.0;
                for (int j = 0; j <= N; ++j) {
                    const double w = (j == 0 || j == N) ? 0.5 : 1.0;
                    a += w * vals[j * comps + c] * std::cos(M_PI * k * j / N);
                }
                a *= 2.0 / N;
                tail_err[c] += std::abs(a);
            }
            for (int j = 0; j <= N; ++j)
                scale[c] = std::max(scale[c], std::abs(vals[j * comps + c]));
        }
    }

    // barycentric interpolation at v in [0,1]
    void eval(double v, double* out) const {
        const int N = n - 1;
        for (int j = 0; j < n; ++j) {
            if (std::abs(v - nodes[j]) < 1e-15) {
                for (int c = 0; c < comps; ++c) out[c] = vals[j * comps + c];
                return;
            }
        }
        double denom = 0.0;
        for (int c = 0; c < comps; ++c) out[c] = 0.0;
        for (int j = 0; j < n; ++j) {
            double w = (j % 2 == 0 ? 1.0 : -1.0);
            if (j == 0 || j == N) w *= 0.5;
            const double q = w / (v - nodes[j]);
            denom += q;
            for (int c = 0; c < comps; ++c) out[c] += q * vals[j * comps + c];
        }
        const double inv = 1.0 / denom;
        for (int c = 0; c < comps; ++c) out[c] *= inv;
    }
};

}  // namespace

std::vector<VelocityResult> SolutionEvaluator::evaluate(
    const SpaceTimePoint& x, std::span<const VelocityRequest> requests) const {
    const int n = g_.n.n;
    std::vector<VelocityResult> results(requests.size());
    for (const auto& rq : requests) {
        if (rq.i < 0 || rq.i >= n) throw std::invalid_argument("velocity: component out of range");
        if (static_cast<int>(rq.d.l.size()) != n - 1)
            throw std::invalid_argument("velocity: multi-index size mismatch");
        if (rq.d.l_total() + rq.d.k > 2 || rq.d.m > 1)
            throw std::invalid_argument("velocity_derivative: supports |l|+k <= 2, m <= 1");
    }
    if (!(x.t > 0)) return results;  // zero initial data, causality

    // boundary trace cases
    if (x.x_n == 0.0) {
        bool inside = false;
        for (int j = 0; j < n; ++j) {
            if (!g_.active(j)) continue;
            const auto& box = g_.components[j].spatial->support_box();
            bool in = true;
            for (int c = 0; c < n - 1; ++c)
                in = in && x.x_prime[c] > box.bounds[c][0] && x.x_prime[c] < box.bounds[c][1];
            inside = inside || in;
        }
        for (size_t r = 0; r < requests.size(); ++r) {
            if (!inside) continue;  // trace of g vanishes outside the support
            if (!requests[r].d.is_zero())
                throw SingularPoint("velocity: derivative on the boundary inside the support");
            std::vector<int> l0(n - 1, 0);
            results[r].value =
                eval_g(g_, requests[r].i, x.x_prime, x.t, l0, 0);
            results[r].trace_at_support = true;
            results[r].terms["trace"] = results[r].value;
        }
        return results;
    }

    for (int j = 0; j < n; ++j) {
        if (!g_.active(j)) continue;
        const auto& comp = g_.components[j];
        const double amp = comp.amplitude;
        Assembly as;
        assemble(j, x, requests, as);

        // maximum g^T-derivative order used (for cusp strength and validation)
        int max_gt = 0;
        for (const auto& p : as.prims) max_gt = std::max(max_gt, p.gt);
        for (const auto& rts : as.req_eterms)
            for (const auto& e : rts) max_gt = std::max(max_gt, e.gt);
        if (max_gt > 0 && !comp.temporal->differentiable())
            throw NonDifferentiable("velocity: temporal profile derivative required");

        const int np = static_cast<int>(as.prims.size());
        std::vector<double> prim_val(np, 0.0), prim_err(np, 0.0);

        if (np > 0) {
            // unions of needs per primitive type
            std::vector<PsiNeed> psi_needs;
            std::vector<std::array<int, 2>> bl_needs;
            std::vector<std::array<int, 2>> hl_needs;
            std::vector<int> psi_of(np, -1), b_of(np, -1), h_of(np, -1);
            for (int p = 0; p < np; ++p) {
                const auto& pr = as.prims[p];
                if (pr.type == Prim::Type::Psi) {
                    for (size_t q = 0; q < psi_needs.size(); ++q)
                        if (psi_needs[q].comp == pr.comp && psi_needs[q].l == pr.l)
                            psi_of[p] = static_cast<int>(q);
                    if (psi_of[p] < 0) {
                        psi_of[p] = static_cast<int>(psi_needs.size());
                        psi_needs.push_back({pr.comp, pr.l});
                    }
                } else if (pr.type == Prim::Type::B) {
                    for (size_t q = 0; q < bl_needs.size(); ++q)
                        if (bl_needs[q] == pr.l) b_of[p] = static_cast<int>(q);
                    if (b_of[p] < 0) {
                        b_of[p] = static_cast<int>(bl_needs.size());
                        bl_needs.push_back(pr.l);
                    }
                } else {
                    for (size_t q = 0; q < hl_needs.size(); ++q)
                        if (hl_needs[q] == pr.l) h_of[p] = static_cast<int>(q);
                    if (h_of[p] < 0) {
                        h_of[p] = static_cast<int>(hl_needs.size());
                        hl_needs.push_back(pr.l);
                    }
                }
            }

            double box_d2 = x.x_n * x.x_n;
            {
                const auto& box = comp.spatial->support_box();
                for (int c = 0; c < n - 1; ++c) {
                    const double lo_b = box.bounds[c][0], hi_b = box.bounds[c][1];
                    const double d = std::max({0.0, lo_b - x.x_prime[c], x.x_prime[c] - hi_b});
                    box_d2 += d * d;
                }
            }
            const auto pieces = time_pieces(*comp.temporal, x.t, x.x_n, max_gt, 0.25 * box_d2);
            const double inner_abs = cfg_.quad.abs_tol * 0.5;
            const double inner_rel = std::max(cfg_.quad.rel_tol * 0.5, 1e-10);

            // Psi sweeps at a given tau (the expensive tangential integrals)
            auto psi_at = [&](double tau, double* out, double* errs) {
                if (!(tau > 0.0)) {
                    for (size_t q = 0; q < psi_needs.size(); ++q) out[q] = errs[q] = 0.0;
                    return;
                }
                if (n == 3)
                    psi_sweep3(*smooth_[j], x, tau, psi_needs, inner_abs, inner_rel, out,
                               errs);
                else
                    psi_sweep2(*smooth_[j], x, tau, psi_needs, inner_abs, inner_rel, out,
                               errs);
            };

            for (const auto& piece : pieces) {
                const bool zero_touch_piece = piece.a <= 1e-12 * piece.b;
                const bool have_psi = !psi_needs.empty();
                // left-end exponent: temporal cusp plus the tau^{-1/2} kernel
                // factor carried by the slab-fused C-terms at tau -> 0
                double gamma_left = piece.cusp_exponent;
                if (zero_touch_piece && have_psi) {
                    gamma_left += -0.5;
                    if (gamma_left <= -1.0)
                        throw NonDifferentiable(
                            "velocity: time integral diverges at the cusp time");
                }
                const bool cusped = gamma_left != 0.0 && gamma_left < 1.0;
                const double pexp = cusped ? 1.0 / (1.0 + gamma_left) : 1.0;
                const double len = piece.b - piece.a;
                auto tau_of = [&](double v) {
                    return cusped ? piece.a + len * std::pow(v, pexp) : piece.a + len * v;
                };
                auto jac_of = [&](double v) {
                    return cusped ? len * pexp * std::pow(v, pexp - 1.0) : len;
                };

                // Psi is smooth in tau inside the piece, with a sqrt(tau)
                // boundary-layer expansion when the piece touches tau = 0:
                // sample on a CGL grid in y with tau = a + len y^6 there (half
                // powers become polynomials) and linearly otherwise
                ChebProxy proxy;
                const bool zero_touch = zero_touch_piece;
                // proxy represents sqrt(tau)-scaled Psi on zero-touching
                // pieces (the slab kernels diverge like tau^{-1/2} there);
                // sampling floor keeps the z_n boundary layers resolvable
                const double tau_floor = zero_touch ? piece.b * 1e-8 : 0.0;
                const double y_floor =
                    zero_touch ? std::pow(tau_floor / (piece.b - piece.a + tau_floor), 1.0 / 6.0)
                               : 0.0;
                auto y_of_tau = [&](double tau) {
                    const double frac =
                        std::min(std::max((std::max(tau, tau_floor) - piece.a) / len, 0.0), 1.0);
                    const double y = zero_touch ? std::pow(frac, 1.0 / 6.0) : frac;
                    return std::max(y, y_floor);
                };
                auto tau_of_y = [&](double y) {
                    const double yc = std::max(y, y_floor);
                    const double tau = piece.a + len * (zero_touch ? std::pow(yc, 6.0) : yc);
                    return std::max(tau, tau_floor);
                };
                auto psi_scale = [&](double tau) {
                    return zero_touch ? std::sqrt(std::max(tau, tau_floor) / piece.b) : 1.0;
                };
                const int m_psi = static_cast<int>(psi_needs.size());
                if (m_psi > 0) {
                    proxy.comps = m_psi;
                    int nn = 17;
                    for (int attempt = 0; attempt < 2; ++attempt) {
                        proxy.n = nn;
                        proxy.nodes = ChebProxy::cgl_nodes(nn);
                        for (double& nd : proxy.nodes) nd = y_floor + (1.0 - y_floor) * nd;
                        proxy.vals.assign(static_cast<size_t>(nn) * m_psi, 0.0);
                        std::vector<double> pe(m_psi);
                        for (int jn = 0; jn < nn; ++jn) {
                            const double tauj = std::min(tau_of_y(proxy.nodes[jn]), piece.b);
                            psi_at(tauj, &proxy.vals[jn * m_psi], pe.data());
                            const double sc = psi_scale(tauj);
                            for (int c = 0; c < m_psi; ++c) proxy.vals[jn * m_psi + c] *= sc;
                        }
                        proxy.compute_tail();
                        double worst_tail = 0.0, scale = 0.0;
                        for (int c = 0; c < m_psi; ++c) {
                            worst_tail = std::max(worst_tail, proxy.tail_err[c]);
                            for (int jn = 0; jn < nn; ++jn)
                                scale = std::max(scale, std::abs(proxy.vals[jn * m_psi + c]));
                        }
                        if (worst_tail <= std::max(inner_abs, inner_rel * scale) * 3.0 ||
                            attempt == 1)
                            break;
                        nn = 33;
                    }
                }

                auto integrand_v = [&](double v, double* out) {
                    const double tau = std::min(tau_of(v), piece.b);
                    if (!(tau > 0.0)) {
                        for (int p = 0; p < np; ++p) out[p] = 0.0;
                        return;
                    }
                    const double jac = jac_of(v);
                    std::vector<double> psi_val(m_psi);
                    if (m_psi > 0) {
                        proxy.eval(y_of_tau(tau), psi_val.data());
                        const double sc = psi_scale(tau);
                        for (int c = 0; c < m_psi; ++c) psi_val[c] /= sc;
                    }
                    std::vector<double> b_val(bl_needs.size()), b_err(bl_needs.size());
                    if (!bl_needs.empty())
                        wconv_sweep(*comp.spatial, x, tau, bl_needs, cfg_.quad, inner_abs,
                                    inner_rel, b_val.data(), b_err.data());
                    std::vector<double> h_val(hl_needs.size());
                    for (size_t q = 0; q < hl_needs.size(); ++q) {
                        const int l[2] = {hl_needs[q][0], hl_needs[q][1]};
                        h_val[q] = smooth_[j]->eval(x.x_prime,
                                                    std::span<const int>(l, n - 1), tau);
                    }
                    double gt_cache[4];
                    for (int o = 0; o <= max_gt; ++o)
                        gt_cache[o] = comp.temporal->eval(x.t - tau, o);
                    for (int p = 0; p < np; ++p) {
                        const auto& pr = as.prims[p];
                        double v2 = 0.0;
                        if (pr.type == Prim::Type::Psi) {
                            v2 = psi_val[psi_of[p]];
                        } else if (pr.type == Prim::Type::B) {
                            v2 = gamma1(x.x_n, tau, pr.k, 0) * b_val[b_of[p]];
                        } else {
                            v2 = gamma1(x.x_n, tau, pr.k, 0) * h_val[h_of[p]];
                        }
                        out[p] = v2 * gt_cache[pr.gt] * jac;
                    }
                };

                AdaptiveGK drv(np, cfg_.quad.abs_tol, cfg_.quad.rel_tol, 320, true);
                std::vector<double> val(np), err(np);
                const bool ok = drv.run(integrand_v, 0.0, 1.0, val.data(), err.data());
                if (!ok) {
                    double worst = 0;
                    for (int p = 0; p < np; ++p) worst = std::max(worst, err[p]);
                    const double tolw = 20.0 * std::max(cfg_.quad.abs_tol,
                                                        cfg_.quad.rel_tol * std::abs(val[0]));
                    if (worst > tolw)
                        throw NonConvergence("velocity: time integral", val[0], worst);
                }
                for (int p = 0; p < np; ++p) {
                    prim_val[p] += val[p];
                    prim_err[p] += err[p];
                    if (as.prims[p].type == Prim::Type::Psi && m_psi > 0)
                        prim_err[p] += proxy.tail_err[psi_of[p]] * std::abs(len);
                }
            }
        }

        for (size_t r = 0; r < requests.size(); ++r) {
            for (const auto& tr : as.req_terms[r]) {
                const double v = amp * tr.coeff * prim_val[tr.prim];
                results[r].value += v;
                results[r].terms[tr.label] += v;
                results[r].err_est += std::abs(amp * tr.coeff) * prim_err[tr.prim];
            }
            for (const auto& e : as.req_eterms[r]) {
                // instantaneous spatial convolution at the observation time
                const double gtv = comp.temporal->eval(x.t, e.gt);
                if (gtv == 0.0) continue;
                const auto& box = comp.spatial->support_box();
                QuadratureSpec es = cfg_.quad;
                std::vector<int> eidx(n, 0);
                for (int c = 0; c < n - 1; ++c) eidx[c] = e.l[c];
                eidx[e.icomp] += 1;
                eidx[n - 1] += e.k;
                auto f = [&](std::span<const double> y) {
                    std::vector<double> w(n);
                    for (int c = 0; c < n - 1; ++c) w[c] = x.x_prime[c] - y[c];
                    w[n - 1] = x.x_n;
                    return laplace_E(w, eidx) * comp.spatial->eval(y);
                };
                const auto er = integrate_nd(f, box, es);
                const double v = amp * e.coeff * gtv * er.value;
                results[r].value += v;
                results[r].terms[e.label] += v;
                results[r].err_est += std::abs(amp * e.coeff * gtv) * er.err_est;
            }
        }
    }
    return results;
}

VelocityResult SolutionEvaluator::velocity(int i, const SpaceTimePoint& x) const {
    const VelocityRequest rq{i, DerivMultiIndex::none(g_.n.n)};
    return evaluate(x, std::span<const VelocityRequest>(&rq, 1))[0];
}

VelocityResult SolutionEvaluator::velocity_derivative(int i, const DerivMultiIndex& d,
                                                      const SpaceTimePoint& x) const {
    if (cfg_.derivative_strategy == SolutionConfig::DerivativeStrategy::AnalyticRewrite ||
        d.is_zero()) {
        const VelocityRequest rq{i, d};
        return evaluate(x, std::span<const VelocityRequest>(&rq, 1))[0];
    }
    // finite-difference cross-check mode: centered differences of lower-order
    // evaluations, one derivative at a time
    DerivMultiIndex dd = d;
    if (dd.m > 0) {
        dd.m -= 1;
        const double h = cfg_.time_fd_step;
        auto xp = x, xm = x;
        xp.t += h;
        xm.t -= h;
        VelocityResult a = velocity_derivative(i, dd, xp);
        VelocityResult b = velocity_derivative(i, dd, xm);
        VelocityResult out;
        out.value = (a.value - b.value) / (2.0 * h);
        out.err_est = (a.err_est + b.err_est) / (2.0 * h) + h * h;
        out.terms["fd"] = out.value;
        return out;
    }
    const double h = 1e-3;
    if (dd.k > 0) {
        dd.k -= 1;
        auto xp = x, xm = x;
        xp.x_n += h;
        xm.x_n = std::max(0.0, x.x_n - h);
        VelocityResult a = velocity_derivative(i, dd, xp);
        VelocityResult b = velocity_derivative(i, dd, xm);
        VelocityResult out;
        out.value = (a.value - b.value) / (xp.x_n - xm.x_n);
        out.err_est = (a.err_est + b.err_est) / (xp.x_n - xm.x_n) + h * h;
        out.terms["fd"] = out.value;
        return out;
    }
    for (size_t c = 0; c < dd.l.size(); ++c) {
        if (dd.l[c] > 0) {
            dd.l[c] -= 1;
            auto xp = x, xm = x;
            xp.x_prime[c] += h;
            xm.x_prime[c] -= h;
            VelocityResult a = velocity_derivative(i, dd, xp);
            VelocityResult b = velocity_derivative(i, dd, xm);
            VelocityResult out;
            out.value = (a.value - b.value) / (2.0 * h);
            out.err_est = (a.err_est + b.err_est) / (2.0 * h) + h * h;
            out.terms["fd"] = out.value;
            return out;
        }
    }
    return velocity(i, x);
}

K28Result SolutionEvaluator::k28_term(int i, int k, const SpaceTimePoint& x) const {
    const int n = g_.n.n;
    if (!g_.active(k)) throw std::invalid_argument("k28_term: data component k inactive");
    if (i < 0 || i >= n - 1 || k < 0 || k >= n - 1)
        throw std::invalid_argument("k28_term: tangential indices required");
    const auto& comp = g_.components[k];
    if (!comp.temporal->differentiable())
        throw NonDifferentiable("k28_term: temporal derivative required");
    if (!(x.t > 0) || x.x_n <= 0.0) throw std::invalid_argument("k28_term:需要 interior point");

    // K28 = -4 int (g^T)'(t - tau) [d_i d_k B(., tau) * g^S](x) dtau,
    // equal to the K28 sub-term of the second-normal-derivative split.
    std::array<int, 2> l{0, 0};
    l[i] += 1;
    l[k] += 1;
    const std::array<std::array<int, 2>, 1> lneeds = {l};

    auto pieces = time_pieces(*comp.temporal, x.t, x.x_n, 1, 0.25 * x.x_n * x.x_n);
    const double t_half = x.t - 0.5;  // split boundary s = 1/2
    K28Result out;
    const double inner_abs = cfg_.quad.abs_tol * 0.3;
    const double inner_rel = std::max(cfg_.quad.rel_tol * 0.3, 1e-10);

    auto eval_piece = [&](double a, double b, double cusp) {
        AdaptiveGK drv(1, cfg_.quad.abs_tol, cfg_.quad.rel_tol, 320);
        auto base = [&](double tau, double* o) {
            double bv, be;
            wconv_sweep(*comp.spatial, x, tau, lneeds, cfg_.quad, inner_abs, inner_rel, &bv,
                        &be);
            const double gt1 = comp.temporal->eval(x.t - tau, 1);
            o[0] = gamma1(x.x_n, tau, 0, 0) * bv * gt1;
        };
        double val, err;
        if (cusp != 0.0 && cusp < 1.0) {
            const double pexp = 1.0 / (1.0 + cusp);
            const double len = b - a;
            auto sub = [&](double v, double* o) {
                const double w = std::pow(v, pexp);
                base(a + len * w, o);
                o[0] *= len * pexp * std::pow(v, pexp - 1.0);
            };
            drv.run(sub, 0.0, 1.0, &val, &err);
        } else {
            drv.run(base, a, b, &val, &err);
        }
        return -4.0 * comp.amplitude * val;
    };

    for (const auto& piece : pieces) {
        double v1 = 0.0, v2 = 0.0;
        if (piece.b <= t_half) {
            v1 = eval_piece(piece.a, piece.b, piece.cusp_exponent);
        } else if (piece.a >= t_half) {
            v2 = eval_piece(piece.a, piece.b, piece.cusp_exponent);
        } else {
            v1 = eval_piece(piece.a, t_half, piece.cusp_exponent);
            v2 = eval_piece(t_half, piece.b, 0.0);
        }
        out.K281 += v1;
        out.K282 += v2;
    }
    out.K28 = out.K281 + out.K282;
    return out;
}

namespace {

// E-kernel spatial convolution used by the pressure terms
double e_conv(const SpatialProfile& gs, const SpaceTimePoint& x, std::span<const int> eidx,
              const QuadratureSpec& spec) {
    const int n = x.dim();
    auto f = [&](std::span<const double> y) {
        std::vector<double> w(n);
        for (int c = 0; c < n - 1; ++c) w[c] = x.x_prime[c] - y[c];
        w[n - 1] = x.x_n;
        return laplace_E(w, eidx) * gs.eval(y);
    };
    return integrate_nd(f, gs.support_box(), spec).value;
}

}  // namespace

double SolutionEvaluator::pressure(const SpaceTimePoint& x) const {
    auto grad = pressure_gradient_impl(x, /*with_gradient=*/false);
    return grad[0];
}

std::vector<double> SolutionEvaluator::pressure_gradient(const SpaceTimePoint& x) const {
    auto all = pressure_gradient_impl(x, true);
    return std::vector<double>(all.begin() + 1, all.end());
}

std::vector<double> SolutionEvaluator::pressure_gradient_impl(const SpaceTimePoint& x,
                                                              bool with_gradient) const {
    const int n = g_.n.n;
    if (!(x.x_n > 0)) throw std::invalid_argument("pressure: x_n must be > 0");
    std::vector<double> out(1 + (with_gradient ? n : 0), 0.0);
    if (!(x.t > 0)) return out;

    const int nq = with_gradient ? n + 1 : 1;  // value plus optional d_q, q = 0..n-1

    for (int j = 0; j < n; ++j) {
        if (!g_.active(j)) continue;
        const auto& comp = g_.components[j];
        const double amp = comp.amplitude;
        const auto& prof = *comp.spatial;

        // instantaneous term: 2 d_j d_n [E * g_j(., t)]
        const double gtv = comp.temporal->eval(x.t, 0);
        if (gtv != 0.0) {
            for (int q = 0; q < nq; ++q) {
                std::vector<int> eidx(n, 0);
                eidx[j] += 1;
                eidx[n - 1] += 1;
                if (q > 0) eidx[q - 1] += 1;
                out[q] += 2.0 * amp * gtv * e_conv(prof, x, eidx, cfg_.quad);
            }
        }

        // normal-component extra term: 2 [E * d_t g_n(., t)]
        if (j == n - 1) {
            if (!comp.temporal->differentiable())
                throw NonDifferentiable("pressure: d_t g_n requires a differentiable profile");
            const double gtd = comp.temporal->eval(x.t, 1);
            if (gtd != 0.0) {
                for (int q = 0; q < nq; ++q) {
                    std::vector<int> eidx(n, 0);
                    if (q > 0) eidx[q - 1] += 1;
                    out[q] += 2.0 * amp * gtd * e_conv(prof, x, eidx, cfg_.quad);
                }
            }
        }

        // -4 (d_t - Delta') convolution with d_j A, derivatives moved onto g
        if (!comp.temporal->differentiable())
            throw NonDifferentiable("pressure: A-term requires d_t g");
        const auto pieces = time_pieces(*comp.temporal, x.t, x.x_n, 1, 0.25 * x.x_n * x.x_n);
        if (pieces.empty()) continue;

        const int m = 2 * nq;  // (dt-part, lap-part) per derivative slot
        AScriptProfile aprof(n, cfg_.quad.with_tol(cfg_.quad.abs_tol * 0.02,
                                                   cfg_.quad.rel_tol * 0.02));
        auto integrand = [&](double tau, double* o) {
            // y'-sweep over the support: inner values of d^{...} A(x - y', tau)
            AdaptiveGK ydrv(m, cfg_.quad.abs_tol * 0.2, cfg_.quad.rel_tol * 0.2, 120);
            const auto& box = prof.support_box();
            std::vector<double> val(m), err(m);
            const double g0 = gamma1(0.0, tau, 0, 0);
            if (n == 3) {
                auto fy1 = [&](double y1, double* oo) {
                    AdaptiveGK inner(m, cfg_.quad.abs_tol * 0.05, cfg_.quad.rel_tol * 0.3,
                                     80);
                    auto fy = [&](double y2, double* io) {
                        const double w1 = x.x_prime[0] - y1, w2 = x.x_prime[1] - y2;
                        const double r = std::hypot(w1, w2);
                        const int max_r = (j < n - 1) ? 2 : 1;
                        const int max_z = (j < n - 1) ? 0 : 1;
                        double stack[3 * 4];
                        aprof.eval_stack(r, x.x_n, tau, max_r + 1, max_z, stack);
                        const int cols = max_z + 1;
                        // derivative combos of A: base d_j, plus optional d_q
                        const double y[2] = {y1, y2};
                        const int l0[2] = {0, 0};
                        const double gv = prof.eval(std::span<const double>(y, 2),
                                                    std::span<const int>(l0, 2));
                        int l2a[2] = {2, 0}, l2b[2] = {0, 2};
                        const double glap = prof.eval(std::span<const double>(y, 2),
                                                      std::span<const int>(l2a, 2)) +
                                            prof.eval(std::span<const double>(y, 2),
                                                      std::span<const int>(l2b, 2));
                        for (int q = 0; q < nq; ++q) {
                            std::array<int, 2> la{0, 0};
                            int ka = 0;
                            if (j < n - 1) la[j] += 1;
                            else ka += 1;
                            if (q > 0) {
                                if (q - 1 < n - 1) la[q - 1] += 1;
                                else ka += 1;
                            }
                            const int lt = la[0] + la[1];
                            std::vector<double> col(lt + 1);
                            for (int a = 0; a <= lt; ++a) col[a] = stack[a * cols + ka];
                            double deriv;
                            if (r > 1e-12) {
                                auto ch = RadialChain::from_stack(col, r, lt);
                                deriv = ch.deriv(w1, w2, la[0], la[1]);
                            } else {
                                deriv = (lt == 0) ? col[0] : 0.0;
                            }
                            const double dA = g0 * deriv;
                            io[2 * q] = dA * gv;
                            io[2 * q + 1] = dA * glap;
                        }
                    };
                    std::vector<double> iv(m), ie(m);
                    inner.run(fy, box.bounds[1][0], box.bounds[1][1], iv.data(), ie.data());
                    for (int q = 0; q < m; ++q) oo[q] = iv[q];
                };
                ydrv.run(fy1, box.bounds[0][0], box.bounds[0][1], val.data(), err.data());
            } else {
                // n = 2: single tangential coordinate
                auto f1 = [&](double y1, double* io) {
                    const double w1 = x.x_prime[0] - y1;
                    const int max_r = (j < n - 1) ? 2 : 1;
                    const int max_z = (j < n - 1) ? 0 : 1;
                    double stack[3 * 4];
                    aprof.eval_stack(w1, x.x_n, tau, max_r + 1, max_z, stack);
                    const int cols = max_z + 1;
                    const double y[1] = {y1};
                    const int l0[1] = {0};
                    const double gv = prof.eval(std::span<const double>(y, 1),
                                                std::span<const int>(l0, 1));
                    const int l2[1] = {2};
                    const double glap = prof.eval(std::span<const double>(y, 1),
                                                  std::span<const int>(l2, 1));
                    for (int q = 0; q < nq; ++q) {
                        int la = (j < n - 1) ? 1 : 0;
                        int ka = (j < n - 1) ? 0 : 1;
                        if (q > 0) {
                            if (q - 1 < n - 1) la += 1;
                            else ka += 1;
                        }
                        const double dA = g0 * stack[la * cols + ka];
                        io[2 * q] = dA * gv;
                        io[2 * q + 1] = dA * glap;
                    }
                };
                ydrv.run(f1, box.bounds[0][0], box.bounds[0][1], val.data(), err.data());
            }
            const double gt1 = comp.temporal->eval(x.t - tau, 1);
            const double gt0 = comp.temporal->eval(x.t - tau, 0);
            for (int q = 0; q < nq; ++q) o[q] = val[2 * q] * gt1 - val[2 * q + 1] * gt0;
        };

        for (const auto& piece : pieces) {
            AdaptiveGK drv(nq, cfg_.quad.abs_tol, cfg_.quad.rel_tol, 240);
            std::vector<double> val(nq), err(nq);
            if (piece.cusp_exponent != 0.0 && piece.cusp_exponent < 1.0) {
                const double pexp = 1.0 / (1.0 + piece.cusp_exponent);
                const double len = piece.b - piece.a;
                auto sub = [&](double v, double* o) {
                    const double w = std::pow(v, pexp);
                    integrand(piece.a + len * w, o);
                    const double jac = len * pexp * std::pow(v, pexp - 1.0);
                    for (int q = 0; q < nq; ++q) o[q] *= jac;
                };
                drv.run(sub, 0.0, 1.0, val.data(), err.data());
            } else {
                drv.run(integrand, piece.a, piece.b, val.data(), err.data());
            }
            for (int q = 0; q < nq; ++q) out[q] += -4.0 * amp * val[q];
        }
    }
    return out;
}

VelocityResult velocity(int i, const SpaceTimePoint& x, const BoundaryData& g,
                        const SolutionConfig& cfg) {
    return SolutionEvaluator(g, cfg).velocity(i, x);
}

VelocityResult velocity_derivative(int i, const DerivMultiIndex& d, const SpaceTimePoint& x,
                                   const BoundaryData& g, const SolutionConfig& cfg) {
    return SolutionEvaluator(g, cfg).velocity_derivative(i, d, x);
}

double pressure(const SpaceTimePoint& x, double t, const BoundaryData& g,
                const SolutionConfig& cfg) {
    SpaceTimePoint xt = x;
    xt.t = t;
    return SolutionEvaluator(g, cfg).pressure(xt);
}

K28Result k28_term(int i, int k, const SpaceTimePoint& x, double t, const BoundaryData& g,
                   const SolutionConfig& cfg) {
    SpaceTimePoint xt = x;
    xt.t = t;
    return SolutionEvaluator(g, cfg).k28_term(i, k, xt);
}

}  // namespace shs
