#include "stokeshs/smoothing.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <map>

#include "stokeshs/kernels.hpp"

namespace shs {

namespace {

std::atomic<uint64_t> g_next_cache_id{1};

// quintic Hermite basis on [0,1] for (value, slope, curvature) at both ends
inline double quintic(double u, double y0, double m0, double c0, double y1, double m1,
                      double c1, double h) {
    const double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
    const double H0 = 1 - 10 * u3 + 15 * u4 - 6 * u5;
    const double H1 = u - 6 * u3 + 8 * u4 - 3 * u5;
    const double H2 = 0.5 * u2 - 1.5 * u3 + 1.5 * u4 - 0.5 * u5;
    const double H3 = 10 * u3 - 15 * u4 + 6 * u5;
    const double H4 = -4 * u3 + 7 * u4 - 3 * u5;
    const double H5 = 0.5 * u3 - u4 + 0.5 * u5;
    return H0 * y0 + H1 * h * m0 + H2 * h * h * c0 + H3 * y1 + H4 * h * m1 + H5 * h * h * c1;
}

inline double cubic_hermite(double t, double y0, double m0, double y1, double m1, double h) {
    const double t2 = t * t, t3 = t2 * t;
    return y0 * (2 * t3 - 3 * t2 + 1) + m0 * h * (t3 - 2 * t2 + t) + y1 * (-2 * t3 + 3 * t2) +
           m1 * h * (t3 - t2);
}

}  // namespace

// One coordinate factor table: H^{(o)}(w) for o = 0..5 on a uniform grid.
struct SmoothedSpatial::FactorTable {
    double tau = 0;
    struct Coord {
        double lo = 0, hi = 0, step = 0;
        int knots = 0;
        std::vector<double> vals;  // knots x 6 orders
        double at(int knot, int order) const { return vals[knot * 6 + order]; }
    };
    std::array<Coord, 2> coords;

    double eval(int j, double w, int order) const {
        const Coord& c = coords[j];
        if (w <= c.lo || w >= c.hi) return 0.0;
        int i = static_cast<int>((w - c.lo) / c.step);
        if (i >= c.knots - 1) i = c.knots - 2;
        const double u = (w - (c.lo + i * c.step)) / c.step;
        return quintic(u, c.at(i, order), c.at(i, order + 1), c.at(i, order + 2),
                       c.at(i + 1, order), c.at(i + 1, order + 1), c.at(i + 1, order + 2),
                       c.step);
    }

    // orders 0..5 in one knot lookup. Orders <= 2 use two-point septic
    // Hermite (matches value..third derivative at both knots -> C^3 between
    // knots, which keeps the Kronrod error estimator off the interpolation
    // kinks); order 3 quintic, 4..5 cubic.
    void eval_all6(int j, double w, double out[6]) const {
        const Coord& c = coords[j];
        if (w <= c.lo || w >= c.hi) {
            for (int o = 0; o < 6; ++o) out[o] = 0.0;
            return;
        }
        int i = static_cast<int>((w - c.lo) / c.step);
        if (i >= c.knots - 1) i = c.knots - 2;
        const double u = (w - (c.lo + i * c.step)) / c.step;
        const double h = c.step;
        const double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u, u6 = u5 * u,
                     u7 = u6 * u;
        // septic two-point Hermite basis
        const double S00 = 1 - 35 * u4 + 84 * u5 - 70 * u6 + 20 * u7;
        const double S10 = (u - 20 * u4 + 45 * u5 - 36 * u6 + 10 * u7) * h;
        const double S20 = (0.5 * u2 - 5 * u4 + 10 * u5 - 7.5 * u6 + 2 * u7) * h * h;
        const double S30 = (u3 * (1 - u) * (1 - u) * (1 - u) * (1 - u) / 6.0) * h * h * h;
        const double S01 = 35 * u4 - 84 * u5 + 70 * u6 - 20 * u7;
        const double S11 = (-15 * u4 + 39 * u5 - 34 * u6 + 10 * u7) * h;
        const double S21 = (2.5 * u4 - 7 * u5 + 6.5 * u6 - 2 * u7) * h * h;
        const double S31 = (-u4 * (1 - u) * (1 - u) * (1 - u) / 6.0) * h * h * h;
        const double H0 = 1 - 10 * u3 + 15 * u4 - 6 * u5;
        const double H1 = (u - 6 * u3 + 8 * u4 - 3 * u5) * h;
        const double H2 = (0.5 * u2 - 1.5 * u3 + 1.5 * u4 - 0.5 * u5) * h * h;
        const double H3 = 10 * u3 - 15 * u4 + 6 * u5;
        const double H4 = (-4 * u3 + 7 * u4 - 3 * u5) * h;
        const double H5 = (0.5 * u3 - u4 + 0.5 * u5) * h * h;
        const double* a = &c.vals[static_cast<size_t>(i) * 6];
        const double* b = &c.vals[static_cast<size_t>(i + 1) * 6];
        for (int o = 0; o < 3; ++o) {
            out[o] = S00 * a[o] + S10 * a[o + 1] + S20 * a[o + 2] + S30 * a[o + 3] +
                     S01 * b[o] + S11 * b[o + 1] + S21 * b[o + 2] + S31 * b[o + 3];
        }
        out[3] = H0 * a[3] + H1 * a[4] + H2 * a[5] + H3 * b[3] + H4 * b[4] + H5 * b[5];
        for (int o = 4; o < 6; ++o) {
            const double m0 = (o + 1 < 6) ? a[o + 1] : (b[o] - a[o]) / h;
            const double m1 = (o + 1 < 6) ? b[o + 1] : (b[o] - a[o]) / h;
            out[o] = cubic_hermite(u, a[o], m0, b[o], m1, h);
        }
    }
};

// Generic 2-D grid table: values of d^{(a,b)} h at knots for a,b <= 4,
// interpolated by bicubic Hermite using the stored next-order combos.
struct SmoothedSpatial::GridTable {
    double tau = 0;
    double lo[2] = {0, 0}, hi[2] = {0, 0}, step[2] = {0, 0};
    int knots[2] = {0, 0};
    std::vector<double> vals;  // per knot: 25 combos, a-major
    double at(int i, int j, int a, int b) const {
        return vals[(static_cast<size_t>(i) * knots[1] + j) * 25 + a * 5 + b];
    }

    double eval(double w1, double w2, int a, int b) const {
        if (a > 3 || b > 3) throw std::invalid_argument("GridTable: order cap 3");
        if (w1 <= lo[0] || w1 >= hi[0] || w2 <= lo[1] || w2 >= hi[1]) return 0.0;
        int i = std::min(static_cast<int>((w1 - lo[0]) / step[0]), knots[0] - 2);
        int j = std::min(static_cast<int>((w2 - lo[1]) / step[1]), knots[1] - 2);
        const double u = (w1 - (lo[0] + i * step[0])) / step[0];
        const double v = (w2 - (lo[1] + j * step[1])) / step[1];
        auto col = [&](int ii, int aa) {
            return cubic_hermite(v, at(ii, j, aa, b), at(ii, j, aa, b + 1),
                                 at(ii, j + 1, aa, b), at(ii, j + 1, aa, b + 1), step[1]);
        };
        return cubic_hermite(u, col(i, a), col(i, a + 1), col(i + 1, a), col(i + 1, a + 1),
                             step[0]);
    }
};

namespace {

struct CacheKey {
    uint64_t id;
    uint64_t tau_bits;
    bool operator<(const CacheKey& o) const {
        return id != o.id ? id < o.id : tau_bits < o.tau_bits;
    }
};

thread_local std::map<CacheKey, std::shared_ptr<SmoothedSpatial::FactorTable>> t_factor_cache;
thread_local std::map<CacheKey, std::shared_ptr<SmoothedSpatial::GridTable>> t_grid_cache;

uint64_t bits_of(double x) {
    uint64_t b;
    std::memcpy(&b, &x, sizeof(b));
    return b;
}

}  // namespace

SmoothedSpatial::SmoothedSpatial(std::shared_ptr<const SpatialProfile> profile, int n,
                                 QuadratureSpec spec)
    : profile_(std::move(profile)), n_(n), dim_(n - 1), product_(false), spec_(spec),
      cache_id_(g_next_cache_id.fetch_add(1)) {
    if (!profile_) throw std::invalid_argument("SmoothedSpatial: null profile");
    if (profile_->tangential_dim() != dim_)
        throw std::invalid_argument("SmoothedSpatial: profile dimension mismatch");
    product_ = profile_->is_product();
}

SmoothedSpatial::~SmoothedSpatial() = default;

std::array<double, 2> SmoothedSpatial::effective_support(int coord, double tau) const {
    const auto b = profile_->support_box().bounds.at(coord);
    const double R = gaussian_truncation_radius(tau, 1.0, spec_, 3.0);
    return {b[0] - R, b[1] + R};
}

const SmoothedSpatial::FactorTable& SmoothedSpatial::factor_table(double tau) const {
    const CacheKey key{cache_id_, bits_of(tau)};
    auto it = t_factor_cache.find(key);
    if (it != t_factor_cache.end()) return *it->second;
    if (t_factor_cache.size() > 4096) t_factor_cache.clear();

    auto table = std::make_shared<FactorTable>();
    table->tau = tau;
    const double R = gaussian_truncation_radius(tau, 1.0, spec_, 3.0);
    for (int j = 0; j < dim_; ++j) {
        auto& c = table->coords[j];
        const auto sup = profile_->factor_support(j);
        const double feature = (sup[1] - sup[0]) / 64.0;
        const double step = std::max(std::sqrt(tau), feature) / 8.0;
        c.lo = sup[0] - R;
        c.hi = sup[1] + R;
        c.knots = std::max(4, static_cast<int>(std::ceil((c.hi - c.lo) / step)) + 1);
        c.step = (c.hi - c.lo) / (c.knots - 1);
        c.vals.assign(static_cast<size_t>(c.knots) * 6, 0.0);

        // derivative orders >= 2 go to the Gaussian side: the 1-D heat kernel
        // derivatives stay smooth on the sqrt(tau) scale, while high factor
        // derivatives carry fine structure the quadrature would have to chase
        AdaptiveGK drv(6, 1e-14, 3e-10, 64);
        for (int knot = 0; knot < c.knots; ++knot) {
            const double w = c.lo + knot * c.step;
            const double a = std::max(sup[0], w - R);
            const double b = std::min(sup[1], w + R);
            if (b <= a) continue;
            auto f = [&](double v, double* out) {
                const double g0 = profile_->factor_eval(j, v, 0);
                const double g1 = profile_->factor_eval(j, v, 1);
                double gs[6];
                gamma1_stack(w - v, tau, 5, gs);
                out[0] = gs[0] * g0;
                for (int o = 1; o < 6; ++o) out[o] = gs[o - 1] * g1;
            };
            double val[6], err[6];
            drv.run(f, a, b, val, err);
            for (int o = 0; o < 6; ++o) c.vals[knot * 6 + o] = val[o];
        }
    }
    auto ins = t_factor_cache.emplace(key, table);
    return *ins.first->second;
}

const SmoothedSpatial::GridTable& SmoothedSpatial::grid_table(double tau) const {
    const CacheKey key{cache_id_, bits_of(tau)};
    auto it = t_grid_cache.find(key);
    if (it != t_grid_cache.end()) return *it->second;
    if (t_grid_cache.size() > 64) t_grid_cache.clear();

    auto table = std::make_shared<GridTable>();
    table->tau = tau;
    const double R = gaussian_truncation_radius(tau, 1.0, spec_, 3.0);
    const auto& box = profile_->support_box();
    const int data_max = profile_->max_order();

    for (int j = 0; j < 2; ++j) {
        const double width = box.bounds[j][1] - box.bounds[j][0];
        const double step = std::max(std::sqrt(tau), width / 160.0) / 8.0;
        table->lo[j] = box.bounds[j][0] - R;
        table->hi[j] = box.bounds[j][1] + R;
        table->knots[j] =
            std::max(4, static_cast<int>(std::ceil((table->hi[j] - table->lo[j]) / step)) + 1);
        table->step[j] = (table->hi[j] - table->lo[j]) / (table->knots[j] - 1);
    }
    const int N1 = table->knots[0], N2 = table->knots[1];
    table->vals.assign(static_cast<size_t>(N1) * N2 * 25, 0.0);

    // stage-1 node set in v2: composite Kronrod panels over the v2-support
    const int panels2 = 64;
    std::vector<double> v2n, v2w;
    const double a2 = box.bounds[1][0], b2 = box.bounds[1][1];
    for (int p = 0; p < panels2; ++p) {
        const double pa = a2 + (b2 - a2) * p / panels2;
        const double pb = a2 + (b2 - a2) * (p + 1) / panels2;
        const double c = 0.5 * (pa + pb), hw = 0.5 * (pb - pa);
        for (int q = 0; q < 7; ++q) {
            v2n.push_back(c + hw * gk::kNodes[q]);
            v2w.push_back(hw * gk::kWeightsK[q]);
            v2n.push_back(c - hw * gk::kNodes[q]);
            v2w.push_back(hw * gk::kWeightsK[q]);
        }
        v2n.push_back(c);
        v2w.push_back(hw * gk::kWeightsK[7]);
    }

    // row smoothing: int Gamma_1(w1-v1) d^{a} g(v1, v2) dv1 with data-side
    // derivatives up to data_max and the remainder on the kernel
    const size_t M = v2n.size();
    std::vector<double> rows(static_cast<size_t>(N1) * M * 5, 0.0);
    AdaptiveGK drv(5, 1e-13, 1e-10, 2000);
    for (int i = 0; i < N1; ++i) {
        const double w1 = table->lo[0] + i * table->step[0];
        const double a = std::max(box.bounds[0][0], w1 - R);
        const double b = std::min(box.bounds[0][1], w1 + R);
        if (b <= a) continue;
        for (size_t s = 0; s < M; ++s) {
            auto f = [&](double v1, double* out) {
                const double y[2] = {v1, v2n[s]};
                for (int a1 = 0; a1 <= 4; ++a1) {
                    const int data_o = std::min(a1, data_max);
                    const int kern_o = a1 - data_o;
                    const int l[2] = {data_o, 0};
                    out[a1] = gamma1(w1 - v1, tau, kern_o, 0) *
                              profile_->eval(std::span<const double>(y, 2),
                                             std::span<const int>(l, 2));
                }
            };
            double val[5], err[5];
            drv.run(f, a, b, val, err);
            for (int a1 = 0; a1 <= 4; ++a1) rows[(i * M + s) * 5 + a1] = val[a1];
        }
    }

    // column smoothing: weighted sums over v2 nodes with kernel derivatives in w2
    for (int i = 0; i < N1; ++i) {
        for (int jj = 0; jj < N2; ++jj) {
            const double w2 = table->lo[1] + jj * table->step[1];
            for (int b = 0; b <= 4; ++b) {
                double acc[5] = {0, 0, 0, 0, 0};
                for (size_t s = 0; s < M; ++s) {
                    const double gk2 = gamma1(w2 - v2n[s], tau, b, 0) * v2w[s];
                    if (gk2 == 0.0) continue;
                    for (int a1 = 0; a1 <= 4; ++a1) acc[a1] += gk2 * rows[(i * M + s) * 5 + a1];
                }
                for (int a1 = 0; a1 <= 4; ++a1)
                    table->vals[(static_cast<size_t>(i) * N2 + jj) * 25 + a1 * 5 + b] = acc[a1];
            }
        }
    }

    auto ins = t_grid_cache.emplace(key, table);
    return *ins.first->second;
}

namespace {
// fixed logarithmic tau lattice: tables are built on knots 10^{k/32} and
// interpolated in ln tau (cubic Hermite; the heat equation supplies exact
// slopes d_tau H^{(o)} = H^{(o+2)})
constexpr double kTauKnotsPerDecade = 64.0;

double tau_knot(int k) { return std::pow(10.0, k / kTauKnotsPerDecade); }
int tau_index_below(double tau) {
    return static_cast<int>(std::floor(kTauKnotsPerDecade * std::log10(tau)));
}
}  // namespace

void SmoothedSpatial::factor_all(std::span<const double> w, double tau,
                                 double out[2][4]) const {
    const int k0 = tau_index_below(tau);
    const double t0 = tau_knot(k0), t1 = tau_knot(k0 + 1);
    const auto& T0 = factor_table(t0);
    const auto& T1 = factor_table(t1);
    const double dln = std::log(t1 / t0);
    const double u = std::log(tau / t0) / dln;
    // cubic Hermite in ln tau with exact slopes d/dln tau H^{(o)} = tau H^{(o+2)}
    const double u2 = u * u, u3 = u2 * u;
    const double c00 = 2 * u3 - 3 * u2 + 1, c10 = (u3 - 2 * u2 + u) * dln * t0;
    const double c01 = -2 * u3 + 3 * u2, c11 = (u3 - u2) * dln * t1;
    for (int j = 0; j < dim_; ++j) {
        double v0[6], v1[6];
        T0.eval_all6(j, w[j], v0);
        T1.eval_all6(j, w[j], v1);
        for (int o = 0; o < 4; ++o)
            out[j][o] = c00 * v0[o] + c10 * v0[o + 2] + c01 * v1[o] + c11 * v1[o + 2];
    }
    if (dim_ == 1)
        for (int o = 0; o < 4; ++o) out[1][o] = (o == 0) ? 1.0 : 0.0;
}

double SmoothedSpatial::eval(std::span<const double> w, std::span<const int> l,
                             double tau) const {
    if (!(tau > 0)) throw std::invalid_argument("SmoothedSpatial::eval: tau must be > 0");
    if (product_) {
        double hv[2][4];
        factor_all(w, tau, hv);
        double prod = 1.0;
        for (int j = 0; j < dim_; ++j) {
            prod *= hv[j][l[j]];
            if (prod == 0.0) return 0.0;
        }
        return prod;
    }
    if (dim_ == 1) {
        const auto sup = profile_->support_box().bounds[0];
        const double R = gaussian_truncation_radius(tau, 1.0, spec_, 3.0);
        const double a = std::max(sup[0], w[0] - R), b = std::min(sup[1], w[0] + R);
        if (b <= a) return 0.0;
        const int data_o = std::min(l[0], profile_->max_order());
        const int kern_o = l[0] - data_o;
        auto f = [&](double v) {
            const double y[1] = {v};
            const int ll[1] = {data_o};
            return gamma1(w[0] - v, tau, kern_o, 0) *
                   profile_->eval(std::span<const double>(y, 1), std::span<const int>(ll, 1));
        };
        return integrate_1d(f, a, b, spec_).value;
    }
    const auto& tab = grid_table(tau);
    return tab.eval(w[0], w[1], l[0], l[1]);
}

void SmoothedSpatial::factor_values(std::span<const double> w, double tau,
                                    double out[2][4]) const {
    factor_all(w, tau, out);
}

}  // namespace shs
