#include "stokeshs/boundary_data.hpp"

#include <cmath>

namespace shs {

namespace {

// exp(-1/(1-w^2)) on (-1,1) and its w-derivatives, orders 0..3.
double mollifier(double w, int order) {
    const double w2 = w * w;
    if (w2 >= 1.0) return 0.0;
    const double v = 1.0 / (1.0 - w2);
    const double e = std::exp(-v);
    if (e == 0.0) return 0.0;
    const double up = -2.0 * w * v * v;
    if (order == 0) return e;
    if (order == 1) return e * up;
    const double upp = -2.0 * v * v - 8.0 * w2 * v * v * v;
    if (order == 2) return e * (upp + up * up);
    const double uppp = -24.0 * w * v * v * v - 48.0 * w2 * w * v * v * v * v;
    return e * (uppp + 3.0 * up * upp + up * up * up);
}

// 15-point Kronrod sum of f over [a,b] (builder utility; near machine-exact
// on the analytic integrands used here at the table step sizes involved).
template <class F>
double k15(F&& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = gk::kWeightsK[7] * f(c);
    for (int j = 0; j < 7; ++j)
        s += gk::kWeightsK[j] * (f(c + h * gk::kNodes[j]) + f(c - h * gk::kNodes[j]));
    return s * h;
}

constexpr int kBumpGridN = 4096;

double smoothstep_c2(double u, int order) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return order == 0 ? 1.0 : 0.0;
    switch (order) {
        case 0: return u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
        case 1: return 30.0 * u * u * (1.0 - u) * (1.0 - u);
        case 2: return 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u);
        default: throw std::invalid_argument("smoothstep_c2: order above 2");
    }
}

}  // namespace

BumpFactor::BumpFactor(double p, double q, double r, double delta)
    : p_(p), q_(q), r_(r), delta_(delta), lambda_(1.0) {
    if (!(0 < p && p < q && q < r))
        throw std::invalid_argument("BumpFactor: need 0 < p < q < r");
    if (std::abs(r - (2.0 * q - p)) > 1e-12 * r)
        throw std::invalid_argument("BumpFactor: need r = 2q - p");
    if (!(0 < delta && delta < 0.5 * (q - p)))
        throw std::invalid_argument("BumpFactor: need 0 < delta < (q-p)/2");

    grid_.resize(kBumpGridN + 1);
    g_vals_.assign(kBumpGridN + 1, 0.0);
    gp_vals_.assign(kBumpGridN + 1, 0.0);
    step_ = (r_ - p_) / kBumpGridN;
    for (int i = 0; i <= kBumpGridN; ++i) grid_[i] = p_ + step_ * i;

    // cumulative integration of the unnormalized G'' (lambda = 1)
    auto gpp_un = [&](double x) { return phi(x, 0) - phi(2.0 * q_ - x, 0); };
    double Gp = 0.0, G = 0.0;
    for (int i = 1; i <= kBumpGridN; ++i) {
        const double a = grid_[i - 1], b = grid_[i];
        const double inc_gp = k15([&](double x) { return gpp_un(x); }, a, b);
        const double inc_g = k15([&](double x) { return (b - x) * gpp_un(x); }, a, b);
        G += (b - a) * Gp + inc_g;
        Gp += inc_gp;
        gp_vals_[i] = Gp;
        g_vals_[i] = G;
    }
    // normalize so that G(r) = 1 + lambda * G_un(r) = 0
    lambda_ = -1.0 / g_vals_[kBumpGridN];
    for (int i = 0; i <= kBumpGridN; ++i) {
        g_vals_[i] = 1.0 + lambda_ * g_vals_[i];
        gp_vals_[i] *= lambda_;
    }
}

double BumpFactor::phi(double x, int order) const {
    const double c = 0.5 * (p_ + q_);
    const double rho = 0.5 * (q_ - p_) - delta_;
    const double w = (x - c) / rho;
    const double val = -mollifier(w, order);
    return val / std::pow(rho, order);
}

double BumpFactor::gpp(double x, int order) const {
    // d^order/dx^order of lambda (phi(x) - phi(2q - x))
    const double sign = (order % 2 == 0) ? -1.0 : 1.0;
    return lambda_ * (phi(x, order) + sign * phi(2.0 * q_ - x, order));
}

double BumpFactor::eval(double x, int order) const {
    if (order < 0 || order > 5) throw std::invalid_argument("BumpFactor: order 0..5");
    const double y = std::abs(x);
    const double odd_sign = (x < 0 && order % 2 == 1) ? -1.0 : 1.0;
    if (y >= r_) return 0.0;
    if (y <= p_) return order == 0 ? 1.0 : 0.0;
    if (order >= 2) return odd_sign * gpp(y, order - 2);
    // cubic Hermite on the cumulative tables, slopes from the next table up
    int i = static_cast<int>((y - p_) / step_);
    if (i >= kBumpGridN) i = kBumpGridN - 1;
    const double a = grid_[i];
    const double u = (y - a) / step_;
    const double u2 = u * u, u3 = u2 * u;
    const double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u;
    const double h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
    double v;
    if (order == 0) {
        v = h00 * g_vals_[i] + h10 * step_ * gp_vals_[i] + h01 * g_vals_[i + 1] +
            h11 * step_ * gp_vals_[i + 1];
    } else {
        const double da = gpp(a, 0), db = gpp(a + step_, 0);
        v = h00 * gp_vals_[i] + h10 * step_ * da + h01 * gp_vals_[i + 1] + h11 * step_ * db;
    }
    return odd_sign * v;
}

BumpFactor BumpFactor::defaults(int n) {
    if (n < 2) throw std::invalid_argument("BumpFactor::defaults: n >= 2");
    const double s = std::sqrt(static_cast<double>(n - 1));
    return BumpFactor(0.5 / s, 13.0 / (20.0 * s), 4.0 / (5.0 * s), 1.0 / (20.0 * s));
}

// --- SpatialProfile ---

SpatialProfile::SpatialProfile(Variant v) : v_(std::move(v)) {
    if (const auto* bp = std::get_if<BumpProduct>(&v_)) {
        const int d = bp->n - 1;
        support_box_.bounds.assign(d, {-bp->factor.r(), bp->factor.r()});
        max_order_ = 3;
    } else if (const auto* ab = std::get_if<AnnulusBoxA>(&v_)) {
        const int d = ab->n - 1;
        const double R = 4.0 * std::sqrt(static_cast<double>(ab->n));
        support_box_.bounds.assign(d, {-R, R});
        if (ab->i_index < 0 || ab->i_index >= d)
            throw std::invalid_argument("AnnulusBoxA: i_index out of range");
        support_box_.bounds[ab->i_index] = {-4.0, -3.0};
        max_order_ = 2;
    } else {
        const auto& cs = std::get<CustomSpatial>(v_);
        support_box_ = cs.support_box;
        max_order_ = cs.max_order;
    }
}

bool SpatialProfile::is_product() const {
    if (std::holds_alternative<BumpProduct>(v_)) return true;
    if (const auto* cs = std::get_if<CustomSpatial>(&v_)) return cs->product_form;
    return false;
}

double SpatialProfile::factor_eval(int j, double x, int order) const {
    if (const auto* bp = std::get_if<BumpProduct>(&v_)) {
        (void)j;
        return bp->factor.eval(x, order);
    }
    throw std::logic_error("factor_eval: profile is not in product form");
}

std::array<double, 2> SpatialProfile::factor_support(int j) const {
    return {support_box_.bounds.at(j)[0], support_box_.bounds.at(j)[1]};
}

namespace {

double annulus_eval(const AnnulusBoxA& ab, std::span<const double> y, std::span<const int> l) {
    const int d = ab.n - 1;
    const double w = ab.width;
    const double Rout = 4.0 * std::sqrt(static_cast<double>(ab.n));
    int order = 0;
    for (int v : l) order += v;
    if (order > 2) throw std::invalid_argument("AnnulusBoxA: derivative order above 2");

    double rho2 = 0.0;
    for (int j = 0; j < d; ++j) rho2 += y[j] * y[j];
    const double rho = std::sqrt(rho2);

    auto F = [&](double r, int o) {
        // radial factor: ramp up over [3, 3+w], down over [Rout-w, Rout]
        auto lo = [&](int oo) { return smoothstep_c2((r - 3.0) / w, oo) / std::pow(w, oo); };
        auto hi = [&](int oo) { return smoothstep_c2((Rout - r) / w, oo) * std::pow(-1.0, oo) / std::pow(w, oo); };
        if (o == 0) return lo(0) * hi(0);
        if (o == 1) return lo(1) * hi(0) + lo(0) * hi(1);
        return lo(2) * hi(0) + 2.0 * lo(1) * hi(1) + lo(0) * hi(2);
    };
    auto S = [&](double s, int o) {
        auto lo = [&](int oo) { return smoothstep_c2((s + 4.0) / w, oo) / std::pow(w, oo); };
        auto hi = [&](int oo) { return smoothstep_c2((-3.0 - s) / w, oo) * std::pow(-1.0, oo) / std::pow(w, oo); };
        if (o == 0) return lo(0) * hi(0);
        if (o == 1) return lo(1) * hi(0) + lo(0) * hi(1);
        return lo(2) * hi(0) + 2.0 * lo(1) * hi(1) + lo(0) * hi(2);
    };

    const int ii = ab.i_index;
    const double si = y[ii];
    if (order == 0) return F(rho, 0) * S(si, 0);
    if (rho < 1e-14) return 0.0;  // inside rho < 3 the profile vanishes anyway

    std::vector<int> idx;
    for (int j = 0; j < d; ++j)
        for (int rep = 0; rep < l[j]; ++rep) idx.push_back(j);

    if (order == 1) {
        const int j = idx[0];
        double v = F(rho, 1) * (y[j] / rho) * S(si, 0);
        if (j == ii) v += F(rho, 0) * S(si, 1);
        return v;
    }
    const int j = idx[0], k = idx[1];
    const double ej = y[j] / rho, ek = y[k] / rho;
    double v = (F(rho, 2) * ej * ek + F(rho, 1) * ((j == k ? 1.0 : 0.0) / rho - ej * ek / rho)) *
               S(si, 0);
    if (k == ii) v += F(rho, 1) * ej * S(si, 1);
    if (j == ii) v += F(rho, 1) * ek * S(si, 1);
    if (j == ii && k == ii) v += F(rho, 0) * S(si, 2);
    return v;
}

}  // namespace

double SpatialProfile::eval(std::span<const double> y, std::span<const int> l) const {
    const int d = tangential_dim();
    if (static_cast<int>(y.size()) != d || static_cast<int>(l.size()) != d)
        throw std::invalid_argument("SpatialProfile::eval: size mismatch");
    int order = 0;
    for (int v : l) order += v;
    if (order > max_order_)
        throw std::invalid_argument("SpatialProfile::eval: derivative order not exposed");

    if (const auto* bp = std::get_if<BumpProduct>(&v_)) {
        double prod = 1.0;
        for (int j = 0; j < d; ++j) {
            prod *= bp->factor.eval(y[j], l[j]);
            if (prod == 0.0) return 0.0;
        }
        return prod;
    }
    if (const auto* ab = std::get_if<AnnulusBoxA>(&v_)) return annulus_eval(*ab, y, l);
    return std::get<CustomSpatial>(v_).eval(y, l);
}

double SpatialProfile::eval(std::span<const double> y) const {
    std::vector<int> l(tangential_dim(), 0);
    return eval(y, l);
}

// --- TemporalProfile ---

TemporalProfile TemporalProfile::power_cusp(double a) {
    if (!(a > 0.0 && a <= 0.5)) throw std::invalid_argument("PowerCusp: a in (0, 1/2]");
    TemporalProfile p;
    p.kind_ = TemporalKind::PowerCusp;
    p.a_ = a;
    return p;
}

TemporalProfile TemporalProfile::smooth_bump() {
    TemporalProfile p;
    p.kind_ = TemporalKind::SmoothBump;
    return p;
}

TemporalProfile TemporalProfile::besov_escaper(double a) {
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("BesovEscaper: a in (0, 1)");
    TemporalProfile p;
    p.kind_ = TemporalKind::BesovEscaper;
    p.a_ = a;
    return p;
}

double TemporalProfile::eval(double s, int order) const {
    switch (kind_) {
        case TemporalKind::PowerCusp: {
            if (order > 1) throw std::invalid_argument("PowerCusp: temporal order 0/1");
            if (s <= 0.25 || s >= 1.0) return 0.0;
            if (s >= 0.5) {
                if (order == 0) return std::pow(1.0 - s, a_);
                return -a_ * std::pow(1.0 - s, a_ - 1.0);
            }
            // C^1 cubic Hermite ramp from (1/4, 0, slope 0) to (1/2, 2^{-a}, slope -a 2^{1-a}/2)
            const double h = 0.25;
            const double u = (s - 0.25) / h;
            const double y1 = std::pow(0.5, a_);
            const double m1 = -a_ * std::pow(0.5, a_ - 1.0);
            const double u2 = u * u, u3 = u2 * u;
            if (order == 0) return y1 * (3.0 * u2 - 2.0 * u3) + m1 * h * (u3 - u2);
            return (y1 * (6.0 * u - 6.0 * u2) + m1 * h * (3.0 * u2 - 2.0 * u)) / h;
        }
        case TemporalKind::SmoothBump: {
            if (order > 3) throw std::invalid_argument("SmoothBump: temporal order 0..3");
            const double c = 13.0 / 16.0, rho = 1.0 / 16.0;
            const double w = (s - c) / rho;
            if (std::abs(w) >= 1.0) return 0.0;
            // normalized to peak value 1 at the center
            return M_E * mollifier(w, order) / std::pow(rho, order);
        }
        case TemporalKind::BesovEscaper:
            if (order > 0)
                throw NonDifferentiable("BesovEscaper: temporal derivative requested");
            return static_cast<double>(besov_escaper_eval(a_, s));
    }
    throw std::logic_error("TemporalProfile::eval");
}

std::array<double, 2> TemporalProfile::support() const {
    switch (kind_) {
        case TemporalKind::PowerCusp: return {0.25, 1.0};
        case TemporalKind::SmoothBump: return {0.75, 0.875};
        case TemporalKind::BesovEscaper: return {0.0, std::pow(2.0, -a_)};
    }
    throw std::logic_error("TemporalProfile::support");
}

std::vector<double> TemporalProfile::breakpoints(double lo, double hi, int max_count) const {
    std::vector<double> out;
    auto push = [&](double v) {
        if (v > lo && v < hi) out.push_back(v);
    };
    switch (kind_) {
        case TemporalKind::PowerCusp:
            push(0.25);
            push(0.5);
            push(1.0);
            break;
        case TemporalKind::SmoothBump:
            push(0.75);
            push(0.875);
            break;
        case TemporalKind::BesovEscaper: {
            for (int k = 1; static_cast<int>(out.size()) + 2 < max_count; ++k) {
                const double b = std::pow(2.0 * k, -a_);
                const double a = std::pow(2.0 * k + 1.0, -a_);
                if (b <= lo) break;
                push(b);
                push(a);
            }
            break;
        }
    }
    return out;
}

int besov_escaper_eval(double a, double s) {
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("besov_escaper_eval: a in (0,1)");
    if (s <= 0.0) return 0;
    if (s >= std::pow(2.0, -a)) return 0;
    // s in ((2k+1)^{-a}, (2k)^{-a})  <=>  2k < s^{-1/a} < 2k+1
    const double w = std::pow(s, -1.0 / a);
    const long long k = static_cast<long long>(std::floor(0.5 * w));
    for (long long kk = std::max(1LL, k - 1); kk <= k + 1; ++kk) {
        const double left = std::pow(2.0 * kk + 1.0, -a);
        const double right = std::pow(2.0 * kk, -a);
        if (s > left && s < right) return 1;
    }
    return 0;
}

// --- eval_g / norms ---

double eval_g(const BoundaryData& data, int i, std::span<const double> y_prime, double s,
              std::span<const int> spatial_deriv, int temporal_deriv) {
    const auto& c = data.comp(i);
    if (c.amplitude == 0.0 || !c.spatial || !c.temporal) return 0.0;
    const auto sup = c.temporal->support();
    if (s <= sup[0] || s >= sup[1]) {
        if (temporal_deriv > 0 && !c.temporal->differentiable())
            throw NonDifferentiable("eval_g: temporal profile not differentiable");
        return 0.0;
    }
    const auto& box = c.spatial->support_box();
    for (size_t j = 0; j < y_prime.size(); ++j) {
        if (y_prime[j] <= box.bounds[j][0] || y_prime[j] >= box.bounds[j][1]) return 0.0;
    }
    const double sp = c.spatial->eval(y_prime, spatial_deriv);
    const double tp = c.temporal->eval(s, temporal_deriv);
    return c.amplitude * sp * tp;
}

double spatial_norm(const SpatialProfile& profile, NormKind which) {
    const int d = profile.tangential_dim();
    const Box& box = profile.support_box();
    std::vector<int> zero(d, 0);

    auto abs_deriv_sum = [&](std::span<const double> y, int order) {
        // sum of |partial^l profile| over |l| = order
        double s = 0.0;
        std::vector<int> l(d, 0);
        std::function<void(int, int)> rec = [&](int start, int rem) {
            if (rem == 0) {
                s += std::abs(profile.eval(y, l));
                return;
            }
            for (int j = start; j < d; ++j) {
                l[j]++;
                rec(j, rem - 1);
                l[j]--;
            }
        };
        rec(0, order);
        return s;
    };

    const bool sup_norm = (which == NormKind::Linf || which == NormKind::W1inf ||
                           which == NormKind::W2inf || which == NormKind::W3inf);
    int max_order = 0;
    switch (which) {
        case NormKind::L1:
        case NormKind::Linf: max_order = 0; break;
        case NormKind::W11:
        case NormKind::W1inf: max_order = 1; break;
        case NormKind::W21:
        case NormKind::W2inf: max_order = 2; break;
        case NormKind::W3inf: max_order = 3; break;
    }
    if (max_order > profile.max_order())
        throw std::invalid_argument("spatial_norm: derivative order not exposed by profile");

    if (!sup_norm) {
        QuadratureSpec spec;
        spec.abs_tol = 1e-10;
        spec.rel_tol = 1e-8;
        auto f = [&](std::span<const double> y) {
            double s = 0.0;
            for (int o = 0; o <= max_order; ++o) s += abs_deriv_sum(y, o);
            return s;
        };
        return integrate_nd(f, box, spec).value;
    }

    // sup norms by dense sampling, refined once to confirm
    auto scan = [&](int per_axis) {
        double best = 0.0;
        std::vector<double> y(d, 0.0);
        std::vector<int> it(d, 0);
        const long total = static_cast<long>(std::pow(per_axis, d));
        for (long idx = 0; idx < total; ++idx) {
            long rem = idx;
            for (int j = 0; j < d; ++j) {
                const int ij = rem % per_axis;
                rem /= per_axis;
                const auto& b = box.bounds[j];
                y[j] = b[0] + (b[1] - b[0]) * (ij + 0.5) / per_axis;
            }
            double s = 0.0;
            for (int o = 0; o <= max_order; ++o) s += abs_deriv_sum(y, o);
            best = std::max(best, s);
        }
        return best;
    };
    const int base = (d == 1) ? 20000 : 450;
    const double v1 = scan(base);
    const double v2 = scan(2 * base + 1);
    return std::max(v1, v2);
}

double profile_norms(const BoundaryData& data, int i, NormKind which) {
    const auto& c = data.comp(i);
    if (!c.spatial) throw std::invalid_argument("profile_norms: component has no spatial profile");
    return spatial_norm(*c.spatial, which);
}

}  // namespace shs
