#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "stokeshs/types.hpp"

namespace shs {

/// Tolerances and singularity handling for the adaptive integrator.
/// cusp exponents describe integrable endpoint behaviour (u - a)^gamma
/// (resp. (b - u)^gamma); they are removed by the power substitution
/// u = a + (b-a) v^{1/(1+gamma)} before subdivision.
struct QuadratureSpec {
    double abs_tol = 1e-8;
    double rel_tol = 1e-8;
    int max_subdivisions = 4000;
    std::optional<double> cusp_left;
    std::optional<double> cusp_right;
    double gaussian_truncation_eps = 1e-16;

    void validate() const {
        if (abs_tol <= 0 || rel_tol <= 0)
            throw std::invalid_argument("QuadratureSpec: tolerances must be > 0");
        if (cusp_left && *cusp_left <= -1.0)
            throw std::invalid_argument("QuadratureSpec: cusp exponent must be > -1");
        if (cusp_right && *cusp_right <= -1.0)
            throw std::invalid_argument("QuadratureSpec: cusp exponent must be > -1");
    }
    QuadratureSpec with_tol(double abs, double rel) const {
        QuadratureSpec s = *this;
        s.abs_tol = abs;
        s.rel_tol = rel;
        s.cusp_left.reset();
        s.cusp_right.reset();
        return s;
    }
};

struct IntegralResult {
    double value = 0.0;
    double err_est = 0.0;
};

/// Axis-aligned integration box; dimension = bounds.size() (capped at 3).
struct Box {
    std::vector<std::array<double, 2>> bounds;
    int dim() const { return static_cast<int>(bounds.size()); }
};

/// Integration regions named by the call sites they serve.
struct Region {
    enum class Kind { Interval, BoxNd, HalfLineInNormal, TangentialBall };
    Kind kind = Kind::Interval;
    Box box;                               // Interval (1 entry) or BoxNd
    std::vector<double> center;            // TangentialBall
    double radius = 0.0;                   // TangentialBall
};

namespace gk {

// Gauss 7 / Kronrod 15 pair on [-1, 1] (QUADPACK QK15 coefficients).
inline constexpr std::array<double, 8> kNodes = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline constexpr std::array<double, 8> kWeightsK = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr std::array<double, 4> kWeightsG = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

}  // namespace gk

/// Adaptive Gauss-Kronrod driver for vector-valued integrands. One driver
/// instance owns its workspace; concurrent use requires one instance per
/// thread. Components share the panel tree: a panel is refined while any
/// component still fails its tolerance, so correlated integrands (e.g. all
/// derivative combinations of one kernel sweep) are integrated in one pass.
class AdaptiveGK {
  public:
    /// mass_relative: additionally accept a component once its error is small
    /// relative to the integrand's absolute mass (resabs). Internal evaluators
    /// use this for near-cancelling components; the contract-level
    /// integrate_1d keeps the strict |value|-relative criterion.
    AdaptiveGK(int components, double abs_tol, double rel_tol, int max_panels,
               bool mass_relative = false)
        : m_(components), abs_(abs_tol), rel_(rel_tol), max_panels_(max_panels),
          mass_relative_(mass_relative) {}

    /// F: void(double x, double* out) filling `components` values.
    /// Returns true if all components met tolerance within the panel budget.
    template <class F>
    bool run(F&& f, std::span<const double> breakpoints, double* out_val, double* out_err) {
        reset();
        for (size_t i = 0; i + 1 < breakpoints.size(); ++i) {
            if (breakpoints[i + 1] > breakpoints[i]) add_panel(f, breakpoints[i], breakpoints[i + 1]);
        }
        bool ok = refine_until_done(f);
        for (int c = 0; c < m_; ++c) {
            out_val[c] = total_val_[c];
            out_err[c] = total_err_[c];
        }
        return ok;
    }

    template <class F>
    bool run(F&& f, double a, double b, double* out_val, double* out_err) {
        const std::array<double, 2> pts = {a, b};
        return run(std::forward<F>(f), std::span<const double>(pts), out_val, out_err);
    }

    int panels_used() const { return static_cast<int>(bounds_.size()); }

  private:
    struct HeapEntry {
        double priority;
        int panel;
        bool operator<(const HeapEntry& o) const { return priority < o.priority; }
    };

    void reset() {
        bounds_.clear();
        vals_.clear();
        errs_.clear();
        heap_.clear();
        total_val_.assign(m_, 0.0);
        total_err_.assign(m_, 0.0);
        total_resabs_.assign(m_, 0.0);
        fbuf_.assign(15 * m_, 0.0);
    }

    template <class F>
    void eval_panel(F&& f, double a, double b, double* val, double* err, double* resabs_out,
                    bool* saturated) {
        const double c = 0.5 * (a + b);
        const double h = 0.5 * (b - a);
        // node order: j=0..6 -> +-kNodes[j], j=7 -> center
        for (int j = 0; j < 7; ++j) {
            f(c + h * gk::kNodes[j], &fbuf_[(2 * j) * m_]);
            f(c - h * gk::kNodes[j], &fbuf_[(2 * j + 1) * m_]);
        }
        f(c, &fbuf_[14 * m_]);
        for (int q = 0; q < m_; ++q) {
            double resk = gk::kWeightsK[7] * fbuf_[14 * m_ + q];
            double resg = gk::kWeightsG[3] * fbuf_[14 * m_ + q];
            double resabs = gk::kWeightsK[7] * std::abs(fbuf_[14 * m_ + q]);
            for (int j = 0; j < 7; ++j) {
                const double fp = fbuf_[(2 * j) * m_ + q];
                const double fm = fbuf_[(2 * j + 1) * m_ + q];
                resk += gk::kWeightsK[j] * (fp + fm);
                resabs += gk::kWeightsK[j] * (std::abs(fp) + std::abs(fm));
                if (j % 2 == 1) resg += gk::kWeightsG[j / 2] * (fp + fm);
            }
            const double reskh = resk * 0.5;
            double resasc = gk::kWeightsK[7] * std::abs(fbuf_[14 * m_ + q] - reskh);
            for (int j = 0; j < 7; ++j) {
                resasc += gk::kWeightsK[j] * (std::abs(fbuf_[(2 * j) * m_ + q] - reskh) +
                                              std::abs(fbuf_[(2 * j + 1) * m_ + q] - reskh));
            }
            resasc *= h;
            double e = std::abs((resk - resg) * h);
            if (resasc != 0.0 && e != 0.0)
                e = resasc * std::min(1.0, std::pow(200.0 * e / resasc, 1.5));
            const double round = 50.0 * std::numeric_limits<double>::epsilon() * resabs * h;
            val[q] = resk * h;
            err[q] = std::max(e, round);
            resabs_out[q] = resabs * h;
            if (e > round) *saturated = false;
        }
    }

    template <class F>
    void add_panel(F&& f, double a, double b) {
        const int id = static_cast<int>(bounds_.size());
        bounds_.push_back({a, b});
        vals_.resize(vals_.size() + m_);
        errs_.resize(errs_.size() + m_);
        resabs_.resize(resabs_.size() + m_);
        bool saturated = true;
        eval_panel(f, a, b, &vals_[id * m_], &errs_[id * m_], &resabs_[id * m_], &saturated);
        double pr = 0;
        for (int q = 0; q < m_; ++q) {
            total_val_[q] += vals_[id * m_ + q];
            total_err_[q] += errs_[id * m_ + q];
            total_resabs_[q] += resabs_[id * m_ + q];
            pr = std::max(pr, errs_[id * m_ + q]);
        }
        if (!saturated) {
            heap_.push_back({pr, id});
            std::push_heap(heap_.begin(), heap_.end());
        }
    }

    bool done() const {
        for (int q = 0; q < m_; ++q) {
            double tol = std::max(abs_, rel_ * std::abs(total_val_[q]));
            if (mass_relative_) tol = std::max(tol, 0.03 * rel_ * total_resabs_[q]);
            if (total_err_[q] > tol) return false;
        }
        return true;
    }

    template <class F>
    bool refine_until_done(F&& f) {
        while (!done()) {
            // remaining error may be pure roundoff floor: nothing refinable left
            if (heap_.empty()) return true;
            if (static_cast<int>(bounds_.size()) >= max_panels_) return false;
            std::pop_heap(heap_.begin(), heap_.end());
            const int id = heap_.back().panel;
            heap_.pop_back();
            const double a = bounds_[id][0], b = bounds_[id][1];
            const double mid = 0.5 * (a + b);
            if (mid <= a || mid >= b) continue;  // cannot split further in fp
            for (int q = 0; q < m_; ++q) {
                total_val_[q] -= vals_[id * m_ + q];
                total_err_[q] -= errs_[id * m_ + q];
                total_resabs_[q] -= resabs_[id * m_ + q];
            }
            // reuse the parent slot for the left child
            bounds_[id] = {a, mid};
            bool saturated = true;
            eval_panel(f, a, mid, &vals_[id * m_], &errs_[id * m_], &resabs_[id * m_],
                       &saturated);
            double pr = 0;
            for (int q = 0; q < m_; ++q) {
                total_val_[q] += vals_[id * m_ + q];
                total_err_[q] += errs_[id * m_ + q];
                total_resabs_[q] += resabs_[id * m_ + q];
                pr = std::max(pr, errs_[id * m_ + q]);
            }
            if (!saturated) {
                heap_.push_back({pr, id});
                std::push_heap(heap_.begin(), heap_.end());
            }
            add_panel(f, mid, b);
        }
        return true;
    }

    int m_;
    double abs_, rel_;
    int max_panels_;
    bool mass_relative_ = false;
    std::vector<std::array<double, 2>> bounds_;
    std::vector<double> vals_, errs_, resabs_, total_val_, total_err_, total_resabs_, fbuf_;
    std::vector<HeapEntry> heap_;
};

namespace detail {

/// Endpoint power substitution u = a + (b-a) v^{1/(1+gamma)} removing an
/// (u-a)^gamma factor; mirrored for the right endpoint.
template <class F>
IntegralResult integrate_with_cusps(F&& f, double a, double b, const QuadratureSpec& spec,
                                    bool* converged);

}  // namespace detail

/// Adaptive 1-D integration with the QuadratureSpec contract. Throws
/// NonConvergence when the subdivision budget is exhausted above tolerance.
IntegralResult integrate_1d(const std::function<double(double)>& f, double a, double b,
                            const QuadratureSpec& spec);

/// Tensorized adaptive integration over a box, dimension 1..3.
IntegralResult integrate_nd(const std::function<double(std::span<const double>)>& f,
                            const Box& box, const QuadratureSpec& spec);

/// Region dispatcher (interval / box / half-line / tangential ball).
IntegralResult integrate_region(const std::function<double(std::span<const double>)>& f,
                                const Region& region, const QuadratureSpec& spec);

/// Radius R such that exp(-R^2/(4t)) (1 + R^2/(4t))^{poly_power} <
/// gaussian_truncation_eps * scale. Monotone in t; used to replace tangential
/// integrals over Sigma by finite balls.
double gaussian_truncation_radius(double t, double scale, const QuadratureSpec& spec,
                                  double poly_power = 0.0);
double gaussian_truncation_radius(std::span<const double> center, double t, double scale,
                                  const QuadratureSpec& spec);

// --- implementation of the templated cusp wrapper ---

namespace detail {

template <class F>
IntegralResult integrate_with_cusps(F&& f, double a, double b, const QuadratureSpec& spec,
                                    bool* converged) {
    spec.validate();
    IntegralResult out;
    *converged = true;
    if (!(b > a)) return out;

    auto run_plain = [&](auto&& g, double lo, double hi) -> IntegralResult {
        AdaptiveGK drv(1, 0.5 * spec.abs_tol, 0.5 * spec.rel_tol, spec.max_subdivisions);
        double v, e;
        auto wrap = [&](double x, double* o) { o[0] = g(x); };
        bool ok = drv.run(wrap, lo, hi, &v, &e);
        if (!ok) *converged = false;
        return {v, e};
    };

    const bool left = spec.cusp_left.has_value();
    const bool right = spec.cusp_right.has_value();
    if (!left && !right) {
        AdaptiveGK drv(1, spec.abs_tol, spec.rel_tol, spec.max_subdivisions);
        double v, e;
        auto wrap = [&](double x, double* o) { o[0] = f(x); };
        bool ok = drv.run(wrap, a, b, &v, &e);
        *converged = ok;
        return {v, e};
    }

    const double mid = (left && right) ? 0.5 * (a + b) : (left ? b : a);
    if (left) {
        const double g = *spec.cusp_left;
        const double p = 1.0 / (1.0 + g);
        const double len = mid - a;
        auto sub = [&](double v) {
            const double w = std::pow(v, p);
            return f(a + len * w) * len * p * std::pow(v, p - 1.0);
        };
        IntegralResult r = run_plain(sub, 0.0, 1.0);
        out.value += r.value;
        out.err_est += r.err_est;
    }
    if (right) {
        const double g = *spec.cusp_right;
        const double p = 1.0 / (1.0 + g);
        const double lo = left ? mid : a;
        const double len = b - lo;
        auto sub = [&](double v) {
            const double w = std::pow(v, p);
            return f(b - len * w) * len * p * std::pow(v, p - 1.0);
        };
        IntegralResult r = run_plain(sub, 0.0, 1.0);
        out.value += r.value;
        out.err_est += r.err_est;
    }
    return out;
}

}  // namespace detail

}  // namespace shs
