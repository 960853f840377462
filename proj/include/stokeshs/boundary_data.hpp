#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "stokeshs/quadrature.hpp"
#include "stokeshs/types.hpp"

namespace shs {

/// One even, smooth, compactly supported bump factor G built per the
/// constructive recipe: a nonpositive mollifier phi on (p+delta, q-delta),
/// G''(x) = lambda (phi(x) - phi(2q - x)) on [p, r], G' and G by cumulative
/// integration, lambda normalized so G(r) = 0. G == 1 on [-p-delta, p+delta]
/// by construction and G is even.
class BumpFactor {
  public:
    BumpFactor(double p, double q, double r, double delta);

    /// Value or derivative of order 0..5 (orders >= 2 are closed forms in phi).
    double eval(double x, int order = 0) const;
    double p() const { return p_; }
    double q() const { return q_; }
    double r() const { return r_; }
    double delta() const { return delta_; }
    double lambda() const { return lambda_; }

    /// Default Theorem-4 parameters for ambient dimension n:
    /// p = 1/(2 sqrt(n-1)), q = 13/(20 sqrt(n-1)), r = 4/(5 sqrt(n-1)),
    /// delta = 1/(20 sqrt(n-1)).
    static BumpFactor defaults(int n);

  private:
    double phi(double x, int order) const;       // mollifier factor, orders 0..3
    double gpp(double x, int order) const;       // G''^{(order)}, order 0..3
    double p_, q_, r_, delta_, lambda_;
    // cumulative tables for G and G' on [p, r]
    std::vector<double> grid_, g_vals_, gp_vals_;
    double step_;
};

struct BumpProduct {
    BumpFactor factor;
    int n;  // ambient dimension; n-1 tangential factors
};

/// Mollified indicator of A = {3 < |y'| < 4 sqrt(n), -4 < y_i < -3}. The index
/// i is not bound by the source description; it defaults to the boundary-data
/// component the profile is attached to and is exposed as a parameter.
struct AnnulusBoxA {
    int n;
    int i_index;          // 0-based tangential coordinate carrying the slab constraint
    double width = 0.1;   // mollification width (C^2 quintic ramps)
};

struct CustomSpatial {
    std::function<double(std::span<const double>, std::span<const int>)> eval;
    Box support_box;
    int max_order = 0;
    bool product_form = false;
};

class SpatialProfile {
  public:
    using Variant = std::variant<BumpProduct, AnnulusBoxA, CustomSpatial>;
    explicit SpatialProfile(Variant v);

    /// Value/derivative at tangential point y' with multi-index l (|l| <= max_order).
    double eval(std::span<const double> y, std::span<const int> l) const;
    double eval(std::span<const double> y) const;
    const Box& support_box() const { return support_box_; }
    int tangential_dim() const { return static_cast<int>(support_box_.bounds.size()); }
    int max_order() const { return max_order_; }

    /// Product structure: when the profile factorizes over coordinates,
    /// factor_eval(j, x, o) gives the j-th 1-D factor. Non-product profiles
    /// return false from is_product().
    bool is_product() const;
    double factor_eval(int j, double x, int order) const;
    std::array<double, 2> factor_support(int j) const;

    const Variant& variant() const { return v_; }

  private:
    Variant v_;
    Box support_box_;
    int max_order_;
};

enum class TemporalKind { PowerCusp, SmoothBump, BesovEscaper };

/// Temporal profiles from the three construction families:
///  - PowerCusp(a): supp [1/4,1], equal to (1-s)^a on [1/2,1], C^1 ramp on
///    [1/4,1/2] (cubic Hermite join with matching value/slope at 1/2).
///  - SmoothBump: C_c^infty bump supported in (3/4, 7/8).
///  - BesovEscaper(a): sum of indicators of ((2k+1)^{-a}, (2k)^{-a}).
class TemporalProfile {
  public:
    static TemporalProfile power_cusp(double a);
    static TemporalProfile smooth_bump();
    static TemporalProfile besov_escaper(double a);

    double eval(double s, int order = 0) const;
    TemporalKind kind() const { return kind_; }
    double param_a() const { return a_; }
    std::array<double, 2> support() const;
    bool differentiable() const { return kind_ != TemporalKind::BesovEscaper; }

    /// Points in (lo, hi) where the profile changes formula (panel seeds for
    /// the time integrals). For BesovEscaper the list is truncated at
    /// max_count with the remaining interval mass accumulating at 0.
    std::vector<double> breakpoints(double lo, double hi, int max_count = 4096) const;

  private:
    TemporalKind kind_;
    double a_ = 0.0;
};

/// 1 iff s lies in ((2k+1)^{-a}, (2k)^{-a}) for some integer k >= 1.
int besov_escaper_eval(double a, double s);

struct BoundaryComponent {
    double amplitude = 0.0;
    std::shared_ptr<const SpatialProfile> spatial;
    std::shared_ptr<const TemporalProfile> temporal;
};

/// Separable boundary data g_i(y', s) = a_i g_i^S(y') g_i^T(s), i = 1..n.
struct BoundaryData {
    Dimension n;
    std::vector<BoundaryComponent> components;  // size n

    explicit BoundaryData(Dimension dim) : n(dim), components(dim.n) {}
    const BoundaryComponent& comp(int i) const { return components.at(i); }
    bool active(int i) const {
        return components[i].amplitude != 0.0 && components[i].spatial && components[i].temporal;
    }
};

/// Product-rule evaluation of component i (0-based) with spatial multi-index
/// and temporal order 0/1. Exactly 0 outside supports.
double eval_g(const BoundaryData& data, int i, std::span<const double> y_prime, double s,
              std::span<const int> spatial_deriv, int temporal_deriv);

enum class NormKind { L1, W11, W21, Linf, W1inf, W2inf, W3inf };

/// Numeric norm of the spatial profile of component i over its support box.
/// L^p-type norms by quadrature, sup norms by dense sampling with refinement.
double profile_norms(const BoundaryData& data, int i, NormKind which);
double spatial_norm(const SpatialProfile& profile, NormKind which);

}  // namespace shs
