#pragma once

#include <memory>
#include <vector>

#include "stokeshs/boundary_data.hpp"
#include "stokeshs/quadrature.hpp"

namespace shs {

/// Heat-smoothed spatial data h(w', tau) = [Gamma'(tau) * g^S](w') and its
/// tangential derivatives up to order 3. For product profiles the smoothing
/// factorizes into per-coordinate 1-D convolutions H_j^{(o)} = Gamma_1 * G^{(o)},
/// tabulated per tau on Hermite-interpolated grids; generic profiles get a
/// two-stage separable 2-D table. Tables are cached per (instance, tau) in
/// thread-local storage, so concurrent batch evaluation needs no locking and
/// values do not depend on cache state.
class SmoothedSpatial {
  public:
    SmoothedSpatial(std::shared_ptr<const SpatialProfile> profile, int n, QuadratureSpec spec);
    ~SmoothedSpatial();

    /// d^l h(w', tau); |l| <= 3.
    double eval(std::span<const double> w, std::span<const int> l, double tau) const;

    /// Product fast path: factor values H_j^{(0..3)}(w_j, tau). Valid only
    /// when is_product(). out[j][o] for coordinate j, order o.
    void factor_values(std::span<const double> w, double tau, double out[2][4]) const;
    bool is_product() const { return product_; }

    /// Support half-width of h(., tau) per coordinate: profile box widened by
    /// the Gaussian truncation radius. h is treated as exactly 0 outside.
    std::array<double, 2> effective_support(int coord, double tau) const;

    int tangential_dim() const { return dim_; }
    const SpatialProfile& profile() const { return *profile_; }

    struct FactorTable;
    struct GridTable;
    void factor_all(std::span<const double> w, double tau, double out[2][4]) const;

  private:
    const FactorTable& factor_table(double tau) const;
    const GridTable& grid_table(double tau) const;

    std::shared_ptr<const SpatialProfile> profile_;
    int n_;
    int dim_;
    bool product_;
    QuadratureSpec spec_;
    uint64_t cache_id_;
};

}  // namespace shs
