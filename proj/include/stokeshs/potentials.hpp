#pragma once

#include <span>

#include "stokeshs/kernels.hpp"
#include "stokeshs/quadrature.hpp"
#include "stokeshs/types.hpp"

namespace shs {

struct PotentialKind {
    enum class Tag { A, B, C, K, GolovkinRegular };
    Tag tag = Tag::A;
    int i = 0;  // component indices (0-based) where applicable
    int j = 0;
};

enum class BStrategy {
    Direct,       // quadrature of int_Sigma Gamma(z', x_n, t) E(x'-z', 0) dz'
    KFactorized,  // product split Gamma_1(x_n,t) * W(x',t) with W via the K route
};

/// Tangential profile W(x',t) = [Gamma'(t) * E(.,0)](x'), the x'-factor of B.
/// For n = 3 it reduces to a closed form in the scaled Bessel i0e; the
/// quadrature backend retains the radially reduced integral as the
/// contract/cross-check route. For n = 2 a direct 1-D integral is used.
class TangentialEProfile {
  public:
    enum class Backend { Closed3d, RadialQuad3d, Direct2d };
    TangentialEProfile(int n, Backend backend, QuadratureSpec spec);

    /// Radial derivative stack out[0..max_r] = d^m/dr^m W(r,t); for n = 2 the
    /// argument r is the (signed) tangential coordinate.
    void r_stack(double r, double t, int max_r, double* out) const;
    /// Time derivative via the (n-1)-dim heat equation of W.
    double t_deriv(double r, double t, int r_order) const;
    /// Closed-form n=3 backend only: derivative stack in s = r^2 (stable down
    /// to the axis), fs[m] = d^m/ds^m W, m <= 4.
    void s_stack(double s, double t, int max_m, double* out) const;
    int n() const { return n_; }

  private:
    int n_;
    Backend backend_;
    QuadratureSpec spec_;
};

/// Script-A profile: curly_A(r, z_n, t) = [Gamma'(t) * E(., z_n)](x') with
/// r = |x'|; A(x,t) = (4 pi t)^{-1/2} curly_A(|x'|, x_n, t). eval_stack fills
/// out[(mr+1) x (mz+1)] with d_r^a d_{z_n}^b values, row-major in a.
class AScriptProfile {
  public:
    AScriptProfile(int n, QuadratureSpec spec);
    void eval_stack(double r, double z_n, double t, int max_r, int max_z, double* out) const;
    int n() const { return n_; }

  private:
    int n_;
    QuadratureSpec spec_;
};

/// d^d A(x,t) with A(x,t) = int_Sigma Gamma(x'-z', 0, t) E(z', x_n) dz'.
/// Tangential and time derivatives ride on the Gaussian factor (time via
/// d_t A = Delta' A - A/(2t)); normal derivatives on E.
double A_eval(const SpaceTimePoint& x, const DerivMultiIndex& d, const QuadratureSpec& spec);

/// Direct tensor-quadrature evaluation of A (test oracle for the radial path).
double A_eval_direct(const SpaceTimePoint& x, const DerivMultiIndex& d, const QuadratureSpec& spec);

/// d^d B(x,t). Both strategies are exposed; they must agree (acceptance #3).
double B_eval(const SpaceTimePoint& x, const DerivMultiIndex& d, const QuadratureSpec& spec,
              BStrategy strategy = BStrategy::KFactorized);

/// K(x',t) = int_Sigma exp(-|x'-z'|^2/(4t)) |z'|^{-(n-2)} dz', n >= 3, by the
/// radially reduced quadrature.
double K_eval(std::span<const double> x_prime, double t, const QuadratureSpec& spec, int n = 3);

/// Closed form of K for n = 3: 2 pi sqrt(pi t) i0e(r^2/(8t)).
double K_closed3(double r, double t);

/// d^d C_i(x,t), 0-based component i. Normal derivatives are never taken
/// numerically: they are rewritten via the C-relations
///   d_n C_i = d_i C_n + d_i d_n B   (i < n)
///   d_n C_n = -sum_k d_k C_k - (1/2) d_n Gamma
/// into tangential derivatives of C, B and Gamma, recursively.
double C_eval(int i, const SpaceTimePoint& x, const DerivMultiIndex& d, const QuadratureSpec& spec);

/// Direct nested-slab evaluation of C_i without the radial reduction
/// (independent oracle; base value only).
double C_eval_direct(int i, const SpaceTimePoint& x, const QuadratureSpec& spec);

/// Regular part of the Golovkin tensor: -2 delta_ij d_n Gamma - 4 d_j C_i
/// (the delta(t) part is handled by the solution module). 0-based i, j.
double golovkin_regular(int i, int j, const SpaceTimePoint& x, double t,
                        const QuadratureSpec& spec);

/// J(x',t) from the d_j d_n B factorization near the wall:
/// d_j d_n B = d_n Gamma_1(x_n,t) (d_j E(x',0) + J(x',t)), |J| <~ sqrt(t).
/// Computed from the direct B path so the x_n-independence of J is a real
/// check. Throws DegenerateDivision when d_n Gamma_1 underflows.
double bjn_decomposition(int j, const SpaceTimePoint& x, const QuadratureSpec& spec);

}  // namespace shs
