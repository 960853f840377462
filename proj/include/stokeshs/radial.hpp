#pragma once

#include <cmath>
#include <cstring>
#include <span>
#include <stdexcept>

namespace shs {

/// Helpers for differentiating radial functions F(|w|) in tangential
/// coordinates. With f_1 = F'/r and f_{m+1} = (f_m)'/r, the Cartesian
/// derivatives are polynomial in the coordinates:
///   d_i F            = x_i f_1
///   d_i d_j F        = delta_ij f_1 + x_i x_j f_2
///   d_i d_j d_k F    = (delta x)_3 f_2 + x_i x_j x_k f_3
///   d_i d_j d_k d_l F = (delta delta)_3 f_2 + (delta xx)_6 f_3 + xxxx f_4
/// where (delta x)_3 etc. run over the distinct pairings.
struct RadialChain {
    double f[5];  // f[0] = F, f[1..4] as above

    /// Build from the radial derivative stack F^{(0..max_order)}(r), r > 0.
    static RadialChain from_stack(std::span<const double> Fr, double r, int max_order) {
        if (max_order > 4) throw std::invalid_argument("RadialChain: order cap is 4");
        RadialChain c{};
        c.f[0] = Fr[0];
        if (max_order >= 1) {
            const double f1 = Fr[1] / r;
            c.f[1] = f1;
            if (max_order >= 2) {
                const double f1p = (Fr[2] - f1) / r;
                c.f[2] = f1p / r;
                if (max_order >= 3) {
                    const double f1pp = (Fr[3] - 2.0 * f1p) / r;
                    const double f2p = (f1pp - c.f[2]) / r;
                    c.f[3] = f2p / r;
                    if (max_order >= 4) {
                        const double f1ppp = (Fr[4] - 3.0 * f1pp) / r;
                        const double f2pp = (f1ppp - 2.0 * f2p) / r;
                        const double f3p = (f2pp - c.f[3]) / r;
                        c.f[4] = f3p / r;
                    }
                }
            }
        }
        return c;
    }

    /// Cartesian derivative for a 2-D tangential multi-index (l1, l2), |l| <= 4.
    double deriv(double x1, double x2, int l1, int l2) const {
        const int tot = l1 + l2;
        switch (tot) {
            case 0:
                return f[0];
            case 1:
                return (l1 ? x1 : x2) * f[1];
            case 2: {
                if (l1 == 2) return f[1] + x1 * x1 * f[2];
                if (l2 == 2) return f[1] + x2 * x2 * f[2];
                return x1 * x2 * f[2];
            }
            case 3: {
                // indices as multiset {i,j,k}
                const double xi[2] = {x1, x2};
                int cnt[2] = {l1, l2};
                // delta-pair term: sum over pairs equal + remaining coordinate
                double dsum = 0.0;
                if (cnt[0] >= 2) dsum += (cnt[0] == 3 ? 3.0 * x1 : x2 * (cnt[0] == 2 ? 1.0 : 0.0));
                if (cnt[1] >= 2) dsum += (cnt[1] == 3 ? 3.0 * x2 : x1 * (cnt[1] == 2 ? 1.0 : 0.0));
                double xprod = 1.0;
                for (int c = 0; c < 2; ++c)
                    for (int r = 0; r < cnt[c]; ++r) xprod *= xi[c];
                return dsum * f[2] + xprod * f[3];
            }
            case 4: {
                // distinct pairings of four indices with multiplicities (l1, l2)
                const double xi[2] = {x1, x2};
                double xprod = 1.0;
                int cnt[2] = {l1, l2};
                for (int c = 0; c < 2; ++c)
                    for (int r = 0; r < cnt[c]; ++r) xprod *= xi[c];
                double dd = 0.0, dxx = 0.0;
                if (l1 == 4 || l2 == 4) {
                    dd = 3.0;
                    dxx = 6.0 * (l1 == 4 ? x1 * x1 : x2 * x2);
                } else if (l1 == 3 || l2 == 3) {
                    dd = 0.0;
                    dxx = 3.0 * x1 * x2;
                } else {  // l1 == l2 == 2
                    dd = 1.0;
                    dxx = x1 * x1 + x2 * x2;
                }
                return dd * f[2] + dxx * f[3] + xprod * f[4];
            }
            default:
                throw std::invalid_argument("RadialChain::deriv: order above 4");
        }
    }
};

/// Chain through s = |w|^2 for radial profiles given as smooth functions of s
/// (entire-series forms like i0e(s/c)). Unlike the r-chain this has no 1/r
/// divisions, so it stays well conditioned down to the axis. fs holds
/// d^m/ds^m F~(s) for m = 0..4.
struct SquareRadialChain {
    double fs[5];

    double deriv(double x1, double x2, int l1, int l2) const {
        const int tot = l1 + l2;
        const double xi[2] = {x1, x2};
        switch (tot) {
            case 0:
                return fs[0];
            case 1:
                return 2.0 * (l1 ? x1 : x2) * fs[1];
            case 2: {
                if (l1 == 1 && l2 == 1) return 4.0 * x1 * x2 * fs[2];
                const double c = l1 == 2 ? x1 : x2;
                return 4.0 * c * c * fs[2] + 2.0 * fs[1];
            }
            case 3: {
                int cnt[2] = {l1, l2};
                double xprod = 1.0;
                for (int c = 0; c < 2; ++c)
                    for (int rep = 0; rep < cnt[c]; ++rep) xprod *= xi[c];
                double dsum = 0.0;  // delta_ij x_k over distinct pairings
                if (l1 == 3) dsum = 3.0 * x1;
                else if (l2 == 3) dsum = 3.0 * x2;
                else if (l1 == 2) dsum = x2;
                else dsum = x1;
                return 8.0 * xprod * fs[3] + 4.0 * dsum * fs[2];
            }
            case 4: {
                int cnt[2] = {l1, l2};
                double xprod = 1.0;
                for (int c = 0; c < 2; ++c)
                    for (int rep = 0; rep < cnt[c]; ++rep) xprod *= xi[c];
                double dd = 0.0, dxx = 0.0;
                if (l1 == 4 || l2 == 4) {
                    dd = 3.0;
                    dxx = 6.0 * (l1 == 4 ? x1 * x1 : x2 * x2);
                } else if (l1 == 3 || l2 == 3) {
                    dd = 0.0;
                    dxx = 3.0 * x1 * x2;
                } else {
                    dd = 1.0;
                    dxx = x1 * x1 + x2 * x2;
                }
                return 16.0 * xprod * fs[4] + 8.0 * dxx * fs[3] + 4.0 * dd * fs[2];
            }
            default:
                throw std::invalid_argument("SquareRadialChain::deriv: order above 4");
        }
    }
};

}  // namespace shs
