#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "stokeshs/boundary_data.hpp"
#include "stokeshs/quadrature.hpp"
#include "stokeshs/smoothing.hpp"
#include "stokeshs/types.hpp"

namespace shs {

struct SolutionConfig {
    QuadratureSpec quad;
    enum class DerivativeStrategy { AnalyticRewrite, FiniteDifferenceCrosscheck };
    DerivativeStrategy derivative_strategy = DerivativeStrategy::AnalyticRewrite;
    double time_fd_step = 1e-4;

    SolutionConfig() {
        quad.abs_tol = 1e-10;
        quad.rel_tol = 1e-7;
        quad.max_subdivisions = 4000;
    }
};

struct VelocityResult {
    double value = 0.0;
    double err_est = 0.0;
    std::map<std::string, double> terms;  // value = sum of terms (bookkeeping identity)
    bool trace_at_support = false;
};

struct K28Result {
    double K28 = 0.0;
    double K281 = 0.0;
    double K282 = 0.0;
};

struct VelocityRequest {
    int i = 0;  // 0-based component
    DerivMultiIndex d;
};

/// Velocity/pressure evaluation from the half-space Poisson kernel, with the
/// derivative-shift strategy: tangential derivatives ride on the smoothed
/// data, normal derivatives of C are rewritten through the C-relations, and
/// second normal derivatives route through the heat equation of B (producing
/// the K28-type data-time-derivative term). One evaluator instance binds the
/// boundary data and config; evaluation is pure and thread-safe.
class SolutionEvaluator {
  public:
    SolutionEvaluator(const BoundaryData& g, const SolutionConfig& cfg);

    /// Evaluate a batch of component/derivative requests at one point in a
    /// single fused sweep (the requests share quadrature panels).
    std::vector<VelocityResult> evaluate(const SpaceTimePoint& x,
                                         std::span<const VelocityRequest> requests) const;

    VelocityResult velocity(int i, const SpaceTimePoint& x) const;
    VelocityResult velocity_derivative(int i, const DerivMultiIndex& d,
                                       const SpaceTimePoint& x) const;

    /// Pressure from the curl-free representation: instantaneous E-terms plus
    /// (d_t - Delta') applied to the dA time-space convolution, with d_t moved
    /// onto the data.
    double pressure(const SpaceTimePoint& x) const;
    /// Spatial gradient of the pressure (for the PDE residual check).
    std::vector<double> pressure_gradient(const SpaceTimePoint& x) const;

    /// K28 term of the second-normal-derivative decomposition for data
    /// component k, split at s = 1/2 into the cusp part K281 and smooth part
    /// K282 (s measured from the evaluation time backwards).
    K28Result k28_term(int i, int k, const SpaceTimePoint& x) const;

    const BoundaryData& data() const { return g_; }
    const SolutionConfig& config() const { return cfg_; }

    struct Assembly;

  private:
    void assemble(int j, const SpaceTimePoint& x, std::span<const VelocityRequest> requests,
                  Assembly& out) const;
    std::vector<double> pressure_gradient_impl(const SpaceTimePoint& x,
                                               bool with_gradient) const;

    BoundaryData g_;
    SolutionConfig cfg_;
    std::vector<std::shared_ptr<SmoothedSpatial>> smooth_;
};

// Spec-level operation wrappers.
VelocityResult velocity(int i, const SpaceTimePoint& x, const BoundaryData& g,
                        const SolutionConfig& cfg);
VelocityResult velocity_derivative(int i, const DerivMultiIndex& d, const SpaceTimePoint& x,
                                   const BoundaryData& g, const SolutionConfig& cfg);
double pressure(const SpaceTimePoint& x, double t, const BoundaryData& g,
                const SolutionConfig& cfg);
K28Result k28_term(int i, int k, const SpaceTimePoint& x, double t, const BoundaryData& g,
                   const SolutionConfig& cfg);

}  // namespace shs
