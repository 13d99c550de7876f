#pragma once

#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace phi3 {

enum class ScalingMode { Elliptic, Parabolic };

// Dimension bookkeeping for the two parabolic conventions in use: Manifold
// counts d as the full space dimension (one coordinate being time), Spatial
// counts d space dimensions next to one time coordinate.  The graph power
// counting always uses the Spatial convention (edge weight d, per-vertex
// codimension d+2).
enum class DimConvention { Manifold, Spatial };

struct ScalingContext {
    int d = 3;
    ScalingMode mode = ScalingMode::Parabolic;
    DimConvention convention = DimConvention::Manifold;

    // Homogeneous dimension of one point under the relevant scaling.
    int effective_dimension() const {
        if (mode == ScalingMode::Elliptic) return d;
        return convention == DimConvention::Manifold ? d + 1 : d + 2;
    }
};

// Integer scaling degree with a +infinity marker; arithmetic saturates.
struct SdValue {
    bool infinite = false;
    long long v = 0;

    static SdValue inf() { return {true, 0}; }
    static SdValue of(long long x) { return {false, x}; }
    bool operator==(const SdValue&) const = default;
};
SdValue sd_add(SdValue a, SdValue b);

// Scaling degree of the delta distribution on the total diagonal of n copies.
SdValue sd_delta(int n, const ScalingContext& ctx);

// Scaling degree of the fundamental solution / parametrix on Diag_2:
// effective dimension minus the order of the operator (2).
SdValue sd_parametrix(const ScalingContext& ctx);

// max{0, sdK + sdT - effective dimension}.
SdValue sd_convolution_bound(SdValue sdK, SdValue sdT, const ScalingContext& ctx);

// Bound p*d + (k-p)/2 * max{0, d-4} on contracted k-leg terms with p free
// legs (d in the spatial convention).
SdValue gamma_sd_bound(int k, int p, const ScalingContext& ctx);

// Number of multi-indices alpha over `codim` transverse coordinates with
// weighted order <= rho (parabolic: the first coordinate carries weight 2).
long long ambiguity_dimension(int rho, int codim, const ScalingContext& ctx);

// --- numerical part ----------------------------------------------------

using Sampler = std::function<double(const std::vector<double>&)>;

struct TestFunction {
    int dim = 1;
    double support = 3.0;  // integration box half-width
    Sampler value;
    // exact partial derivatives at the origin; when absent they are taken by
    // central finite differences
    std::function<double(const std::vector<int>&)> deriv_at_origin;
};

struct QuadratureConfig {
    double r0 = 0.5;       // initial excluded half-width
    int levels = 18;       // dyadic refinements toward the singularity
    double tol = 1e-8;     // relative stopping tolerance for the radius limit
    int gauss_n = 16;      // Gauss-Legendre points per dimension per cell
    double bump_inner = 0.5, bump_outer = 1.5;  // cutoff plateau / support
};

// Smooth radial cutoff: 1 on |y| <= inner, 0 on |y| >= outer.
double radial_cutoff(double r, double inner, double outer);

// <t, W_rho f>: quadrature outside a shrinking excluded box with Taylor
// subtraction of order rho (rho < 0 means no subtraction) and extrapolation
// of the radius limit.  Throws std::runtime_error when the radius sequence
// does not settle within the configured levels.
double extend_pairing(const Sampler& t, int rho, const TestFunction& f,
                      const QuadratureConfig& quad, const ScalingContext& ctx);

struct SdEstimatorConfig {
    std::vector<double> lambdas;  // defaults to a geometric grid when empty
    int gauss_n = 12;
    double box = 2.5;
};

// Least-squares slope of log|<t, f^lambda>| against log lambda; returns the
// scaling-degree estimate (minus the slope).  Parabolic mode scales the first
// coordinate by lambda^2.  Throws std::runtime_error on a degenerate
// regression (pairings below the noise floor).
double estimate_sd(const Sampler& t, int ndim, const ScalingContext& ctx,
                   const SdEstimatorConfig& cfg = {});

}  // namespace phi3
