#pragma once

#include <cstdint>
#include <vector>

namespace phi3 {

// Periodic space-time lattice for the stochastic heat dynamics on (0,1)^d.
// The noise is mollified by a Gaussian of width eps in space and eps^2 in
// time, and the forcing window is the hard indicator of [0, nt * dt].
struct LatticeConfig {
    int d = 1;
    int nt = 64;
    int nx = 64;
    double dx = 1.0 / 64.0;
    double dt = 0.5 / (64.0 * 64.0);
    double eps = 0.03;
    std::uint64_t seed = 1;
    int samples = 10000;

    double t_window() const { return nt * dt; }
    int pad_steps() const;     // temporal mollifier half-width in steps
    int spatial_sites() const; // nx^d
    void validate() const;     // throws std::invalid_argument on violation
};

// Raw white noise over the forcing window: nt rows of nx^d i.i.d. centered
// Gaussians with variance 1/(dt dx^d).  Deterministic in (seed, sample_index);
// distinct sample indices use disjoint streams.
std::vector<double> sample_noise(const LatticeConfig& cfg, int sample_index);

// The mollified forcing over the window (nt rows); drawn from the same stream
// as sample_noise plus the padding rows outside the window that the temporal
// mollifier reaches.
std::vector<double> mollified_noise(const LatticeConfig& cfg, int sample_index);

// Explicit-Euler solution of  du = Laplacian u dt + xi_eps dt  from zero data,
// shifted by the deterministic spatial profile: rows k = 0..nt of
// u_k(x) + shift(x).  The shift may be empty (zero).
std::vector<double> solve_linear(const LatticeConfig& cfg, int sample_index,
                                 const std::vector<double>& shift = {});

// Exact covariance of the noise part of the solution between time levels k1
// and k2, as a function of the wrapped lattice offset (size nx^d, d = 1 only).
// Computed deterministically from the discrete propagator, no sampling.
std::vector<double> lattice_covariance(const LatticeConfig& cfg, int k1, int k2);

// Variance of the noise part at time level k (any site, by homogeneity).
double lattice_diagonal(const LatticeConfig& cfg, int k);

// E[prod_i X_i^{powers[i]}] for a centered Gaussian vector with the given
// covariance matrix, via the sum over perfect matchings.
double isserlis_moment(const std::vector<std::vector<double>>& cov,
                       const std::vector<int>& powers);

struct ComparisonReport {
    double estimate = 0.0;
    double prediction = 0.0;
    double se = 0.0;  // standard error of the Monte-Carlo estimate
    double sigmas() const;
    bool pass(double k = 3.0) const { return sigmas() <= k; }
};

// E[phihat(f) - lambda (P (*) phihat^3)(f)]  against the exact counterterm
// prediction  <f, shift> - lambda <P* f, shift^3 + 3 C shift>, where C is the
// deterministic lattice variance at each time level.  f and shift are spatial
// profiles; phihat(f) samples the final time level.
ComparisonReport validate_first_order(const LatticeConfig& cfg,
                                      const std::vector<double>& shift, double lambda,
                                      const std::vector<double>& f);

struct TwoPointReport {
    ComparisonReport order0;  // E[phihat(f1) phihat(f2)]     vs covariance pairing
    ComparisonReport order1;  // first-order correction       vs -3 (Q C P*)-pairing
};

// Two-point function at zero shift through first order in the coupling.  The
// order-1 estimator  -(phihat(f1) <P* f2, phihat^3> + phihat(f2) <P* f1,
// phihat^3>)  has mean equal to the full first-order correction with no
// higher-order contamination.
TwoPointReport validate_two_point(const LatticeConfig& cfg, const std::vector<double>& f1,
                                  const std::vector<double>& f2);

}  // namespace phi3
