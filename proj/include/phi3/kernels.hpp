#pragma once

#include <map>
#include <vector>

namespace phi3 {

// Power family p^{n+1} of the heat fundamental solution on R^{1+d}, with the
// damped extension parameter a and the derived subtraction order ell.
struct KernelSpec {
    int d = 1;
    int n = 1;
    double a = 1.0;
    double kappa = 1.0;
    int ell() const { return (n * d) / 2; }
};

// Theta(t) (4 pi kappa t)^{-d/2} exp(-|x|^2 / (4 kappa t)); 0 for t <= 0.
double heat_kernel(double t, const std::vector<double>& x, double kappa = 1.0);

// (4 pi)^{-nd/2} (n+1)^{-d/2} / Gamma(nd/2)
double kl_constant(int n, int d);

enum class ZMap { Direct, SqrtSub };  // parameterization of the z half-line

struct KernelQuad {
    int gauss_n = 16;
    int z_panels = 95;      // geometric panels covering the z half-line
    int t_panels = 60;      // geometric panels toward t = 0
    double z_lo = 1e-10, z_hi = 1e14;
    ZMap zmap = ZMap::SqrtSub;
};

// Spectral representation of p^{n+1}: c_{n,d} Int z^{nd/2-1} p_{1/(n+1),z} dz,
// evaluated by quadrature at a point away from the origin.
double kl_representation(const KernelSpec& spec, double t, const std::vector<double>& x,
                         const KernelQuad& quad = {});

// Test functions poly(t - t0, x - x0) * exp(-beta_t (t-t0)^2 - beta_x |x-x0|^2),
// closed under d/dt and the spatial Laplacian; spatial integrals against
// Gaussian kernels are evaluated in closed form.
struct PolyGauss {
    int d = 1;
    double beta_t = 1.0, beta_x = 1.0;
    double t0 = 0.0;
    std::vector<double> x0;                  // empty means centered at 0
    std::map<std::vector<int>, double> coeffs;  // exponent (e_t, e_x1..e_xd) -> c

    double operator()(double t, const std::vector<double>& x) const;
    PolyGauss dt() const;
    PolyGauss laplacian() const;
    PolyGauss scaled(double factor) const;
    PolyGauss& add(const PolyGauss& other, double factor = 1.0);  // same shape data
    // f(lambda^2 t, lambda x); requires a centered function
    PolyGauss parabolic_scaled(double lambda) const;

    static PolyGauss gaussian(int d, double beta, double t0 = 0.0,
                              std::vector<double> x0 = {});
};

// (d/dt + Delta/(n+1) + a)^power f  -- the formal adjoint of the paper's
// extension operator moved onto the test function.
PolyGauss heat_adjoint_power(const KernelSpec& spec, const PolyGauss& f, int power);

// <_a p^{n+1}, f>: subtraction order ell, damped z-integral, analytic spatial
// moments, geometric-panel quadrature in t and z.
double extended_power_pairing(const KernelSpec& spec, const PolyGauss& f,
                              const KernelQuad& quad = {});

// Plain <p^{n+1}, f> without any extension; meaningful when the power is
// locally integrable or f is negligible near the origin.
double power_pairing_direct(const KernelSpec& spec, const PolyGauss& f,
                            const KernelQuad& quad = {});

// <_{a} p^{n+1} - _{b} p^{n+1}, f>; requires matching (d, n).
double extension_difference(const KernelSpec& spec_a, const KernelSpec& spec_b,
                            const PolyGauss& f, const KernelQuad& quad = {});

// Periodic heat kernel on (0,1)^d via the truncated image sum.
double torus_kernel(double t, const std::vector<double>& x, int terms, double kappa = 1.0);

// Regularized covariance on R x T^1 of the windowed heat propagator driven by
// mollified white noise: Int_0^T Int_0^T ds ds' rho2(s - s') <p(t1-s, x1-.),
// p(t2-s', x2-.)>, where rho2 is the self-convolution of the temporal
// mollifier (Gaussian, width eps^2), spatial mollification of width eps adds
// 2 eps^2 to the Gaussian variance, and the spatial pairing is summed over
// torus images.
double q_epsilon(double t1, double x1, double t2, double x2, double eps, double t_window);

}  // namespace phi3
