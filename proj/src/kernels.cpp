#include "phi3/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <mutex>
#include <stdexcept>

namespace phi3 {

namespace {

struct GaussRule {
    std::vector<double> x, w;
};

const GaussRule& gauss_rule(int n) {
    static std::map<int, GaussRule> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    GaussRule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double p1 = 0, dp = 0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        r.x[i] = x;
        r.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return cache.emplace(n, std::move(r)).first->second;
}

// Gauss nodes/weights on [a, b] appended to the output arrays.
void panel_nodes(double a, double b, int n, std::vector<double>& xs, std::vector<double>& ws) {
    const GaussRule& r = gauss_rule(n);
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < n; ++i) {
        xs.push_back(mid + half * r.x[i]);
        ws.push_back(half * r.w[i]);
    }
}

double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Int x^j exp(-A x^2) dx over the line.
double gauss_moment(int j, double A) {
    if (j % 2) return 0.0;
    return std::tgamma((j + 1) / 2.0) * std::pow(A, -(j + 1) / 2.0);
}

}  // namespace

double heat_kernel(double t, const std::vector<double>& x, double kappa) {
    if (t <= 0.0) return 0.0;
    double r2 = 0.0;
    for (double c : x) r2 += c * c;
    double d = static_cast<double>(x.size());
    return std::pow(4.0 * M_PI * kappa * t, -0.5 * d) * std::exp(-r2 / (4.0 * kappa * t));
}

double kl_constant(int n, int d) {
    double alpha = 0.5 * n * d;
    return std::pow(4.0 * M_PI, -alpha) * std::pow(n + 1.0, -0.5 * d) / std::tgamma(alpha);
}

double kl_representation(const KernelSpec& spec, double t, const std::vector<double>& x,
                         const KernelQuad& quad) {
    if (t <= 0.0) return 0.0;
    if (static_cast<int>(x.size()) != spec.d) throw std::invalid_argument("dimension mismatch");
    double r2 = 0.0;
    for (double c : x) r2 += c * c;
    double np1 = spec.n + 1.0;
    double alpha = 0.5 * spec.n * spec.d;
    double spatial = std::pow(np1, 0.5 * spec.d) * std::pow(4.0 * M_PI * t, -0.5 * spec.d) *
                     std::exp(-np1 * r2 / (4.0 * t));
    // z = w^2 removes the z^{alpha-1} endpoint singularity
    double wmax = std::sqrt(45.0 / t);
    std::vector<double> xs, ws;
    for (int j = 0; j < 30; ++j)
        panel_nodes(wmax * j / 30.0, wmax * (j + 1) / 30.0, quad.gauss_n, xs, ws);
    double integral = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        double w = xs[i];
        integral += ws[i] * 2.0 * std::pow(w, 2.0 * alpha - 1.0) * std::exp(-w * w * t);
    }
    return kl_constant(spec.n, spec.d) * spatial * integral;
}

// --- PolyGauss ----------------------------------------------------------

double PolyGauss::operator()(double t, const std::vector<double>& x) const {
    double v = 0.0;
    double dtc = t - t0;
    for (const auto& [e, c] : coeffs) {
        double m = c * std::pow(dtc, e[0]);
        for (int i = 0; i < d; ++i) {
            double dx = x[i] - (x0.empty() ? 0.0 : x0[i]);
            m *= std::pow(dx, e[1 + i]);
        }
        v += m;
    }
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) {
        double dx = x[i] - (x0.empty() ? 0.0 : x0[i]);
        r2 += dx * dx;
    }
    return v * std::exp(-beta_t * dtc * dtc - beta_x * r2);
}

PolyGauss PolyGauss::dt() const {
    PolyGauss out = *this;
    out.coeffs.clear();
    for (const auto& [e, c] : coeffs) {
        auto e1 = e;
        if (e[0] >= 1) {
            e1[0] = e[0] - 1;
            out.coeffs[e1] += c * e[0];
        }
        e1 = e;
        e1[0] = e[0] + 1;
        out.coeffs[e1] -= 2.0 * beta_t * c;
    }
    return out;
}

PolyGauss PolyGauss::laplacian() const {
    PolyGauss out = *this;
    out.coeffs.clear();
    for (const auto& [e, c] : coeffs) {
        for (int i = 0; i < d; ++i) {
            int m = e[1 + i];
            auto e1 = e;
            if (m >= 2) {
                e1[1 + i] = m - 2;
                out.coeffs[e1] += c * m * (m - 1);
            }
            e1 = e;
            out.coeffs[e1] += -2.0 * beta_x * (2 * m + 1) * c;
            e1[1 + i] = m + 2;
            out.coeffs[e1] += 4.0 * beta_x * beta_x * c;
        }
    }
    return out;
}

PolyGauss PolyGauss::scaled(double factor) const {
    PolyGauss out = *this;
    for (auto& [e, c] : out.coeffs) c *= factor;
    return out;
}

PolyGauss& PolyGauss::add(const PolyGauss& other, double factor) {
    if (other.d != d || other.beta_t != beta_t || other.beta_x != beta_x || other.t0 != t0 ||
        other.x0 != x0)
        throw std::invalid_argument("incompatible test-function shapes");
    for (const auto& [e, c] : other.coeffs) coeffs[e] += factor * c;
    return *this;
}

PolyGauss PolyGauss::parabolic_scaled(double lambda) const {
    if (t0 != 0.0 || !x0.empty()) throw std::invalid_argument("scaling needs a centered function");
    PolyGauss out = *this;
    out.beta_t = beta_t * std::pow(lambda, 4);
    out.beta_x = beta_x * lambda * lambda;
    out.coeffs.clear();
    for (const auto& [e, c] : coeffs) {
        int w = 2 * e[0];
        for (int i = 0; i < d; ++i) w += e[1 + i];
        out.coeffs[e] = c * std::pow(lambda, w);
    }
    return out;
}

PolyGauss PolyGauss::gaussian(int d, double beta, double t0, std::vector<double> x0) {
    PolyGauss f;
    f.d = d;
    f.beta_t = f.beta_x = beta;
    f.t0 = t0;
    f.x0 = std::move(x0);
    f.coeffs[std::vector<int>(1 + d, 0)] = 1.0;
    return f;
}

PolyGauss heat_adjoint_power(const KernelSpec& spec, const PolyGauss& f, int power) {
    PolyGauss g = f;
    for (int i = 0; i < power; ++i) {
        PolyGauss next = g.dt();
        next.add(g.laplacian(), 1.0 / (spec.n + 1.0));
        next.add(g, spec.a);
        g = next;
    }
    return g;
}

// --- pairings -----------------------------------------------------------

namespace {

// Int_{R^d} K_t(x) g(t, x) dx with K_t a centered Gaussian exp(-gamma0 |x|^2)
// times `prefac`; evaluated via closed-form Gaussian moments.
double spatial_pairing(const PolyGauss& g, double t, double gamma0, double prefac) {
    double dtc = t - g.t0;
    double timegauss = std::exp(-g.beta_t * dtc * dtc);
    double total = 0.0;
    for (const auto& [e, c] : g.coeffs) {
        double m = c * std::pow(dtc, e[0]);
        for (int i = 0; i < g.d; ++i) {
            double x0i = g.x0.empty() ? 0.0 : g.x0[i];
            double A = gamma0 + g.beta_x;
            double mu = g.beta_x * x0i / A;
            double expf = std::exp(-gamma0 * g.beta_x * x0i * x0i / A);
            int mm = e[1 + i];
            double s = 0.0;
            for (int j = mm % 2 == 0 ? 0 : 1; j <= mm; j += 2)
                s += binom(mm, j) * std::pow(mu - x0i, mm - j) * gauss_moment(j, A);
            m *= expf * s;
        }
        total += m;
    }
    return prefac * timegauss * total;
}

struct TimeGrid {
    std::vector<double> t, w, val;  // nodes, weights, pre-evaluated integrand
};

// Geometric panels toward t = 0 so that e^{-zt} is resolved for every z scale.
TimeGrid time_grid(const PolyGauss& g, const KernelQuad& quad,
                   const std::function<double(double)>& integrand) {
    double tmax = std::max(g.t0, 0.0) + std::sqrt(45.0 / g.beta_t);
    TimeGrid grid;
    double hi = tmax;
    for (int j = 0; j < quad.t_panels; ++j) {
        double lo = hi * 0.5;
        panel_nodes(lo, hi, quad.gauss_n, grid.t, grid.w);
        hi = lo;
    }
    grid.val.reserve(grid.t.size());
    for (double t : grid.t) grid.val.push_back(integrand(t));
    return grid;
}

}  // namespace

double extended_power_pairing(const KernelSpec& spec, const PolyGauss& f,
                              const KernelQuad& quad) {
    if (f.d != spec.d) throw std::invalid_argument("dimension mismatch");
    if (spec.a <= 0.0) throw std::invalid_argument("extension parameter must be positive");
    const int ell = spec.ell();
    const double np1 = spec.n + 1.0;
    const double alpha = 0.5 * spec.n * spec.d;
    PolyGauss g = heat_adjoint_power(spec, f, ell);

    TimeGrid grid = time_grid(g, quad, [&](double t) {
        double gamma0 = np1 / (4.0 * t);
        double prefac = std::pow(np1, 0.5 * spec.d) * std::pow(4.0 * M_PI * t, -0.5 * spec.d);
        return spatial_pairing(g, t, gamma0, prefac);
    });
    auto F = [&](double z) {
        double s = 0.0;
        for (size_t i = 0; i < grid.t.size(); ++i)
            s += grid.w[i] * std::exp(-z * grid.t[i]) * grid.val[i];
        return s;
    };

    std::vector<double> xs, ws;
    double total = 0.0;
    if (quad.zmap == ZMap::Direct) {
        panel_nodes(0.0, quad.z_lo, quad.gauss_n, xs, ws);
        double r = std::pow(quad.z_hi / quad.z_lo, 1.0 / quad.z_panels);
        double lo = quad.z_lo;
        for (int j = 0; j < quad.z_panels; ++j) {
            panel_nodes(lo, lo * r, quad.gauss_n, xs, ws);
            lo *= r;
        }
        for (size_t i = 0; i < xs.size(); ++i) {
            double z = xs[i];
            total += ws[i] * std::pow(z, alpha - 1.0) * std::pow(z + spec.a, -ell) * F(z);
        }
    } else {
        double wlo = std::sqrt(quad.z_lo), whi = std::sqrt(quad.z_hi);
        panel_nodes(0.0, wlo, quad.gauss_n, xs, ws);
        double r = std::pow(whi / wlo, 1.0 / quad.z_panels);
        double lo = wlo;
        for (int j = 0; j < quad.z_panels; ++j) {
            panel_nodes(lo, lo * r, quad.gauss_n, xs, ws);
            lo *= r;
        }
        for (size_t i = 0; i < xs.size(); ++i) {
            double w = xs[i], z = w * w;
            total +=
                ws[i] * 2.0 * std::pow(w, 2.0 * alpha - 1.0) * std::pow(z + spec.a, -ell) * F(z);
        }
    }
    return kl_constant(spec.n, spec.d) * total;
}

double power_pairing_direct(const KernelSpec& spec, const PolyGauss& f,
                            const KernelQuad& quad) {
    if (f.d != spec.d) throw std::invalid_argument("dimension mismatch");
    const double np1 = spec.n + 1.0;
    TimeGrid grid = time_grid(f, quad, [&](double t) {
        double gamma0 = np1 / (4.0 * t);
        double prefac = std::pow(4.0 * M_PI * t, -0.5 * np1 * spec.d);
        return spatial_pairing(f, t, gamma0, prefac);
    });
    double total = 0.0;
    for (size_t i = 0; i < grid.t.size(); ++i) total += grid.w[i] * grid.val[i];
    return total;
}

double extension_difference(const KernelSpec& spec_a, const KernelSpec& spec_b,
                            const PolyGauss& f, const KernelQuad& quad) {
    if (spec_a.d != spec_b.d || spec_a.n != spec_b.n)
        throw std::invalid_argument("extension difference needs matching (d, n)");
    if (spec_a.a == spec_b.a) return 0.0;
    return extended_power_pairing(spec_a, f, quad) - extended_power_pairing(spec_b, f, quad);
}

double torus_kernel(double t, const std::vector<double>& x, int terms, double kappa) {
    if (t <= 0.0) return 0.0;
    std::vector<double> shifted(x.size());
    double total = 0.0;
    std::vector<int> k(x.size(), -terms);
    while (true) {
        for (size_t i = 0; i < x.size(); ++i) shifted[i] = x[i] + k[i];
        total += heat_kernel(t, shifted, kappa);
        size_t i = 0;
        while (i < k.size() && ++k[i] > terms) k[i++] = -terms;
        if (i == k.size()) break;
    }
    return total;
}

double q_epsilon(double t1, double x1, double t2, double x2, double eps, double t_window) {
    if (eps <= 0.0 || t_window <= 0.0) throw std::invalid_argument("need eps, t_window > 0");
    // Covariance of P_chi convolved with noise mollified by a Gaussian of
    // width eps in space and eps^2 in time:
    //   Int_0^T Int_0^T ds ds' N(s-s'; 2 eps^4)
    //     Sum_k N(x1-x2+k; 2(t1-s) + 2(t2-s') + 2 eps^2)
    // with both propagator times required positive.  The inner integral over
    // v = s'-s carries the narrow temporal-mollification weight.
    const double tvar = 2.0 * std::pow(eps, 4);
    const double vmax = 5.0 * std::sqrt(tvar);
    std::vector<double> vx, vw;
    for (int j = 0; j < 4; ++j)
        panel_nodes(-vmax + vmax * j / 2.0, -vmax + vmax * (j + 1) / 2.0, 16, vx, vw);
    const double dx = x1 - x2;
    double total = 0.0;
    for (size_t vi = 0; vi < vx.size(); ++vi) {
        double v = vx[vi];
        double weight = std::exp(-v * v / (2.0 * tvar)) / std::sqrt(2.0 * M_PI * tvar);
        // s in [0, min(t1, T)), s' = s + v in [0, min(t2, T))
        double lo = std::max(0.0, -v);
        double hi = std::min({t1, t_window, t2 - v, t_window - v});
        if (hi <= lo) continue;
        std::vector<double> sx, sw;
        for (int j = 0; j < 24; ++j)
            panel_nodes(lo + (hi - lo) * j / 24.0, lo + (hi - lo) * (j + 1) / 24.0, 12, sx, sw);
        for (size_t si = 0; si < sx.size(); ++si) {
            double s = sx[si];
            double var = 2.0 * (t1 - s) + 2.0 * (t2 - s - v) + 2.0 * eps * eps;
            if (var <= 0.0) continue;
            double wrapped = 0.0;
            for (int k = -4; k <= 4; ++k) {
                double y = dx + k;
                wrapped += std::exp(-y * y / (2.0 * var)) / std::sqrt(2.0 * M_PI * var);
            }
            total += vw[vi] * weight * sw[si] * wrapped;
        }
    }
    return total;
}

}  // namespace phi3
