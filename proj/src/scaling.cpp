#include "phi3/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace phi3 {

SdValue sd_add(SdValue a, SdValue b) {
    if (a.infinite || b.infinite) return SdValue::inf();
    return SdValue::of(a.v + b.v);
}

SdValue sd_delta(int n, const ScalingContext& ctx) {
    if (n < 2) throw std::invalid_argument("diagonal needs n >= 2 points");
    return SdValue::of(static_cast<long long>(n - 1) * ctx.effective_dimension());
}

SdValue sd_parametrix(const ScalingContext& ctx) {
    return SdValue::of(ctx.effective_dimension() - 2);
}

SdValue sd_convolution_bound(SdValue sdK, SdValue sdT, const ScalingContext& ctx) {
    if (sdK.infinite || sdT.infinite) return SdValue::inf();
    return SdValue::of(std::max<long long>(0, sdK.v + sdT.v - ctx.effective_dimension()));
}

SdValue gamma_sd_bound(int k, int p, const ScalingContext& ctx) {
    if (p < 1 || p > k) throw std::invalid_argument("need 1 <= p <= k");
    if ((k - p) % 2 != 0) throw std::invalid_argument("k - p must be even");
    long long extra = static_cast<long long>(k - p) * std::max(0, ctx.d - 4);
    return SdValue::of(static_cast<long long>(p) * ctx.d + extra / 2);
}

long long ambiguity_dimension(int rho, int codim, const ScalingContext& ctx) {
    if (rho < 0) throw std::invalid_argument("rho must be non-negative");
    if (codim < 1) throw std::invalid_argument("codim must be positive");
    std::vector<int> weight(codim, 1);
    if (ctx.mode == ScalingMode::Parabolic) weight[0] = 2;
    // DP over coordinates: number of alpha with sum weight[i]*alpha_i <= b
    std::vector<long long> ways(rho + 1, 0);
    ways[0] = 1;
    for (int c = 0; c < codim; ++c) {
        std::vector<long long> next(rho + 1, 0);
        for (int b = 0; b <= rho; ++b)
            for (int a = 0; a * weight[c] <= b; ++a) next[b] += ways[b - a * weight[c]];
        ways = std::move(next);
    }
    // ways[b] counts alpha with weighted order exactly b
    long long total = 0;
    for (int b = 0; b <= rho; ++b) total += ways[b];
    return total;
}

// --- quadrature --------------------------------------------------------

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
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        double dp = n * (x * p1 - p0) / (x * x - 1.0);
        r.x[i] = x;
        r.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return cache.emplace(n, std::move(r)).first->second;
}

// Tensor-product Gauss integral of g over the box prod_i [lo_i, hi_i].
double integrate_cell(const Sampler& g, const std::vector<double>& lo,
                      const std::vector<double>& hi, int n) {
    const GaussRule& r = gauss_rule(n);
    const int dim = static_cast<int>(lo.size());
    std::vector<int> idx(dim, 0);
    std::vector<double> pt(dim);
    double total = 0.0;
    while (true) {
        double w = 1.0;
        for (int i = 0; i < dim; ++i) {
            double mid = 0.5 * (lo[i] + hi[i]), half = 0.5 * (hi[i] - lo[i]);
            pt[i] = mid + half * r.x[idx[i]];
            w *= half * r.w[idx[i]];
        }
        total += w * g(pt);
        int i = 0;
        while (i < dim && ++idx[i] == n) idx[i++] = 0;
        if (i == dim) break;
    }
    return total;
}

// Integral of g over box(h_out) \ box(h_in) in the max norm.
double integrate_annulus(const Sampler& g, int dim, double h_in, double h_out, int n) {
    std::vector<int> cell(dim, -1);
    double total = 0.0;
    while (true) {
        bool all_zero = true;
        for (int c : cell)
            if (c != 0) all_zero = false;
        if (!all_zero) {
            std::vector<double> lo(dim), hi(dim);
            for (int i = 0; i < dim; ++i) {
                if (cell[i] == 0) { lo[i] = -h_in; hi[i] = h_in; }
                else if (cell[i] == 1) { lo[i] = h_in; hi[i] = h_out; }
                else { lo[i] = -h_out; hi[i] = -h_in; }
            }
            total += integrate_cell(g, lo, hi, n);
        }
        int i = 0;
        while (i < dim && ++cell[i] == 2) cell[i++] = -1;
        if (i == dim) break;
    }
    return total;
}

// Integral of g over box(R) \ box(r), r < R, dyadic shells.
double integrate_outside(const Sampler& g, int dim, double r, double R, int n) {
    double total = 0.0;
    double h = r;
    while (h < R) {
        double h2 = std::min(2.0 * h, R);
        total += integrate_annulus(g, dim, h, h2, n);
        h = h2;
    }
    return total;
}

double factorial(int n) {
    double r = 1.0;
    for (int k = 2; k <= n; ++k) r *= k;
    return r;
}

// Central finite difference for the mixed partial d^alpha f at the origin.
double fd_derivative(const Sampler& f, std::vector<int> alpha, std::vector<double> at,
                     int coord, double h) {
    if (coord == static_cast<int>(alpha.size())) return f(at);
    if (alpha[coord] == 0) return fd_derivative(f, alpha, at, coord + 1, h);
    auto shifted = [&](double s) {
        auto a2 = alpha;
        a2[coord] -= 1;
        auto at2 = at;
        at2[coord] += s;
        return fd_derivative(f, a2, at2, coord, h);
    };
    // 4th-order central first derivative
    return (-shifted(2 * h) + 8 * shifted(h) - 8 * shifted(-h) + shifted(-2 * h)) / (12 * h);
}

void for_each_multi_index(int dim, int budget, const std::vector<int>& weight,
                          const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> alpha(dim, 0);
    std::function<void(int, int)> rec = [&](int coord, int left) {
        if (coord == dim) {
            fn(alpha);
            return;
        }
        for (int a = 0; a * weight[coord] <= left; ++a) {
            alpha[coord] = a;
            rec(coord + 1, left - a * weight[coord]);
        }
        alpha[coord] = 0;
    };
    rec(0, budget);
}

}  // namespace

double radial_cutoff(double r, double inner, double outer) {
    if (r <= inner) return 1.0;
    if (r >= outer) return 0.0;
    auto h = [](double u) { return u > 0 ? std::exp(-1.0 / u) : 0.0; };
    double a = h((outer - r) / (outer - inner));
    double b = h((r - inner) / (outer - inner));
    return a / (a + b);
}

double extend_pairing(const Sampler& t, int rho, const TestFunction& f,
                      const QuadratureConfig& quad, const ScalingContext& ctx) {
    const int dim = f.dim;
    std::vector<int> weight(dim, 1);
    if (ctx.mode == ScalingMode::Parabolic && dim > 1) weight[0] = 2;

    // Taylor data of f at the origin
    std::vector<std::pair<std::vector<int>, double>> taylor;  // alpha -> d^alpha f(0)/alpha!
    if (rho >= 0) {
        for_each_multi_index(dim, rho, weight, [&](const std::vector<int>& alpha) {
            double d;
            if (f.deriv_at_origin) {
                d = f.deriv_at_origin(alpha);
            } else {
                // Richardson-extrapolated central differences (h^6 accurate)
                std::vector<double> origin(dim, 0.0);
                double coarse = fd_derivative(f.value, alpha, origin, 0, 2e-2);
                double fine = fd_derivative(f.value, alpha, origin, 0, 1e-2);
                d = (16.0 * fine - coarse) / 15.0;
            }
            double fact = 1.0;
            for (int a : alpha) fact *= factorial(a);
            taylor.emplace_back(alpha, d / fact);
        });
    }
    Sampler integrand = [&](const std::vector<double>& y) {
        double fv = f.value(y);
        if (rho >= 0) {
            double r2 = 0.0;
            for (double c : y) r2 += c * c;
            double g = radial_cutoff(std::sqrt(r2), quad.bump_inner, quad.bump_outer);
            if (g > 0.0) {
                for (const auto& [alpha, c] : taylor) {
                    double mono = c;
                    for (int i = 0; i < dim; ++i)
                        for (int a = 0; a < alpha[i]; ++a) mono *= y[i];
                    fv -= mono * g;
                }
            }
        }
        return t(y) * fv;
    };

    double R = f.support;
    double sum = integrate_outside(integrand, dim, quad.r0, R, quad.gauss_n);
    double prev = sum, prev_delta = 0.0;
    double h = quad.r0;
    for (int level = 0; level < quad.levels; ++level) {
        double h2 = 0.5 * h;
        sum += integrate_annulus(integrand, dim, h2, h, quad.gauss_n);
        h = h2;
        double delta = sum - prev;
        double scale = std::max(1.0, std::abs(sum));
        if (std::abs(delta) < quad.tol * scale) {
            // geometric tail estimate from the last two increments
            if (prev_delta != 0.0 && std::abs(delta) < std::abs(prev_delta)) {
                double q = delta / prev_delta;
                if (q > 0 && q < 0.9) return sum + delta * q / (1 - q);
            }
            return sum;
        }
        prev = sum;
        prev_delta = delta;
    }
    throw std::runtime_error("extend_pairing: radius extrapolation did not converge");
}

double estimate_sd(const Sampler& t, int ndim, const ScalingContext& ctx,
                   const SdEstimatorConfig& cfg) {
    std::vector<double> lambdas = cfg.lambdas;
    if (lambdas.empty())
        for (int i = 0; i < 8; ++i) lambdas.push_back(0.12 * std::pow(1.28, i));

    std::vector<double> logl, logp;
    for (double lam : lambdas) {
        Sampler g = [&](const std::vector<double>& u) {
            std::vector<double> x(u.size());
            double f = 1.0;
            for (size_t i = 0; i < u.size(); ++i) {
                double s = (ctx.mode == ScalingMode::Parabolic && i == 0) ? lam * lam : lam;
                x[i] = s * u[i];
                f *= std::exp(-u[i] * u[i]);
            }
            double tv = t(x);
            return std::isfinite(tv) ? tv * f : 0.0;
        };
        std::vector<double> lo(ndim, -cfg.box), hi(ndim, cfg.box);
        double p = integrate_cell(g, lo, hi, cfg.gauss_n);
        if (std::abs(p) > 1e-280) {
            logl.push_back(std::log(lam));
            logp.push_back(std::log(std::abs(p)));
        }
    }
    if (logl.size() < 3) throw std::runtime_error("estimate_sd: degenerate regression");
    double n = static_cast<double>(logl.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < logl.size(); ++i) {
        sx += logl[i];
        sy += logp[i];
        sxx += logl[i] * logl[i];
        sxy += logl[i] * logp[i];
    }
    double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-12) throw std::runtime_error("estimate_sd: degenerate regression");
    double slope = (n * sxy - sx * sy) / denom;
    return -slope;
}

}  // namespace phi3
