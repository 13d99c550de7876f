#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "phi3/kernels.hpp"

using namespace phi3;

namespace {

// Composite Simpson over [a, b].
double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (n % 2) ++n;
    double h = (b - a) / n, s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double n = static_cast<double>(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("heat kernel basics") {
    CHECK(heat_kernel(0.0, {0.3}) == 0.0);
    CHECK(heat_kernel(-1.0, {0.3}) == 0.0);

    // unit mass
    double mass1 = simpson([](double x) { return heat_kernel(0.37, {x}); }, -25, 25, 4000);
    CHECK(mass1 == doctest::Approx(1.0).epsilon(1e-10));
    double mass2 = simpson(
        [](double x) {
            return simpson([&](double y) { return heat_kernel(0.2, {x, y}, 1.7); }, -15, 15, 600);
        },
        -15, 15, 600);
    CHECK(mass2 == doctest::Approx(1.0).epsilon(1e-8));

    // solves the heat equation pointwise for t > 0
    double t = 0.3, x = 0.4, kappa = 1.3, h = 1e-4;
    double pt = (heat_kernel(t + h, {x}, kappa) - heat_kernel(t - h, {x}, kappa)) / (2 * h);
    double pxx = (heat_kernel(t, {x + h}, kappa) - 2 * heat_kernel(t, {x}, kappa) +
                  heat_kernel(t, {x - h}, kappa)) /
                 (h * h);
    CHECK(pt - kappa * pxx == doctest::Approx(0.0).epsilon(1e-5));

    // semigroup property
    double conv = simpson(
        [](double y) { return heat_kernel(0.2, {0.5 - y}) * heat_kernel(0.3, {y}); }, -20, 20,
        4000);
    CHECK(conv == doctest::Approx(heat_kernel(0.5, {0.5})).epsilon(1e-9));
}

TEST_CASE("spectral representation reproduces kernel powers") {
    struct Case {
        int d, n;
        double tol;
    };
    for (Case c : {Case{1, 1, 1e-6}, Case{2, 1, 1e-6}, Case{2, 2, 1e-5}, Case{3, 1, 1e-5},
                   Case{3, 2, 1e-5}}) {
        KernelSpec spec{c.d, c.n, 1.0};
        for (double t : {0.05, 0.1, 0.3, 0.7}) {
            for (double r : {0.0, 0.3, 0.8, 1.2, 2.0}) {
                std::vector<double> x(c.d, 0.0);
                x[0] = r;
                double direct = std::pow(heat_kernel(t, x), c.n + 1);
                double repr = kl_representation(spec, t, x);
                CHECK(repr == doctest::Approx(direct).epsilon(c.tol));
            }
        }
        CHECK(kl_representation(spec, -0.2, std::vector<double>(c.d, 0.1)) == 0.0);
        CHECK(kl_representation(spec, 0.0, std::vector<double>(c.d, 0.1)) == 0.0);
    }
}

TEST_CASE("test-function calculus") {
    PolyGauss f = PolyGauss::gaussian(2, 1.5);
    f.coeffs[{2, 1, 0}] = 0.7;
    // finite differences against the symbolic derivative
    double h = 1e-4, t = 0.3;
    std::vector<double> x = {0.2, -0.4};
    double dt_fd = (f(t + h, x) - f(t - h, x)) / (2 * h);
    CHECK(f.dt()(t, x) == doctest::Approx(dt_fd).epsilon(1e-6));
    double lap_fd = 0.0;
    for (int i = 0; i < 2; ++i) {
        auto xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        lap_fd += (f(t, xp) - 2 * f(t, x) + f(t, xm)) / (h * h);
    }
    CHECK(f.laplacian()(t, x) == doctest::Approx(lap_fd).epsilon(1e-5));

    PolyGauss g = f.parabolic_scaled(1.7);
    CHECK(g(t, x) == doctest::Approx(f(1.7 * 1.7 * t, {1.7 * x[0], 1.7 * x[1]})).epsilon(1e-12));
}

TEST_CASE("extended pairing: locally integrable case equals the direct integral") {
    KernelSpec spec{1, 1, 1.0};  // squared kernel on the line, no subtraction
    REQUIRE(spec.ell() == 0);
    PolyGauss f = PolyGauss::gaussian(1, 1.0);
    f.coeffs[{2, 2}] = 0.5;
    double ext = extended_power_pairing(spec, f);
    double direct = power_pairing_direct(spec, f);
    CHECK(ext == doctest::Approx(direct).epsilon(1e-6));

    // independent radial oracle: Int p(t,x)^2 f = Int dt (4 pi t)^{-1} I_x(t)
    PolyGauss plain = PolyGauss::gaussian(1, 1.0);
    double oracle = simpson(
        [&](double u) {
            double t = u * u;  // resolves the 1/sqrt(t) edge
            double gamma = 1.0 / (2.0 * t) + 1.0;
            double ix = std::sqrt(M_PI / gamma);
            return 2.0 * u / (4.0 * M_PI * t) * std::exp(-t * t) * ix;
        },
        1e-8, 3.0, 20000);
    CHECK(extended_power_pairing(spec, plain) == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("extended pairing agrees with the restriction away from the origin") {
    KernelSpec spec{2, 1, 1.0};
    REQUIRE(spec.ell() == 1);
    PolyGauss f = PolyGauss::gaussian(2, 40.0, 0.5, {0.6, 0.0});
    double ext = extended_power_pairing(spec, f);
    double direct = power_pairing_direct(spec, f);
    CHECK(ext == doctest::Approx(direct).epsilon(1e-5));
}

TEST_CASE("pairing is linear and parameterization independent") {
    KernelSpec spec{2, 2, 1.3};
    PolyGauss f1 = PolyGauss::gaussian(2, 1.0);
    PolyGauss f2 = PolyGauss::gaussian(2, 1.0);
    f2.coeffs[{1, 0, 2}] = 0.9;
    double p1 = extended_power_pairing(spec, f1);
    double p2 = extended_power_pairing(spec, f2);
    CHECK(extended_power_pairing(spec, f1.scaled(3.0)) == doctest::Approx(3.0 * p1).epsilon(1e-10));
    PolyGauss combo = f1;
    combo.add(f2, -0.5);
    CHECK(extended_power_pairing(spec, combo) == doctest::Approx(p1 - 0.5 * p2).epsilon(1e-8));

    KernelQuad direct_map;
    direct_map.zmap = ZMap::Direct;
    CHECK(extended_power_pairing(spec, f2, direct_map) == doctest::Approx(p2).epsilon(2e-6));

    // the half-integer exponent case is the delicate one for the direct map
    KernelSpec half{1, 1, 1.0};
    PolyGauss f1d = PolyGauss::gaussian(1, 1.0);
    double ref = extended_power_pairing(half, f1d);
    CHECK(extended_power_pairing(half, f1d, direct_map) == doctest::Approx(ref).epsilon(5e-5));
}

TEST_CASE("scaled family reproduces the kernel-power scaling degree") {
    KernelSpec spec{1, 1, 1.0};  // p^2 on R^2: weighted degree (n+1)d = 2
    PolyGauss f = PolyGauss::gaussian(1, 1.0);
    std::vector<double> logl, logp;
    for (double lam : {1.0, 1.3, 1.7, 2.2, 2.9}) {
        double p = extended_power_pairing(spec, f.parabolic_scaled(lam));
        logl.push_back(std::log(lam));
        logp.push_back(std::log(std::abs(p)));
    }
    double slope = fit_slope(logl, logp);
    // pairing scales like lambda^(sd - (d+2)); here sd = 2, d+2 = 3
    CHECK(slope + 3.0 == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("extension differences live in the delta span") {
    KernelSpec a{2, 2, 1.0};
    REQUIRE(a.ell() == 2);

    SUBCASE("identical parameters cancel exactly") {
        PolyGauss f = PolyGauss::gaussian(2, 2.0);
        CHECK(extension_difference(a, a, f) == 0.0);
    }

    SUBCASE("mismatched family is rejected") {
        PolyGauss f = PolyGauss::gaussian(2, 2.0);
        CHECK_THROWS_AS(extension_difference(a, KernelSpec{2, 1, 2.0}, f),
                        std::invalid_argument);
    }

    SUBCASE("flat test functions see no difference") {
        // (t^2 + |x|^2)^3 * gaussian vanishes to 6th order at the origin
        PolyGauss f = PolyGauss::gaussian(2, 1.0);
        f.coeffs.clear();
        for (int i = 0; i <= 3; ++i)
            for (int j = 0; i + j <= 3; ++j) {
                int k = 3 - i - j;
                double mult = 6.0 / (std::tgamma(i + 1) * std::tgamma(j + 1) * std::tgamma(k + 1));
                f.coeffs[{2 * i, 2 * j, 2 * k}] += mult;
            }
        KernelSpec b{2, 2, 3.5};
        CHECK(extension_difference(a, b, f) == doctest::Approx(0.0).epsilon(1e-6));
    }

    SUBCASE("generic differences regress onto the low-order delta basis") {
        KernelSpec b{2, 2, 2.7};
        std::vector<PolyGauss> fs;
        for (double beta : {1.0, 1.6, 2.4}) {
            PolyGauss f = PolyGauss::gaussian(2, beta);
            fs.push_back(f);
            f.coeffs[{2, 0, 0}] = 0.8;
            f.coeffs[{0, 2, 0}] = -0.3;
            fs.push_back(f);
        }
        // basis entries <(H+a)^q delta, f> = (adjoint^q f)(0)
        std::vector<std::array<double, 2>> B;
        std::vector<double> rhs;
        std::vector<double> origin = {0.0, 0.0};
        for (const auto& f : fs) {
            B.push_back({heat_adjoint_power(a, f, 0)(0.0, origin),
                         heat_adjoint_power(a, f, 1)(0.0, origin)});
            rhs.push_back(extension_difference(a, b, f));
        }
        // 2x2 normal equations
        double m00 = 0, m01 = 0, m11 = 0, v0 = 0, v1 = 0;
        for (size_t i = 0; i < B.size(); ++i) {
            m00 += B[i][0] * B[i][0];
            m01 += B[i][0] * B[i][1];
            m11 += B[i][1] * B[i][1];
            v0 += B[i][0] * rhs[i];
            v1 += B[i][1] * rhs[i];
        }
        double det = m00 * m11 - m01 * m01;
        REQUIRE(std::abs(det) > 1e-12);
        double z0 = (m11 * v0 - m01 * v1) / det;
        double z1 = (m00 * v1 - m01 * v0) / det;
        double scale = 0.0;
        for (double r : rhs) scale = std::max(scale, std::abs(r));
        for (size_t i = 0; i < B.size(); ++i) {
            double fitted = z0 * B[i][0] + z1 * B[i][1];
            CHECK(std::abs(rhs[i] - fitted) < 1e-5 * std::max(1.0, scale));
        }
    }
}

TEST_CASE("torus kernel") {
    CHECK(torus_kernel(0.0, {0.3}, 6) == 0.0);
    CHECK(torus_kernel(-0.5, {0.3}, 6) == 0.0);
    double mass = simpson([](double x) { return torus_kernel(0.3, {x}, 8); }, 0.0, 1.0, 2000);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
    // the image-sum remainder is smooth near the diagonal: it and its second
    // spatial difference stay bounded (in fact vanish) as t -> 0
    double h = 0.02;
    for (double t : {0.05, 0.02, 0.01, 0.004}) {
        auto diff = [&](double x) { return torus_kernel(t, {x}, 8) - heat_kernel(t, {x}); };
        CHECK(std::abs(diff(0.0)) < 1.0);
        double second = (diff(h) - 2 * diff(0.0) + diff(-h)) / (h * h);
        CHECK(std::abs(second) < 50.0);
    }
    CHECK(std::abs(torus_kernel(0.004, {0.0}, 8) - heat_kernel(0.004, {0.0})) <
          std::abs(torus_kernel(0.05, {0.0}, 8) - heat_kernel(0.05, {0.0})));
}

TEST_CASE("regularized covariance") {
    double T = 0.5;
    double q12 = q_epsilon(0.4, 0.2, 0.3, 0.7, 0.05, T);
    double q21 = q_epsilon(0.3, 0.7, 0.4, 0.2, 0.05, T);
    CHECK(q12 == doctest::Approx(q21).epsilon(1e-10));

    // Cauchy in eps away from the diagonal
    double a = q_epsilon(0.4, 0.2, 0.4, 0.5, 0.08, T);
    double b = q_epsilon(0.4, 0.2, 0.4, 0.5, 0.04, T);
    double c = q_epsilon(0.4, 0.2, 0.4, 0.5, 0.02, T);
    CHECK(std::abs(b - c) < std::abs(a - b));
    CHECK(std::abs(b - c) < 0.02 * std::abs(c));

    // correlation decays with torus separation
    CHECK(q_epsilon(0.2, 0.1, 0.2, 0.6, 0.05, T) < q_epsilon(0.2, 0.1, 0.2, 0.1, 0.05, T));
    CHECK_THROWS_AS(q_epsilon(0.2, 0.1, 0.2, 0.1, -1.0, T), std::invalid_argument);
}
