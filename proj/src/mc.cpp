#include "phi3/mc.hpp"

#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace phi3 {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Normalized discrete Gaussian kernel of the given standard deviation,
// sampled at the given spacing over [-half, half] steps.
std::vector<double> gaussian_kernel(double stddev, double spacing, int half) {
    std::vector<double> g(2 * half + 1);
    double sum = 0.0;
    for (int a = -half; a <= half; ++a) {
        double u = a * spacing;
        g[a + half] = std::exp(-u * u / (2.0 * stddev * stddev));
        sum += g[a + half];
    }
    for (double& v : g) v /= sum;
    return g;
}

struct Lat {
    int nt, nx, d, sites, pad, rows, hx;
    double dt, dx, sigma, lap_c;
    std::vector<double> g_t, g_x;
};

Lat make_lat(const LatticeConfig& cfg) {
    cfg.validate();
    Lat lat;
    lat.nt = cfg.nt;
    lat.nx = cfg.nx;
    lat.d = cfg.d;
    lat.sites = cfg.spatial_sites();
    lat.pad = cfg.pad_steps();
    lat.rows = cfg.nt + 2 * lat.pad;
    lat.dt = cfg.dt;
    lat.dx = cfg.dx;
    lat.sigma = std::sqrt(1.0 / (cfg.dt * std::pow(cfg.dx, cfg.d)));
    lat.lap_c = cfg.dt / (cfg.dx * cfg.dx);
    lat.g_t = gaussian_kernel(cfg.eps * cfg.eps, cfg.dt, lat.pad);
    lat.hx = static_cast<int>(std::ceil(4.0 * cfg.eps / cfg.dx));
    if (2 * lat.hx + 1 > cfg.nx) throw std::invalid_argument("mollifier wider than the torus");
    lat.g_x = gaussian_kernel(cfg.eps, cfg.dx, lat.hx);
    return lat;
}

// Circular convolution of one spatial row along the given axis.
void conv_axis(const Lat& lat, const double* in, double* out, int axis) {
    int stride = 1;
    for (int a = 0; a < axis; ++a) stride *= lat.nx;
    for (int s = 0; s < lat.sites; ++s) {
        int coord = (s / stride) % lat.nx;
        int base = s - coord * stride;
        double acc = 0.0;
        for (int a = -lat.hx; a <= lat.hx; ++a) {
            int c = coord - a;
            c %= lat.nx;
            if (c < 0) c += lat.nx;
            acc += lat.g_x[a + lat.hx] * in[base + c * stride];
        }
        out[s] = acc;
    }
}

void mollify_row(const Lat& lat, const double* in, double* out) {
    std::vector<double> tmp(lat.sites);
    const double* src = in;
    for (int axis = 0; axis < lat.d; ++axis) {
        double* dst = (axis == lat.d - 1) ? out : tmp.data();
        conv_axis(lat, src, dst, axis);
        src = dst;
    }
}

void laplacian(const Lat& lat, const double* u, double* out) {
    int stride = 1;
    for (int s = 0; s < lat.sites; ++s) out[s] = 0.0;
    for (int axis = 0; axis < lat.d; ++axis) {
        for (int s = 0; s < lat.sites; ++s) {
            int coord = (s / stride) % lat.nx;
            int base = s - coord * stride;
            int cp = (coord + 1) % lat.nx;
            int cm = (coord + lat.nx - 1) % lat.nx;
            out[s] += (u[base + cp * stride] + u[base + cm * stride] - 2.0 * u[s]) /
                      (lat.dx * lat.dx);
        }
        stride *= lat.nx;
    }
}

// Raw unit normals over the extended time range, fixed generation order.
std::vector<double> raw_normals(const LatticeConfig& cfg, const Lat& lat, int sample_index) {
    if (sample_index < 0) throw std::invalid_argument("sample index must be nonnegative");
    std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(static_cast<std::uint64_t>(sample_index))));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> raw(static_cast<std::size_t>(lat.rows) * lat.sites);
    for (double& v : raw) v = normal(rng);
    return raw;
}

// Mollified forcing rows 0..nt-1 from the raw extended field.
std::vector<double> mollify_field(const Lat& lat, const std::vector<double>& raw) {
    std::vector<double> smoothed(raw.size());
    for (int r = 0; r < lat.rows; ++r)
        mollify_row(lat, raw.data() + static_cast<std::size_t>(r) * lat.sites,
                    smoothed.data() + static_cast<std::size_t>(r) * lat.sites);
    std::vector<double> xi(static_cast<std::size_t>(lat.nt) * lat.sites, 0.0);
    for (int k = 0; k < lat.nt; ++k) {
        double* out = xi.data() + static_cast<std::size_t>(k) * lat.sites;
        for (int i = 0; i <= 2 * lat.pad; ++i) {
            int j = k + 2 * lat.pad - i;  // extended row with kernel index i
            const double* src = smoothed.data() + static_cast<std::size_t>(j) * lat.sites;
            double w = lat.g_t[i] * lat.sigma;
            for (int s = 0; s < lat.sites; ++s) out[s] += w * src[s];
        }
    }
    return xi;
}

std::vector<double> euler_solve(const Lat& lat, const std::vector<double>& xi) {
    std::vector<double> u(static_cast<std::size_t>(lat.nt + 1) * lat.sites, 0.0);
    std::vector<double> lap(lat.sites);
    for (int k = 0; k < lat.nt; ++k) {
        const double* cur = u.data() + static_cast<std::size_t>(k) * lat.sites;
        double* next = u.data() + static_cast<std::size_t>(k + 1) * lat.sites;
        laplacian(lat, cur, lap.data());
        const double* f = xi.data() + static_cast<std::size_t>(k) * lat.sites;
        for (int s = 0; s < lat.sites; ++s)
            next[s] = cur[s] + lat.dt * (lap[s] + f[s]);
    }
    return u;
}

// --- deterministic response machinery (d = 1) -------------------------------
//
// V[k][j][x] is the response of the noise part of u at time level k, site x,
// to a unit normal injected at extended noise row j, site 0.  It satisfies
// V^{k+1}_j = A V^k_j + dt sigma g_t[k + pad - j] g_x  with A = I + dt Lap.

void apply_A(const Lat& lat, std::vector<double>& v) {
    std::vector<double> lap(lat.nx);
    laplacian(lat, v.data(), lap.data());
    for (int x = 0; x < lat.nx; ++x) v[x] += lat.dt * lap[x];
}

// Responses at every time level 0..nt; entry [k] is a rows x nx matrix.
std::vector<std::vector<std::vector<double>>> all_responses(const Lat& lat) {
    if (lat.d != 1) throw std::invalid_argument("responses implemented for d = 1 only");
    std::vector<std::vector<double>> v(lat.rows, std::vector<double>(lat.nx, 0.0));
    std::vector<std::vector<std::vector<double>>> snaps;
    snaps.reserve(lat.nt + 1);
    snaps.push_back(v);
    for (int k = 0; k < lat.nt; ++k) {
        for (int j = 0; j < lat.rows; ++j) {
            apply_A(lat, v[j]);
            int i = k + 2 * lat.pad - j;  // kernel index of row j at source step k
            if (i >= 0 && i <= 2 * lat.pad) {
                double w = lat.dt * lat.sigma * lat.g_t[i];
                for (int a = -lat.hx; a <= lat.hx; ++a) {
                    int x = a % lat.nx;
                    if (x < 0) x += lat.nx;
                    v[j][x] += w * lat.g_x[a + lat.hx];
                }
            }
        }
        snaps.push_back(v);
    }
    return snaps;
}

std::vector<double> correlate(const Lat& lat, const std::vector<std::vector<double>>& v1,
                              const std::vector<std::vector<double>>& v2) {
    std::vector<double> q(lat.nx, 0.0);
    for (int j = 0; j < lat.rows; ++j)
        for (int y = 0; y < lat.nx; ++y) {
            double a = v1[j][y];
            if (a == 0.0) continue;
            for (int delta = 0; delta < lat.nx; ++delta)
                q[delta] += a * v2[j][(y + delta) % lat.nx];
        }
    return q;
}

// dt A^{nt-1-k} (f dx) for k = 0..nt-1: adjoint weights so that
// <w[k], g_k> summed over k equals <f dx, (P (*) g)(T, .)>.
std::vector<std::vector<double>> adjoint_weights(const Lat& lat, const std::vector<double>& f) {
    if (static_cast<int>(f.size()) != lat.sites) throw std::invalid_argument("bad profile size");
    std::vector<double> v(f);
    for (double& x : v) x *= std::pow(lat.dx, lat.d);
    std::vector<std::vector<double>> w(lat.nt);
    for (int m = 0; m < lat.nt; ++m) {
        w[lat.nt - 1 - m] = v;
        for (double& x : w[lat.nt - 1 - m]) x *= lat.dt;
        if (m + 1 < lat.nt) {
            std::vector<double> lap(lat.sites);
            laplacian(lat, v.data(), lap.data());
            for (int s = 0; s < lat.sites; ++s) v[s] += lat.dt * lap[s];
        }
    }
    return w;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

struct MeanSe {
    double mean, se;
};

MeanSe mean_se(const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= xs.size();
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= (xs.size() - 1);
    return {mean, std::sqrt(var / xs.size())};
}

}  // namespace

int LatticeConfig::pad_steps() const {
    return static_cast<int>(std::ceil(4.0 * eps * eps / dt));
}

int LatticeConfig::spatial_sites() const {
    int s = 1;
    for (int a = 0; a < d; ++a) s *= nx;
    return s;
}

void LatticeConfig::validate() const {
    if (d != 1 && d != 2) throw std::invalid_argument("spatial dimension must be 1 or 2");
    if (nt <= 0 || nx <= 0) throw std::invalid_argument("lattice extents must be positive");
    if (dt <= 0.0 || dx <= 0.0) throw std::invalid_argument("lattice spacings must be positive");
    if (eps <= 0.0) throw std::invalid_argument("mollification width must be positive");
    if (dt > dx * dx / (2.0 * d) * (1.0 + 1e-12))
        throw std::invalid_argument("explicit scheme unstable: need dt <= dx^2 / (2d)");
    if (samples < 100) throw std::invalid_argument("need at least 100 samples");
}

std::vector<double> sample_noise(const LatticeConfig& cfg, int sample_index) {
    Lat lat = make_lat(cfg);
    std::vector<double> raw = raw_normals(cfg, lat, sample_index);
    std::vector<double> window(static_cast<std::size_t>(lat.nt) * lat.sites);
    for (std::size_t i = 0; i < window.size(); ++i)
        window[i] = lat.sigma * raw[static_cast<std::size_t>(lat.pad) * lat.sites + i];
    return window;
}

std::vector<double> mollified_noise(const LatticeConfig& cfg, int sample_index) {
    Lat lat = make_lat(cfg);
    return mollify_field(lat, raw_normals(cfg, lat, sample_index));
}

std::vector<double> solve_linear(const LatticeConfig& cfg, int sample_index,
                                 const std::vector<double>& shift) {
    Lat lat = make_lat(cfg);
    std::vector<double> u = euler_solve(lat, mollify_field(lat, raw_normals(cfg, lat, sample_index)));
    if (!shift.empty()) {
        if (static_cast<int>(shift.size()) != lat.sites)
            throw std::invalid_argument("bad shift size");
        for (int k = 0; k <= lat.nt; ++k)
            for (int s = 0; s < lat.sites; ++s)
                u[static_cast<std::size_t>(k) * lat.sites + s] += shift[s];
    }
    return u;
}

std::vector<double> lattice_covariance(const LatticeConfig& cfg, int k1, int k2) {
    Lat lat = make_lat(cfg);
    if (k1 < 0 || k1 > lat.nt || k2 < 0 || k2 > lat.nt)
        throw std::invalid_argument("time level out of range");
    auto snaps = all_responses(lat);
    return correlate(lat, snaps[k1], snaps[k2]);
}

double lattice_diagonal(const LatticeConfig& cfg, int k) {
    return lattice_covariance(cfg, k, k)[0];
}

double isserlis_moment(const std::vector<std::vector<double>>& cov,
                       const std::vector<int>& powers) {
    if (powers.size() != cov.size()) throw std::invalid_argument("size mismatch");
    std::vector<int> idx;
    for (std::size_t i = 0; i < powers.size(); ++i) {
        if (powers[i] < 0) throw std::invalid_argument("negative power");
        for (int r = 0; r < powers[i]; ++r) idx.push_back(static_cast<int>(i));
    }
    if (idx.size() % 2 != 0) return 0.0;
    std::function<double(std::vector<int>&)> match = [&](std::vector<int>& rest) -> double {
        if (rest.empty()) return 1.0;
        int a = rest[0];
        double total = 0.0;
        for (std::size_t i = 1; i < rest.size(); ++i) {
            int b = rest[i];
            std::vector<int> next;
            next.reserve(rest.size() - 2);
            for (std::size_t j = 1; j < rest.size(); ++j)
                if (j != i) next.push_back(rest[j]);
            total += cov[a][b] * match(next);
        }
        return total;
    };
    return match(idx);
}

double ComparisonReport::sigmas() const {
    if (se == 0.0) return estimate == prediction ? 0.0 : 1e300;
    return std::abs(estimate - prediction) / se;
}

ComparisonReport validate_first_order(const LatticeConfig& cfg,
                                      const std::vector<double>& shift, double lambda,
                                      const std::vector<double>& f) {
    Lat lat = make_lat(cfg);
    if (lat.d != 1) throw std::invalid_argument("validation implemented for d = 1 only");
    auto w = adjoint_weights(lat, f);
    std::vector<double> f_dx(f);
    for (double& x : f_dx) x *= lat.dx;

    std::vector<double> phi(lat.sites, 0.0);
    if (!shift.empty()) {
        if (static_cast<int>(shift.size()) != lat.sites)
            throw std::invalid_argument("bad shift size");
        phi = shift;
    }

    // exact prediction from the deterministic time-level variances
    auto snaps = all_responses(lat);
    double pred = dot(f_dx, phi);
    for (int k = 0; k < lat.nt; ++k) {
        double ck = correlate(lat, snaps[k], snaps[k])[0];
        double acc = 0.0;
        for (int s = 0; s < lat.sites; ++s)
            acc += w[k][s] * (phi[s] * phi[s] * phi[s] + 3.0 * ck * phi[s]);
        pred -= lambda * acc;
    }

    std::vector<double> draws(cfg.samples);
    for (int sample = 0; sample < cfg.samples; ++sample) {
        std::vector<double> u = euler_solve(lat, mollify_field(lat, raw_normals(cfg, lat, sample)));
        double x = 0.0;
        for (int s = 0; s < lat.sites; ++s)
            x += f_dx[s] * (u[static_cast<std::size_t>(lat.nt) * lat.sites + s] + phi[s]);
        for (int k = 0; k < lat.nt; ++k) {
            const double* row = u.data() + static_cast<std::size_t>(k) * lat.sites;
            double cube = 0.0;
            for (int s = 0; s < lat.sites; ++s) {
                double v = row[s] + phi[s];
                cube += w[k][s] * v * v * v;
            }
            x -= lambda * cube;
        }
        draws[sample] = x;
    }
    auto [mean, se] = mean_se(draws);
    return {mean, pred, se};
}

TwoPointReport validate_two_point(const LatticeConfig& cfg, const std::vector<double>& f1,
                                  const std::vector<double>& f2) {
    Lat lat = make_lat(cfg);
    if (lat.d != 1) throw std::invalid_argument("validation implemented for d = 1 only");
    auto w1 = adjoint_weights(lat, f1);
    auto w2 = adjoint_weights(lat, f2);
    std::vector<double> f1_dx(f1), f2_dx(f2);
    for (double& x : f1_dx) x *= lat.dx;
    for (double& x : f2_dx) x *= lat.dx;

    auto snaps = all_responses(lat);
    // order 0: pairing of f1 (x) f2 against the final-time covariance
    std::vector<double> q_final = correlate(lat, snaps[lat.nt], snaps[lat.nt]);
    double pred0 = 0.0;
    for (int x = 0; x < lat.nx; ++x)
        for (int y = 0; y < lat.nx; ++y)
            pred0 += f1_dx[x] * f2_dx[y] * q_final[((x - y) % lat.nx + lat.nx) % lat.nx];
    // order 1 at zero shift: -3 [ <w2, Qf1 C> + <w1, Qf2 C> ]
    double pred1 = 0.0;
    for (int k = 0; k < lat.nt; ++k) {
        std::vector<double> qk = correlate(lat, snaps[lat.nt], snaps[k]);
        double ck = correlate(lat, snaps[k], snaps[k])[0];
        for (int y = 0; y < lat.nx; ++y) {
            double qf1 = 0.0, qf2 = 0.0;
            for (int x = 0; x < lat.nx; ++x) {
                double q = qk[((x - y) % lat.nx + lat.nx) % lat.nx];
                qf1 += f1_dx[x] * q;
                qf2 += f2_dx[x] * q;
            }
            pred1 -= 3.0 * ck * (w2[k][y] * qf1 + w1[k][y] * qf2);
        }
    }

    std::vector<double> draws0(cfg.samples), draws1(cfg.samples);
    for (int sample = 0; sample < cfg.samples; ++sample) {
        std::vector<double> u = euler_solve(lat, mollify_field(lat, raw_normals(cfg, lat, sample)));
        const double* top = u.data() + static_cast<std::size_t>(lat.nt) * lat.sites;
        double a1 = 0.0, a2 = 0.0;
        for (int s = 0; s < lat.sites; ++s) {
            a1 += f1_dx[s] * top[s];
            a2 += f2_dx[s] * top[s];
        }
        double c1 = 0.0, c2 = 0.0;
        for (int k = 0; k < lat.nt; ++k) {
            const double* row = u.data() + static_cast<std::size_t>(k) * lat.sites;
            for (int s = 0; s < lat.sites; ++s) {
                double v = row[s] * row[s] * row[s];
                c1 += w1[k][s] * v;
                c2 += w2[k][s] * v;
            }
        }
        draws0[sample] = a1 * a2;
        draws1[sample] = -(a1 * c2 + a2 * c1);
    }
    auto [m0, s0] = mean_se(draws0);
    auto [m1, s1] = mean_se(draws1);
    return {{m0, pred0, s0}, {m1, pred1, s1}};
}

}  // namespace phi3
