#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <thread>
#include <vector>

#include "chaoslab/density.hpp"
#include "chaoslab/kernels.hpp"
#include "chaoslab/pde.hpp"
#include "chaoslab/rng.hpp"

namespace chaoslab {

struct LlnOptions {
    int conv_quad_points = 1 << 15;   // quadrature nodes for (h * u)
    int conv_table_points = 1 << 12;  // tabulation of (h * u), linear interp
    int threads = 1;
};

struct LlnResult {
    int n = 0;
    int reps = 0;
    double threshold = 0.0;            // N^-(delta+alpha)
    double exceedance_fraction = 0.0;  // P( sup_i |H_i - E_(-i) H_i| >= threshold )
    double median_sup_dev = 0.0;
    double mean_sup_dev = 0.0;
};

// Tabulated convolution (h * u)(z), clamped linear interpolation.
struct LlnConvTable {
    double z_lo = 0.0;
    double dz = 1.0;
    std::vector<double> values;

    double operator()(double z) const {
        const double u = (z - z_lo) / dz;
        if (u <= 0.0) return values.front();
        const std::size_t last = values.size() - 1;
        if (u >= static_cast<double>(last)) return values.back();
        const std::size_t j = static_cast<std::size_t>(u);
        const double w = u - static_cast<double>(j);
        return values[j] + w * (values[j + 1] - values[j]);
    }
};

LlnConvTable build_conv_table(const std::function<double(double)>& h,
                              const InitialDensity& sampler, int quad_points, int table_points);

// Per replicate draws Z^1..Z^N i.i.d. from `sampler`, forms
// H_i = (1/N) sum_{j != i} h(Z^i - Z^j) and its conditional expectation
// ((N-1)/N) (h * u)(Z^i) by quadrature against the sampler density, and
// reports how often the worst particle deviates by at least N^-(delta+alpha).
template <typename H>
LlnResult lln_exceedance(const H& h, const InitialDensity& sampler, int n, double alpha,
                         double delta, int reps, const SeedSpec& seed,
                         const LlnOptions& options = {}) {
    if (!(alpha > 0.0 && delta > 0.0 && delta + alpha < 0.5))
        throw ConfigError("lln: need alpha, delta > 0 with delta + alpha < 1/2");
    if (n < 1) throw ConfigError("lln: N must be >= 1");
    if (reps < 1) throw ConfigError("lln: reps must be >= 1");

    const LlnConvTable table = build_conv_table(
        [&h](double x) { return h(x); }, sampler, options.conv_quad_points,
        options.conv_table_points);

    const double threshold = std::pow(static_cast<double>(n), -(delta + alpha));
    const double self = h(0.0);
    const double cond_scale = static_cast<double>(n - 1) / n;

    std::vector<double> sups(reps, 0.0);
    auto worker_body = [&](int rep, std::vector<double>& z, std::vector<double>& buf) {
        RngStream stream(
            SeedSpec{seed.master_seed, seed.replicate_id + static_cast<std::uint64_t>(rep),
                     seed.particle_id});
        for (int i = 0; i < n; ++i) z[i] = sampler.quantile(stream.uniform01());
        const double* zd = z.data();
        double* bd = buf.data();
        double sup = 0.0;
        for (int i = 0; i < n; ++i) {
            const double zi = zd[i];
            for (int j = 0; j < n; ++j) bd[j] = h(zi - zd[j]);
            double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
            int j = 0;
            for (; j + 4 <= n; j += 4) {
                s0 += bd[j];
                s1 += bd[j + 1];
                s2 += bd[j + 2];
                s3 += bd[j + 3];
            }
            double sum = (s0 + s1) + (s2 + s3);
            for (; j < n; ++j) sum += bd[j];
            const double h_mean = (sum - self) / n;
            const double dev = std::abs(h_mean - cond_scale * table(zi));
            sup = std::max(sup, dev);
        }
        sups[rep] = sup;
    };

    const int workers = std::max(1, std::min(options.threads, reps));
    if (workers == 1) {
        std::vector<double> z(n), buf(n);
        for (int rep = 0; rep < reps; ++rep) worker_body(rep, z, buf);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                std::vector<double> z(n), buf(n);
                for (int rep = next.fetch_add(1); rep < reps; rep = next.fetch_add(1))
                    worker_body(rep, z, buf);
            });
        for (auto& th : pool) th.join();
    }

    LlnResult out;
    out.n = n;
    out.reps = reps;
    out.threshold = threshold;
    long long exceed = 0;
    double mean = 0.0;
    for (double s : sups) {
        if (s >= threshold) ++exceed;
        mean += s;
    }
    out.exceedance_fraction = static_cast<double>(exceed) / reps;
    out.mean_sup_dev = mean / reps;
    std::sort(sups.begin(), sups.end());
    out.median_sup_dev = (reps % 2 == 1) ? sups[reps / 2]
                                         : 0.5 * (sups[reps / 2 - 1] + sups[reps / 2]);
    return out;
}

struct ChaosSetResult {
    bool in_b1 = false;  // pairwise force within N^-(delta+alpha) of the mean-field force
    bool in_b2 = false;  // pairwise envelope within 1 of the averaged envelope
    double k_gap = 0.0;
    double l_gap = 0.0;
    double k_threshold = 0.0;
};

// Tests the mean-field companions Y (drawn at time t) against the PDE snapshot.
ChaosSetResult chaos_sets(std::span<const double> y, const RegularizedKernel& rk,
                          const LipschitzEnvelope& env, const PdeSolution& sol, double t,
                          double alpha, double delta);

// W1 between equal-size samples: mean absolute gap of sorted order statistics
// (the exact optimal coupling in 1D).
double wasserstein1_sorted(std::vector<double> sample_a, std::vector<double> sample_b);

// W1 between a sample and a gridded density: integral of the CDF gap,
// exact for the empirical-step / piecewise-linear pair.
double wasserstein1_vs_density(std::vector<double> sample, const GridDensity& rho);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    int used_points = 0;
    int censored_points = 0;  // statistic <= 0, excluded from the log fit
};

// Ordinary least squares of log(statistic) on log(N). Censored points are
// dropped; fewer than 3 usable points is a DegenerateFit.
RateFit fit_rate(const std::vector<std::pair<double, double>>& points);

}  // namespace chaoslab
