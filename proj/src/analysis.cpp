#include "chaoslab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace chaoslab {

LlnConvTable build_conv_table(const std::function<double(double)>& h,
                              const InitialDensity& sampler, int quad_points, int table_points) {
    if (quad_points < 16 || table_points < 16)
        throw ConfigError("lln: quadrature/table resolution too small");
    const double q_lo = sampler.quantile(1e-12);
    const double q_hi = sampler.quantile(1.0 - 1e-12);

    LlnConvTable table;
    table.z_lo = q_lo - 1.0;
    const double z_hi = q_hi + 1.0;
    table.dz = (z_hi - table.z_lo) / (table_points - 1);
    table.values.resize(table_points);

    const double dy = (q_hi - q_lo) / quad_points;
    std::vector<double> ys(quad_points), ws(quad_points);
    for (int q = 0; q < quad_points; ++q) {
        ys[q] = q_lo + (q + 0.5) * dy;
        ws[q] = sampler.pdf(ys[q]) * dy;
    }
    for (int i = 0; i < table_points; ++i) {
        const double z = table.z_lo + i * table.dz;
        double acc = 0.0;
        for (int q = 0; q < quad_points; ++q) acc += h(z - ys[q]) * ws[q];
        table.values[i] = acc;
    }
    return table;
}

ChaosSetResult chaos_sets(std::span<const double> y, const RegularizedKernel& rk,
                          const LipschitzEnvelope& env, const PdeSolution& sol, double t,
                          double alpha, double delta) {
    if (y.empty()) throw ConfigError("chaos_sets: empty ensemble");
    if (t < sol.front().t - 1e-9 || t > sol.back().t + 1e-9)
        throw GridMismatch("chaos_sets: time not covered by the PDE solution");

    const auto n = static_cast<double>(y.size());
    ChaosSetResult out;
    out.k_threshold = std::pow(n, -(delta + alpha));

    for (std::size_t i = 0; i < y.size(); ++i) {
        const double ki = interaction_force(rk, y, i);
        const double kbar = sol.drift_at(t, y[i]);  // drift already carries the minus sign
        out.k_gap = std::max(out.k_gap, std::abs(ki - kbar));
    }

    // Averaged envelope from the bracketing snapshots (linear in t).
    const auto br = sol.bracket(t);
    GridDensity rho_a{sol.grid(), sol.snapshots()[br.a].rho, sol.snapshots()[br.a].t};
    const auto field_a = envelope_convolution_field(env, rho_a);
    std::vector<double> field(field_a);
    if (br.b != br.a) {
        GridDensity rho_b{sol.grid(), sol.snapshots()[br.b].rho, sol.snapshots()[br.b].t};
        const auto field_b = envelope_convolution_field(env, rho_b);
        for (std::size_t j = 0; j < field.size(); ++j)
            field[j] = field_a[j] + br.w * (field_b[j] - field_a[j]);
    }
    const Grid1D& grid = sol.grid();
    auto interp = [&](double x) {
        const double u = (x - grid.x_min) / grid.dx() - 0.5;
        int j = static_cast<int>(std::floor(u));
        double w = u - j;
        if (j < 0) {
            j = 0;
            w = 0.0;
        } else if (j >= grid.m - 1) {
            j = grid.m - 2;
            w = 1.0;
        }
        return field[j] + w * (field[j + 1] - field[j]);
    };
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double li = envelope_force(env, y, i);
        out.l_gap = std::max(out.l_gap, std::abs(li - interp(y[i])));
    }

    out.in_b1 = out.k_gap <= out.k_threshold;
    out.in_b2 = out.l_gap <= 1.0;
    return out;
}

double wasserstein1_sorted(std::vector<double> sample_a, std::vector<double> sample_b) {
    if (sample_a.size() != sample_b.size())
        throw LengthMismatch("wasserstein1_sorted: sample sizes differ");
    if (sample_a.empty()) throw LengthMismatch("wasserstein1_sorted: empty samples");
    std::sort(sample_a.begin(), sample_a.end());
    std::sort(sample_b.begin(), sample_b.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < sample_a.size(); ++i) acc += std::abs(sample_a[i] - sample_b[i]);
    return acc / static_cast<double>(sample_a.size());
}

double wasserstein1_vs_density(std::vector<double> sample, const GridDensity& rho) {
    if (sample.empty()) throw LengthMismatch("wasserstein1_vs_density: empty sample");
    const Grid1D& grid = rho.grid;
    for (double s : sample)
        if (s < grid.x_min - 1e-12 || s > grid.x_max + 1e-12)
            throw OutOfDomain("wasserstein1_vs_density: sample outside the grid domain");
    std::sort(sample.begin(), sample.end());

    const double dx = grid.dx();
    std::vector<double> cdf(grid.m + 1, 0.0);
    for (int j = 0; j < grid.m; ++j) cdf[j + 1] = cdf[j] + rho.values[j] * dx;
    auto f_rho = [&](double x) {
        if (x <= grid.x_min) return 0.0;
        if (x >= grid.x_max) return cdf[grid.m];
        const double u = (x - grid.x_min) / dx;
        const int j = std::min(static_cast<int>(u), grid.m - 1);
        return cdf[j] + (u - j) * (cdf[j + 1] - cdf[j]);
    };

    // Breakpoints: cell edges plus sample points; on each segment the
    // empirical CDF is constant and the density CDF is linear, so the
    // integral of |gap| is exact with a zero-crossing split.
    std::vector<double> brk;
    brk.reserve(grid.m + 1 + sample.size());
    for (int j = 0; j <= grid.m; ++j) brk.push_back(grid.edge(j));
    for (double s : sample) brk.push_back(std::clamp(s, grid.x_min, grid.x_max));
    std::sort(brk.begin(), brk.end());

    const double inv_n = 1.0 / static_cast<double>(sample.size());
    double total = 0.0;
    std::size_t count = 0;  // samples <= current position
    for (std::size_t b = 0; b + 1 < brk.size(); ++b) {
        const double u = brk[b], v = brk[b + 1];
        while (count < sample.size() && sample[count] <= u) ++count;
        if (v <= u) continue;
        const double femp = static_cast<double>(count) * inv_n;
        const double a = f_rho(u) - femp;
        const double c = f_rho(v) - femp;
        if (a * c >= 0.0) {
            total += 0.5 * (std::abs(a) + std::abs(c)) * (v - u);
        } else {
            const double ca = std::abs(a), cc = std::abs(c);
            total += 0.5 * (ca * ca + cc * cc) / (ca + cc) * (v - u);
        }
    }
    return total;
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& points) {
    RateFit fit;
    std::vector<std::pair<double, double>> logs;
    for (const auto& [n, stat] : points) {
        if (stat > 0.0 && n > 0.0)
            logs.emplace_back(std::log(n), std::log(stat));
        else
            ++fit.censored_points;
    }
    if (logs.size() < 3)
        throw DegenerateFit("fit_rate: need at least 3 positive points, have " +
                            std::to_string(logs.size()));
    const double m = static_cast<double>(logs.size());
    double sx = 0.0, sy = 0.0;
    for (const auto& [x, y] : logs) {
        sx += x;
        sy += y;
    }
    const double mx = sx / m, my = sy / m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, y] : logs) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if (sxx <= 0.0) throw DegenerateFit("fit_rate: all N values coincide");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.used_points = static_cast<int>(logs.size());
    if (syy <= 1e-30) {
        fit.r_squared = 1.0;
    } else {
        double ss_res = 0.0;
        for (const auto& [x, y] : logs) {
            const double e = y - (fit.intercept + fit.slope * x);
            ss_res += e * e;
        }
        fit.r_squared = 1.0 - ss_res / syy;
    }
    return fit;
}

}  // namespace chaoslab
