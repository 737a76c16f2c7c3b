#include "chaoslab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

namespace chaoslab {

void validate(const SweepConfig& cfg) {
    if (cfg.n_list.empty()) throw ConfigError("N_list must not be empty");
    for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
        if (cfg.n_list[i] < 1) throw ConfigError("N_list entries must be >= 1");
        if (i > 0 && cfg.n_list[i] <= cfg.n_list[i - 1])
            throw ConfigError("N_list must be strictly increasing");
    }
    if (cfg.reps < 30) throw ConfigError("reps must be >= 30");
    CoupledParams probe;
    probe.n_particles = cfg.n_list.front();
    probe.alpha = cfg.alpha;
    probe.beta = cfg.beta;
    probe.eps_scale = cfg.eps_scale;
    probe.sigma = cfg.sigma;
    probe.t_end = cfg.t_end;
    probe.dt = cfg.dt;
    validate(probe);
}

SweepResult run_sweep(const SweepConfig& cfg, const std::function<void(const SweepRow&)>& on_row,
                      const std::vector<SweepRow>& resume_rows) {
    validate(cfg);
    SweepResult result;

    for (int n : cfg.n_list) {
        const auto resumed =
            std::find_if(resume_rows.begin(), resume_rows.end(),
                         [n](const SweepRow& r) { return r.n == n; });
        if (resumed != resume_rows.end()) {
            result.rows.push_back(*resumed);
            if (on_row) on_row(result.rows.back());
            continue;
        }

        const auto t_start = std::chrono::steady_clock::now();
        const double eps = cfg.eps_scale * std::pow(static_cast<double>(n), -cfg.beta);
        const RegularizedKernel rk(cfg.kernel, eps);

        PdeParams pp;
        pp.grid = cfg.grid;
        pp.sigma = cfg.sigma;
        pp.dt = cfg.dt;
        pp.t_end = cfg.t_end;
        pp.save_every = 1;
        const PdeSolution sol = solve_pde(cfg.rho0, rk, pp);

        CoupledParams params;
        params.n_particles = n;
        params.alpha = cfg.alpha;
        params.beta = cfg.beta;
        params.eps_scale = cfg.eps_scale;
        params.sigma = cfg.sigma;
        params.t_end = cfg.t_end;
        params.dt = cfg.dt;
        params.lambda = cfg.lambda;
        params.save_every =
            static_cast<int>(std::max<long long>(1, std::llround(cfg.t_end / cfg.dt)));
        params.lambda = resolve_lambda(params, rk, sol);

        std::vector<double> sups(cfg.reps), j_final(cfg.reps);
        std::vector<char> exceeded(cfg.reps, 0);
        std::vector<double> pooled_x(static_cast<std::size_t>(cfg.reps) * n);

        auto replicate = [&](int rep) {
            const SeedSpec seed{cfg.master_seed, static_cast<std::uint64_t>(rep), 0};
            TrajectoryRecord rec = run_coupled(params, rk, sol, cfg.rho0, seed);
            sups[rep] = rec.running_sup;
            j_final[rep] = rec.j_process.back();
            exceeded[rep] = rec.exceeded ? 1 : 0;
            std::copy(rec.x_final.begin(), rec.x_final.end(),
                      pooled_x.begin() + static_cast<std::size_t>(rep) * n);
        };

        const int workers = std::max(1, std::min(cfg.threads, cfg.reps));
        if (workers == 1) {
            for (int rep = 0; rep < cfg.reps; ++rep) replicate(rep);
        } else {
            std::atomic<int> next{0};
            std::vector<std::thread> pool;
            pool.reserve(workers);
            for (int w = 0; w < workers; ++w)
                pool.emplace_back([&] {
                    for (int rep = next.fetch_add(1); rep < cfg.reps; rep = next.fetch_add(1))
                        replicate(rep);
                });
            for (auto& th : pool) th.join();
        }

        SweepRow row;
        row.n = n;
        row.eps = eps;
        row.reps = cfg.reps;
        row.lambda_used = params.lambda;
        long long exc = 0;
        double jsum = 0.0;
        for (int rep = 0; rep < cfg.reps; ++rep) {
            exc += exceeded[rep];
            jsum += j_final[rep];
        }
        row.exceedance_fraction = static_cast<double>(exc) / cfg.reps;
        row.mean_j_t = jsum / cfg.reps;
        std::vector<double> sorted = sups;
        std::sort(sorted.begin(), sorted.end());
        row.median_sup_dev = (cfg.reps % 2 == 1)
                                 ? sorted[cfg.reps / 2]
                                 : 0.5 * (sorted[cfg.reps / 2 - 1] + sorted[cfg.reps / 2]);

        for (double& x : pooled_x) x = std::clamp(x, cfg.grid.x_min, cfg.grid.x_max);
        GridDensity rho_t{sol.grid(), sol.back().rho, sol.back().t};
        row.w1_final = wasserstein1_vs_density(pooled_x, rho_t);

        row.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        result.rows.push_back(row);
        if (on_row) on_row(row);
    }

    std::vector<std::pair<double, double>> exc_pts, med_pts;
    for (const auto& r : result.rows) {
        exc_pts.emplace_back(r.n, r.exceedance_fraction);
        med_pts.emplace_back(r.n, r.median_sup_dev);
    }
    try {
        result.exceedance_fit = fit_rate(exc_pts);
        result.exceedance_censored = result.exceedance_fit->censored_points;
    } catch (const DegenerateFit&) {
        result.exceedance_fit.reset();
        for (const auto& [n, s] : exc_pts)
            if (s <= 0.0) ++result.exceedance_censored;
    }
    try {
        result.median_dev_fit = fit_rate(med_pts);
        result.median_censored = result.median_dev_fit->censored_points;
    } catch (const DegenerateFit&) {
        result.median_dev_fit.reset();
        for (const auto& [n, s] : med_pts)
            if (s <= 0.0) ++result.median_censored;
    }
    return result;
}

}  // namespace chaoslab
