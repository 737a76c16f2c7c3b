#include "chaoslab/coupling.hpp"

#include <algorithm>
#include <string>

namespace chaoslab {

void validate(const CoupledParams& params) {
    if (params.n_particles < 1) throw ConfigError("N must be >= 1");
    if (!(params.alpha > 0.0 && params.alpha < 0.5))
        throw ConfigError("alpha must lie in (0, 1/2)");
    if (!(params.beta > 0.0 && params.beta <= params.alpha))
        throw ConfigError("beta must satisfy 0 < beta <= alpha");
    if (!(params.eps_scale > 0.0)) throw ConfigError("eps_scale must be positive");
    if (!(params.sigma > 0.0)) throw ConfigError("sigma must be positive");
    if (!(params.dt > 0.0)) throw ConfigError("dt must be positive");
    if (params.t_end < 0.0) throw ConfigError("T must be nonnegative");
    if (params.save_every < 1) throw ConfigError("save_every must be >= 1");
}

void em_step_particles(CoupledEnsemble& ens, const RegularizedKernel& rk, double sigma, double dt,
                       std::span<const double> db) {
    const int n = ens.n;
    if (static_cast<int>(db.size()) != n)
        throw LengthMismatch("em_step_particles: db size != N");
    std::vector<double> force(n, 0.0);
    if (!rk.is_zero()) {
        const double* xs = ens.x.data();
        std::vector<double> buf(n);
        double* bd = buf.data();
        for (int i = 0; i < n; ++i) {
            const double xi = xs[i];
            for (int j = 0; j < n; ++j) bd[j] = rk(xi - xs[j]);
            // fixed four-lane association keeps the sum deterministic
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
            force[i] = -sum / n;
        }
    }
    for (int i = 0; i < n; ++i) ens.x[i] = ens.x[i] + force[i] * dt + sigma * db[i];
}

void em_step_meanfield(CoupledEnsemble& ens, const PdeSolution& sol, double sigma, double dt,
                       std::span<const double> db, long* clamp_warnings) {
    const int n = ens.n;
    if (static_cast<int>(db.size()) != n)
        throw LengthMismatch("em_step_meanfield: db size != N");
    const double lo = sol.grid().x_min;
    const double hi = sol.grid().x_max;
    for (int i = 0; i < n; ++i) {
        const double drift = sol.drift_at(ens.t, ens.y[i]);
        double y = ens.y[i] + drift * dt + sigma * db[i];
        if (y < lo || y > hi) {
            y = y < lo ? 2.0 * lo - y : 2.0 * hi - y;
            y = std::clamp(y, lo, hi);
            if (clamp_warnings) ++(*clamp_warnings);
        }
        ens.y[i] = y;
    }
}

double resolve_lambda(const CoupledParams& params, const RegularizedKernel& rk,
                      const PdeSolution& sol) {
    if (std::isfinite(params.lambda)) {
        if (params.lambda < 0.0) throw ConfigError("lambda must be nonnegative");
        return params.lambda;
    }
    if (rk.is_zero()) return 0.0;
    const LipschitzEnvelope env = calibrate_envelope(rk, 200000, 0x10c0de);
    return sup_envelope_convolution(env, sol);
}

TrajectoryRecord run_coupled(const CoupledParams& params, const RegularizedKernel& rk,
                             const PdeSolution& sol, const InitialDensity& rho0,
                             const SeedSpec& seed) {
    validate(params);
    if (std::abs(rk.eps() - sol.eps()) > 1e-12)
        throw ConfigError("run_coupled: kernel cutoff does not match the PDE solution");
    if (sol.back().t < params.t_end - 1e-9)
        throw ConfigError("run_coupled: PDE solution does not cover [0, T]");

    const int n = params.n_particles;
    const double steps_real = params.t_end / params.dt;
    const long long nsteps = std::llround(steps_real);
    if (std::abs(steps_real - static_cast<double>(nsteps)) > 1e-9 * std::max(1.0, steps_real))
        throw ConfigError("run_coupled: T must be an integer multiple of dt");

    TrajectoryRecord rec;
    rec.eps = rk.eps();
    rec.threshold = std::pow(static_cast<double>(n), -params.alpha);
    rec.delta = 0.5 * (0.5 - params.alpha);
    rec.lambda_used = resolve_lambda(params, rk, sol);

    const double n_alpha = std::pow(static_cast<double>(n), params.alpha);
    const double n_mdelta = std::pow(static_cast<double>(n), -rec.delta);

    CoupledEnsemble ens;
    ens.n = n;
    ens.eps = rk.eps();
    ens.beta = params.beta;
    ens.x.resize(n);
    std::vector<RngStream> streams;
    streams.reserve(n);
    for (int i = 0; i < n; ++i) {
        streams.emplace_back(SeedSpec{seed.master_seed, seed.replicate_id,
                                      static_cast<std::uint64_t>(i)});
        ens.x[i] = rho0.quantile(streams.back().uniform01());
    }
    ens.y = ens.x;
    ens.t = 0.0;

    double j_running = 0.0;
    auto dev_now = [&ens]() {
        double d = 0.0;
        for (int i = 0; i < ens.n; ++i) d = std::max(d, std::abs(ens.x[i] - ens.y[i]));
        return d;
    };
    auto update_j = [&](double t, double dev) {
        const double g =
            std::exp(rec.lambda_used * (params.t_end - t)) * (n_alpha * dev + n_mdelta);
        j_running = std::max(j_running, g);
        return std::min(1.0, j_running);
    };
    auto record = [&](double t, double dev, double j) {
        rec.times.push_back(t);
        rec.sup_dev.push_back(dev);
        rec.j_process.push_back(j);
    };

    record(0.0, 0.0, update_j(0.0, 0.0));

    std::vector<double> db(n);
    const double sd = std::sqrt(params.dt);
    for (long long step = 0; step < nsteps; ++step) {
        for (int i = 0; i < n; ++i) db[i] = sd * streams[i].normal();
        ens.t = static_cast<double>(step) * params.dt;
        em_step_meanfield(ens, sol, params.sigma, params.dt, db, &rec.clamp_warnings);
        em_step_particles(ens, rk, params.sigma, params.dt, db);
        ens.t = static_cast<double>(step + 1) * params.dt;

        const double dev = dev_now();
        rec.running_sup = std::max(rec.running_sup, dev);
        const double j = update_j(ens.t, dev);
        if ((step + 1) % params.save_every == 0 || step + 1 == nsteps)
            record(ens.t, dev, j);
    }
    rec.exceeded = rec.running_sup >= rec.threshold;
    rec.x_final = std::move(ens.x);
    rec.y_final = std::move(ens.y);
    return rec;
}

TrajectoryRecord run_coupled(const CoupledParams& params, const KernelSpec& kernel,
                             const InitialDensity& rho0, const Grid1D& grid,
                             const SeedSpec& seed) {
    validate(params);
    const double eps =
        params.eps_scale * std::pow(static_cast<double>(params.n_particles), -params.beta);
    RegularizedKernel rk(kernel, eps);
    PdeParams pp;
    pp.grid = grid;
    pp.sigma = params.sigma;
    pp.dt = params.dt;
    pp.t_end = params.t_end;
    pp.save_every = 1;  // dense snapshots, the coupled drift interpolates in t
    const PdeSolution sol = solve_pde(rho0, rk, pp);
    return run_coupled(params, rk, sol, rho0, seed);
}

}  // namespace chaoslab
