#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "chaoslab/coupling.hpp"

using namespace chaoslab;

namespace {

const KernelSpec kZero = KernelSpec::bcm(1.0, PolyProfile::zero());
const InitialDensity kGauss = InitialDensity::gaussian(0.0, 1.0);
const Grid1D kGrid(-8.0, 8.0, 256);

PdeSolution quick_solution(const RegularizedKernel& rk, double sigma, double t_end, double dt) {
    PdeParams pp;
    pp.grid = kGrid;
    pp.sigma = sigma;
    pp.dt = dt;
    pp.t_end = t_end;
    pp.save_every = 1;
    return solve_pde(kGauss, rk, pp);
}

}  // namespace

TEST_CASE("euler-maruyama particle updates") {
    SUBCASE("zero kernel reduces to a pure Brownian update") {
        const RegularizedKernel rk(kZero, 0.1);
        CoupledEnsemble ens;
        ens.n = 3;
        ens.x = {0.1, -0.4, 2.0};
        const std::vector<double> db = {0.01, -0.02, 0.005};
        const std::vector<double> before = ens.x;
        em_step_particles(ens, rk, 0.5, 1e-3, db);
        for (int i = 0; i < 3; ++i) CHECK(ens.x[i] == before[i] + 0.5 * db[i]);
    }

    SUBCASE("opposite-side pair attracts at rate 1/2") {
        const RegularizedKernel rk(KernelSpec::uniform(1.0), 0.05);
        CoupledEnsemble ens;
        ens.n = 2;
        ens.x = {-0.2, 0.2};
        const std::vector<double> db = {0.0, 0.0};
        const double dt = 1e-3;
        em_step_particles(ens, rk, 0.5, dt, db);
        // K_1 = -(1/2)(k(0) + k(-0.4)) = -(1/2)(0 - 1) = 1/2
        CHECK(ens.x[0] == doctest::Approx(-0.2 + 0.5 * dt).epsilon(1e-12));
        CHECK(ens.x[1] == doctest::Approx(0.2 - 0.5 * dt).epsilon(1e-12));
    }

    SUBCASE("dt = 0 leaves positions unchanged") {
        const RegularizedKernel rk(KernelSpec::uniform(1.0), 0.05);
        CoupledEnsemble ens;
        ens.n = 2;
        ens.x = {-0.2, 0.2};
        const std::vector<double> db = {0.0, 0.0};
        em_step_particles(ens, rk, 0.5, 0.0, db);
        CHECK(ens.x[0] == -0.2);
        CHECK(ens.x[1] == 0.2);
    }

    SUBCASE("db length mismatch") {
        const RegularizedKernel rk(kZero, 0.1);
        CoupledEnsemble ens;
        ens.n = 2;
        ens.x = {0.0, 1.0};
        const std::vector<double> db = {0.0};
        CHECK_THROWS_AS(em_step_particles(ens, rk, 0.5, 1e-3, db), LengthMismatch);
    }
}

TEST_CASE("mean-field updates read the interpolated drift") {
    const RegularizedKernel rk(KernelSpec::bcm(1.0, PolyProfile::one()), 0.1);
    const PdeSolution sol = quick_solution(rk, 0.5, 0.01, 1e-3);

    SUBCASE("drift at a snapshot time and grid node is exact") {
        const auto& snap = sol.snapshots()[5];
        for (int j : {10, 100, 128, 200}) {
            CHECK(sol.drift_at(snap.t, kGrid.center(j)) == snap.drift[j]);
        }
    }

    SUBCASE("positions leaving the grid are reflected and counted") {
        CoupledEnsemble ens;
        ens.n = 1;
        ens.y = {7.9999};
        ens.x = {7.9999};
        ens.t = 0.0;
        const std::vector<double> db = {10.0};  // absurd kick
        long clamps = 0;
        em_step_meanfield(ens, sol, 1.0, 1e-3, db, &clamps);
        CHECK(clamps == 1);
        CHECK(ens.y[0] <= 8.0);
        CHECK(ens.y[0] >= -8.0);
    }
}

TEST_CASE("coupled runs") {
    SUBCASE("coupling identity: zero kernel keeps X and Y bit-equal") {
        CoupledParams params;
        params.n_particles = 16;
        params.alpha = 0.45;
        params.beta = 0.45;
        params.sigma = 0.5;
        params.t_end = 0.1;
        params.dt = 1e-3;
        const TrajectoryRecord rec = run_coupled(params, kZero, kGauss, kGrid, SeedSpec{3, 0, 0});
        for (double d : rec.sup_dev) CHECK(d == 0.0);
        CHECK(rec.running_sup == 0.0);
        CHECK_FALSE(rec.exceeded);
        CHECK(rec.x_final == rec.y_final);
        CHECK(rec.lambda_used == 0.0);
    }

    SUBCASE("single particle deviation grows at most linearly at rate 2||k||") {
        CoupledParams params;
        params.n_particles = 1;
        params.alpha = 0.25;
        params.beta = 0.25;
        params.eps_scale = 0.3;  // a single particle gives eps = eps_scale
        params.sigma = 0.5;
        params.t_end = 0.5;
        params.dt = 1e-3;
        params.lambda = 0.0;
        const TrajectoryRecord rec =
            run_coupled(params, KernelSpec::bcm(1.0, PolyProfile::one()), kGauss, kGrid,
                        SeedSpec{11, 0, 0});
        CHECK(rec.running_sup <= 2.0 * 1.0 * params.t_end + 1e-9);
        CHECK(rec.running_sup > 0.0);
    }

    SUBCASE("J is nondecreasing, capped, and starts at e^{lambda T} N^{-delta}") {
        CoupledParams params;
        params.n_particles = 32;
        params.alpha = 0.25;
        params.beta = 0.25;
        params.sigma = 0.5;
        params.t_end = 0.2;
        params.dt = 1e-3;
        params.lambda = 0.3;
        const TrajectoryRecord rec =
            run_coupled(params, KernelSpec::bcm(1.0, PolyProfile::one()), kGauss, kGrid,
                        SeedSpec{12, 0, 0});
        CHECK(rec.delta == doctest::Approx(0.125));
        const double j0 = std::exp(0.3 * 0.2) * std::pow(32.0, -0.125);
        CHECK(rec.j_process.front() == doctest::Approx(std::min(1.0, j0)).epsilon(1e-12));
        for (std::size_t s = 1; s < rec.j_process.size(); ++s) {
            CHECK(rec.j_process[s] >= rec.j_process[s - 1]);
            CHECK(rec.j_process[s] <= 1.0);
        }
        CHECK(rec.sup_dev.front() == 0.0);
    }

    SUBCASE("hypothesis violations are rejected") {
        CoupledParams params;
        params.n_particles = 8;
        params.alpha = 0.6;
        CHECK_THROWS_AS(run_coupled(params, kZero, kGauss, kGrid, SeedSpec{1, 0, 0}),
                        ConfigError);
        params.alpha = 0.25;
        params.beta = 0.3;
        CHECK_THROWS_AS(run_coupled(params, kZero, kGauss, kGrid, SeedSpec{1, 0, 0}),
                        ConfigError);
    }

    SUBCASE("relabeling particle streams permutes trajectories") {
        const RegularizedKernel rk(KernelSpec::bcm(1.0, PolyProfile::one()), 0.2);
        const PdeSolution sol = quick_solution(rk, 0.5, 0.05, 1e-3);
        const int n = 4;
        const std::vector<int> perm = {2, 0, 3, 1};

        auto run_with_streams = [&](const std::vector<int>& labels) {
            std::vector<RngStream> streams;
            CoupledEnsemble ens;
            ens.n = n;
            ens.x.resize(n);
            for (int i = 0; i < n; ++i) {
                streams.emplace_back(
                    SeedSpec{99, 0, static_cast<std::uint64_t>(labels[i])});
                ens.x[i] = kGauss.quantile(streams.back().uniform01());
            }
            ens.y = ens.x;
            std::vector<double> db(n);
            for (int step = 0; step < 50; ++step) {
                for (int i = 0; i < n; ++i) db[i] = std::sqrt(1e-3) * streams[i].normal();
                ens.t = step * 1e-3;
                em_step_meanfield(ens, sol, 0.5, 1e-3, db);
                em_step_particles(ens, rk, 0.5, 1e-3, db);
            }
            return ens;
        };

        const CoupledEnsemble base = run_with_streams({0, 1, 2, 3});
        const CoupledEnsemble shuffled = run_with_streams(perm);
        for (int i = 0; i < n; ++i) {
            CHECK(shuffled.x[i] == doctest::Approx(base.x[perm[i]]).epsilon(1e-12));
            CHECK(shuffled.y[i] == doctest::Approx(base.y[perm[i]]).epsilon(1e-12));
        }
    }

    SUBCASE("every applied drift respects the kernel bound") {
        const RegularizedKernel rk(KernelSpec::bcm(1.0, PolyProfile::one()), 0.1);
        const PdeSolution sol = quick_solution(rk, 0.5, 0.05, 1e-3);
        std::vector<double> xs = {-1.5, -0.3, 0.0, 0.2, 0.9, 4.0};
        for (std::size_t i = 0; i < xs.size(); ++i)
            CHECK(std::abs(interaction_force(rk, xs, i)) <=
                  rk.norm_inf_bound() * (1.0 + 1e-12));
        for (double t : {0.0, 0.025, 0.05})
            for (double x = -8.0; x <= 8.0; x += 0.37)
                CHECK(std::abs(sol.drift_at(t, x)) <= rk.norm_inf_bound() * (1.0 + 1e-9));
    }

    SUBCASE("mean-field marginal matches the PDE snapshot law") {
        const RegularizedKernel rk(KernelSpec::bcm(1.0, PolyProfile::one()), 0.2);
        const double t_end = 0.25;
        PdeParams pp;
        pp.grid = kGrid;
        pp.sigma = 0.5;
        pp.dt = 1e-3;
        pp.t_end = t_end;
        pp.save_every = 1;
        const PdeSolution sol = solve_pde(kGauss, rk, pp);

        CoupledParams params;
        params.n_particles = 64;
        params.alpha = 0.25;
        params.beta = 0.25;
        params.sigma = 0.5;
        params.t_end = t_end;
        params.dt = 1e-3;
        params.lambda = 0.0;
        std::vector<double> pooled;
        const int reps = 20;
        for (int rep = 0; rep < reps; ++rep) {
            const TrajectoryRecord rec =
                run_coupled(params, rk, sol, kGauss,
                            SeedSpec{777, static_cast<std::uint64_t>(rep), 0});
            pooled.insert(pooled.end(), rec.y_final.begin(), rec.y_final.end());
        }
        std::sort(pooled.begin(), pooled.end());
        // KS distance between the pooled marginal and the snapshot CDF
        const auto& fin = sol.back();
        std::vector<double> cdf(kGrid.m + 1, 0.0);
        for (int j = 0; j < kGrid.m; ++j) cdf[j + 1] = cdf[j] + fin.rho[j] * kGrid.dx();
        auto f_rho = [&](double x) {
            if (x <= kGrid.x_min) return 0.0;
            if (x >= kGrid.x_max) return cdf[kGrid.m];
            const double u = (x - kGrid.x_min) / kGrid.dx();
            const int j = std::min(static_cast<int>(u), kGrid.m - 1);
            return cdf[j] + (u - j) * (cdf[j + 1] - cdf[j]);
        };
        double ks = 0.0;
        const double n_tot = static_cast<double>(pooled.size());
        for (std::size_t i = 0; i < pooled.size(); ++i) {
            const double f = f_rho(pooled[i]);
            ks = std::max(ks, std::abs(f - static_cast<double>(i) / n_tot));
            ks = std::max(ks, std::abs(f - static_cast<double>(i + 1) / n_tot));
        }
        CHECK(ks <= 2.0 / std::sqrt(n_tot) + 0.02);
    }
}
