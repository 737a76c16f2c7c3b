#include <doctest.h>

#include <cmath>

#include "chaoslab/experiments.hpp"

using namespace chaoslab;

namespace {

SweepConfig tiny_sweep() {
    SweepConfig cfg;
    cfg.n_list = {16, 32};
    cfg.alpha = 0.45;
    cfg.beta = 0.45;
    cfg.sigma = 0.5;
    cfg.t_end = 0.2;
    cfg.dt = 2e-3;
    cfg.reps = 30;
    cfg.kernel = KernelSpec::bcm(1.0, PolyProfile::one());
    cfg.rho0 = InitialDensity::gaussian(0.0, 1.0);
    cfg.grid = Grid1D(-8.0, 8.0, 128);
    cfg.master_seed = 77;
    cfg.lambda = 0.1;
    cfg.threads = 2;
    return cfg;
}

bool rows_equal(const SweepRow& a, const SweepRow& b) {
    return a.n == b.n && a.eps == b.eps && a.reps == b.reps &&
           a.exceedance_fraction == b.exceedance_fraction &&
           a.median_sup_dev == b.median_sup_dev && a.mean_j_t == b.mean_j_t &&
           a.w1_final == b.w1_final && a.lambda_used == b.lambda_used;
}

}  // namespace

TEST_CASE("sweep validation") {
    SweepConfig cfg = tiny_sweep();
    cfg.reps = 10;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = tiny_sweep();
    cfg.n_list = {32, 16};
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = tiny_sweep();
    cfg.alpha = 0.5;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
}

TEST_CASE("tiny sweep runs, resumes, and reproduces itself") {
    const SweepConfig cfg = tiny_sweep();
    int rows_seen = 0;
    const SweepResult first = run_sweep(cfg, [&rows_seen](const SweepRow&) { ++rows_seen; });
    CHECK(rows_seen == 2);
    REQUIRE(first.rows.size() == 2);
    for (const auto& row : first.rows) {
        CHECK(row.reps == 30);
        CHECK(row.exceedance_fraction >= 0.0);
        CHECK(row.exceedance_fraction <= 1.0);
        CHECK(row.median_sup_dev > 0.0);
        CHECK(row.w1_final > 0.0);
        CHECK(row.mean_j_t <= 1.0);
        CHECK(row.eps == doctest::Approx(std::pow(row.n, -0.45)));
    }
    CHECK(first.median_dev_fit.has_value() == false);  // only 2 points
    CHECK(first.rows[1].median_sup_dev < first.rows[0].median_sup_dev * 2.0);

    SUBCASE("bit-identical rerun, independent of thread count") {
        SweepConfig cfg1 = cfg;
        cfg1.threads = 1;
        const SweepResult again = run_sweep(cfg1);
        REQUIRE(again.rows.size() == 2);
        for (int i = 0; i < 2; ++i) CHECK(rows_equal(first.rows[i], again.rows[i]));
    }

    SUBCASE("resume skips completed stages") {
        std::vector<SweepRow> done = {first.rows[0]};
        int fresh = 0;
        const SweepResult resumed = run_sweep(cfg, [&fresh](const SweepRow&) { ++fresh; }, done);
        CHECK(fresh == 2);  // resumed rows still flow through the callback
        CHECK(rows_equal(resumed.rows[0], first.rows[0]));
        CHECK(rows_equal(resumed.rows[1], first.rows[1]));
    }
}

TEST_CASE("zero-kernel sweep censors every fit") {
    SweepConfig cfg = tiny_sweep();
    cfg.kernel = KernelSpec::bcm(1.0, PolyProfile::zero());
    const SweepResult result = run_sweep(cfg);
    for (const auto& row : result.rows) {
        CHECK(row.exceedance_fraction == 0.0);
        CHECK(row.median_sup_dev == 0.0);
        CHECK(row.lambda_used == 0.1);
    }
    CHECK_FALSE(result.exceedance_fit.has_value());
    CHECK_FALSE(result.median_dev_fit.has_value());
    CHECK(result.exceedance_censored == 2);
}
