#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "chaoslab/analysis.hpp"
#include "chaoslab/coupling.hpp"

namespace chaoslab {

// Grid over particle counts for the coupled convergence experiment. One PDE
// solve per N (the mean-field law is deterministic), `reps` coupled
// replicates on top of it.
struct SweepConfig {
    std::vector<int> n_list = {64, 128, 256, 512};
    double alpha = 0.25;
    double beta = 0.25;
    double eps_scale = 1.0;
    double sigma = 0.5;
    double t_end = 1.0;
    double dt = 1e-3;
    int reps = 200;
    KernelSpec kernel;
    InitialDensity rho0;
    std::uint64_t master_seed = 0;
    Grid1D grid{-8.0, 8.0, 512};
    double lambda = std::numeric_limits<double>::quiet_NaN();  // NaN = calibrated per N
    int threads = 1;
};

struct SweepRow {
    int n = 0;
    double eps = 0.0;
    int reps = 0;
    double exceedance_fraction = 0.0;
    double median_sup_dev = 0.0;
    double mean_j_t = 0.0;
    double w1_final = 0.0;
    double lambda_used = 0.0;
    double wall_time_s = 0.0;  // recorded in the manifest, not the result CSV
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::optional<RateFit> exceedance_fit;   // absent when censoring leaves < 3 rows
    std::optional<RateFit> median_dev_fit;
    int exceedance_censored = 0;
    int median_censored = 0;
};

void validate(const SweepConfig& cfg);

// `on_row` fires after every finished N stage (resumed rows included), in
// order, so partial results can be flushed. `resume_rows` supplies already
// completed rows keyed by N; matching stages are not recomputed.
SweepResult run_sweep(const SweepConfig& cfg,
                      const std::function<void(const SweepRow&)>& on_row = {},
                      const std::vector<SweepRow>& resume_rows = {});

}  // namespace chaoslab
