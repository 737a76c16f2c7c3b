#pragma once

#include <functional>
#include <vector>

#include "chaoslab/density.hpp"
#include "chaoslab/kernels.hpp"

namespace chaoslab {

struct PdeDiagnostics {
    double mass = 0.0;
    double abs_moment = 0.0;
    double l2 = 0.0;
    double l4 = 0.0;
    double l8 = 0.0;
    double linf = 0.0;
};

struct PdeSnapshot {
    double t = 0.0;
    std::vector<double> rho;
    std::vector<double> drift;  // b_j = -(k_eps * rho)(x_j), midpoint quadrature
    PdeDiagnostics diag;
};

struct PdeParams {
    Grid1D grid;
    double sigma = 0.5;
    double dt = 1e-3;
    double t_end = 1.0;
    int save_every = 1;
    double tol_boundary = 1e-6;  // max admissible boundary-cell density
    double tol_mass = 1e-8;
    int fft_threshold = 2048;  // convolution switches to the FFT path at this m
};

// Time-indexed solution of
//   d/dt rho = (sigma^2/2) rho_xx + ((k_eps * rho) rho)_x
// on [x_min, x_max] with zero-flux boundaries. Immutable after solve;
// safe to share across threads.
class PdeSolution {
public:
    PdeSolution(Grid1D grid, double sigma, double eps) : grid_(grid), sigma_(sigma), eps_(eps) {}

    const Grid1D& grid() const { return grid_; }
    double sigma() const { return sigma_; }
    double eps() const { return eps_; }
    const std::vector<PdeSnapshot>& snapshots() const { return snapshots_; }
    const PdeSnapshot& front() const { return snapshots_.front(); }
    const PdeSnapshot& back() const { return snapshots_.back(); }

    // Bracketing snapshot pair for time t (clamped to the covered range).
    struct TimeBracket {
        int a, b;
        double w;  // weight of snapshot b
    };
    TimeBracket bracket(double t) const;

    // Drift b(t, x), piecewise linear in t across snapshots and in x across
    // cell centers (clamped at the ends).
    double drift_at(double t, double x) const;

    // Density rho(t, x) with the same interpolation rule.
    double density_at(double t, double x) const;

    void append(PdeSnapshot snap) { snapshots_.push_back(std::move(snap)); }

private:
    Grid1D grid_;
    double sigma_;
    double eps_;
    std::vector<PdeSnapshot> snapshots_;
};

// b_j = -dx * sum_m k_eps(x_j - x_m) rho_m. Direct quadrature below
// fft_threshold cells, FFT convolution at or above it.
std::vector<double> drift_field(const RegularizedKernel& rk, const GridDensity& rho,
                                int fft_threshold = 2048);
std::vector<double> drift_field_direct(const RegularizedKernel& rk, const GridDensity& rho);
std::vector<double> drift_field_fft(const RegularizedKernel& rk, const GridDensity& rho);

// One IMEX step: explicit conservative upwind advection, implicit
// (backward Euler) diffusion with zero-flux boundaries. Requires the
// advective CFL condition dt <= 0.5 dx / max|b|.
GridDensity pde_step(const GridDensity& state, const RegularizedKernel& rk, double sigma,
                     double dt);

PdeSolution solve_pde(const InitialDensity& rho0, const RegularizedKernel& rk,
                      const PdeParams& params);

PdeDiagnostics compute_diagnostics(const GridDensity& rho);

// sup over common snapshot times of |integral (rho_a - rho_b) phi dx|.
double weak_convergence_gap(const PdeSolution& sol_a, const PdeSolution& sol_b,
                            const std::function<double(double)>& phi);

// (l_eps * rho)(x_j) for every cell center, exact for the piecewise-constant
// envelope against the cellwise-constant density.
std::vector<double> envelope_convolution_field(const LipschitzEnvelope& env,
                                               const GridDensity& rho);

// sup over snapshots and cells of (l_eps * rho_t)(x_j).
double sup_envelope_convolution(const LipschitzEnvelope& env, const PdeSolution& sol);

}  // namespace chaoslab
