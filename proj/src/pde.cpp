#include "chaoslab/pde.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <string>

namespace chaoslab {

namespace {

// Kernel samples K[i] = k_eps((i - (m-1)) * dx) for offsets -(m-1)..(m-1).
std::vector<double> kernel_samples(const RegularizedKernel& rk, const Grid1D& grid) {
    const int m = grid.m;
    const double dx = grid.dx();
    std::vector<double> k(2 * m - 1);
    for (int i = 0; i < 2 * m - 1; ++i) k[i] = rk((i - (m - 1)) * dx);
    return k;
}

std::mutex fftw_plan_mutex;

int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace

std::vector<double> drift_field_direct(const RegularizedKernel& rk, const GridDensity& rho) {
    const int m = rho.grid.m;
    std::vector<double> b(m, 0.0);
    if (rk.is_zero()) return b;
    const std::vector<double> k = kernel_samples(rk, rho.grid);
    const double dx = rho.grid.dx();
    const double* kc = k.data() + (m - 1);  // kc[d] = k_eps(d * dx)
    for (int j = 0; j < m; ++j) {
        double sum = 0.0;
        for (int l = 0; l < m; ++l) sum += kc[j - l] * rho.values[l];
        b[j] = -dx * sum;
    }
    return b;
}

std::vector<double> drift_field_fft(const RegularizedKernel& rk, const GridDensity& rho) {
    const int m = rho.grid.m;
    std::vector<double> b(m, 0.0);
    if (rk.is_zero()) return b;
    const std::vector<double> k = kernel_samples(rk, rho.grid);
    const double dx = rho.grid.dx();

    const int p = next_pow2(2 * m);
    const int pc = p / 2 + 1;
    double* ka = fftw_alloc_real(p);
    double* ra = fftw_alloc_real(p);
    fftw_complex* kf = fftw_alloc_complex(pc);
    fftw_complex* rf = fftw_alloc_complex(pc);
    std::memset(ka, 0, sizeof(double) * p);
    std::memset(ra, 0, sizeof(double) * p);
    std::copy(k.begin(), k.end(), ka);
    std::copy(rho.values.begin(), rho.values.end(), ra);

    fftw_plan fwd_k, fwd_r, bwd;
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex);
        fwd_k = fftw_plan_dft_r2c_1d(p, ka, kf, FFTW_ESTIMATE);
        fwd_r = fftw_plan_dft_r2c_1d(p, ra, rf, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_c2r_1d(p, kf, ka, FFTW_ESTIMATE);
    }
    fftw_execute(fwd_k);
    fftw_execute(fwd_r);
    for (int i = 0; i < pc; ++i) {
        const double re = kf[i][0] * rf[i][0] - kf[i][1] * rf[i][1];
        const double im = kf[i][0] * rf[i][1] + kf[i][1] * rf[i][0];
        kf[i][0] = re;
        kf[i][1] = im;
    }
    fftw_execute(bwd);
    const double scale = dx / p;
    for (int j = 0; j < m; ++j) b[j] = -scale * ka[j + m - 1];

    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex);
        fftw_destroy_plan(fwd_k);
        fftw_destroy_plan(fwd_r);
        fftw_destroy_plan(bwd);
    }
    fftw_free(ka);
    fftw_free(ra);
    fftw_free(kf);
    fftw_free(rf);
    return b;
}

std::vector<double> drift_field(const RegularizedKernel& rk, const GridDensity& rho,
                                int fft_threshold) {
    if (rho.grid.m >= fft_threshold) return drift_field_fft(rk, rho);
    return drift_field_direct(rk, rho);
}

namespace {

// Advances rho one step in place using the precomputed drift field.
void advance(GridDensity& rho, const std::vector<double>& b, double sigma, double dt) {
    if (dt < 0.0) throw ConfigError("pde step: dt must be nonnegative");
    if (dt == 0.0) return;
    const int m = rho.grid.m;
    const double dx = rho.grid.dx();

    double max_b = 0.0;
    for (double v : b) max_b = std::max(max_b, std::abs(v));
    if (max_b * dt > 0.5 * dx)
        throw CflViolation("advective CFL violated: dt = " + std::to_string(dt) +
                           " exceeds 0.5*dx/max|b| = " + std::to_string(0.5 * dx / max_b));

    // Explicit conservative upwind advection, zero flux through the walls.
    std::vector<double>& rv = rho.values;
    std::vector<double> flux(m - 1);
    for (int j = 0; j + 1 < m; ++j) {
        const double v = 0.5 * (b[j] + b[j + 1]);
        flux[j] = v > 0.0 ? v * rv[j] : v * rv[j + 1];
    }
    const double lam = dt / dx;
    std::vector<double> star(m);
    for (int j = 0; j < m; ++j) {
        const double fr = (j + 1 < m) ? flux[j] : 0.0;
        const double fl = (j > 0) ? flux[j - 1] : 0.0;
        star[j] = rv[j] - lam * (fr - fl);
    }

    if (sigma > 0.0) {
        // Backward-Euler diffusion: (I - r L) rho' = star, Neumann Laplacian.
        const double r = 0.5 * sigma * sigma * dt / (dx * dx);
        std::vector<double> c_prime(m), d_prime(m);
        double beta = 1.0 + r;  // first row diagonal
        c_prime[0] = -r / beta;
        d_prime[0] = star[0] / beta;
        for (int j = 1; j < m; ++j) {
            const double diag = (j + 1 < m) ? 1.0 + 2.0 * r : 1.0 + r;
            beta = diag + r * c_prime[j - 1];
            if (std::abs(beta) < 1e-300)
                throw NumericalError("tridiagonal solve degenerated");
            c_prime[j] = -r / beta;
            d_prime[j] = (star[j] + r * d_prime[j - 1]) / beta;
        }
        rv[m - 1] = d_prime[m - 1];
        for (int j = m - 2; j >= 0; --j) rv[j] = d_prime[j] - c_prime[j] * rv[j + 1];
    } else {
        rv = std::move(star);
    }
    rho.t += dt;
}

}  // namespace

GridDensity pde_step(const GridDensity& state, const RegularizedKernel& rk, double sigma,
                     double dt) {
    GridDensity out = state;
    const std::vector<double> b = drift_field(rk, state);
    advance(out, b, sigma, dt);
    return out;
}

PdeDiagnostics compute_diagnostics(const GridDensity& rho) {
    PdeDiagnostics d;
    const double dx = rho.grid.dx();
    double s1 = 0.0, sx = 0.0, s2 = 0.0, s4 = 0.0, s8 = 0.0, mx = 0.0;
    for (int j = 0; j < rho.grid.m; ++j) {
        const double v = rho.values[j];
        s1 += v;
        sx += std::abs(rho.grid.center(j)) * v;
        const double v2 = v * v;
        s2 += v2;
        s4 += v2 * v2;
        s8 += v2 * v2 * v2 * v2;
        mx = std::max(mx, v);
    }
    d.mass = dx * s1;
    d.abs_moment = dx * sx;
    d.l2 = std::sqrt(dx * s2);
    d.l4 = std::pow(dx * s4, 0.25);
    d.l8 = std::pow(dx * s8, 0.125);
    d.linf = mx;
    return d;
}

namespace {

void check_invariants(const GridDensity& rho, const PdeParams& params) {
    const double mass = rho.mass();
    if (std::abs(mass - 1.0) > params.tol_mass)
        throw NumericalError("mass drifted to " + std::to_string(mass) + " at t = " +
                             std::to_string(rho.t));
    if (rho.min_value() < -1e-14)
        throw NumericalError("density went negative (" + std::to_string(rho.min_value()) +
                             ") at t = " + std::to_string(rho.t));
}

}  // namespace

PdeSolution solve_pde(const InitialDensity& rho0, const RegularizedKernel& rk,
                      const PdeParams& params) {
    if (params.t_end < 0.0) throw ConfigError("solve_pde: T must be nonnegative");
    if (!(params.dt > 0.0)) throw ConfigError("solve_pde: dt must be positive");
    if (params.save_every < 1) throw ConfigError("solve_pde: save_every must be >= 1");
    const double steps_real = params.t_end / params.dt;
    const long long nsteps = std::llround(steps_real);
    if (std::abs(steps_real - static_cast<double>(nsteps)) > 1e-9 * std::max(1.0, steps_real))
        throw ConfigError("solve_pde: T must be an integer multiple of dt");

    PdeSolution sol(params.grid, params.sigma, rk.eps());
    GridDensity rho = rho0.project(params.grid);

    auto save = [&](double t, const std::vector<double>& b) {
        PdeSnapshot snap;
        snap.t = t;
        snap.rho = rho.values;
        snap.drift = b;
        snap.diag = compute_diagnostics(rho);
        sol.append(std::move(snap));
    };

    check_invariants(rho, params);
    std::vector<double> b = drift_field(rk, rho, params.fft_threshold);
    save(0.0, b);
    for (long long n = 0; n < nsteps; ++n) {
        advance(rho, b, params.sigma, params.dt);
        rho.t = (n + 1) * params.dt;
        if (rho.values.front() > params.tol_boundary || rho.values.back() > params.tol_boundary)
            throw DomainTooSmall("boundary density exceeded tol_boundary at t = " +
                                 std::to_string(rho.t) + "; widen the grid");
        b = drift_field(rk, rho, params.fft_threshold);
        if ((n + 1) % params.save_every == 0 || n + 1 == nsteps) {
            check_invariants(rho, params);
            save(rho.t, b);
        }
    }
    return sol;
}

PdeSolution::TimeBracket PdeSolution::bracket(double t) const {
    const auto& snaps = snapshots_;
    if (snaps.empty()) throw NumericalError("pde solution has no snapshots");
    if (t <= snaps.front().t || snaps.size() == 1) return {0, 0, 0.0};
    if (t >= snaps.back().t) {
        const int last = static_cast<int>(snaps.size()) - 1;
        return {last, last, 0.0};
    }
    int lo = 0, hi = static_cast<int>(snaps.size()) - 1;
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        if (snaps[mid].t <= t)
            lo = mid;
        else
            hi = mid;
    }
    const double span = snaps[hi].t - snaps[lo].t;
    return {lo, hi, span > 0.0 ? (t - snaps[lo].t) / span : 0.0};
}

namespace {

double interp_cells(const Grid1D& grid, const std::vector<double>& field, double x) {
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
}

}  // namespace

double PdeSolution::drift_at(double t, double x) const {
    const TimeBracket br = bracket(t);
    const double va = interp_cells(grid_, snapshots_[br.a].drift, x);
    if (br.a == br.b) return va;
    const double vb = interp_cells(grid_, snapshots_[br.b].drift, x);
    return va + br.w * (vb - va);
}

double PdeSolution::density_at(double t, double x) const {
    const TimeBracket br = bracket(t);
    const double va = interp_cells(grid_, snapshots_[br.a].rho, x);
    if (br.a == br.b) return va;
    const double vb = interp_cells(grid_, snapshots_[br.b].rho, x);
    return va + br.w * (vb - va);
}

double weak_convergence_gap(const PdeSolution& sol_a, const PdeSolution& sol_b,
                            const std::function<double(double)>& phi) {
    if (!(sol_a.grid() == sol_b.grid()))
        throw GridMismatch("weak_convergence_gap: solutions live on different grids");
    const auto& sa = sol_a.snapshots();
    const auto& sb = sol_b.snapshots();
    if (sa.size() != sb.size())
        throw GridMismatch("weak_convergence_gap: snapshot counts differ");
    const Grid1D& grid = sol_a.grid();
    const double dx = grid.dx();
    std::vector<double> phis(grid.m);
    for (int j = 0; j < grid.m; ++j) phis[j] = phi(grid.center(j));

    double sup = 0.0;
    for (std::size_t s = 0; s < sa.size(); ++s) {
        if (std::abs(sa[s].t - sb[s].t) > 1e-12)
            throw GridMismatch("weak_convergence_gap: snapshot times differ");
        double acc = 0.0;
        for (int j = 0; j < grid.m; ++j) acc += (sa[s].rho[j] - sb[s].rho[j]) * phis[j];
        sup = std::max(sup, std::abs(dx * acc));
    }
    return sup;
}

std::vector<double> envelope_convolution_field(const LipschitzEnvelope& env,
                                               const GridDensity& rho) {
    const Grid1D& grid = rho.grid;
    const int m = grid.m;
    const double dx = grid.dx();
    // CDF at cell edges; linear inside cells, flat outside the domain.
    std::vector<double> cdf(m + 1, 0.0);
    for (int j = 0; j < m; ++j) cdf[j + 1] = cdf[j] + rho.values[j] * dx;
    auto cdf_at = [&](double x) {
        if (x <= grid.x_min) return 0.0;
        if (x >= grid.x_max) return cdf[m];
        const double u = (x - grid.x_min) / dx;
        const int j = std::min(static_cast<int>(u), m - 1);
        return cdf[j] + (u - j) * (cdf[j + 1] - cdf[j]);
    };

    const auto pieces = env.pieces();
    std::vector<double> out(m, 0.0);
    for (int j = 0; j < m; ++j) {
        const double x = grid.center(j);
        double acc = 0.0;
        for (const auto& p : pieces) acc += p.value * (cdf_at(x - p.lo) - cdf_at(x - p.hi));
        out[j] = acc;
    }
    return out;
}

double sup_envelope_convolution(const LipschitzEnvelope& env, const PdeSolution& sol) {
    double sup = 0.0;
    GridDensity tmp;
    tmp.grid = sol.grid();
    for (const auto& snap : sol.snapshots()) {
        tmp.values = snap.rho;
        tmp.t = snap.t;
        const auto field = envelope_convolution_field(env, tmp);
        for (double v : field) sup = std::max(sup, v);
    }
    return sup;
}

}  // namespace chaoslab
