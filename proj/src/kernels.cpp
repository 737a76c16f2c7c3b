#include "chaoslab/kernels.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace chaoslab {

namespace {

// Dense scan for sup |f| over [lo, hi], endpoints included.
double scan_sup_abs(const std::function<double(double)>& f, double lo, double hi, int n = 20001) {
    double best = 0.0;
    const double step = (hi - lo) / (n - 1);
    for (int i = 0; i < n; ++i) {
        const double x = (i == n - 1) ? hi : lo + i * step;
        best = std::max(best, std::abs(f(x)));
    }
    return best;
}

}  // namespace

KernelSpec KernelSpec::bcm(double radius, PolyProfile profile) {
    if (!(radius > 0.0)) throw ConfigError("kernel: radius must be positive");
    KernelSpec spec;
    spec.kind = KernelKind::Bcm;
    spec.radius = radius;
    spec.h = std::move(profile);
    if (spec.h.coeffs.empty() ||
        std::all_of(spec.h.coeffs.begin(), spec.h.coeffs.end(), [](double c) { return c == 0.0; }))
        spec.norm_inf = 0.0;
    else
        spec.norm_inf = scan_sup_abs([&spec](double x) { return spec.h(x); }, -radius, radius);
    return spec;
}

KernelSpec KernelSpec::uniform(double radius) {
    if (!(radius > 0.0)) throw ConfigError("kernel: radius must be positive");
    KernelSpec spec;
    spec.kind = KernelKind::Uniform;
    spec.radius = radius;
    spec.norm_inf = 1.0;
    return spec;
}

RegularizedKernel::RegularizedKernel(KernelSpec base, double eps)
    : base_(std::move(base)),
      eps_(eps),
      left_(base_.kind == KernelKind::Uniform ? Mollifier(-base_.radius, 0.0, check_eps(base_, eps))
                                              : Mollifier(-base_.radius, base_.radius,
                                                          check_eps(base_, eps))),
      right_(base_.kind == KernelKind::Uniform ? Mollifier(0.0, base_.radius, eps) : left_) {
    if (base_.kind == KernelKind::Bcm && base_.h.coeffs.size() <= 2) {
        h_affine_ = true;
        h_c0_ = base_.h.coeffs.empty() ? 0.0 : base_.h.coeffs[0];
        h_c1_ = base_.h.coeffs.size() < 2 ? 0.0 : base_.h.coeffs[1];
    }
    if (base_.is_zero()) {
        norm_inf_bound_ = 0.0;
        return;
    }
    norm_inf_bound_ =
        scan_sup_abs([this](double x) { return (*this)(x); }, -base_.radius - 2.0 * eps_,
                     base_.radius + 2.0 * eps_) +
        1e-12;
}

double RegularizedKernel::check_eps(const KernelSpec& base, double eps) {
    if (!(eps > 0.0)) throw ConfigError("regularized kernel: eps must be positive");
    if (base.kind == KernelKind::Uniform && !(base.radius > 4.0 * eps))
        throw ConfigError("regularized uniform kernel: requires R > 4*eps");
    if (base.kind == KernelKind::Bcm && !(base.radius > 2.0 * eps))
        throw ConfigError("regularized kernel: requires R > 2*eps");
    return eps;
}

double LipschitzEnvelope::profile(double y) const {
    const bool near_jump = std::abs(y - radius) <= 4.0 * eps || std::abs(y + radius) <= 4.0 * eps ||
                           (kind == KernelKind::Uniform && std::abs(y) <= 4.0 * eps);
    if (near_jump) return 1.0 / eps;
    if (kind == KernelKind::Bcm && std::abs(y) <= radius + interior_halfwidth) return 1.0;
    return 0.0;
}

std::vector<LipschitzEnvelope::Piece> LipschitzEnvelope::pieces() const {
    std::vector<std::pair<double, double>> bands = {{-radius - 4.0 * eps, -radius + 4.0 * eps},
                                                    {radius - 4.0 * eps, radius + 4.0 * eps}};
    if (kind == KernelKind::Uniform) bands.push_back({-4.0 * eps, 4.0 * eps});
    std::sort(bands.begin(), bands.end());
    std::vector<std::pair<double, double>> merged;
    for (const auto& b : bands) {
        if (!merged.empty() && b.first <= merged.back().second)
            merged.back().second = std::max(merged.back().second, b.second);
        else
            merged.push_back(b);
    }

    std::vector<Piece> out;
    const double band_value = lip_const / eps;
    if (kind == KernelKind::Uniform) {
        for (const auto& b : merged) out.push_back({b.first, b.second, band_value});
        return out;
    }
    // Bcm: interior window at lip_const, carved around the bands.
    double cursor = -radius - interior_halfwidth;
    const double win_hi = radius + interior_halfwidth;
    for (const auto& b : merged) {
        if (b.first > cursor && cursor < win_hi)
            out.push_back({cursor, std::min(b.first, win_hi), lip_const});
        out.push_back({b.first, b.second, band_value});
        cursor = std::max(cursor, b.second);
    }
    if (cursor < win_hi) out.push_back({cursor, win_hi, lip_const});
    return out;
}

double interaction_force(const RegularizedKernel& rk, std::span<const double> xs, std::size_t i) {
    if (rk.is_zero()) return 0.0;
    return mean_pair_force(rk, xs, i);
}

double envelope_force(const LipschitzEnvelope& env, std::span<const double> ys, std::size_t i) {
    const std::size_t n = ys.size();
    const double yi = ys[i];
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += env(yi - ys[j]);
    return sum / static_cast<double>(n);
}

ViolationReport verify_local_lipschitz(const std::function<double(double)>& k,
                                       const LipschitzEnvelope& env, long long n_samples,
                                       std::uint64_t seed, double window_lo, double window_hi) {
    if (!(window_hi > window_lo))
        throw ConfigError("verify_local_lipschitz: empty sampling window");
    if (n_samples < 1) throw ConfigError("verify_local_lipschitz: n_samples must be >= 1");

    std::mt19937_64 gen(seed);
    auto unit = [&gen]() {
        return (static_cast<double>(gen() >> 11) + 0.5) * 0x1p-53;
    };

    ViolationReport rep;
    rep.samples = n_samples;
    rep.window_lo = window_lo;
    rep.window_hi = window_hi;
    for (long long s = 0; s < n_samples; ++s) {
        const double y = window_lo + (window_hi - window_lo) * unit();
        const double d = (2.0 * unit() - 1.0) * 2.0 * env.eps;
        const double x = y + d;
        const double dist = std::abs(d);
        if (dist == 0.0) continue;
        const double dk = std::abs(k(x) - k(y));
        const double bound = env(y) * dist;
        if (dk > bound * (1.0 + 1e-12)) ++rep.violations;
        const double g = env.profile(y);
        if (g > 0.0) {
            rep.calibrated_c = std::max(rep.calibrated_c, dk / (g * dist));
            if (bound > 0.0) rep.worst_ratio = std::max(rep.worst_ratio, dk / bound);
        } else if (dk > 1e-13) {
            rep.calibrable = false;
            rep.worst_ratio = std::numeric_limits<double>::infinity();
        }
    }
    return rep;
}

ViolationReport verify_local_lipschitz(const RegularizedKernel& rk, const LipschitzEnvelope& env,
                                       long long n_samples, std::uint64_t seed) {
    const double w = rk.base().radius + 2.0;
    return verify_local_lipschitz([&rk](double x) { return rk(x); }, env, n_samples, seed, -w, w);
}

LipschitzEnvelope calibrate_envelope(const RegularizedKernel& rk, long long n_samples,
                                     std::uint64_t seed, double headroom) {
    LipschitzEnvelope env;
    env.kind = rk.base().kind;
    env.radius = rk.base().radius;
    env.eps = rk.eps();
    env.lip_const = 1.0;
    ViolationReport rep = verify_local_lipschitz(rk, env, n_samples, seed);
    if (!rep.calibrable)
        throw NumericalError("calibrate_envelope: kernel varies where the envelope profile is 0");
    env.lip_const = rep.calibrated_c * headroom;
    return env;
}

}  // namespace chaoslab
