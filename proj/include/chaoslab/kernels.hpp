#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "chaoslab/errors.hpp"

namespace chaoslab {

// Quintic smoothstep S(t) = t^3 (10 - 15 t + 6 t^2).
// S(0)=0, S(1)=1 and S', S'' vanish at both ends, so ramps built from it
// join the constant pieces with C^2 regularity. max S' = 15/8 at t = 1/2.
// Branchless (clamp + polynomial) so pair loops can pipeline.
inline double smoothstep5(double t) {
    t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

inline double smoothstep5_deriv(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double u = t * (1.0 - t);
    return 30.0 * u * u;
}

inline double smoothstep5_second(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
}

// Polynomial profile h(x) = c0 + c1 x + c2 x^2 + ...
// An empty coefficient list is the zero profile.
struct PolyProfile {
    std::vector<double> coeffs;

    double operator()(double x) const {
        double acc = 0.0;
        for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
        return acc;
    }

    double deriv(double x) const {
        double acc = 0.0;
        for (std::size_t i = coeffs.size(); i-- > 1;)
            acc = acc * x + static_cast<double>(i) * coeffs[i];
        return acc;
    }

    static PolyProfile one() { return {{1.0}}; }
    static PolyProfile linear() { return {{0.0, 1.0}}; }
    static PolyProfile zero() { return {{}}; }
};

enum class KernelKind { Bcm, Uniform };

// Bounded interaction force kernel.
//   Bcm:     k(x) = 1_{[0,R]}(|x|) h(x), h twice differentiable
//   Uniform: k(x) = -1_{[-R,0]}(x) + 1_{[0,R]}(x)
// Indicators are closed, so e.g. the Uniform kernel evaluates to 0 at x = 0
// (both lobes contribute) and to h(R) / 1 at the radius itself.
struct KernelSpec {
    KernelKind kind = KernelKind::Bcm;
    double radius = 1.0;
    PolyProfile h;     // unused for Uniform
    double norm_inf = 0.0;

    static KernelSpec bcm(double radius, PolyProfile profile);
    static KernelSpec uniform(double radius);

    double operator()(double x) const {
        if (kind == KernelKind::Uniform) {
            const double neg = (x >= -radius && x <= 0.0) ? -1.0 : 0.0;
            const double pos = (x >= 0.0 && x <= radius) ? 1.0 : 0.0;
            return neg + pos;
        }
        return std::abs(x) <= radius ? h(x) : 0.0;
    }

    bool is_zero() const { return norm_inf == 0.0; }
};

// C^2 ramp approximation of the indicator of [a, b]:
// identically 0 outside [a-2e, b+2e], identically 1 on [a+2e, b-2e],
// quintic-smoothstep ramps of width 4e in between. |d/dx| <= 15/(32 e).
class Mollifier {
public:
    Mollifier(double a, double b, double eps) : a_(a), b_(b), eps_(eps) {
        if (!(eps > 0.0))
            throw ConfigError("mollifier: eps must be positive");
        if (!(b - a > 4.0 * eps))
            throw ConfigError("mollifier: ramps overlap, require b - a > 4*eps (got b - a = " +
                              std::to_string(b - a) + ", eps = " + std::to_string(eps) + ")");
        inv_width_ = 1.0 / (4.0 * eps);
        lo_ = a_ - 2.0 * eps_;
        hi_ = b_ + 2.0 * eps_;
    }

    double a() const { return a_; }
    double b() const { return b_; }
    double eps() const { return eps_; }

    double operator()(double x) const {
        if (x <= lo_ || x >= hi_) return 0.0;
        if (x < a_ + 2.0 * eps_) return smoothstep5((x - lo_) * inv_width_);
        if (x > b_ - 2.0 * eps_) return smoothstep5((hi_ - x) * inv_width_);
        return 1.0;
    }

    double deriv(double x) const {
        if (x <= a_ - 2.0 * eps_ || x >= b_ + 2.0 * eps_) return 0.0;
        if (x < a_ + 2.0 * eps_)
            return smoothstep5_deriv((x - (a_ - 2.0 * eps_)) * inv_width_) * inv_width_;
        if (x > b_ - 2.0 * eps_)
            return -smoothstep5_deriv(((b_ + 2.0 * eps_) - x) * inv_width_) * inv_width_;
        return 0.0;
    }

    double second_deriv(double x) const {
        if (x <= a_ - 2.0 * eps_ || x >= b_ + 2.0 * eps_) return 0.0;
        if (x < a_ + 2.0 * eps_)
            return smoothstep5_second((x - (a_ - 2.0 * eps_)) * inv_width_) * inv_width_ *
                   inv_width_;
        if (x > b_ - 2.0 * eps_)
            return smoothstep5_second(((b_ + 2.0 * eps_) - x) * inv_width_) * inv_width_ *
                   inv_width_;
        return 0.0;
    }

private:
    double a_, b_, eps_, inv_width_, lo_, hi_;
};

// C^2 regularization of a KernelSpec with cutoff eps:
//   Bcm:     k_eps(x) = psi_{-R,R}(x) h(x)
//   Uniform: k_eps(x) = -psi_{-R,0}(x) + psi_{0,R}(x)
// The Uniform left lobe carries a minus sign so that k_eps -> k pointwise
// away from the jumps; the ramps around 0 then cancel to k_eps(0) = 0.
// k_eps agrees with k exactly at distance > 2*eps from every jump of k.
class RegularizedKernel {
public:
    RegularizedKernel(KernelSpec base, double eps);

    const KernelSpec& base() const { return base_; }
    double eps() const { return eps_; }
    double norm_inf_bound() const { return norm_inf_bound_; }
    bool is_zero() const { return base_.is_zero(); }

    double operator()(double x) const {
        if (base_.kind == KernelKind::Uniform) return right_(x) - left_(x);
        const double hv = h_affine_ ? h_c0_ + h_c1_ * x : base_.h(x);
        return left_(x) * hv;
    }

    double deriv(double x) const {
        if (base_.kind == KernelKind::Uniform) return -left_.deriv(x) + right_.deriv(x);
        return left_.deriv(x) * base_.h(x) + left_(x) * base_.h.deriv(x);
    }

private:
    static double check_eps(const KernelSpec& base, double eps);

    KernelSpec base_;
    double eps_;
    Mollifier left_;   // Bcm: psi_{-R,R}; Uniform: psi_{-R,0}
    Mollifier right_;  // Uniform: psi_{0,R}; unused for Bcm
    double norm_inf_bound_ = 0.0;
    bool h_affine_ = false;  // degree <= 1 profile, evaluated without the Horner loop
    double h_c0_ = 0.0;
    double h_c1_ = 0.0;
};

// Pointwise local Lipschitz envelope l_eps(y) for |x - y| <= 2*eps:
//   |k_eps(x) - k_eps(y)| <= l_eps(y) |x - y|.
// The envelope is of size C/eps only on the bands of width 8*eps around the
// jumps of k (and around 0 for the Uniform kernel, where the two ramps meet),
// and of size C (Bcm, inside a fixed interior window) or 0 (Uniform) elsewhere.
struct LipschitzEnvelope {
    KernelKind kind = KernelKind::Bcm;
    double radius = 1.0;
    double eps = 0.1;
    double lip_const = 1.0;
    double interior_halfwidth = 3.0;  // Bcm interior window is [-R-w, R+w]

    double operator()(double y) const {
        const double r = radius;
        const bool near_jump = std::abs(y - r) <= 4.0 * eps || std::abs(y + r) <= 4.0 * eps ||
                               (kind == KernelKind::Uniform && std::abs(y) <= 4.0 * eps);
        if (near_jump) return lip_const / eps;
        if (kind == KernelKind::Bcm && std::abs(y) <= r + interior_halfwidth) return lip_const;
        return 0.0;
    }

    // C-free branch profile: 1/eps on the jump bands, 1 or 0 elsewhere.
    double profile(double y) const;

    struct Piece {
        double lo, hi, value;
    };
    // Disjoint interval decomposition (bands merged if they overlap),
    // ordered by lo. Used for O(1)-piece convolutions against a CDF.
    std::vector<Piece> pieces() const;
};

// Mean pairwise force felt by particle i (0-based), self term included:
//   K_i = -(1/N) sum_j k(x_i - x_j).
template <typename Kernel>
double mean_pair_force(const Kernel& k, std::span<const double> xs, std::size_t i) {
    const std::size_t n = xs.size();
    const double xi = xs[i];
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += k(xi - xs[j]);
    return -sum / static_cast<double>(n);
}

double interaction_force(const RegularizedKernel& rk, std::span<const double> xs, std::size_t i);

// Mean envelope rate L_i = (1/N) sum_j l_eps(y_i - y_j), self term included.
double envelope_force(const LipschitzEnvelope& env, std::span<const double> ys, std::size_t i);

struct ViolationReport {
    long long samples = 0;
    long long violations = 0;
    double worst_ratio = 0.0;   // max |dk| / (l_eps(y) |x-y|) over positive denominators
    double calibrated_c = 0.0;  // smallest C giving zero violations on these samples
    bool calibrable = true;     // false if the kernel moved where the profile is 0
    double window_lo = 0.0;
    double window_hi = 0.0;
};

// Samples pairs (x, y) with y uniform in [window_lo, window_hi] and
// x = y + U[-2 eps, 2 eps], checking |k(x) - k(y)| <= l_eps(y) |x - y|.
ViolationReport verify_local_lipschitz(const std::function<double(double)>& k,
                                       const LipschitzEnvelope& env, long long n_samples,
                                       std::uint64_t seed, double window_lo, double window_hi);

// Same, with the default window covering all jump bands of the kernel.
ViolationReport verify_local_lipschitz(const RegularizedKernel& rk, const LipschitzEnvelope& env,
                                       long long n_samples, std::uint64_t seed);

// Builds the envelope for rk with C calibrated by sampling, inflated by
// `headroom` so fresh sample sets stay violation-free.
LipschitzEnvelope calibrate_envelope(const RegularizedKernel& rk, long long n_samples,
                                     std::uint64_t seed, double headroom = 1.01);

}  // namespace chaoslab
