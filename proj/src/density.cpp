#include "chaoslab/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace chaoslab {

double GridDensity::mass() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * grid.dx();
}

double GridDensity::min_value() const {
    double s = values.empty() ? 0.0 : values[0];
    for (double v : values) s = std::min(s, v);
    return s;
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// AS241 rational approximation (PPND16), |error| ~ 1e-16.
double inv_norm_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw NumericalError("inv_norm_cdf: p must lie in (0,1)");
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) *
                        r +
                    4.5921953931549871457e4) *
                       r +
                   1.3731693765509461125e4) *
                      r +
                  1.9715909503065514427e3) *
                     r +
                 1.3314166789178437745e2) *
                    r +
                3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) *
                        r +
                    2.1213794301586595867e4) *
                       r +
                   5.3941960214247511077e3) *
                      r +
                  6.8718700749205790830e2) *
                     r +
                 4.2313330701600911252e1) *
                    r +
                1.0);
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) *
                       r +
                   1.27045825245236838258e0) *
                      r +
                  3.64784832476320460504e0) *
                     r +
                 5.76949722146069140550e0) *
                    r +
                4.63033784615654529590e0) *
                   r +
               1.42343711074968357734e0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) *
                       r +
                   1.48103976427480074590e-1) *
                      r +
                  6.89767334985100004550e-1) *
                     r +
                 1.67638483018380384940e0) *
                    r +
                2.05319162663775882187e0) *
                   r +
               1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) *
                       r +
                   2.65321895265761230930e-2) *
                      r +
                  2.96560571828504891230e-1) *
                     r +
                 1.78482653991729133580e0) *
                    r +
                5.46378491116411436990e0) *
                   r +
               6.65790464350110377720e0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) *
                       r +
                   7.86869131145613259100e-4) *
                      r +
                  1.48753612908506148525e-2) *
                     r +
                 1.36929880922735805310e-1) *
                    r +
                5.99832206555887937690e-1) *
                   r +
               1.0);
    }
    return (q < 0.0) ? -val : val;
}

namespace {

double component_pdf(const InitialDensity::Component& c, double x) {
    if (c.kind == InitialDensity::Component::Kind::Gaussian) {
        const double z = (x - c.a) / c.b;
        return std::exp(-0.5 * z * z) / (c.b * std::sqrt(2.0 * std::numbers::pi));
    }
    return (x >= c.a && x <= c.b) ? 1.0 / (c.b - c.a) : 0.0;
}

double component_cdf(const InitialDensity::Component& c, double x) {
    if (c.kind == InitialDensity::Component::Kind::Gaussian)
        return norm_cdf((x - c.a) / c.b);
    if (x <= c.a) return 0.0;
    if (x >= c.b) return 1.0;
    return (x - c.a) / (c.b - c.a);
}

// Support within which all but ~1e-14 of the component's mass lives.
std::pair<double, double> component_hull(const InitialDensity::Component& c) {
    if (c.kind == InitialDensity::Component::Kind::Gaussian)
        return {c.a - 8.0 * c.b, c.a + 8.0 * c.b};
    return {c.a, c.b};
}

}  // namespace

InitialDensity::InitialDensity(std::vector<Component> components)
    : components_(std::move(components)) {
    if (components_.empty()) throw ConfigError("rho0: needs at least one component");
    double total = 0.0;
    for (const auto& c : components_) {
        if (!(c.weight > 0.0)) throw ConfigError("rho0: component weights must be positive");
        if (c.kind == Component::Kind::Gaussian) {
            if (!(c.b > 0.0)) throw ConfigError("rho0: gaussian sd must be positive");
        } else {
            if (!(c.b > c.a)) throw ConfigError("rho0: uniform box needs b > a");
        }
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw ConfigError("rho0: component weights must sum to 1 (got " + std::to_string(total) +
                          ")");
}

InitialDensity::InitialDensity()
    : InitialDensity(std::vector<Component>{{Component::Kind::Gaussian, 1.0, 0.0, 1.0}}) {}

InitialDensity InitialDensity::gaussian(double mean, double sd) {
    return InitialDensity({{Component::Kind::Gaussian, 1.0, mean, sd}});
}

InitialDensity InitialDensity::uniform_box(double a, double b) {
    return InitialDensity({{Component::Kind::UniformBox, 1.0, a, b}});
}

InitialDensity InitialDensity::mixture(std::vector<Component> components) {
    return InitialDensity(std::move(components));
}

double InitialDensity::pdf(double x) const {
    double s = 0.0;
    for (const auto& c : components_) s += c.weight * component_pdf(c, x);
    return s;
}

double InitialDensity::cdf(double x) const {
    double s = 0.0;
    for (const auto& c : components_) s += c.weight * component_cdf(c, x);
    return s;
}

double InitialDensity::quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw NumericalError("quantile: u must lie in (0,1)");
    if (components_.size() == 1) {
        const auto& c = components_[0];
        if (c.kind == Component::Kind::Gaussian) return c.a + c.b * inv_norm_cdf(u);
        return c.a + u * (c.b - c.a);
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& c : components_) {
        auto [clo, chi] = component_hull(c);
        lo = std::min(lo, clo);
        hi = std::max(hi, chi);
    }
    // cdf is nondecreasing; bisect to 1e-12 in x.
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (cdf(mid) < u)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double InitialDensity::sup_density() const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& c : components_) {
        auto [clo, chi] = component_hull(c);
        lo = std::min(lo, clo);
        hi = std::max(hi, chi);
    }
    double best = 0.0;
    const int n = 100001;
    for (int i = 0; i < n; ++i) best = std::max(best, pdf(lo + (hi - lo) * i / (n - 1)));
    return best;
}

GridDensity InitialDensity::project(const Grid1D& grid) const {
    GridDensity out;
    out.grid = grid;
    out.t = 0.0;
    out.values.assign(grid.m, 0.0);
    const double dx = grid.dx();
    // Exact cell averages from CDF differences (closed form per component).
    double prev = cdf(grid.edge(0));
    for (int j = 0; j < grid.m; ++j) {
        const double next = cdf(grid.edge(j + 1));
        out.values[j] = (next - prev) / dx;
        prev = next;
    }
    const double captured = out.mass();
    if (captured < 1.0 - 1e-6)
        throw DomainTooSmall("rho0 projection: grid captures only " + std::to_string(captured) +
                             " of the initial mass; widen the domain");
    for (double& v : out.values) v /= captured;
    return out;
}

}  // namespace chaoslab
