#pragma once

#include <cstddef>
#include <vector>

#include "chaoslab/errors.hpp"

namespace chaoslab {

// Uniform cell-centered grid on [x_min, x_max] with m cells.
struct Grid1D {
    double x_min = -8.0;
    double x_max = 8.0;
    int m = 512;

    Grid1D() = default;
    Grid1D(double lo, double hi, int cells) : x_min(lo), x_max(hi), m(cells) {
        if (!(x_max > x_min)) throw ConfigError("grid: x_max must exceed x_min");
        if (m < 16) throw ConfigError("grid: need at least 16 cells");
    }

    double dx() const { return (x_max - x_min) / m; }
    double center(int j) const { return x_min + (j + 0.5) * dx(); }
    double edge(int j) const { return x_min + j * dx(); }

    bool operator==(const Grid1D& o) const {
        return x_min == o.x_min && x_max == o.x_max && m == o.m;
    }
};

// Cell-averaged probability density at a fixed time.
struct GridDensity {
    Grid1D grid;
    std::vector<double> values;
    double t = 0.0;

    double mass() const;
    double min_value() const;
};

// Analytic initial density: Gaussian, uniform box, or a finite mixture.
// Provides pdf/cdf/quantile and exact cell-average projection.
class InitialDensity {
public:
    struct Component {
        enum class Kind { Gaussian, UniformBox } kind;
        double weight;
        double a, b;  // Gaussian: mean, sd; UniformBox: [a, b]
    };

    // Standard Gaussian by default.
    InitialDensity();

    static InitialDensity gaussian(double mean, double sd);
    static InitialDensity uniform_box(double a, double b);
    static InitialDensity mixture(std::vector<Component> components);

    double pdf(double x) const;
    double cdf(double x) const;
    // Inverse CDF; closed-form for single components, bisection (tolerance
    // 1e-12 in x) for mixtures.
    double quantile(double u) const;

    double sup_density() const;

    // Exact cell averages on the grid, renormalized to unit mass. Throws
    // DomainTooSmall if the grid captures less than 1 - 1e-6 of the mass.
    GridDensity project(const Grid1D& grid) const;

    const std::vector<Component>& components() const { return components_; }

private:
    explicit InitialDensity(std::vector<Component> components);

    std::vector<Component> components_;
};

// Normal CDF and its inverse (Wichura's AS241, double precision).
double norm_cdf(double z);
double inv_norm_cdf(double p);

}  // namespace chaoslab
