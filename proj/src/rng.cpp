#include "chaoslab/rng.hpp"

#include <cmath>

namespace chaoslab {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_stream_key(const SeedSpec& seed) {
    std::uint64_t k = splitmix64(seed.master_seed);
    k = splitmix64(k ^ splitmix64(seed.replicate_id + 0x517cc1b727220a95ULL));
    k = splitmix64(k ^ splitmix64(seed.particle_id + 0x2545f4914f6cdd1dULL));
    return k;
}

std::vector<double> sample_initial(const InitialDensity& rho0, std::size_t n,
                                   const SeedSpec& seed) {
    if (n < 1) throw ConfigError("sample_initial: n must be >= 1");
    RngStream stream(seed);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = rho0.quantile(stream.uniform01());
    return out;
}

BrownianIncrements brownian_stream(const SeedSpec& seed, std::size_t n_steps, double dt) {
    if (!(dt > 0.0)) throw ConfigError("brownian_stream: dt must be positive");
    BrownianIncrements out;
    out.dt = dt;
    out.increments.resize(n_steps);
    RngStream stream(seed);
    const double sd = std::sqrt(dt);
    for (std::size_t i = 0; i < n_steps; ++i) out.increments[i] = sd * stream.normal();
    return out;
}

}  // namespace chaoslab
