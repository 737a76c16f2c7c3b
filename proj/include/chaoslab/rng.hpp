#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "chaoslab/density.hpp"

namespace chaoslab {

// Addresses one RNG stream. The same triple always yields a bit-identical
// stream; replicates and particles get independent streams without any
// sequential splitting, so parallel work is order-independent.
struct SeedSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t replicate_id = 0;
    std::uint64_t particle_id = 0;
};

std::uint64_t derive_stream_key(const SeedSpec& seed);

// One reproducible stream. Gaussians come from the inverse normal CDF so the
// draw count per variate is fixed on every platform.
class RngStream {
public:
    explicit RngStream(const SeedSpec& seed) : gen_(derive_stream_key(seed)) {}

    // Uniform on the open interval (0, 1).
    double uniform01() { return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1p-53; }

    double normal() { return inv_norm_cdf(uniform01()); }

private:
    std::mt19937_64 gen_;
};

// n i.i.d. draws from rho0 via the inverse CDF, all from the stream `seed`.
std::vector<double> sample_initial(const InitialDensity& rho0, std::size_t n,
                                   const SeedSpec& seed);

struct BrownianIncrements {
    double dt = 0.0;
    std::vector<double> increments;  // N(0, dt) each
};

BrownianIncrements brownian_stream(const SeedSpec& seed, std::size_t n_steps, double dt);

}  // namespace chaoslab
