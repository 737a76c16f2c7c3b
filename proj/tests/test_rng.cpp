#include <doctest.h>

#include <cmath>

#include "chaoslab/rng.hpp"

using namespace chaoslab;

TEST_CASE("streams are deterministic and seed-separated") {
    const InitialDensity g = InitialDensity::gaussian(0.0, 1.0);
    const SeedSpec seed{42, 3, 7};
    const auto a = sample_initial(g, 1000, seed);
    const auto b = sample_initial(g, 1000, seed);
    CHECK(a == b);  // bit-identical

    const auto c = sample_initial(g, 1000, SeedSpec{42, 3, 8});
    int diff = 0;
    for (int i = 0; i < 1000; ++i) diff += a[i] != c[i];
    CHECK(diff > 990);

    CHECK(derive_stream_key({1, 2, 3}) != derive_stream_key({1, 3, 2}));
    CHECK(derive_stream_key({1, 2, 3}) != derive_stream_key({2, 2, 3}));
}

TEST_CASE("sample moments match the target laws") {
    SUBCASE("uniform box mean") {
        const auto xs = sample_initial(InitialDensity::uniform_box(0.0, 1.0), 100000, {7, 0, 0});
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= xs.size();
        CHECK(std::abs(mean - 0.5) < 0.005);
    }
    SUBCASE("gaussian sd") {
        const auto xs = sample_initial(InitialDensity::gaussian(0.0, 1.0), 100000, {8, 0, 0});
        double m = 0.0, v = 0.0;
        for (double x : xs) m += x;
        m /= xs.size();
        for (double x : xs) v += (x - m) * (x - m);
        const double sd = std::sqrt(v / (xs.size() - 1));
        CHECK(std::abs(sd - 1.0) < 0.01);
    }
}

TEST_CASE("brownian increments have the contracted variance") {
    CHECK(brownian_stream({1, 0, 0}, 0, 0.5).increments.empty());
    CHECK_THROWS_AS(brownian_stream({1, 0, 0}, 10, 0.0), ConfigError);

    const double dt = 0.01;
    const auto inc = brownian_stream({9, 1, 2}, 1000000, dt).increments;
    double m = 0.0;
    for (double d : inc) m += d;
    m /= inc.size();
    double v = 0.0;
    for (double d : inc) v += (d - m) * (d - m);
    v /= (inc.size() - 1);
    CHECK(std::abs(m) < 4.0 * std::sqrt(dt) / std::sqrt(double(inc.size())));
    CHECK(v > dt * 0.99);
    CHECK(v < dt * 1.01);

    SUBCASE("distinct particle streams are uncorrelated") {
        const auto a = brownian_stream({9, 1, 2}, 100000, dt).increments;
        const auto b = brownian_stream({9, 1, 3}, 100000, dt).increments;
        double ma = 0.0, mb = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            ma += a[i];
            mb += b[i];
        }
        ma /= a.size();
        mb /= b.size();
        double cab = 0.0, va = 0.0, vb = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            cab += (a[i] - ma) * (b[i] - mb);
            va += (a[i] - ma) * (a[i] - ma);
            vb += (b[i] - mb) * (b[i] - mb);
        }
        const double r = cab / std::sqrt(va * vb);
        CHECK(std::abs(r) < 0.01);
    }
}
