#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "dolrel/rng.hpp"

using namespace dolrel;

TEST_CASE("stream output is a pure function of key and position")
{
    Stream a(stream_key(42, {1, 2, 3}));
    Stream b(stream_key(42, {1, 2, 3}));
    for (int i = 0; i < 1000; ++i)
        REQUIRE(a() == b());
    CHECK(a.counter() == 1000);
}

TEST_CASE("stream keys separate seeds, tags and tag order")
{
    std::set<std::uint64_t> keys;
    for (std::uint64_t seed : {0ULL, 1ULL, 20211022ULL})
    {
        keys.insert(stream_key(seed, {}));
        keys.insert(stream_key(seed, {0}));
        keys.insert(stream_key(seed, {1}));
        keys.insert(stream_key(seed, {1, 2}));
        keys.insert(stream_key(seed, {2, 1}));
        keys.insert(stream_key(seed, {1, 2, 0}));
    }
    CHECK(keys.size() == 18);
    CHECK(label_hash("snow:Vancouver") != label_hash("snow:Halifax"));
    CHECK(label_hash("residential") == label_hash("residential"));
}

TEST_CASE("uniform draws stay inside the open unit interval")
{
    Stream rng(7);
    double sum = 0.0;
    double sum_sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i)
    {
        const double u = rng.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sum_sq += u * u;
    }
    const double mean = sum / n;
    CHECK(mean == doctest::Approx(0.5).epsilon(3 * std::sqrt(1.0 / 12 / n) / 0.5));
    CHECK(sum_sq / n - mean * mean == doctest::Approx(1.0 / 12).epsilon(0.01));
}

TEST_CASE("normal, exponential and gamma draws have the requested moments")
{
    Stream rng(stream_key(3, {9}));
    const int n = 200000;
    std::vector<double> z(n), e(n), g(n);
    for (int i = 0; i < n; ++i)
    {
        z[i] = rng.normal();
        e[i] = rng.exponential(4.0);
        g[i] = rng.gamma(3.0, 0.5);
    }
    const auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v)
            s += x;
        return s / v.size();
    };
    CHECK(std::abs(mean(z)) < 3.0 / std::sqrt(n));
    CHECK(std::abs(mean(e) - 4.0) < 3.0 * 4.0 / std::sqrt(n));
    CHECK(std::abs(mean(g) - 1.5) < 3.0 * std::sqrt(3.0 * 0.25) / std::sqrt(n));
}
