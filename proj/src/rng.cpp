#include "dolrel/rng.hpp"

#include <cmath>
#include <random>

namespace dolrel {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kTagSalt = 0x632be59bd9b4e019ULL;
constexpr std::uint64_t kChainMul = 0xd1342543de82ef95ULL;
} // namespace

std::uint64_t mix64(std::uint64_t x) noexcept
{
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

std::uint64_t label_hash(std::string_view label) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : label)
    {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return mix64(h);
}

std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept
{
    std::uint64_t key = mix64(seed + kGolden);
    for (std::uint64_t tag : path)
        key = mix64((key * kChainMul) ^ mix64(tag + kTagSalt));
    return key;
}

Stream::result_type Stream::operator()() noexcept
{
    ++counter_;
    return mix64(mix64(key_ + counter_ * kGolden));
}

double Stream::uniform() noexcept
{
    // 53 random bits centred in their cell: never exactly 0 or 1.
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double Stream::normal()
{
    std::normal_distribution<double> dist;
    return dist(*this);
}

double Stream::exponential(double mean)
{
    return -mean * std::log(uniform());
}

double Stream::gamma(double shape, double scale)
{
    std::gamma_distribution<double> dist(shape, scale);
    return dist(*this);
}

} // namespace dolrel
