#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string_view>

namespace dolrel {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Stable 64-bit hash of a short label (FNV-1a followed by mix64).
std::uint64_t label_hash(std::string_view label) noexcept;

/// Derive a stream key from a master seed and a path of integer tags.
///
/// The key depends only on the values, never on call order or thread, so a
/// work unit identified by (seed, scenario, profile) always sees the same
/// random sequence.
std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept;

/// Counter-based random stream.
///
/// Output n of a stream is a pure function of (key, n). Constructing a stream
/// is free, so every profile or specimen gets its own.
class Stream
{
  public:
    using result_type = std::uint64_t;

    explicit Stream(std::uint64_t key) noexcept : key_(key) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept;

    double normal();
    double exponential(double mean);
    double gamma(double shape, double scale);

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t counter() const noexcept { return counter_; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace dolrel
