#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace frechet {

// Correctly rounded floating-point summation (Shewchuk partials).
// The result depends only on the multiset of addends, never on their order,
// so row sums of a rearrangement matrix do not depend on column order.
class ExactSum {
public:
    void add(double x);
    [[nodiscard]] double value() const;

private:
    // Non-overlapping partials of finite doubles never exceed ~40 entries.
    std::array<double, 64> partials_{};
    std::size_t count_ = 0;
};

[[nodiscard]] double exact_sum(std::span<const double> values);

/// Mean and population variance, both computed with ExactSum.
struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};
[[nodiscard]] Moments population_moments(std::span<const double> values);

/// SplitMix64 finaliser; derives independent per-restart seeds.
[[nodiscard]] std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Worker count: FRECHET_THREADS if set and positive, else hardware concurrency.
[[nodiscard]] unsigned default_thread_count();

}  // namespace frechet
