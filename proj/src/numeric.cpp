#include "frechet/numeric.hpp"

#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>

namespace frechet {

void ExactSum::add(double x) {
    std::size_t i = 0;
    for (std::size_t k = 0; k < count_; ++k) {
        double y = partials_[k];
        if (std::fabs(x) < std::fabs(y)) {
            std::swap(x, y);
        }
        const double hi = x + y;
        const double lo = y - (hi - x);
        if (lo != 0.0) {
            partials_[i++] = lo;
        }
        x = hi;
    }
    partials_[i] = x;
    count_ = i + 1;
}

double ExactSum::value() const {
    if (count_ == 0) {
        return 0.0;
    }
    std::size_t n = count_;
    double hi = partials_[--n];
    double lo = 0.0;
    while (n > 0) {
        const double x = hi;
        const double y = partials_[--n];
        hi = x + y;
        const double yr = hi - x;
        lo = y - yr;
        if (lo != 0.0) {
            break;
        }
    }
    // Round-half-even correction when the remaining partials push past a tie.
    if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) || (lo > 0.0 && partials_[n - 1] > 0.0))) {
        const double y = lo * 2.0;
        const double x = hi + y;
        const double yr = x - hi;
        if (y == yr) {
            hi = x;
        }
    }
    return hi;
}

double exact_sum(std::span<const double> values) {
    ExactSum acc;
    for (double v : values) {
        acc.add(v);
    }
    return acc.value();
}

Moments population_moments(std::span<const double> values) {
    Moments m;
    if (values.empty()) {
        return m;
    }
    const auto n = static_cast<double>(values.size());
    m.mean = exact_sum(values) / n;
    ExactSum ss;
    for (double v : values) {
        const double dev = v - m.mean;
        ss.add(dev * dev);
    }
    m.variance = ss.value() / n;
    return m;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

unsigned default_thread_count() {
    if (const char* env = std::getenv("FRECHET_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) {
                return static_cast<unsigned>(v);
            }
        } catch (const std::exception&) {
            // fall through to hardware default
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

}  // namespace frechet
