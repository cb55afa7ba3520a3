#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace msalnet {

// Counter-based generator: output n is a SplitMix64 finalizer applied to
// (key + n * golden-ratio increment). Streams derived with split() are
// independent of how many values the parent has consumed.
class RngStream {
public:
    static constexpr std::string_view algorithm = "splitmix64-counter/v1";

    explicit RngStream(std::uint64_t seed = 0);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64();
    // Uniform on [0, 1) with 53 bits of resolution.
    double uniform();
    double uniform(double lo, double hi);
    // Standard normal via Box-Muller; the second variate is cached.
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }
    bool bernoulli(double p) { return uniform() < p; }
    // Unbiased integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    RngStream split(std::uint64_t index) const;

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace msalnet
