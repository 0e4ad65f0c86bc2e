#pragma once

// Synthetic detection records: multinomial count vectors and per-copy event
// streams.
//
// Random numbers come from xoshiro256** seeded through splitmix64. A
// generator is identified by (seed, stream); Monte-Carlo run r uses stream r,
// so results do not depend on how runs are scheduled across threads.

#include "tetratomo/povm.hpp"
#include "tetratomo/qstate.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace tetratomo {

inline constexpr std::uint64_t splitmix64(std::uint64_t& x) noexcept
{
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t mix64(std::uint64_t x) noexcept { return splitmix64(x); }

/// Seed for a named sub-experiment (e.g. one state of a recipe).
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) noexcept
{
    std::uint64_t h = 0xCBF29CE484222325ULL; // FNV-1a
    for (unsigned char ch : tag) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    return mix64(seed ^ mix64(h));
}

/// xoshiro256** generator; satisfies UniformRandomBitGenerator.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
    {
        std::uint64_t x = mix64(seed ^ mix64(~stream));
        for (auto& w : s_)
            w = splitmix64(x);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept
    {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept
    {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4]{};
};

/// Detector tallies for m = 4 or 16 outcomes.
class CountVector {
public:
    explicit CountVector(int outcomes = 4) : counts_(check_outcomes(outcomes), 0) {}

    explicit CountVector(std::vector<std::int64_t> counts) : counts_(std::move(counts))
    {
        check_outcomes(static_cast<int>(counts_.size()));
        for (auto c : counts_) {
            if (c < 0)
                throw std::invalid_argument("counts must be nonnegative");
            total_ += c;
        }
    }

    int outcomes() const noexcept { return static_cast<int>(counts_.size()); }
    std::int64_t total() const noexcept { return total_; }
    std::int64_t operator[](std::size_t j) const noexcept { return counts_[j]; }
    std::span<const std::int64_t> counts() const noexcept { return counts_; }

    void add(int outcome)
    {
        ++counts_.at(static_cast<std::size_t>(outcome));
        ++total_;
    }

    void clear() noexcept
    {
        std::fill(counts_.begin(), counts_.end(), 0);
        total_ = 0;
    }

    friend bool operator==(const CountVector&, const CountVector&) = default;

private:
    static int check_outcomes(int m)
    {
        if (m != 4 && m != 16)
            throw std::invalid_argument("count vectors have 4 or 16 outcomes");
        return m;
    }

    std::vector<std::int64_t> counts_;
    std::int64_t total_ = 0;
};

/// Inverse-CDF categorical sampler over a fixed outcome order. Outcomes with
/// zero probability are never drawn.
class CategoricalSampler {
public:
    explicit CategoricalSampler(std::span<const double> p)
    {
        if (p.empty())
            throw std::invalid_argument("empty probability vector");
        double total = 0.0;
        for (double x : p) {
            if (!(x >= 0.0) || !std::isfinite(x))
                throw std::invalid_argument("probabilities must be finite and nonnegative");
            total += x;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw std::invalid_argument("probabilities must sum to one");
        cdf_.resize(p.size());
        double acc = 0.0;
        std::size_t last_positive = 0;
        for (std::size_t j = 0; j < p.size(); ++j) {
            acc += p[j];
            cdf_[j] = acc;
            if (p[j] > 0.0)
                last_positive = j;
        }
        for (std::size_t j = last_positive; j < cdf_.size(); ++j)
            cdf_[j] = 1.0;
    }

    int outcomes() const noexcept { return static_cast<int>(cdf_.size()); }

    int draw(Rng& rng) const noexcept
    {
        const double u = rng.uniform();
        std::size_t j = 0;
        while (u >= cdf_[j])
            ++j;
        return static_cast<int>(j);
    }

private:
    std::vector<double> cdf_;
};

struct EventStream {
    std::vector<int> outcomes;
    int outcome_count = 4;
    std::uint64_t seed = 0;
    std::optional<NamedState> source_state;

    /// Counts of the first `prefix` events.
    CountVector collapse(std::size_t prefix) const
    {
        if (prefix > outcomes.size())
            throw std::out_of_range("prefix longer than the event stream");
        CountVector c(outcome_count);
        for (std::size_t i = 0; i < prefix; ++i)
            c.add(outcomes[i]);
        return c;
    }

    CountVector collapse() const { return collapse(outcomes.size()); }
};

/// N sequential categorical draws from `rng`, tallied.
inline CountVector sample_counts(const CategoricalSampler& sampler, std::int64_t n, Rng& rng)
{
    if (n < 0)
        throw std::invalid_argument("event count must be nonnegative");
    CountVector c(sampler.outcomes());
    for (std::int64_t i = 0; i < n; ++i)
        c.add(sampler.draw(rng));
    return c;
}

inline CountVector sample_counts(std::span<const double> p, std::int64_t n, std::uint64_t seed)
{
    const CategoricalSampler sampler(p);
    Rng rng(seed);
    return sample_counts(sampler, n, rng);
}

inline EventStream stream_events(std::span<const double> p, std::int64_t n, std::uint64_t seed)
{
    if (n < 0)
        throw std::invalid_argument("event count must be nonnegative");
    const CategoricalSampler sampler(p);
    Rng rng(seed);
    EventStream s;
    s.outcome_count = sampler.outcomes();
    s.seed = seed;
    s.outcomes.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        s.outcomes.push_back(sampler.draw(rng));
    return s;
}

inline EventStream stream_events(const NamedState& state, const InstrumentMatrix& b, std::int64_t n,
                                 std::uint64_t seed)
{
    const auto p = outcome_probabilities(b, state.stokes);
    EventStream s = stream_events(p, n, seed);
    s.source_state = state;
    return s;
}

/// Large-sample count vector standing in for the asymptote state.
inline CountVector asymptote_counts(const NamedState& state, const InstrumentMatrix& b,
                                    std::int64_t n_large, std::uint64_t seed)
{
    const auto p = outcome_probabilities(b, state.stokes);
    return sample_counts(p, n_large, seed);
}

} // namespace tetratomo
