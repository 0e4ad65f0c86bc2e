#pragma once

// Average trace distance between reconstructed and reference states as a
// function of the number of detected copies: exact multinomial enumeration,
// a sequence-level brute-force oracle, Monte-Carlo estimates, power-law fits
// and per-parameter normalization.

#include "tetratomo/estimate.hpp"
#include "tetratomo/parallel.hpp"
#include "tetratomo/povm.hpp"
#include "tetratomo/qstate.hpp"
#include "tetratomo/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tetratomo {

inline constexpr std::uint64_t kDefaultPatternCap = 20'000'000;

/// Thrown when exact enumeration would exceed the pattern cap; Monte Carlo
/// is the way forward for such sizes.
class PatternCapExceeded : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Neumaier compensated sum.
class CompensatedSum {
public:
    void add(double x) noexcept
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// C(n + m - 1, m - 1), saturating at uint64 max.
inline std::uint64_t pattern_count(std::int64_t n, int m)
{
    if (n < 0 || m < 1)
        throw std::invalid_argument("pattern_count: need n >= 0 and m >= 1");
    unsigned __int128 c = 1;
    for (int i = 1; i < m; ++i) {
        c = c * static_cast<unsigned __int128>(n + i) / static_cast<unsigned __int128>(i);
        if (c > std::numeric_limits<std::uint64_t>::max())
            return std::numeric_limits<std::uint64_t>::max();
    }
    return static_cast<std::uint64_t>(c);
}

/// Visits every composition of n into `parts` nonnegative integers in
/// ascending lexicographic order, writing each into `c` (size `parts`).
template <class Fn>
void for_each_composition(std::int64_t n, std::span<std::int64_t> c, Fn&& fn)
{
    const std::size_t parts = c.size();
    std::fill(c.begin(), c.end(), 0);
    c[parts - 1] = n;
    for (;;) {
        fn(std::span<const std::int64_t>(c.data(), parts));
        std::size_t t = parts - 1;
        while (t >= 1 && c[t] == 0)
            --t;
        if (t == 0)
            return;
        const std::int64_t rest = c[t] - 1;
        ++c[t - 1];
        c[t] = 0;
        c[parts - 1] = rest;
    }
}

/// All count vectors with total n over m outcomes, lexicographic order.
inline std::vector<CountVector> enumerate_patterns(std::int64_t n, int m,
                                                   std::uint64_t cap = kDefaultPatternCap)
{
    if (n < 1)
        throw std::invalid_argument("enumerate_patterns: N must be at least 1");
    if (m != 4 && m != 16)
        throw std::invalid_argument("enumerate_patterns: m must be 4 or 16");
    const std::uint64_t total = pattern_count(n, m);
    if (total > cap)
        throw PatternCapExceeded("enumerate_patterns: " + std::to_string(total) +
                                 " patterns exceed the cap; use Monte Carlo");
    std::vector<CountVector> out;
    out.reserve(static_cast<std::size_t>(total));
    std::vector<std::int64_t> c(static_cast<std::size_t>(m));
    for_each_composition(n, c, [&](std::span<const std::int64_t> k) {
        out.emplace_back(std::vector<std::int64_t>(k.begin(), k.end()));
    });
    return out;
}

/// log(N! / prod_j n_j!)
inline double log_multiplicity(std::span<const std::int64_t> counts)
{
    std::int64_t n = 0;
    double s = 0.0;
    for (auto c : counts) {
        n += c;
        s -= std::lgamma(static_cast<double>(c) + 1.0);
    }
    return s + std::lgamma(static_cast<double>(n) + 1.0);
}

struct PartitionPattern {
    CountVector counts;
    double log_multiplicity = 0.0;
    double log_probability = 0.0; // log of one sequence's probability
    double distance = 0.0;
};

namespace detail {

inline StokesVector estimate_from_counts(std::span<const std::int64_t> counts, const InstrumentMatrix& b,
                                         bool project)
{
    std::array<double, InstrumentMatrix::kMaxOutcomes> freq{};
    std::int64_t n = 0;
    for (auto c : counts)
        n += c;
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < counts.size(); ++j)
        freq[j] = static_cast<double>(counts[j]) * inv;
    StokesVector s = b.invert(std::span<const double>(freq.data(), counts.size()));
    return project ? project_to_physical(s) : s;
}

inline double distance_for_counts(std::span<const std::int64_t> counts, const InstrumentMatrix& b,
                                  const DensityMatrix& reference, bool project)
{
    return trace_distance(reference, stokes_to_density(estimate_from_counts(counts, b, project)));
}

} // namespace detail

inline PartitionPattern make_partition_pattern(const CountVector& counts, std::span<const double> p,
                                               const InstrumentMatrix& b, const DensityMatrix& reference)
{
    PartitionPattern k{counts, log_multiplicity(counts.counts()), 0.0, 0.0};
    const auto logp = detail::safe_log(p);
    k.log_probability = detail::multinomial_log_kernel(counts.counts(), logp);
    k.distance = detail::distance_for_counts(counts.counts(), b, reference, false);
    return k;
}

struct ExactOptions {
    bool project = false;
    std::uint64_t pattern_cap = kDefaultPatternCap;
    int threads = 0;
};

/// Multinomial expectation of a K-valued function of the count pattern,
/// sum_k c_k p_k f(k), over all patterns of n events. Zero-probability
/// patterns are skipped. Terms are accumulated in descending weight order
/// with compensated summation; the total weight is returned through
/// `weight_sum`.
template <std::size_t K, class Fn>
std::array<double, K> pattern_expectation(std::span<const double> p, std::int64_t n, Fn&& fn,
                                          const ExactOptions& opts = {}, double* weight_sum = nullptr)
{
    const int m = static_cast<int>(p.size());
    if (n < 1)
        throw std::invalid_argument("exact average needs N >= 1");
    const std::uint64_t total = pattern_count(n, m);
    if (total > opts.pattern_cap)
        throw PatternCapExceeded(std::to_string(total) + " patterns exceed the enumeration cap (" +
                                 std::to_string(opts.pattern_cap) + "); use Monte Carlo");

    std::vector<double> lfact(static_cast<std::size_t>(n) + 1);
    for (std::int64_t i = 0; i <= n; ++i)
        lfact[i] = std::lgamma(static_cast<double>(i) + 1.0);
    const auto logp = detail::safe_log(p);

    // Chunk by the first count so that every chunk writes a fixed slice.
    std::vector<std::size_t> offset(static_cast<std::size_t>(n) + 2, 0);
    for (std::int64_t first = 0; first <= n; ++first)
        offset[first + 1] = offset[first] + (m == 1 ? 1 : pattern_count(n - first, m - 1));

    struct Term {
        double weight;
        std::array<double, K> value;
    };
    std::vector<Term> terms(static_cast<std::size_t>(total));

    parallel_for(static_cast<std::size_t>(n) + 1, opts.threads, [&](std::size_t chunk) {
        const auto first = static_cast<std::int64_t>(chunk);
        std::vector<std::int64_t> c(static_cast<std::size_t>(m));
        std::size_t slot = offset[chunk];
        auto visit = [&](std::span<const std::int64_t> rest) {
            c[0] = first;
            std::copy(rest.begin(), rest.end(), c.begin() + 1);
            double lw = lfact[n];
            bool possible = true;
            for (int j = 0; j < m; ++j) {
                if (c[j] == 0)
                    continue;
                if (logp[j] == -std::numeric_limits<double>::infinity()) {
                    possible = false;
                    break;
                }
                lw += static_cast<double>(c[j]) * logp[j] - lfact[c[j]];
            }
            Term& t = terms[slot++];
            if (!possible) {
                t.weight = 0.0;
                t.value = {};
                return;
            }
            t.weight = std::exp(lw);
            t.value = t.weight > 0.0 ? fn(std::span<const std::int64_t>(c)) : std::array<double, K>{};
        };
        if (m == 1) {
            visit({});
        } else {
            std::vector<std::int64_t> rest(static_cast<std::size_t>(m - 1));
            for_each_composition(n - first, rest, visit);
        }
    });

    std::stable_sort(terms.begin(), terms.end(),
                     [](const Term& a, const Term& b) { return a.weight > b.weight; });
    CompensatedSum wsum;
    std::array<CompensatedSum, K> acc{};
    for (const Term& t : terms) {
        if (t.weight == 0.0)
            break;
        wsum.add(t.weight);
        for (std::size_t q = 0; q < K; ++q)
            acc[q].add(t.weight * t.value[q]);
    }
    if (weight_sum)
        *weight_sum = wsum.value();
    std::array<double, K> out{};
    for (std::size_t q = 0; q < K; ++q)
        out[q] = acc[q].value();
    return out;
}

/// Exact average trace distance sum_k c_k p_k D_k over all count patterns of
/// n events. Estimates are unconstrained unless opts.project is set.
inline double average_trace_distance_exact(const StokesVector& state, const InstrumentMatrix& b, std::int64_t n,
                                           const DensityMatrix& reference, const ExactOptions& opts = {})
{
    const auto p = outcome_probabilities(b, state);
    double wsum = 0.0;
    const auto r = pattern_expectation<1>(
        p, n,
        [&](std::span<const std::int64_t> k) {
            return std::array<double, 1>{detail::distance_for_counts(k, b, reference, opts.project)};
        },
        opts, &wsum);
    if (std::abs(wsum - 1.0) > 1e-10)
        throw std::logic_error("pattern weights sum to " + std::to_string(wsum) + ", expected 1");
    return r[0];
}

/// Multinomially weighted mean of the unconstrained linear estimate.
inline StokesVector mean_linear_estimate(const StokesVector& state, const InstrumentMatrix& b, std::int64_t n,
                                         const ExactOptions& opts = {})
{
    const auto p = outcome_probabilities(b, state);
    const auto r = pattern_expectation<16>(
        p, n,
        [&](std::span<const std::int64_t> k) {
            const StokesVector s = detail::estimate_from_counts(k, b, false);
            std::array<double, 16> v{};
            std::copy(s.components().begin(), s.components().end(), v.begin());
            return v;
        },
        opts);
    StokesVector out(state.qubit_count());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = r[i];
    return out;
}

/// Sum of c_k p_k over all patterns; 1 up to rounding.
inline double total_pattern_weight(const StokesVector& state, const InstrumentMatrix& b, std::int64_t n,
                                   const ExactOptions& opts = {})
{
    const auto p = outcome_probabilities(b, state);
    double wsum = 0.0;
    pattern_expectation<1>(
        p, n, [](std::span<const std::int64_t>) { return std::array<double, 1>{0.0}; }, opts, &wsum);
    return wsum;
}

/// Sum over every raw outcome sequence of its probability times the trace
/// distance of the estimate it produces. Limited to m^n <= max_sequences.
inline double brute_force_average(const StokesVector& state, const InstrumentMatrix& b, std::int64_t n,
                                  const DensityMatrix& reference, std::uint64_t max_sequences = 65536)
{
    const int m = b.outcomes();
    if (n < 1)
        throw std::invalid_argument("brute_force_average: N must be at least 1");
    std::uint64_t sequences = 1;
    for (std::int64_t i = 0; i < n; ++i) {
        sequences *= static_cast<std::uint64_t>(m);
        if (sequences > max_sequences)
            throw std::invalid_argument("brute_force_average: too many sequences (N too large)");
    }
    const auto p = outcome_probabilities(b, state);
    CompensatedSum acc;
    std::vector<int> digits(static_cast<std::size_t>(n));
    for (std::uint64_t seq = 0; seq < sequences; ++seq) {
        std::uint64_t code = seq;
        double prob = 1.0;
        CountVector counts(m);
        for (std::int64_t e = 0; e < n; ++e) {
            const int outcome = static_cast<int>(code % static_cast<std::uint64_t>(m));
            code /= static_cast<std::uint64_t>(m);
            prob *= p[outcome];
            counts.add(outcome);
        }
        if (prob == 0.0)
            continue;
        const StokesVector est = linear_reconstruct(counts, b);
        acc.add(prob * trace_distance(reference, stokes_to_density(est)));
    }
    return acc.value();
}

// Accuracy curves -------------------------------------------------------------

enum class CurveMethod { exact, monte_carlo };

inline std::string_view to_string(CurveMethod m) noexcept
{
    return m == CurveMethod::exact ? "exact" : "monte_carlo";
}

struct CurvePoint {
    std::int64_t n = 0;
    double d_avg = 0.0;
    double std_error = 0.0;
};

class AccuracyCurve {
public:
    AccuracyCurve(CurveMethod method, std::string state_label, bool normalized = false)
        : method_(method), state_(std::move(state_label)), normalized_(normalized)
    {
    }

    void push_back(const CurvePoint& pt)
    {
        if (!points_.empty() && pt.n <= points_.back().n)
            throw std::invalid_argument("accuracy curve: N must be strictly increasing");
        if (!(pt.d_avg >= 0.0))
            throw std::invalid_argument("accuracy curve: d_avg must be nonnegative");
        if (method_ == CurveMethod::exact && pt.std_error != 0.0)
            throw std::invalid_argument("accuracy curve: exact points carry no standard error");
        points_.push_back(pt);
    }

    CurveMethod method() const noexcept { return method_; }
    const std::string& state_label() const noexcept { return state_; }
    bool normalized() const noexcept { return normalized_; }
    const std::vector<CurvePoint>& points() const noexcept { return points_; }
    std::size_t size() const noexcept { return points_.size(); }
    const CurvePoint& operator[](std::size_t i) const noexcept { return points_[i]; }

    /// d_avg at exactly N, throws if absent.
    double at(std::int64_t n) const
    {
        auto it = std::lower_bound(points_.begin(), points_.end(), n,
                                   [](const CurvePoint& p, std::int64_t v) { return p.n < v; });
        if (it == points_.end() || it->n != n)
            throw std::out_of_range("accuracy curve has no point at N=" + std::to_string(n));
        return it->d_avg;
    }

private:
    CurveMethod method_;
    std::string state_;
    bool normalized_;
    std::vector<CurvePoint> points_;
};

inline AccuracyCurve exact_curve(const NamedState& state, const InstrumentMatrix& b, const DensityMatrix& reference,
                                 std::int64_t n_min, std::int64_t n_max, const ExactOptions& opts = {})
{
    if (n_min < 1 || n_max < n_min)
        throw std::invalid_argument("exact_curve: need 1 <= n_min <= n_max");
    AccuracyCurve curve(CurveMethod::exact, state.name());
    for (std::int64_t n = n_min; n <= n_max; ++n)
        curve.push_back({n, average_trace_distance_exact(state.stokes, b, n, reference, opts), 0.0});
    return curve;
}

// Monte Carlo -----------------------------------------------------------------

struct McOptions {
    int runs = 40;
    std::uint64_t seed = 1;
    bool project = false;
    int threads = 0;
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

namespace detail {

inline McEstimate mean_and_error(std::span<const double> values)
{
    CompensatedSum s;
    for (double v : values)
        s.add(v);
    const double n = static_cast<double>(values.size());
    const double mean = s.value() / n;
    CompensatedSum ss;
    for (double v : values)
        ss.add((v - mean) * (v - mean));
    const double var = values.size() > 1 ? ss.value() / (n - 1.0) : 0.0;
    return {mean, std::sqrt(var / n)};
}

} // namespace detail

/// Mean and standard error of D over `runs` independent count vectors of n
/// events. Run r draws from Rng(seed, r).
inline McEstimate average_trace_distance_mc(const StokesVector& state, const InstrumentMatrix& b, std::int64_t n,
                                            const DensityMatrix& reference, const McOptions& opts)
{
    if (opts.runs < 2)
        throw std::invalid_argument("Monte Carlo needs at least two runs");
    if (n < 1)
        throw std::invalid_argument("Monte Carlo needs N >= 1");
    const auto p = outcome_probabilities(b, state);
    const CategoricalSampler sampler(p);
    const int m = b.outcomes();
    std::vector<double> d(static_cast<std::size_t>(opts.runs));
    constexpr std::size_t kBlock = 256;
    const std::size_t blocks = (d.size() + kBlock - 1) / kBlock;
    parallel_for(blocks, opts.threads, [&](std::size_t blk) {
        std::array<std::int64_t, InstrumentMatrix::kMaxOutcomes> counts{};
        const std::size_t end = std::min(d.size(), (blk + 1) * kBlock);
        for (std::size_t r = blk * kBlock; r < end; ++r) {
            Rng rng(opts.seed, r);
            std::fill(counts.begin(), counts.end(), 0);
            for (std::int64_t e = 0; e < n; ++e)
                ++counts[sampler.draw(rng)];
            d[r] = detail::distance_for_counts(std::span<const std::int64_t>(counts.data(), std::size_t(m)), b,
                                               reference, opts.project);
        }
    });
    return detail::mean_and_error(d);
}

/// Per-copy curve N = 1..n_max: each run follows one event stream and
/// reconstructs after every event; values are averaged over runs per N.
inline AccuracyCurve mc_cumulative_curve(const NamedState& state, const InstrumentMatrix& b, std::int64_t n_max,
                                         const DensityMatrix& reference, const McOptions& opts)
{
    if (opts.runs < 2)
        throw std::invalid_argument("Monte Carlo needs at least two runs");
    if (n_max < 1)
        throw std::invalid_argument("Monte Carlo needs N >= 1");
    const auto p = outcome_probabilities(b, state.stokes);
    const CategoricalSampler sampler(p);
    const int m = b.outcomes();
    const auto runs = static_cast<std::size_t>(opts.runs);
    const auto len = static_cast<std::size_t>(n_max);
    std::vector<double> d(runs * len);
    parallel_for(runs, opts.threads, [&](std::size_t r) {
        Rng rng(opts.seed, r);
        std::array<std::int64_t, InstrumentMatrix::kMaxOutcomes> counts{};
        for (std::size_t e = 0; e < len; ++e) {
            ++counts[sampler.draw(rng)];
            d[r * len + e] = detail::distance_for_counts(
                std::span<const std::int64_t>(counts.data(), std::size_t(m)), b, reference, opts.project);
        }
    });
    AccuracyCurve curve(CurveMethod::monte_carlo, state.name());
    std::vector<double> column(runs);
    for (std::size_t e = 0; e < len; ++e) {
        for (std::size_t r = 0; r < runs; ++r)
            column[r] = d[r * len + e];
        const auto est = detail::mean_and_error(column);
        curve.push_back({static_cast<std::int64_t>(e + 1), est.mean, est.std_error});
    }
    return curve;
}

// Fitting and normalization ---------------------------------------------------

struct PowerLawFit {
    double a = 0.0;
    double c = 0.0;
    double residual_rms = 0.0;
    std::int64_t n_min = 0;
    std::int64_t n_max = 0;
    std::size_t points = 0;
};

/// Least squares of log d against log N over the points with N in
/// [n_min, n_max]; d = a / N^c.
inline PowerLawFit fit_power_law(const AccuracyCurve& curve, std::int64_t n_min, std::int64_t n_max)
{
    std::vector<double> x, y;
    for (const auto& pt : curve.points()) {
        if (pt.n < n_min || pt.n > n_max)
            continue;
        if (!(pt.d_avg > 0.0))
            throw std::invalid_argument("fit_power_law: non-positive d_avg at N=" + std::to_string(pt.n));
        x.push_back(std::log(static_cast<double>(pt.n)));
        y.push_back(std::log(pt.d_avg));
    }
    if (x.size() < 3)
        throw std::invalid_argument("fit_power_law: fewer than three points in range");
    const double k = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / k;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / k;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0)
        throw std::invalid_argument("fit_power_law: degenerate N range");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (intercept + slope * x[i]);
        rss += r * r;
    }
    return {std::exp(intercept), -slope, std::sqrt(rss / k), n_min, n_max, x.size()};
}

/// Number of free state parameters, 4^n - 1.
constexpr int free_parameters(int qubit_count) noexcept { return (1 << (2 * qubit_count)) - 1; }

inline AccuracyCurve normalize_curve(const AccuracyCurve& curve, int qubit_count)
{
    if (curve.normalized())
        throw std::invalid_argument("normalize_curve: curve is already normalized");
    if (qubit_count != 1 && qubit_count != 2)
        throw std::invalid_argument("normalize_curve: qubit count must be 1 or 2");
    const double f = free_parameters(qubit_count);
    AccuracyCurve out(curve.method(), curve.state_label(), true);
    for (const auto& pt : curve.points())
        out.push_back({pt.n, pt.d_avg / f, pt.std_error / f});
    return out;
}

} // namespace tetratomo
