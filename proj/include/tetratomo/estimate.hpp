#pragma once

// State estimates from count vectors: linear inversion, projection onto the
// physical states and likelihood regions on the sphere of pure states.

#include "tetratomo/povm.hpp"
#include "tetratomo/qstate.hpp"
#include "tetratomo/sim.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace tetratomo {

inline constexpr double kDefaultThresholdDelta = 3.0;

/// B^-1 applied to relative frequencies. The result is normalized but may be
/// unphysical.
inline StokesVector linear_reconstruct(const CountVector& counts, const InstrumentMatrix& b)
{
    if (counts.total() <= 0)
        throw std::invalid_argument("linear_reconstruct: no events");
    if (counts.outcomes() != b.outcomes())
        throw std::invalid_argument("linear_reconstruct: count vector does not match instrument");
    std::array<double, InstrumentMatrix::kMaxOutcomes> freq{};
    const double n = static_cast<double>(counts.total());
    for (int j = 0; j < counts.outcomes(); ++j)
        freq[j] = static_cast<double>(counts[j]) / n;
    return b.invert(std::span<const double>(freq.data(), std::size_t(counts.outcomes())));
}

/// Nearest physical state. One qubit: the Bloch vector is pulled back onto
/// the unit sphere when it lies outside. Two qubits: negative eigenvalues of
/// the density matrix are set to zero and the spectrum is rescaled to unit
/// trace, keeping the eigenvectors.
inline StokesVector project_to_physical(const StokesVector& s)
{
    if (s.qubit_count() == 1) {
        const double r = s.bloch_norm();
        if (r <= 1.0)
            return s;
        return StokesVector{1.0, s[1] / r, s[2] / r, s[3] / r};
    }
    const auto eig = hermitian_eigen(stokes_to_density(s));
    if (eig.values[eig.dim - 1] >= 0.0 && std::abs(s[0] - 1.0) <= kPhysicalTol)
        return s;
    std::array<double, ComplexMatrix::kMaxDim> clipped{};
    double total = 0.0;
    for (int k = 0; k < eig.dim; ++k) {
        clipped[k] = std::max(eig.values[k], 0.0);
        total += clipped[k];
    }
    if (total <= 0.0)
        throw std::invalid_argument("project_to_physical: spectrum has no positive part");
    ComplexMatrix rho(eig.dim);
    for (int k = 0; k < eig.dim; ++k) {
        const double w = clipped[k] / total;
        if (w == 0.0)
            continue;
        for (int i = 0; i < eig.dim; ++i)
            for (int j = 0; j < eig.dim; ++j)
                rho(i, j) += w * eig.vectors(i, k) * std::conj(eig.vectors(j, k));
    }
    for (int i = 0; i < eig.dim; ++i)
        for (int j = i + 1; j < eig.dim; ++j) {
            const cplx avg = 0.5 * (rho(i, j) + std::conj(rho(j, i)));
            rho(i, j) = avg;
            rho(j, i) = std::conj(avg);
        }
    return density_to_stokes(DensityMatrix(rho));
}

namespace detail {

/// sum_j n_j log p_j with 0 log 0 = 0 and -inf for n_j > 0, p_j = 0.
inline double multinomial_log_kernel(std::span<const std::int64_t> n, std::span<const double> logp)
{
    double s = 0.0;
    for (std::size_t j = 0; j < n.size(); ++j) {
        if (n[j] == 0)
            continue;
        if (logp[j] == -std::numeric_limits<double>::infinity())
            return -std::numeric_limits<double>::infinity();
        s += static_cast<double>(n[j]) * logp[j];
    }
    return s;
}

inline std::vector<double> safe_log(std::span<const double> p)
{
    std::vector<double> out(p.size());
    for (std::size_t j = 0; j < p.size(); ++j)
        out[j] = p[j] > 0.0 ? std::log(p[j]) : -std::numeric_limits<double>::infinity();
    return out;
}

} // namespace detail

/// Multinomial log-likelihood of `counts` at state `s`, without the
/// multiplicity term.
inline double log_likelihood(const CountVector& counts, const StokesVector& s, const InstrumentMatrix& b)
{
    if (counts.outcomes() != b.outcomes())
        throw std::invalid_argument("log_likelihood: count vector does not match instrument");
    const auto p = outcome_probabilities(b, s);
    const auto logp = detail::safe_log(p);
    return detail::multinomial_log_kernel(counts.counts(), logp);
}

struct GridPoint {
    Vec3 direction{};
    double longitude_deg = 0.0;
    double latitude_deg = 0.0;
    double log_likelihood = 0.0;
};

struct LikelihoodRegion {
    std::vector<GridPoint> grid;
    std::vector<bool> members;
    Vec3 max_point{};
    std::size_t max_index = 0;
    double threshold_delta = kDefaultThresholdDelta;

    std::size_t member_count() const noexcept
    {
        return static_cast<std::size_t>(std::count(members.begin(), members.end(), true));
    }
};

/// Latitude-longitude grid of one-qubit pure states with the outcome
/// log-probabilities cached, for repeated likelihood scans.
///
/// Longitudes are 2*pi*i/R, polar angles pi*(k + 1/2)/R for i, k in [0, R);
/// points are ordered polar-angle-major. Axis 3 is the pole.
class PureStateGrid {
public:
    PureStateGrid(const InstrumentMatrix& b, int resolution) : resolution_(resolution)
    {
        if (b.qubit_count() != 1)
            throw std::invalid_argument("likelihood grid is defined for one qubit only");
        if (resolution < 16)
            throw std::invalid_argument("grid resolution must be at least 16");
        const std::size_t count = static_cast<std::size_t>(resolution) * resolution;
        points_.reserve(count);
        logp_.reserve(count * 4);
        for (int k = 0; k < resolution; ++k) {
            const double theta = std::numbers::pi * (k + 0.5) / resolution;
            for (int i = 0; i < resolution; ++i) {
                const double phi = 2.0 * std::numbers::pi * i / resolution;
                GridPoint g;
                g.direction = {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                               std::cos(theta)};
                g.longitude_deg = 360.0 * i / resolution;
                g.latitude_deg = 90.0 - 180.0 * (k + 0.5) / resolution;
                const auto p = b.apply(StokesVector::from_bloch(g.direction[0], g.direction[1],
                                                                g.direction[2]));
                for (double x : p)
                    logp_.push_back(x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity());
                points_.push_back(g);
            }
        }
    }

    int resolution() const noexcept { return resolution_; }
    std::size_t size() const noexcept { return points_.size(); }

    LikelihoodRegion evaluate(const CountVector& counts, double threshold_delta) const
    {
        if (!(threshold_delta > 0.0))
            throw std::invalid_argument("threshold_delta must be positive");
        if (counts.outcomes() != 4)
            throw std::invalid_argument("likelihood grid expects four-outcome counts");
        LikelihoodRegion r;
        r.threshold_delta = threshold_delta;
        r.grid = points_;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < points_.size(); ++i) {
            const double ll = detail::multinomial_log_kernel(
                counts.counts(), std::span<const double>(logp_.data() + 4 * i, 4));
            r.grid[i].log_likelihood = ll;
            if (ll > best) {
                best = ll;
                r.max_index = i;
            }
        }
        r.max_point = r.grid[r.max_index].direction;
        r.members.resize(points_.size());
        for (std::size_t i = 0; i < points_.size(); ++i)
            r.members[i] = r.grid[i].log_likelihood >= best - threshold_delta;
        return r;
    }

private:
    int resolution_;
    std::vector<GridPoint> points_;
    std::vector<double> logp_;
};

inline LikelihoodRegion likelihood_region(const CountVector& counts, const InstrumentMatrix& b,
                                          int grid_resolution, double threshold_delta = kDefaultThresholdDelta)
{
    return PureStateGrid(b, grid_resolution).evaluate(counts, threshold_delta);
}

} // namespace tetratomo
