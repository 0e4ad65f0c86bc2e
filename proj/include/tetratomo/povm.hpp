#pragma once

// Tetrahedron measurement and its instrument matrix.

#include "tetratomo/qstate.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace tetratomo {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) noexcept
{
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double norm(const Vec3& a) noexcept { return std::sqrt(dot(a, a)); }

/// Four measurement directions on the Poincare sphere.
struct Tetrahedron {
    std::array<Vec3, 4> vertices{};
};

/// Vertex 1 is (sqrt(1/3), sqrt(2/3), 0). The other three are spaced by 120
/// degrees of azimuth around it in the frame (u, v) with
/// u = (-sqrt(2/3), sqrt(1/3), 0) and v = (0, 0, 1), at polar angle
/// arccos(-1/3) from vertex 1.
inline Tetrahedron paper_tetrahedron()
{
    const double r1 = std::sqrt(1.0 / 3.0);
    const double r2 = std::sqrt(2.0 / 3.0);
    const Vec3 b1{r1, r2, 0.0};
    const Vec3 u{-r2, r1, 0.0};
    const Vec3 v{0.0, 0.0, 1.0};
    const double cos_t = -1.0 / 3.0;
    const double sin_t = std::sqrt(8.0) / 3.0;

    Tetrahedron t;
    t.vertices[0] = b1;
    for (int j = 1; j < 4; ++j) {
        const double phi = 2.0 * std::numbers::pi * (j - 1) / 3.0;
        const double cu = std::cos(phi);
        const double sv = std::sin(phi);
        for (int k = 0; k < 3; ++k)
            t.vertices[j][k] = cos_t * b1[k] + sin_t * (cu * u[k] + sv * v[k]);
    }
    return t;
}

/// Cube-corner tetrahedron (1,1,1)/sqrt(3) and its sign-flipped companions.
inline Tetrahedron canonical_tetrahedron()
{
    const double r = 1.0 / std::sqrt(3.0);
    return Tetrahedron{{Vec3{r, r, r}, Vec3{r, -r, -r}, Vec3{-r, r, -r}, Vec3{-r, -r, r}}};
}

/// Largest violation of the regular-tetrahedron identities: unit norms,
/// pairwise dot products of -1/3, zero vertex sum and sum_j b_j b_j^T = 4/3 I.
inline double tetrahedron_defect(const Tetrahedron& t)
{
    double d = 0.0;
    Vec3 sum{};
    std::array<std::array<double, 3>, 3> frame{};
    for (int i = 0; i < 4; ++i) {
        const Vec3& bi = t.vertices[i];
        d = std::max(d, std::abs(norm(bi) - 1.0));
        for (int j = i + 1; j < 4; ++j)
            d = std::max(d, std::abs(dot(bi, t.vertices[j]) + 1.0 / 3.0));
        for (int k = 0; k < 3; ++k) {
            sum[k] += bi[k];
            for (int l = 0; l < 3; ++l)
                frame[k][l] += bi[k] * bi[l];
        }
    }
    for (int k = 0; k < 3; ++k) {
        d = std::max(d, std::abs(sum[k]));
        for (int l = 0; l < 3; ++l)
            d = std::max(d, std::abs(frame[k][l] - (k == l ? 4.0 / 3.0 : 0.0)));
    }
    return d;
}

namespace detail {

/// Gauss-Jordan inverse with partial pivoting of a row-major n x n matrix.
inline std::vector<double> invert(std::span<const double> a, int n)
{
    std::vector<double> m(a.begin(), a.end());
    std::vector<double> inv(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
        inv[i * n + i] = 1.0;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(m[r * n + col]) > std::abs(m[piv * n + col]))
                piv = r;
        if (std::abs(m[piv * n + col]) < 1e-300)
            throw std::logic_error("instrument matrix is singular");
        if (piv != col)
            for (int k = 0; k < n; ++k) {
                std::swap(m[piv * n + k], m[col * n + k]);
                std::swap(inv[piv * n + k], inv[col * n + k]);
            }
        const double d = m[col * n + col];
        for (int k = 0; k < n; ++k) {
            m[col * n + k] /= d;
            inv[col * n + k] /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col)
                continue;
            const double f = m[r * n + col];
            if (f == 0.0)
                continue;
            for (int k = 0; k < n; ++k) {
                m[r * n + k] -= f * m[col * n + k];
                inv[r * n + k] -= f * inv[col * n + k];
            }
        }
    }
    return inv;
}

} // namespace detail

/// Linear map from Stokes vectors to outcome probabilities. For one qubit row
/// j is (1, b_j)/4; the two-qubit matrix is the Kronecker square of the
/// one-qubit matrix, with outcome index 4*j + k for detectors (j, k).
class InstrumentMatrix {
public:
    static constexpr int kMaxOutcomes = 16;

    InstrumentMatrix(const Tetrahedron& t, int qubit_count) : qubits_(qubit_count)
    {
        if (qubit_count != 1 && qubit_count != 2)
            throw std::invalid_argument("instrument_matrix: qubit count must be 1 or 2");
        std::array<double, 16> one{};
        for (int j = 0; j < 4; ++j) {
            one[j * 4] = 0.25;
            for (int k = 0; k < 3; ++k)
                one[j * 4 + 1 + k] = 0.25 * t.vertices[j][k];
        }
        m_ = qubit_count == 1 ? 4 : 16;
        if (qubit_count == 1) {
            std::copy(one.begin(), one.end(), b_.begin());
        } else {
            for (int j = 0; j < 4; ++j)
                for (int k = 0; k < 4; ++k)
                    for (int mu = 0; mu < 4; ++mu)
                        for (int nu = 0; nu < 4; ++nu)
                            b_[(4 * j + k) * m_ + (4 * mu + nu)] = one[j * 4 + mu] * one[k * 4 + nu];
        }
        const auto inv = detail::invert(std::span<const double>(b_.data(), std::size_t(m_ * m_)), m_);
        std::copy(inv.begin(), inv.end(), binv_.begin());

        double defect = 0.0;
        for (int i = 0; i < m_; ++i)
            for (int j = 0; j < m_; ++j) {
                double s = 0.0;
                for (int k = 0; k < m_; ++k)
                    s += b_[i * m_ + k] * binv_[k * m_ + j];
                defect = std::max(defect, std::abs(s - (i == j ? 1.0 : 0.0)));
            }
        if (defect > 1e-10)
            throw std::logic_error("instrument matrix inverse failed verification");
    }

    int qubit_count() const noexcept { return qubits_; }
    int outcomes() const noexcept { return m_; }

    double operator()(int i, int j) const noexcept { return b_[i * m_ + j]; }
    double inverse(int i, int j) const noexcept { return binv_[i * m_ + j]; }

    /// B * s without any physicality check.
    std::vector<double> apply(const StokesVector& s) const
    {
        if (static_cast<int>(s.size()) != m_)
            throw std::invalid_argument("Stokes vector does not match instrument dimension");
        std::vector<double> p(m_, 0.0);
        for (int i = 0; i < m_; ++i) {
            double acc = 0.0;
            for (int j = 0; j < m_; ++j)
                acc += b_[i * m_ + j] * s[j];
            p[i] = acc;
        }
        return p;
    }

    /// B^-1 * values, e.g. relative frequencies to a Stokes vector.
    StokesVector invert(std::span<const double> values) const
    {
        if (static_cast<int>(values.size()) != m_)
            throw std::invalid_argument("value vector does not match instrument dimension");
        StokesVector s(qubits_);
        for (int i = 0; i < m_; ++i) {
            double acc = 0.0;
            for (int j = 0; j < m_; ++j)
                acc += binv_[i * m_ + j] * values[j];
            s[i] = acc;
        }
        return s;
    }

private:
    int qubits_;
    int m_ = 4;
    std::array<double, kMaxOutcomes * kMaxOutcomes> b_{};
    std::array<double, kMaxOutcomes * kMaxOutcomes> binv_{};
};

inline InstrumentMatrix instrument_matrix(const Tetrahedron& t, int qubit_count)
{
    return InstrumentMatrix(t, qubit_count);
}

/// Outcome probabilities of a physical normalized state. Rounding residue in
/// [-1e-12, 0) is clipped to zero.
inline std::vector<double> outcome_probabilities(const InstrumentMatrix& b, const StokesVector& s)
{
    constexpr double kTol = 1e-12;
    if (!s.is_normalized())
        throw std::invalid_argument("outcome_probabilities: state is not normalized (S0 != 1)");
    auto p = b.apply(s);
    double total = 0.0;
    for (double& x : p) {
        if (x < -kTol || x > 1.0 + kTol)
            throw std::invalid_argument("outcome_probabilities: state is unphysical for this measurement");
        // rounding residue at a face of the tetrahedron is a true zero
        x = std::abs(x) <= kTol ? 0.0 : std::min(x, 1.0);
        total += x;
    }
    if (!s.is_physical())
        throw std::invalid_argument("outcome_probabilities: state is unphysical");
    if (std::abs(total - 1.0) > kTol * p.size())
        throw std::logic_error("outcome_probabilities: probabilities do not sum to one");
    return p;
}

} // namespace tetratomo
