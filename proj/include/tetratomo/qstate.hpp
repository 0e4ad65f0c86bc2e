#pragma once

// One- and two-qubit state representations.
//
// Stokes convention used throughout the library: component 0 is the identity,
// component 1 is the H/V axis (horizontal light is (1,1,0,0), i.e. |H><H| is
// the +1 eigenprojector of axis 1), component 2 the diagonal axis and
// component 3 the circular axis. In the H/V matrix basis the three axes are
// represented by diag(1,-1), [[0,1],[1,0]] and [[0,-i],[i,0]] respectively,
// which keeps (1,2,3) a right-handed frame. Two-qubit components are
// flattened row-major, index 4*mu + nu.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tetratomo {

using cplx = std::complex<double>;

inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kPhysicalTol = 1e-10;

/// Small dense complex square matrix, dimension 1..4, stored inline.
class ComplexMatrix {
public:
    static constexpr int kMaxDim = 4;

    ComplexMatrix() : ComplexMatrix(2) {}

    explicit ComplexMatrix(int dim) : dim_(dim)
    {
        if (dim < 1 || dim > kMaxDim)
            throw std::invalid_argument("ComplexMatrix: dimension must be in 1..4");
    }

    static ComplexMatrix identity(int dim)
    {
        ComplexMatrix m(dim);
        for (int i = 0; i < dim; ++i)
            m(i, i) = 1.0;
        return m;
    }

    int dim() const noexcept { return dim_; }

    cplx& operator()(int i, int j) noexcept { return a_[i * kMaxDim + j]; }
    const cplx& operator()(int i, int j) const noexcept { return a_[i * kMaxDim + j]; }

    ComplexMatrix adjoint() const
    {
        ComplexMatrix r(dim_);
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j)
                r(i, j) = std::conj((*this)(j, i));
        return r;
    }

    cplx trace() const noexcept
    {
        cplx t = 0.0;
        for (int i = 0; i < dim_; ++i)
            t += (*this)(i, i);
        return t;
    }

    double frobenius_norm() const noexcept
    {
        double s = 0.0;
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j)
                s += std::norm((*this)(i, j));
        return std::sqrt(s);
    }

    double max_abs() const noexcept
    {
        double s = 0.0;
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j)
                s = std::max(s, std::abs((*this)(i, j)));
        return s;
    }

    /// Largest |m(i,j) - conj(m(j,i))|.
    double hermitian_defect() const noexcept
    {
        double d = 0.0;
        for (int i = 0; i < dim_; ++i)
            for (int j = i; j < dim_; ++j)
                d = std::max(d, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
        return d;
    }

    bool is_hermitian(double tol = kHermitianTol) const noexcept
    {
        return hermitian_defect() <= tol * std::max(1.0, max_abs());
    }

    ComplexMatrix& operator+=(const ComplexMatrix& o)
    {
        check_same(o);
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j)
                (*this)(i, j) += o(i, j);
        return *this;
    }

    ComplexMatrix& operator-=(const ComplexMatrix& o)
    {
        check_same(o);
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j)
                (*this)(i, j) -= o(i, j);
        return *this;
    }

    ComplexMatrix& operator*=(cplx s) noexcept
    {
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j)
                (*this)(i, j) *= s;
        return *this;
    }

    friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
    friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
    friend ComplexMatrix operator*(ComplexMatrix a, cplx s) { return a *= s; }

    friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b)
    {
        a.check_same(b);
        ComplexMatrix r(a.dim_);
        for (int i = 0; i < a.dim_; ++i)
            for (int k = 0; k < a.dim_; ++k) {
                const cplx aik = a(i, k);
                for (int j = 0; j < a.dim_; ++j)
                    r(i, j) += aik * b(k, j);
            }
        return r;
    }

    /// Kronecker product; the result must fit in kMaxDim.
    friend ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b)
    {
        ComplexMatrix r(a.dim_ * b.dim_);
        for (int i = 0; i < a.dim_; ++i)
            for (int j = 0; j < a.dim_; ++j)
                for (int k = 0; k < b.dim_; ++k)
                    for (int l = 0; l < b.dim_; ++l)
                        r(i * b.dim_ + k, j * b.dim_ + l) = a(i, j) * b(k, l);
        return r;
    }

private:
    void check_same(const ComplexMatrix& o) const
    {
        if (o.dim_ != dim_)
            throw std::invalid_argument("ComplexMatrix: dimension mismatch");
    }

    int dim_;
    std::array<cplx, kMaxDim * kMaxDim> a_{};
};

namespace detail {

inline int qubits_for_stokes_length(std::size_t n)
{
    if (n == 4)
        return 1;
    if (n == 16)
        return 2;
    throw std::invalid_argument("Stokes vector must have 4 or 16 components");
}

inline int qubits_for_dimension(int d)
{
    if (d == 2)
        return 1;
    if (d == 4)
        return 2;
    throw std::invalid_argument("density matrix must be 2x2 or 4x4");
}

} // namespace detail

/// Real Stokes vector of a one- or two-qubit state.
class StokesVector {
public:
    static constexpr std::size_t kMaxSize = 16;

    StokesVector() : StokesVector(1) {}

    /// All-zero vector for the given qubit count.
    explicit StokesVector(int qubit_count) : qubits_(qubit_count)
    {
        if (qubit_count != 1 && qubit_count != 2)
            throw std::invalid_argument("qubit count must be 1 or 2");
    }

    explicit StokesVector(std::span<const double> components)
        : qubits_(detail::qubits_for_stokes_length(components.size()))
    {
        std::copy(components.begin(), components.end(), c_.begin());
    }

    StokesVector(std::initializer_list<double> components)
        : StokesVector(std::span<const double>(components.begin(), components.size()))
    {
    }

    static StokesVector from_bloch(double s1, double s2, double s3)
    {
        return StokesVector{1.0, s1, s2, s3};
    }

    int qubit_count() const noexcept { return qubits_; }
    std::size_t size() const noexcept { return qubits_ == 1 ? 4 : 16; }

    double& operator[](std::size_t i) noexcept { return c_[i]; }
    double operator[](std::size_t i) const noexcept { return c_[i]; }

    std::span<const double> components() const noexcept { return {c_.data(), size()}; }
    std::span<double> components() noexcept { return {c_.data(), size()}; }

    /// (S1, S2, S3) of a one-qubit vector.
    std::array<double, 3> bloch() const
    {
        require_one_qubit();
        return {c_[1], c_[2], c_[3]};
    }

    double bloch_norm() const
    {
        require_one_qubit();
        return std::sqrt(c_[1] * c_[1] + c_[2] * c_[2] + c_[3] * c_[3]);
    }

    bool is_normalized(double tol = kPhysicalTol) const noexcept
    {
        return std::abs(c_[0] - 1.0) <= tol;
    }

    /// True when the density matrix has no eigenvalue below -kPhysicalTol.
    /// Evaluated on every call.
    bool is_physical() const;

    friend bool operator==(const StokesVector& a, const StokesVector& b) noexcept
    {
        return a.qubits_ == b.qubits_ && a.c_ == b.c_;
    }

private:
    void require_one_qubit() const
    {
        if (qubits_ != 1)
            throw std::logic_error("Bloch components are only defined for one qubit");
    }

    int qubits_;
    std::array<double, kMaxSize> c_{};
};

/// Hermitian d x d matrix (d = 2 or 4) representing a possibly unnormalized
/// and possibly unphysical state.
class DensityMatrix {
public:
    DensityMatrix() : DensityMatrix(ComplexMatrix::identity(2) * 0.5) {}

    explicit DensityMatrix(const ComplexMatrix& entries)
        : m_(entries), qubits_(detail::qubits_for_dimension(entries.dim()))
    {
        if (!m_.is_hermitian())
            throw std::invalid_argument("density matrix is not Hermitian");
    }

    int qubit_count() const noexcept { return qubits_; }
    int dim() const noexcept { return m_.dim(); }
    const ComplexMatrix& matrix() const noexcept { return m_; }
    cplx operator()(int i, int j) const noexcept { return m_(i, j); }
    double trace() const noexcept { return m_.trace().real(); }

private:
    ComplexMatrix m_;
    int qubits_;
};

/// Identity followed by the three Stokes-axis matrices (see file comment).
inline const std::array<ComplexMatrix, 4>& stokes_axes()
{
    static const std::array<ComplexMatrix, 4> axes = [] {
        std::array<ComplexMatrix, 4> a{};
        a[0] = ComplexMatrix::identity(2);
        a[1](0, 0) = 1.0;
        a[1](1, 1) = -1.0;
        a[2](0, 1) = 1.0;
        a[2](1, 0) = 1.0;
        a[3](0, 1) = cplx(0.0, -1.0);
        a[3](1, 0) = cplx(0.0, 1.0);
        return a;
    }();
    return axes;
}

/// sigma_mu (x) sigma_nu at flat index 4*mu + nu.
inline const std::array<ComplexMatrix, 16>& two_qubit_axes()
{
    static const std::array<ComplexMatrix, 16> axes = [] {
        std::array<ComplexMatrix, 16> a{};
        const auto& s = stokes_axes();
        for (int mu = 0; mu < 4; ++mu)
            for (int nu = 0; nu < 4; ++nu)
                a[4 * mu + nu] = kron(s[mu], s[nu]);
        return a;
    }();
    return axes;
}

inline DensityMatrix stokes_to_density(const StokesVector& s)
{
    if (s.qubit_count() == 1) {
        ComplexMatrix m(2);
        m(0, 0) = 0.5 * (s[0] + s[1]);
        m(1, 1) = 0.5 * (s[0] - s[1]);
        m(0, 1) = 0.5 * cplx(s[2], -s[3]);
        m(1, 0) = 0.5 * cplx(s[2], s[3]);
        return DensityMatrix(m);
    }
    const auto& axes = two_qubit_axes();
    ComplexMatrix m(4);
    for (std::size_t k = 0; k < 16; ++k) {
        if (s[k] == 0.0)
            continue;
        const double w = 0.25 * s[k];
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                m(i, j) += w * axes[k](i, j);
    }
    return DensityMatrix(m);
}

inline StokesVector density_to_stokes(const DensityMatrix& rho)
{
    const ComplexMatrix& m = rho.matrix();
    if (rho.qubit_count() == 1) {
        return StokesVector{(m(0, 0) + m(1, 1)).real(), (m(0, 0) - m(1, 1)).real(),
                            (m(0, 1) + m(1, 0)).real(), (m(1, 0) - m(0, 1)).imag()};
    }
    const auto& axes = two_qubit_axes();
    StokesVector s(2);
    for (std::size_t k = 0; k < 16; ++k) {
        // tr(rho A) = sum_ij rho_ij A_ji
        cplx t = 0.0;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                t += m(i, j) * axes[k](j, i);
        s[k] = t.real();
    }
    return s;
}

struct EigenDecomposition {
    int dim = 0;
    std::array<double, ComplexMatrix::kMaxDim> values{}; // descending
    ComplexMatrix vectors{2};                            // column k pairs with values[k]
};

/// Cyclic complex Jacobi diagonalization of a small Hermitian matrix.
///
/// Each rotation first removes the phase of the pivot a(p,q), then applies
/// the real symmetric Jacobi rotation. Sweeps stop when the off-diagonal
/// Frobenius norm falls to 1e-14 relative to the matrix norm.
inline EigenDecomposition hermitian_eigen(const ComplexMatrix& input)
{
    constexpr double kOffTol = 1e-14;
    constexpr int kMaxSweeps = 100;

    if (!input.is_hermitian())
        throw std::invalid_argument("hermitian_eigen: matrix is not Hermitian");

    const int n = input.dim();
    ComplexMatrix a = input;
    ComplexMatrix v = ComplexMatrix::identity(n);
    for (int i = 0; i < n; ++i)
        a(i, i) = a(i, i).real();

    const double scale = input.frobenius_norm();
    auto off_norm = [&] {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j)
                    s += std::norm(a(i, j));
        return std::sqrt(s);
    };

    int sweep = 0;
    for (; sweep < kMaxSweeps; ++sweep) {
        const double off = off_norm();
        if (off <= kOffTol * scale || off == 0.0)
            break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double r = std::abs(a(p, q));
                if (r == 0.0)
                    continue;
                const cplx phase = a(p, q) / r; // e^{i phi}
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double tau = (aqq - app) / (2.0 * r);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                // G = diag(1, e^{-i phi}) restricted to (p,q), then real rotation.
                const cplx gpp = c;
                const cplx gpq = s;
                const cplx gqp = -s * std::conj(phase);
                const cplx gqq = c * std::conj(phase);

                for (int k = 0; k < n; ++k) { // a <- a G
                    const cplx akp = a(k, p);
                    const cplx akq = a(k, q);
                    a(k, p) = akp * gpp + akq * gqp;
                    a(k, q) = akp * gpq + akq * gqq;
                }
                for (int k = 0; k < n; ++k) { // a <- G^dagger a
                    const cplx apk = a(p, k);
                    const cplx aqk = a(q, k);
                    a(p, k) = std::conj(gpp) * apk + std::conj(gqp) * aqk;
                    a(q, k) = std::conj(gpq) * apk + std::conj(gqq) * aqk;
                }
                for (int k = 0; k < n; ++k) { // v <- v G
                    const cplx vkp = v(k, p);
                    const cplx vkq = v(k, q);
                    v(k, p) = vkp * gpp + vkq * gqp;
                    v(k, q) = vkp * gpq + vkq * gqq;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                a(p, p) = app - t * r;
                a(q, q) = aqq + t * r;
            }
        }
    }
    if (sweep == kMaxSweeps && off_norm() > kOffTol * scale)
        throw std::runtime_error("hermitian_eigen: Jacobi sweeps did not converge");

    std::array<int, ComplexMatrix::kMaxDim> order{};
    std::iota(order.begin(), order.begin() + n, 0);
    std::stable_sort(order.begin(), order.begin() + n,
                     [&](int x, int y) { return a(x, x).real() > a(y, y).real(); });

    EigenDecomposition out;
    out.dim = n;
    out.vectors = ComplexMatrix(n);
    for (int k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]).real();
        for (int i = 0; i < n; ++i)
            out.vectors(i, k) = v(i, order[k]);
    }
    return out;
}

inline EigenDecomposition hermitian_eigen(const DensityMatrix& rho)
{
    return hermitian_eigen(rho.matrix());
}

/// Half the trace norm of a - b. Inputs need not be physical.
inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b)
{
    if (a.dim() != b.dim())
        throw std::invalid_argument("trace_distance: dimension mismatch");
    const auto eig = hermitian_eigen(a.matrix() - b.matrix());
    double s = 0.0;
    for (int k = 0; k < eig.dim; ++k)
        s += std::abs(eig.values[k]);
    return 0.5 * s;
}

inline bool StokesVector::is_physical() const
{
    const auto eig = hermitian_eigen(stokes_to_density(*this));
    return eig.values[eig.dim - 1] >= -kPhysicalTol;
}

// Named test states ---------------------------------------------------------

enum class StateLabel { unpolarized, horizontal, b1r, minus_b1r, bell_psi_plus, custom };

inline std::string_view to_string(StateLabel label) noexcept
{
    switch (label) {
    case StateLabel::unpolarized: return "unpolarized";
    case StateLabel::horizontal: return "horizontal";
    case StateLabel::b1r: return "b1r";
    case StateLabel::minus_b1r: return "minus_b1r";
    case StateLabel::bell_psi_plus: return "bell_psi_plus";
    case StateLabel::custom: return "custom";
    }
    return "custom";
}

inline std::optional<StateLabel> parse_state_label(std::string_view name) noexcept
{
    for (auto l : {StateLabel::unpolarized, StateLabel::horizontal, StateLabel::b1r,
                   StateLabel::minus_b1r, StateLabel::bell_psi_plus, StateLabel::custom})
        if (to_string(l) == name)
            return l;
    return std::nullopt;
}

struct NamedState {
    StateLabel label = StateLabel::custom;
    StokesVector stokes;

    std::string name() const { return std::string(to_string(label)); }
    int qubit_count() const noexcept { return stokes.qubit_count(); }

    static NamedState make(StateLabel label)
    {
        const double r1 = std::sqrt(1.0 / 3.0);
        const double r2 = std::sqrt(2.0 / 3.0);
        switch (label) {
        case StateLabel::unpolarized: return {label, StokesVector{1.0, 0.0, 0.0, 0.0}};
        case StateLabel::horizontal: return {label, StokesVector{1.0, 1.0, 0.0, 0.0}};
        case StateLabel::b1r: return {label, StokesVector{1.0, r1, r2, 0.0}};
        case StateLabel::minus_b1r: return {label, StokesVector{1.0, -r1, -r2, 0.0}};
        case StateLabel::bell_psi_plus: {
            // (|HV> + |VH>)/sqrt(2): <11> = -1, <22> = <33> = +1.
            StokesVector s(2);
            s[0] = 1.0;
            s[4 * 1 + 1] = -1.0;
            s[4 * 2 + 2] = 1.0;
            s[4 * 3 + 3] = 1.0;
            return {label, s};
        }
        case StateLabel::custom: break;
        }
        throw std::invalid_argument("custom states need explicit Stokes components");
    }

    static NamedState custom(const StokesVector& s) { return {StateLabel::custom, s}; }
};

} // namespace tetratomo
