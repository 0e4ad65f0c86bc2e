#include "tetratomo/povm.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace tetratomo;

TEST(PaperTetrahedron, FirstVertexAndGeometry)
{
    const auto t = paper_tetrahedron();
    EXPECT_EQ(t.vertices[0][0], std::sqrt(1.0 / 3.0));
    EXPECT_EQ(t.vertices[0][1], std::sqrt(2.0 / 3.0));
    EXPECT_EQ(t.vertices[0][2], 0.0);
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            EXPECT_NEAR(dot(t.vertices[i], t.vertices[j]), -1.0 / 3.0, 1e-12);
    Vec3 sum{};
    for (const auto& v : t.vertices)
        for (int k = 0; k < 3; ++k)
            sum[k] += v[k];
    EXPECT_NEAR(norm(sum), 0.0, 1e-12);
    EXPECT_LT(tetrahedron_defect(t), 1e-12);
}

TEST(CanonicalTetrahedron, IsRegular)
{
    EXPECT_LT(tetrahedron_defect(canonical_tetrahedron()), 1e-12);
}

TEST(TetrahedronDefect, DetectsDistortion)
{
    auto t = paper_tetrahedron();
    t.vertices[2][0] += 1e-3;
    EXPECT_GT(tetrahedron_defect(t), 1e-4);
}

TEST(InstrumentMatrix, OneQubitRows)
{
    const auto t = paper_tetrahedron();
    const InstrumentMatrix b(t, 1);
    ASSERT_EQ(b.outcomes(), 4);
    for (int j = 0; j < 4; ++j) {
        EXPECT_DOUBLE_EQ(b(j, 0), 0.25);
        for (int k = 0; k < 3; ++k)
            EXPECT_DOUBLE_EQ(b(j, 1 + k), 0.25 * t.vertices[j][k]);
    }
    const auto p = b.apply(StokesVector{1.0, 0.0, 0.0, 0.0});
    for (double x : p)
        EXPECT_DOUBLE_EQ(x, 0.25);
}

TEST(InstrumentMatrix, InverseAgainstClosedForm)
{
    // S0 = sum I_j, (S1,S2,S3) = 3 sum_j I_j b_j
    const auto t = paper_tetrahedron();
    const InstrumentMatrix b(t, 1);
    const std::array<double, 4> freq{0.5, 1.0 / 6, 1.0 / 6, 1.0 / 6};
    const auto s = b.invert(freq);
    EXPECT_NEAR(s[0], 1.0, 1e-12);
    for (int k = 0; k < 3; ++k) {
        double expected = 0.0;
        for (int j = 0; j < 4; ++j)
            expected += 3.0 * freq[j] * t.vertices[j][k];
        EXPECT_NEAR(s[1 + k], expected, 1e-12);
        EXPECT_NEAR(s[1 + k], t.vertices[0][k], 1e-12);
    }
}

TEST(InstrumentMatrix, TwoQubitIsKroneckerSquare)
{
    const auto t = paper_tetrahedron();
    const InstrumentMatrix b1(t, 1);
    const InstrumentMatrix b2(t, 2);
    ASSERT_EQ(b2.outcomes(), 16);
    for (int r1 = 0; r1 < 4; ++r1)
        for (int r2 = 0; r2 < 4; ++r2)
            for (int c1 = 0; c1 < 4; ++c1)
                for (int c2 = 0; c2 < 4; ++c2)
                    ASSERT_DOUBLE_EQ(b2(r1 * 4 + r2, c1 * 4 + c2), b1(r1, c1) * b1(r2, c2));
}

TEST(InstrumentMatrix, RejectsQubitCount)
{
    EXPECT_THROW(InstrumentMatrix(paper_tetrahedron(), 3), std::invalid_argument);
}

TEST(InstrumentMatrix, DegenerateGeometryFailsVerification)
{
    Tetrahedron flat;
    flat.vertices = {Vec3{1, 0, 0}, Vec3{-1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, -1, 0}};
    EXPECT_THROW(InstrumentMatrix(flat, 1), std::logic_error);
}

TEST(InstrumentMatrix, ReconstructionIdentity)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int q : {1, 2}) {
        const InstrumentMatrix b(paper_tetrahedron(), q);
        for (int trial = 0; trial < 200; ++trial) {
            StokesVector s(q);
            for (std::size_t i = 0; i < s.size(); ++i)
                s[i] = u(rng);
            const auto p = b.apply(s);
            const auto back = b.invert(p);
            for (std::size_t i = 0; i < s.size(); ++i)
                ASSERT_NEAR(back[i], s[i], 1e-10);
        }
    }
}

TEST(OutcomeProbabilities, NamedExamples)
{
    const InstrumentMatrix b(paper_tetrahedron(), 1);
    const auto uni = outcome_probabilities(b, NamedState::make(StateLabel::unpolarized).stokes);
    for (double x : uni)
        EXPECT_NEAR(x, 0.25, 1e-15);

    const auto aligned = outcome_probabilities(b, NamedState::make(StateLabel::b1r).stokes);
    EXPECT_NEAR(aligned[0], 0.5, 1e-15);
    for (int j = 1; j < 4; ++j)
        EXPECT_NEAR(aligned[j], 1.0 / 6.0, 1e-15);

    const auto anti = outcome_probabilities(b, NamedState::make(StateLabel::minus_b1r).stokes);
    EXPECT_EQ(anti[0], 0.0);
    for (int j = 1; j < 4; ++j)
        EXPECT_NEAR(anti[j], 1.0 / 3.0, 1e-15);
}

TEST(OutcomeProbabilities, BellStateIsADistribution)
{
    const InstrumentMatrix b(paper_tetrahedron(), 2);
    const auto p = outcome_probabilities(b, NamedState::make(StateLabel::bell_psi_plus).stokes);
    double sum = 0.0;
    for (double x : p) {
        EXPECT_GE(x, 0.0);
        sum += x;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(OutcomeProbabilities, RejectsUnphysical)
{
    const InstrumentMatrix b(paper_tetrahedron(), 1);
    EXPECT_THROW(outcome_probabilities(b, StokesVector{1.0, -3 * std::sqrt(1.0 / 3), -3 * std::sqrt(2.0 / 3), 0.0}),
                 std::invalid_argument);
    // Inside the probability simplex but outside the Bloch ball.
    EXPECT_THROW(outcome_probabilities(b, StokesVector{1.0, 0.0, 0.0, 1.05}), std::invalid_argument);
    EXPECT_THROW(outcome_probabilities(b, StokesVector{2.0, 0.0, 0.0, 0.0}), std::invalid_argument);
}

TEST(OutcomeProbabilities, PhysicalStatesGiveDistributions)
{
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const InstrumentMatrix b(paper_tetrahedron(), 1);
    for (int trial = 0; trial < 1000; ++trial) {
        Vec3 d{g(rng), g(rng), g(rng)};
        const double r = (trial % 4 == 0 ? 1.0 : std::cbrt(u(rng))) / norm(d);
        const auto p = outcome_probabilities(b, StokesVector::from_bloch(d[0] * r, d[1] * r, d[2] * r));
        double sum = 0.0;
        for (double x : p) {
            ASSERT_GE(x, 0.0);
            ASSERT_LE(x, 0.5 + 1e-12);
            sum += x;
        }
        ASSERT_NEAR(sum, 1.0, 1e-12);
    }
}

TEST(OutcomeProbabilities, AntiAlignedHasSingleZero)
{
    const auto t = paper_tetrahedron();
    const InstrumentMatrix b(t, 1);
    for (int j = 0; j < 4; ++j) {
        const auto& v = t.vertices[j];
        const auto p = outcome_probabilities(b, StokesVector::from_bloch(-v[0], -v[1], -v[2]));
        for (int k = 0; k < 4; ++k) {
            if (k == j)
                EXPECT_EQ(p[k], 0.0);
            else
                EXPECT_NEAR(p[k], 1.0 / 3.0, 1e-12);
        }
        const auto q = outcome_probabilities(b, StokesVector::from_bloch(v[0], v[1], v[2]));
        EXPECT_NEAR(*std::max_element(q.begin(), q.end()), 0.5, 1e-12);
    }
}
