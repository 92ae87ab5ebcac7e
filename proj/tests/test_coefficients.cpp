#include "dglab/coefficients.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace dglab;

TEST(Coefficients, FrozenExactValues)
{
    EXPECT_EQ(d_coeff(1), Rational(3, 4));
    EXPECT_EQ(d_coeff(2), Rational(0));
    EXPECT_EQ(d_coeff(3), Rational(5, 36));
    EXPECT_EQ(d_coeff(4), Rational(3, 8));
    EXPECT_EQ(diff_coeff(1), Rational(11, 18));
    EXPECT_EQ(diff_coeff(2), Rational(-3, 8));
    EXPECT_EQ(diff_coeff(5), Rational(-1269, 2450));
    EXPECT_EQ(eps_coeff(1), Rational(62, 405));
    EXPECT_EQ(eps_coeff(4), Rational(1, 324));
    EXPECT_EQ(a_coeff(1), Rational(121, 324));
    EXPECT_EQ(a_coeff(2), Rational(9, 64));
    EXPECT_EQ(f_envelope_exact(6), Rational(-149, 288));
    EXPECT_EQ(f_envelope_exact(5), Rational(-1269, 2450));
}

TEST(Coefficients, IndexBelowOneThrows)
{
    EXPECT_THROW(d_coeff(0), std::domain_error);
    EXPECT_THROW(diff_coeff(-3), std::domain_error);
    EXPECT_THROW(eps_coeff(0), std::domain_error);
    EXPECT_THROW(form_matrix(0), std::domain_error);
    EXPECT_THROW(certify_bounds(0), std::domain_error);
    EXPECT_THROW(f_envelope(0.5), std::domain_error);
}

TEST(Coefficients, ClosedFormsMatchDefinitions)
{
    for (long k = 1; k <= 2000; ++k) {
        const Rational dk = d_coeff(k), dk2 = d_coeff(k + 2), dk4 = d_coeff(k + 4);
        ASSERT_EQ(diff_coeff(k), dk - dk2) << k;
        ASSERT_EQ(eps_coeff(k), -2 * dk2 * dk2 + dk * dk2 + dk2 * dk4) << k;
    }
}

TEST(Coefficients, FormMatrixProducts)
{
    const FormMatrix m = form_matrix(2);
    EXPECT_EQ(m.a11 * m.a22, Rational(9, 64) * Rational(37 * 37, 72 * 72));
    EXPECT_EQ(m.a12, eps_coeff(2));
    EXPECT_TRUE(m.positive_definite());
}

TEST(Coefficients, EigenvaluesOfFirstForm)
{
    const FormMatrix m = form_matrix(1);
    const auto [l1, l2] = eigenvalues(m);
    const double tr = m.trace().get_d();
    const double det = m.determinant().get_d();
    EXPECT_NEAR(l1 + l2, tr, 1e-15);
    EXPECT_NEAR(l1 * l2, det, 1e-15);
    EXPECT_LT(l1, l2);
}

TEST(Coefficients, AsymptoticQuarter)
{
    const auto [l1, l2] = eigenvalues(1000);
    EXPECT_LT(std::abs(a_coeff(1000).get_d() - 0.25), 1e-3);
    EXPECT_LT(std::abs(l1 - 0.25), 1e-3);
    EXPECT_LT(std::abs(l2 - 0.25), 1e-3);
}

TEST(Coefficients, CertificateSmallRangeAndMerge)
{
    const auto a = certify_bounds_range(1, 500);
    const auto b = certify_bounds_range(501, 1000);
    const auto m = merge(a, b);
    EXPECT_TRUE(m.verified);
    EXPECT_EQ(m.k_min, 1);
    EXPECT_EQ(m.k_max, 1000);
    EXPECT_TRUE(certify_bounds(1).verified);
    EXPECT_THROW(certify_bounds_range(10, 5), std::domain_error);
}

TEST(Coefficients, CertificateDetectsTighterBracket)
{
    // A shift just above the smallest eigenvalue at k = 2 must fail there.
    const FormMatrix m = form_matrix(2);
    const double l1 = eigenvalues(m).first;
    const Rational shift = make_rational(static_cast<long>(std::ceil(l1 * 1e6)), 1000000);
    EXPECT_FALSE(m.shifted(shift).positive_definite());
}

TEST(Coefficients, EigenvalueSweepMatchesCertificate)
{
    for (long k = 1; k <= 3000; ++k) {
        const auto [l1, l2] = eigenvalues(k);
        ASSERT_GT(l1, 1.0 / 50.0) << k;
        ASSERT_LT(l2, 3.0 / 5.0) << k;
        ASSERT_LE(l1, l2) << k;
    }
}

TEST(Coefficients, EnvelopeSamplesAndCriticalPoint)
{
    for (long k = 1; k <= 50; ++k) {
        EXPECT_NEAR(f_envelope(static_cast<double>(k)), diff_coeff(k).get_d(), 1e-15) << k;
    }
    const double x = envelope_critical_point();
    EXPECT_GT(x, 5.0);
    EXPECT_LT(x, 6.0);
    EXPECT_NEAR(((x - 3) * x - 10) * x - 8, 0.0, 1e-10);
    EXPECT_NEAR(f_envelope_derivative(x), 0.0, 1e-12);
    // minimum of the envelope sits between the two integer samples
    EXPECT_LT(f_envelope(x), f_envelope(5.0));
    EXPECT_LT(f_envelope(x), f_envelope(6.0));
    EXPECT_LT(f_envelope_derivative(3.0), 0.0);
    EXPECT_GT(f_envelope_derivative(8.0), 0.0);
}

TEST(Coefficients, FractionFormatting)
{
    EXPECT_EQ(fraction_string(Rational(0)), "0/1");
    EXPECT_EQ(fraction_string(diff_coeff(2)), "-3/8");
    const CoeffRecord r = coeff_record(1);
    EXPECT_EQ(r.diff, Rational(11, 18));
    EXPECT_EQ(r.a, Rational(121, 324));
}

TEST(Coefficients, SignsAndEnvelopeRange)
{
    EXPECT_LT(sgn(eps_coeff(5)), 0);
    EXPECT_EQ(form_matrix(1).a22, a_coeff(3));
    EXPECT_GT(sgn(form_matrix(2).determinant()), 0);
    for (long k = 4; k <= 5000; ++k) {
        const Rational f = f_envelope_exact(k);
        ASSERT_LE(f, Rational(-1, 2)) << k;
        ASSERT_GE(f, f_envelope_exact(5)) << k;
    }
}

TEST(Coefficients, BoundaryCasesOfTheABracket)
{
    const BoundsCertificate c = certify_bounds(2);
    EXPECT_EQ(a_coeff(1), c.a_upper);
    EXPECT_EQ(a_coeff(2), c.a_lower);
    EXPECT_TRUE(c.verified);
}
