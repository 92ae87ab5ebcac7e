#include "dglab/checks.hpp"
#include "dglab/linear_dynamics.hpp"
#include "dglab/oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace dglab;

namespace {

BasicTildeSeries<Rational> random_rational_tilde(std::mt19937_64& rng, std::size_t n)
{
    std::uniform_int_distribution<long> num(-50, 50);
    std::uniform_int_distribution<long> den(1, 40);
    BasicTildeSeries<Rational> s(n);
    for (auto& c : s.coeffs) {
        c = make_rational(num(rng), den(rng));
    }
    return s;
}

TrajectoryRecord run(const TildeSeries& eta0, double T, double dt, std::size_t N, std::size_t every = 10)
{
    LinearRunOptions o;
    o.T = T;
    o.dt = dt;
    o.N = N;
    o.sample_every = every;
    o.snapshot_every = 1;
    return evolve_linear(eta0, o);
}

} // namespace

TEST(Linear, ApplyLSineExamples)
{
    EXPECT_TRUE(apply_L_sine(2).empty());
    const auto one = apply_L_sine(1);
    ASSERT_EQ(one.size(), 2u);
    EXPECT_EQ(one[0].first, 3);
    EXPECT_EQ(one[0].second, Rational(-1, 4));
    EXPECT_EQ(one[1].first, 1);
    EXPECT_EQ(one[1].second, Rational(3, 4));
    const auto four = apply_L_sine(4);
    EXPECT_EQ(four[0].first, 6);
    EXPECT_EQ(four[0].second, Rational(-1, 4));
    EXPECT_EQ(four[1].first, 2);
    EXPECT_EQ(four[1].second, Rational(3, 4));
    EXPECT_THROW(apply_L_sine(0), std::domain_error);
}

TEST(Linear, ApplyLTildeExamples)
{
    const LTildeResult r1 = apply_L_tilde(TildeSeries::unit(1, 1), 4);
    EXPECT_NEAR(r1.value(1), 11.0 / 18.0, 1e-15);
    EXPECT_NEAR(r1.value(3), -d_coeff(3).get_d(), 1e-15);
    EXPECT_EQ(r1.value(2), 0.0);
    EXPECT_EQ(r1.truncation_flux, 0.0);

    const LTildeResult r2 = apply_L_tilde(TildeSeries::unit(2, 2), 4);
    EXPECT_NEAR(r2.value(2), -3.0 / 8.0, 1e-15);
    EXPECT_NEAR(r2.value(4), -d_coeff(4).get_d(), 1e-15);

    // truncating at N = 1 drops the coupling into e~_3
    const LTildeResult cut = apply_L_tilde(TildeSeries::unit(1, 1), 1);
    EXPECT_NEAR(cut.truncation_flux, d_coeff(3).get_d(), 1e-15);
}

TEST(Linear, RouteEquivalence)
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int rep = 0; rep < 20; ++rep) {
        TildeSeries eta(30);
        for (auto& c : eta.coeffs) {
            c = u(rng);
        }
        const SineSeries via_tilde = tilde_to_sine(apply_L_tilde(eta, 32).value);
        const SineSeries via_sine = apply_L_sine(tilde_to_sine(eta));
        for (long j = 1; j <= 34; ++j) {
            ASSERT_NEAR(via_tilde(j), via_sine(j), 1e-13) << j;
        }
    }
}

TEST(Linear, ChainStructure)
{
    const LinearChainOperator op(40);
    EXPECT_DOUBLE_EQ(op.diag[0], 11.0 / 18.0);
    EXPECT_DOUBLE_EQ(op.diag[1], -3.0 / 8.0);
    EXPECT_EQ(op.sub[0], 0.0);
    EXPECT_EQ(op.sub[1], 0.0);
    EXPECT_EQ(op.sup[38], 0.0);
    EXPECT_EQ(op.sup[39], 0.0);
    // row k of the dense matrix: columns k-2, k, k+2 only
    for (std::size_t col = 0; col < 40; ++col) {
        std::vector<double> e(40, 0.0), out;
        e[col] = 1.0;
        op.apply(e, out);
        for (std::size_t row = 0; row < 40; ++row) {
            if (out[row] != 0.0) {
                ASSERT_TRUE(row + 2 == col || row == col || row == col + 2);
            }
        }
    }
}

TEST(Linear, RayleighValues)
{
    EXPECT_EQ(rayleigh(BasicTildeSeries<Rational>::unit(1, 1)), Rational(11, 18));
    EXPECT_EQ(rayleigh(BasicTildeSeries<Rational>::unit(2, 2)), Rational(-3, 8));
    TildeSeries a(1);
    a.at(1) = 2.5;
    EXPECT_NEAR(rayleigh(a), 11.0 / 18.0 * 6.25, 1e-15);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1, 1);
    TildeSeries even(30);
    for (long k = 2; k <= 30; k += 2) {
        even.at(k) = u(rng);
    }
    EXPECT_LE(rayleigh(even), -3.0 / 8.0 * hdw_norm_squared(even));
}

TEST(Linear, ComparisonBounds)
{
    const TildeSeries e1 = TildeSeries::unit(1, 1);
    EXPECT_DOUBLE_EQ(comparison_bounds(e1, 0.02, 0.0), 1.0);
    const double h = 1e-5;
    const double slope = (comparison_bounds(e1, 0.02, h) - comparison_bounds(e1, 0.02, -h)) / (2 * h);
    EXPECT_NEAR(slope, 2.0 * 11.0 / 18.0, 1e-8);
    for (double t : {0.1, 1.0, 5.0}) {
        EXPECT_GT(comparison_bounds(e1, 0.6, t) - comparison_bounds(e1, 0.02, t), 0.0);
    }
    EXPECT_THROW(comparison_bound(1, 0, 0.0, 1.0), std::domain_error);
    // matches the half-exponential form for large t
    const double t = 30.0;
    const double l = 0.02;
    const double half = 0.5 * (1.0 + 11.0 / 18.0 / std::sqrt(l)) * std::exp(2 * std::sqrt(l) * t);
    EXPECT_NEAR(comparison_bounds(e1, l, t) / half, 1.0, 1e-4);
}

TEST(Linear, SFormIdentityExact)
{
    std::mt19937_64 rng(100);
    for (int rep = 0; rep < 20; ++rep) {
        const auto eta = random_rational_tilde(rng, 20);
        for (long n : {2L, 3L, 7L, 18L}) {
            const auto s = sform_decomposition(eta, n);
            ASSERT_EQ(s.direct, s.decomposed) << n;
        }
    }
    EXPECT_THROW(sform_decomposition(BasicTildeSeries<Rational>(4), 1), std::domain_error);
}

TEST(Linear, SFormSingleMode)
{
    const auto s = sform_decomposition(BasicTildeSeries<Rational>::unit(1, 5), 4);
    EXPECT_EQ(s.decomposed, Rational(121, 162));
    EXPECT_EQ(s.direct, s.decomposed);
}

TEST(Linear, SFormBounds)
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int rep = 0; rep < 50; ++rep) {
        TildeSeries eta(40);
        for (auto& c : eta.coeffs) {
            c = u(rng);
        }
        for (long n : {5L, 20L, 38L}) {
            const auto s = sform_decomposition(eta, n);
            double mass = 0.0;
            for (long k = 1; k <= n; ++k) {
                mass += eta(k) * eta(k);
            }
            const double slack = 1e-12 * (1.0 + std::abs(s.direct));
            EXPECT_GE(s.direct, 2 * 0.02 * mass + s.remainders - slack);
            EXPECT_LE(s.direct, 2 * 0.6 * mass + s.remainders + slack);
        }
    }
}

TEST(Linear, InitialDataKinds)
{
    InitialDataSpec single;
    single.amplitudes[1] = 1.0;
    EXPECT_DOUBLE_EQ(rayleigh(build_initial_data(single)), 11.0 / 18.0);

    InitialDataSpec edge;
    edge.kind = InitialKind::TwoMode;
    edge.amplitudes[1] = 1.0;
    edge.amplitudes[2] = std::sqrt((11.0 / 18.0) / (3.0 / 8.0));
    EXPECT_NEAR(rayleigh(build_initial_data(edge)), 0.0, 1e-15);

    InitialDataSpec even;
    even.kind = InitialKind::EvenFamily;
    even.amplitudes = {{2, 0.3}, {4, -0.2}, {6, 0.1}};
    const TildeSeries e = build_initial_data(even);
    EXPECT_LE(rayleigh(e), -3.0 / 8.0 * hdw_norm_squared(e));

    even.amplitudes[3] = 0.1;
    EXPECT_THROW(build_initial_data(even), InitialDataError);
    InitialDataSpec bad;
    bad.amplitudes[0] = 1.0;
    EXPECT_THROW(build_initial_data(bad), InitialDataError);
    bad.amplitudes = {{1, std::nan("")}};
    EXPECT_THROW(build_initial_data(bad), InitialDataError);
}

TEST(Linear, TwoModeWindow)
{
    const AmplitudeWindow w = two_mode_window(1.0, 2);
    const double s = std::sqrt(0.02);
    EXPECT_NEAR(w.lower, (11.0 / 18.0 - s) / (s + 3.0 / 8.0), 1e-15);
    EXPECT_NEAR(w.upper, (11.0 / 18.0) / (3.0 / 8.0), 1e-15);

    for (double f : {0.0, 0.3, 0.5, 1.0}) {
        const TildeSeries eta = build_initial_data(window_two_mode(1.0, 2, f));
        const double r = rayleigh(eta);
        const double e = hdw_norm_squared(eta);
        EXPECT_GE(r, -1e-12 * e);
        EXPECT_LE(r, s * e * (1 + 1e-12));
    }
    for (long k : {3L, 4L, 7L}) {
        EXPECT_NO_THROW(build_initial_data(window_two_mode(0.7, k, 0.25)));
    }

    InitialDataSpec low = window_two_mode(1.0, 2, 0.5);
    low.amplitudes[2] = std::sqrt(0.5 * w.lower);
    try {
        build_initial_data(low);
        FAIL() << "expected rejection";
    } catch (const InitialDataError& e) {
        EXPECT_NE(std::string(e.what()).find("lower"), std::string::npos);
    }
    InitialDataSpec high = window_two_mode(1.0, 2, 0.5);
    high.amplitudes[2] = std::sqrt(2.0 * w.upper);
    try {
        build_initial_data(high);
        FAIL() << "expected rejection";
    } catch (const InitialDataError& e) {
        EXPECT_NE(std::string(e.what()).find("upper"), std::string::npos);
    }
}

TEST(Linear, EvolveRejectsBadInput)
{
    LinearRunOptions o;
    EXPECT_THROW(evolve_linear(TildeSeries(3), o), std::invalid_argument);
    o.N = 4;
    EXPECT_THROW(evolve_linear(TildeSeries::unit(1, 1), o), std::invalid_argument);
    o.N = 16;
    o.dt = 0.0;
    EXPECT_THROW(evolve_linear(TildeSeries::unit(1, 1), o), std::invalid_argument);
    o.dt = 0.08;
    o.T = 5.0;
    EXPECT_THROW(evolve_linear(TildeSeries::unit(1, 1), o), std::invalid_argument);
}

TEST(Linear, StepCount)
{
    EXPECT_EQ(step_count(10.0, 1e-3), 10000u);
    EXPECT_EQ(step_count(0.3, 0.1), 3u);
    EXPECT_EQ(step_count(0.0, 0.1), 0u);
    EXPECT_TRUE(is_step_multiple(20.0, 1e-3));
    EXPECT_FALSE(is_step_multiple(5.0, 0.08));
}

TEST(Linear, RecordShapeAndEnergy)
{
    const TrajectoryRecord r = run(TildeSeries::unit(1, 1), 1.0, 1e-3, 64);
    ASSERT_EQ(r.times.size(), 101u);
    EXPECT_EQ(r.energy.size(), r.times.size());
    EXPECT_EQ(r.j1.size(), r.times.size());
    EXPECT_EQ(r.snapshots.size(), r.times.size());
    for (std::size_t i = 0; i < r.times.size(); ++i) {
        EXPECT_NEAR(r.energy[i], hdw_norm_squared(r.snapshots[i]), 1e-12 * r.energy[i]);
    }
    EXPECT_DOUBLE_EQ(r.times.back(), 1.0);
}

TEST(Linear, ParityDecoupling)
{
    TildeSeries odd(5);
    odd.at(1) = 1.0;
    odd.at(5) = -0.4;
    const TrajectoryRecord r = run(odd, 3.0, 1e-3, 64, 100);
    for (const auto& s : r.snapshots) {
        for (long k = 2; k <= 64; k += 2) {
            ASSERT_LT(std::abs(s(k)), 1e-13);
        }
    }
    const TrajectoryRecord e = run(TildeSeries::unit(2, 2), 3.0, 1e-3, 64, 100);
    for (const auto& s : e.snapshots) {
        for (long k = 1; k <= 64; k += 2) {
            ASSERT_LT(std::abs(s(k)), 1e-13);
        }
    }
}

TEST(Linear, EnergyIdentityUnderDtHalving)
{
    // (E(t+h) - E(t-h)) / (4h) against rayleigh; the gap shrinks like h^2.
    double prev = 0.0;
    for (double dt : {4e-2, 2e-2, 1e-2}) {
        const TrajectoryRecord r = run(TildeSeries::unit(1, 1), 2.0, dt, 64, 1);
        double worst = 0.0;
        for (std::size_t i = 1; i + 1 < r.times.size(); ++i) {
            const double fd = (r.energy[i + 1] - r.energy[i - 1]) / (4.0 * dt);
            worst = std::max(worst, std::abs(fd - r.rayleigh[i]) / r.energy[i]);
        }
        if (prev > 0.0) {
            EXPECT_GT(prev / worst, 3.5);
            EXPECT_LT(prev / worst, 4.5);
        }
        prev = worst;
    }
    // derivative at t = 0 from the first steps
    const TrajectoryRecord r = run(TildeSeries::unit(1, 1), 0.01, 1e-3, 64, 1);
    const double fd0 = (-3 * r.energy[0] + 4 * r.energy[1] - r.energy[2]) / (2e-3);
    EXPECT_NEAR(fd0, 2.0 * 11.0 / 18.0, 1e-5);
}

TEST(Linear, SecondDerivativeSandwichOnArbitraryData)
{
    // no rayleigh >= 0 hypothesis: odd data with negative production
    TildeSeries eta(3);
    eta.at(1) = 0.2;
    eta.at(3) = 1.0;
    ASSERT_LT(rayleigh(eta), 0.0);
    const TrajectoryRecord r = run(eta, 5.0, 1e-3, 128);
    const auto b = checks::second_derivative_bracket(r.times, r.energy);
    EXPECT_GE(b.fraction, 0.99);
}

TEST(Linear, JSandwichUnderHypothesis)
{
    const TrajectoryRecord r = run(build_initial_data(window_two_mode(1.0, 2, 0.5)), 6.0, 1e-3, 128);
    EXPECT_GT(checks::sandwich_margin(r.times, r.energy, r.j1, r.j2), 1e-9);
}

TEST(Linear, EvenDecay)
{
    const TrajectoryRecord r = run(TildeSeries::unit(2, 2), 20.0, 1e-3, 128);
    EXPECT_LE(checks::even_decay_ratio(r.times, r.energy), 1.0 + 1e-6);
}

TEST(Linear, SpectralTailDecay)
{
    // For low-mode data the coefficient envelope max_t |eta_k(t)| falls off
    // faster than k^{-4}; checked on [0, 2].
    const TrajectoryRecord r = run(TildeSeries::unit(1, 1), 2.0, 1e-3, 128, 10);
    auto envelope = [&](long k) {
        double m = 0.0;
        for (const auto& s : r.snapshots) {
            m = std::max(m, std::abs(s(k)));
        }
        return m;
    };
    for (long k : {21L, 41L, 61L}) {
        const double ratio = envelope(2 * k + 1) / envelope(k);
        EXPECT_LT(ratio, std::pow(static_cast<double>(k) / (2 * k + 1), 4.0)) << k;
    }
}

TEST(Linear, GuardTrips)
{
    LinearRunOptions o;
    o.T = 10.0;
    o.dt = 1e-3;
    o.N = 64;
    o.guard_factor = 10.0;
    const TrajectoryRecord r = evolve_linear(TildeSeries::unit(1, 1), o);
    EXPECT_TRUE(r.guard_tripped);
    EXPECT_LT(r.times.back(), 10.0);
}
