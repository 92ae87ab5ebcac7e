#include "dglab/nonlinear.hpp"
#include "dglab/oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace dglab;

namespace {

FourierField random_field(std::mt19937_64& rng, std::size_t modes, double decay = 1.0)
{
    std::uniform_real_distribution<double> u(-1, 1);
    FourierField f(modes);
    f.mean = u(rng);
    for (std::size_t j = 1; j <= modes; ++j) {
        const double s = std::pow(static_cast<double>(j), -decay);
        f.cos[j - 1] = s * u(rng);
        f.sin[j - 1] = s * u(rng);
    }
    return f;
}

SolverConfig small_config()
{
    SolverConfig cfg;
    cfg.M = 128;
    cfg.modes = 42;
    cfg.dt = 1e-3;
    cfg.sample_every = 10;
    return cfg;
}

} // namespace

TEST(Nonlinear, SineModesAreSteady)
{
    const GridTransform grid(256);
    for (long k = 1; k <= 4; ++k) {
        FourierField w(8);
        w.sin[k - 1] = 1.0;
        EXPECT_LT(max_abs_coeff(rhs_vorticity(w, 1.0, grid)), 1e-12) << k;
        w.sin[k - 1] = -1.0;
        EXPECT_LT(max_abs_coeff(rhs_vorticity(w, 1.0, grid)), 1e-12) << k;
    }
}

TEST(Nonlinear, ClmLimitIsOmegaTimesHilbert)
{
    std::mt19937_64 rng(3);
    const GridTransform grid(256);
    const FourierField w = random_field(rng, 20);
    const FourierField r = rhs_vorticity(w, 0.0, grid);
    const std::vector<double> a = grid.to_grid(w);
    const std::vector<double> b = grid.to_grid(hilbert(w));
    std::vector<double> p(a.size());
    for (std::size_t m = 0; m < p.size(); ++m) {
        p[m] = a[m] * b[m];
    }
    EXPECT_LT(max_abs_coeff(r - grid.from_grid(p, 20)), 1e-13);
}

TEST(Nonlinear, PerturbationRhsVanishesAtZero)
{
    EXPECT_EQ(max_abs_coeff(rhs_perturbation(FourierField(10))), 0.0);
    const TildeRhs rhs(small_config());
    std::vector<double> zero(rhs.size(), 0.0), out;
    out.resize(rhs.size());
    rhs(zero, out);
    for (double v : out) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(Nonlinear, PerturbationMatchesVorticityRhs)
{
    // eta_t computed pointwise equals omega_t at omega = -sin2t + eta
    std::mt19937_64 rng(11);
    const GridTransform grid(256);
    for (int rep = 0; rep < 5; ++rep) {
        FourierField eta = random_field(rng, 30, 2.0);
        FourierField w = eta;
        w.sin[1] -= 1.0;
        const FourierField a = rhs_perturbation(eta, grid, 32);
        const FourierField b = rhs_vorticity(resize_modes(w, 32).field, 1.0, grid);
        EXPECT_LT(max_abs_coeff(a - b), 1e-11);
    }
}

TEST(Nonlinear, LinearPartMatchesChain)
{
    // small data: the rhs is -L eta to first order
    const double eps = 1e-7;
    TildeSeries eta(6);
    eta.at(1) = eps;
    eta.at(4) = -0.5 * eps;
    const FourierField f = to_fourier(tilde_to_sine(eta), 8);
    const FourierField r = rhs_perturbation(f, GridTransform(64), 10);
    const SineSeries lin = tilde_to_sine(apply_L_tilde(eta, 8).value);
    for (long j = 1; j <= 10; ++j) {
        EXPECT_NEAR(r.sin_at(j) / eps, lin(j) / eps, 1e-6) << j;
    }
}

TEST(Nonlinear, TildeRhsAgreesWithPointwiseRhs)
{
    SolverConfig cfg = small_config();
    const TildeRhs rhs(cfg);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> x(rhs.size(), 0.0), out(rhs.size());
    for (std::size_t i = 0; i < 10; ++i) {
        x[i] = 0.1 * u(rng);
    }
    rhs(x, out);
    const FourierField f = to_fourier(tilde_to_sine(TildeSeries(x)), cfg.modes);
    const FourierField pw = rhs_perturbation(f, GridTransform(cfg.M), cfg.modes);
    const SineSeries got = tilde_to_sine(TildeSeries(out));
    for (long j = 1; j <= 12; ++j) {
        EXPECT_NEAR(got(j), pw.sin_at(j), 1e-12) << j;
    }
}

TEST(Nonlinear, ConfigValidation)
{
    SolverConfig c;
    EXPECT_NO_THROW(c.validate());
    auto expect_field = [](SolverConfig bad, const std::string& field) {
        try {
            bad.validate();
            FAIL() << field;
        } catch (const std::invalid_argument& e) {
            EXPECT_EQ(std::string(e.what()).rfind("config." + field, 0), 0u) << e.what();
        }
    };
    SolverConfig m = c;
    m.M = 500;
    expect_field(m, "M");
    SolverConfig k = c;
    k.modes = 171;
    expect_field(k, "modes");
    k.dealias = Dealias::None;
    EXPECT_NO_THROW(k.validate());
    SolverConfig dt = c;
    dt.dt = -1;
    expect_field(dt, "dt");
    SolverConfig a = c;
    a.a = 0.5;
    expect_field(a, "a");
    a.formulation = Formulation::Vorticity;
    EXPECT_NO_THROW(a.validate());
}

TEST(Nonlinear, DiagnosticsOfSingleMode)
{
    const GridTransform grid(128);
    const NonlinearState s = NonlinearState::perturbation(TildeSeries::unit(2, 4));
    const Diagnostics d = diagnostics(s, grid, 40);
    EXPECT_NEAR(d.hdw_norm, 1.0, 1e-15);
    EXPECT_EQ(d.parity_leak, 0.0);
    EXPECT_EQ(d.tail_mass, 0.0);
    // e~_2 = sin4t/4 - sin2t/2 has L2 norm sqrt(pi (1/16 + 1/4))
    EXPECT_NEAR(d.l2_norm, std::sqrt(std::numbers::pi * (1.0 / 16 + 0.25)), 1e-13);
    EXPECT_NEAR(d.u_l2, 1.0, 1e-13);

    const NonlinearState w = NonlinearState::vorticity_from_tilde(TildeSeries::unit(2, 4), 40);
    const Diagnostics dw = diagnostics(w, grid, 40);
    EXPECT_NEAR(dw.hdw_norm, 1.0, 1e-13);
    EXPECT_LT(dw.hdw_residual, 1e-13);
    EXPECT_NEAR(dw.omega_sup, d.omega_sup, 1e-13);
}

TEST(Nonlinear, HdwNormMatchesQuadrature)
{
    TildeSeries eta(8);
    eta.at(1) = 0.3;
    eta.at(2) = -0.7;
    eta.at(5) = 0.2;
    const GridTransform grid(64);
    const auto q = oracle::quadrature_hdw(grid.to_grid_field(to_fourier(tilde_to_sine(eta), 20)), 4096);
    const Diagnostics d = diagnostics(NonlinearState::perturbation(eta), grid, 20);
    EXPECT_NEAR(d.hdw_norm * d.hdw_norm, q.value, 1e-8);
}

TEST(Nonlinear, ZeroDataStaysSteady)
{
    SolverConfig cfg = small_config();
    const NonlinearRun run = evolve_nonlinear(NonlinearState::perturbation(TildeSeries(4)), cfg, 1.0);
    for (const auto& s : run.samples) {
        EXPECT_EQ(s.diag.hdw_norm, 0.0);
    }
    EXPECT_THROW(stability_experiment(0.0, {2}, 1.0, cfg), std::invalid_argument);
}

TEST(Nonlinear, EvolveRejectsMismatches)
{
    SolverConfig cfg = small_config();
    EXPECT_THROW(evolve_nonlinear(NonlinearState::perturbation(TildeSeries(50)), cfg, 1.0), std::invalid_argument);
    EXPECT_THROW(evolve_nonlinear(NonlinearState::perturbation(TildeSeries(4)), cfg, 0.0), std::invalid_argument);
    EXPECT_THROW(evolve_nonlinear(NonlinearState::vorticity(FourierField(4)), cfg, 1.0), std::invalid_argument);
}

TEST(Nonlinear, SmallDataFollowsLinearization)
{
    SolverConfig cfg = small_config();
    cfg.sample_every = 100;
    for (double eps : {1e-3, 1e-4}) {
        TildeSeries eta(2);
        eta.at(1) = eps;
        eta.at(2) = eps;
        const NonlinearRun run = evolve_nonlinear(NonlinearState::perturbation(eta), cfg, 2.0);
        LinearRunOptions o;
        o.T = 2.0;
        o.dt = cfg.dt;
        o.N = cfg.tilde_size();
        o.sample_every = 100;
        const TrajectoryRecord lin = evolve_linear(eta, o);
        ASSERT_EQ(lin.times.size(), run.samples.size());
        double worst = 0.0;
        for (std::size_t i = 0; i < lin.times.size(); ++i) {
            const double ln = std::sqrt(lin.energy[i]);
            worst = std::max(worst, std::abs(run.samples[i].diag.hdw_norm - ln) / ln);
        }
        // relative gap is first order in eps
        EXPECT_LT(worst, 20.0 * eps) << eps;
        EXPECT_GT(worst, 0.0);
    }
}

TEST(Nonlinear, FormulationsAgree)
{
    // the two truncations differ only in the top two sine modes, so the
    // retained band has to be wide enough for that content to be roundoff
    SolverConfig cfg = small_config();
    cfg.M = 256;
    cfg.modes = 85;
    cfg.snapshot_every = 1;
    TildeSeries eta(4);
    eta.at(1) = 0.05;
    eta.at(2) = -0.03;
    eta.at(4) = 0.02;
    const NonlinearRun p = evolve_nonlinear(NonlinearState::perturbation(eta), cfg, 1.0);
    SolverConfig vc = cfg;
    vc.formulation = Formulation::Vorticity;
    const NonlinearRun v = evolve_nonlinear(NonlinearState::vorticity_from_tilde(eta, cfg.modes), vc, 1.0);
    ASSERT_EQ(p.snapshots.size(), v.snapshots.size());
    const GridTransform grid(cfg.M);
    double gap = 0.0;
    for (std::size_t i = 0; i < p.snapshots.size(); ++i) {
        const auto a = grid.to_grid(perturbation_field(p.snapshots[i], cfg.modes));
        const auto b = grid.to_grid(perturbation_field(v.snapshots[i], cfg.modes));
        for (std::size_t m = 0; m < a.size(); ++m) {
            gap = std::max(gap, std::abs(a[m] - b[m]));
        }
    }
    EXPECT_LT(gap, 1e-10);
}

TEST(Nonlinear, StabilityEvenData)
{
    SolverConfig cfg;
    cfg.M = 256;
    cfg.modes = 85;
    for (const std::set<long>& modes : {std::set<long>{2}, std::set<long>{2, 4}, std::set<long>{2, 4, 6}}) {
        const ExperimentReport rep = stability_experiment(0.01, modes, 10.0, cfg);
        for (const auto& v : rep.verdicts) {
            EXPECT_TRUE(v.pass) << v.name << " " << v.value;
        }
    }
}

TEST(Nonlinear, FitLogRate)
{
    std::vector<double> t, y;
    for (int i = 0; i <= 100; ++i) {
        t.push_back(0.1 * i);
        y.push_back(3.0 * std::exp(-0.4 * t.back()));
    }
    const RateFit f = fit_log_rate(t, y, 5.0, 10.0);
    EXPECT_NEAR(f.rate, -0.4, 1e-12);
    EXPECT_NEAR(std::exp(f.intercept), 3.0, 1e-10);
    EXPECT_EQ(f.points, 51u);
    EXPECT_TRUE(std::isnan(fit_log_rate(t, y, 20.0, 30.0).rate));
}

TEST(Nonlinear, InstabilityRejectsOutsideHypothesis)
{
    InitialDataSpec even;
    even.kind = InitialKind::EvenFamily;
    even.amplitudes[2] = 1.0;
    try {
        instability_experiment({1e-3}, even, small_config());
        FAIL();
    } catch (const InitialDataError& e) {
        EXPECT_NE(std::string(e.what()).find("window"), std::string::npos);
    }
    InitialDataSpec single;
    single.amplitudes[1] = 1.0;
    EXPECT_THROW(instability_experiment({1e-3}, single, small_config()), InitialDataError);
}

TEST(Nonlinear, InstabilityWindowDataGrows)
{
    SolverConfig cfg = small_config();
    cfg.sample_every = 100;
    InstabilityOptions opt;
    opt.horizon = 30.0;
    const ExperimentReport rep = instability_experiment({1e-3}, window_two_mode(1.0, 2), cfg, opt);
    for (const auto& v : rep.verdicts) {
        EXPECT_TRUE(v.pass) << v.name << " " << v.value;
    }
    ASSERT_EQ(rep.eps.size(), 1u);
    EXPECT_TRUE(rep.eps[0].crossed);
    EXPECT_GT(rep.eps[0].crossing_time, 0.0);
}
