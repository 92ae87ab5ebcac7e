#pragma once

// Pseudo-spectral solver for the generalized CLM / De Gregorio family
//
//   omega_t + a u omega_theta = omega u_theta,   u_theta = H omega,  u(0) = 0,
//
// and for the perturbation eta = omega + sin(2 theta) around the excited state,
//
//   eta_t = -L eta + N(eta),   N(eta) = v' eta - v eta'.
//
// The perturbation formulation is Galerkin on the tilde basis: the linear part
// is the chain, the quadratic part is formed on the grid and projected with
// the rho inner product. The vorticity formulation is plain Fourier-Galerkin.

#include "dglab/linear_dynamics.hpp"
#include "dglab/rk4.hpp"
#include "dglab/series.hpp"
#include "dglab/spectral.hpp"
#include "dglab/verdict.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace dglab {

enum class Dealias { TwoThirds, None };
enum class Formulation { Perturbation, Vorticity };

inline std::string to_string(Dealias d) { return d == Dealias::TwoThirds ? "two_thirds" : "none"; }
inline std::string to_string(Formulation f) { return f == Formulation::Perturbation ? "perturbation" : "vorticity"; }

struct SolverConfig {
    std::size_t M = 512;
    std::size_t modes = 170;
    double dt = 1e-3;
    double a = 1.0;
    Dealias dealias = Dealias::TwoThirds;
    Formulation formulation = Formulation::Perturbation;
    std::size_t sample_every = 100;
    std::size_t snapshot_every = 0; // in samples; 0 keeps no snapshots
    double guard_sup = 1e6;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const
    {
        if (M < 4 || (M & (M - 1)) != 0) {
            throw std::invalid_argument("config.M: must be a power of two >= 4");
        }
        const std::size_t cap = dealias == Dealias::TwoThirds ? two_thirds_modes(M) : M / 2 - 1;
        if (modes < 4 || modes > cap) {
            throw std::invalid_argument("config.modes: must lie in [4, " + std::to_string(cap) + "] for M = "
                                        + std::to_string(M) + " and dealias " + to_string(dealias));
        }
        if (!(dt > 0.0) || !std::isfinite(dt)) {
            throw std::invalid_argument("config.dt: must be positive");
        }
        if (!std::isfinite(a)) {
            throw std::invalid_argument("config.a: must be finite");
        }
        if (formulation == Formulation::Perturbation && a != 1.0) {
            throw std::invalid_argument("config.a: the perturbation formulation needs a = 1");
        }
        if (sample_every == 0) {
            throw std::invalid_argument("config.sample_every: must be >= 1");
        }
    }

    /// Tilde truncation used by the perturbation formulation.
    std::size_t tilde_size() const { return modes - 2; }
};

// ---------------------------------------------------------------------------
// Right-hand sides

/// -a u omega' + omega u' with u from the u(0) = 0 gauge. Products are formed
/// on the transform's grid and projected back onto omega's modes.
inline FourierField rhs_vorticity(const FourierField& omega, double a, const GridTransform& grid)
{
    const FourierField u = velocity_from_vorticity(omega, Gauge::UAtZero);
    const std::vector<double> w = grid.to_grid(omega);
    const std::vector<double> wp = grid.to_grid(derivative(omega));
    const std::vector<double> uu = grid.to_grid(u);
    const std::vector<double> up = grid.to_grid(hilbert(omega));
    std::vector<double> r(w.size());
    for (std::size_t m = 0; m < r.size(); ++m) {
        r[m] = -a * uu[m] * wp[m] + w[m] * up[m];
    }
    return grid.from_grid(r, omega.modes());
}

/// Smallest power-of-two grid that resolves quadratic products of `modes`
/// frequencies without aliasing.
inline std::size_t dealiased_grid_size(std::size_t modes)
{
    std::size_t M = 4;
    while (two_thirds_modes(M) < modes) {
        M *= 2;
    }
    return M;
}

inline FourierField rhs_vorticity(const FourierField& omega, double a)
{
    const GridTransform grid(dealiased_grid_size(std::max<std::size_t>(omega.modes(), 1)));
    return rhs_vorticity(omega, a, grid);
}

/// -L eta + N(eta) assembled pointwise from the four terms of L. The result
/// carries `out_modes` frequencies (default eta.modes() + 2, enough for -L eta).
inline FourierField rhs_perturbation(const FourierField& eta, const GridTransform& grid, std::size_t out_modes = 0)
{
    if (out_modes == 0) {
        out_modes = eta.modes() + 2;
    }
    const FourierField v = velocity_from_vorticity(eta, Gauge::UAtZero);
    const std::vector<double> e = grid.to_grid(eta);
    const std::vector<double> ep = grid.to_grid(derivative(eta));
    const std::vector<double> he = grid.to_grid(hilbert(eta));
    const std::vector<double> vv = grid.to_grid(v);
    const std::size_t M = grid.size();
    std::vector<double> r(M);
    for (std::size_t m = 0; m < M; ++m) {
        const double t = grid_theta(m, M);
        const double s2 = std::sin(2.0 * t);
        const double c2 = std::cos(2.0 * t);
        const double L = 0.5 * s2 * ep[m] - c2 * e[m] + s2 * he[m] - 2.0 * c2 * vv[m];
        const double N = he[m] * e[m] - vv[m] * ep[m];
        r[m] = -L + N;
    }
    return grid.from_grid(r, out_modes);
}

inline FourierField rhs_perturbation(const FourierField& eta)
{
    const GridTransform grid(dealiased_grid_size(eta.modes() + 2));
    return rhs_perturbation(eta, grid);
}

/// Tilde-Galerkin right-hand side: chain(eta) + P N(eta).
class TildeRhs {
public:
    TildeRhs(const SolverConfig& cfg)
        : modes_(cfg.modes), n_(cfg.tilde_size()), chain_(cfg.tilde_size()), grid_(cfg.M)
    {
    }

    std::size_t size() const { return n_; }
    const GridTransform& grid() const { return grid_; }

    /// Projected quadratic term only.
    TildeSeries nonlinear(const std::vector<double>& eta) const
    {
        const SineSeries b = tilde_to_sine(TildeSeries(eta));
        const FourierField f = to_fourier(b, modes_);
        const std::vector<double> e = grid_.to_grid(f);
        const std::vector<double> ep = grid_.to_grid(derivative(f));
        const std::vector<double> vp = grid_.to_grid(hilbert(f));
        const std::vector<double> v = grid_.to_grid(velocity_from_vorticity(f, Gauge::UAtZero));
        std::vector<double> prod(e.size());
        for (std::size_t m = 0; m < prod.size(); ++m) {
            prod[m] = vp[m] * e[m] - v[m] * ep[m];
        }
        const FourierField nf = grid_.from_grid(prod, modes_);
        return sine_to_tilde(sine_part(nf)).tilde;
    }

    void operator()(const std::vector<double>& eta, std::vector<double>& out) const
    {
        chain_.apply(eta, out);
        const TildeSeries nl = nonlinear(eta);
        for (std::size_t i = 0; i < n_; ++i) {
            out[i] += nl.coeffs[i];
        }
    }

private:
    std::size_t modes_;
    std::size_t n_;
    LinearChainOperator chain_;
    GridTransform grid_;
};

// Flat layout for the vorticity state: [mean, cos_1..cos_K, sin_1..sin_K].
inline std::vector<double> flatten(const FourierField& f)
{
    std::vector<double> x;
    x.reserve(1 + 2 * f.modes());
    x.push_back(f.mean);
    x.insert(x.end(), f.cos.begin(), f.cos.end());
    x.insert(x.end(), f.sin.begin(), f.sin.end());
    return x;
}

inline FourierField unflatten(const std::vector<double>& x)
{
    const std::size_t K = (x.size() - 1) / 2;
    FourierField f(K);
    f.mean = x[0];
    std::copy(x.begin() + 1, x.begin() + 1 + static_cast<long>(K), f.cos.begin());
    std::copy(x.begin() + 1 + static_cast<long>(K), x.end(), f.sin.begin());
    return f;
}

// ---------------------------------------------------------------------------
// State and diagnostics

struct NonlinearState {
    Formulation formulation = Formulation::Perturbation;
    TildeSeries eta;     // perturbation formulation
    FourierField omega;  // vorticity formulation
    double t = 0.0;

    static NonlinearState perturbation(const TildeSeries& eta0)
    {
        NonlinearState s;
        s.formulation = Formulation::Perturbation;
        s.eta = eta0;
        return s;
    }

    static NonlinearState vorticity(const FourierField& omega0)
    {
        NonlinearState s;
        s.formulation = Formulation::Vorticity;
        s.omega = omega0;
        return s;
    }

    /// Vorticity -sin(2 theta) + eta for tilde data, with `modes` frequencies.
    static NonlinearState vorticity_from_tilde(const TildeSeries& eta0, std::size_t modes)
    {
        FourierField w = to_fourier(tilde_to_sine(eta0), modes);
        if (modes >= 2) {
            w.sin[1] -= 1.0;
        }
        return vorticity(w);
    }
};

/// Perturbation eta = omega + sin(2 theta) as a FourierField.
inline FourierField perturbation_field(const NonlinearState& s, std::size_t modes)
{
    if (s.formulation == Formulation::Perturbation) {
        return to_fourier(tilde_to_sine(s.eta), modes);
    }
    FourierField f = resize_modes(s.omega, modes).field;
    if (modes >= 2) {
        f.sin[1] += 1.0;
    }
    return f;
}

struct Diagnostics {
    double hdw_norm = 0.0;
    double hdw_residual = 0.0; // relative residual of the tilde projection
    double u_l2 = 0.0;         // ||rho^{1/2} eta'||_{L2} through the weighted derivative
    double l2_norm = 0.0;      // ||eta||_{L2} on the grid
    double sup_norm = 0.0;     // max |eta| on the grid
    double omega_sup = 0.0;    // max |omega| on the grid
    double parity_leak = 0.0;  // sqrt of the mass on odd-frequency sine modes
    double tail_mass = 0.0;    // H_DW energy above two thirds of the retained modes
};

inline Diagnostics diagnostics(const NonlinearState& s, const GridTransform& grid, std::size_t modes)
{
    Diagnostics d;
    const FourierField eta = perturbation_field(s, modes);
    TildeSeries tilde;
    if (s.formulation == Formulation::Perturbation) {
        tilde = s.eta;
    } else {
        const auto proj = sine_to_tilde(sine_part(eta));
        tilde = proj.tilde;
        d.hdw_residual = proj.relative_residual;
    }
    d.hdw_norm = hdw_norm(tilde);
    d.u_l2 = l2_norm(weighted_derivative(tilde)) / std::sqrt(std::numbers::pi);

    const std::vector<double> g = grid.to_grid(eta);
    double acc = 0.0;
    double sup = 0.0;
    double wsup = 0.0;
    for (std::size_t m = 0; m < g.size(); ++m) {
        acc += g[m] * g[m];
        sup = std::max(sup, std::abs(g[m]));
        const double w = g[m] - std::sin(2.0 * grid_theta(m, g.size()));
        wsup = std::max(wsup, std::abs(w));
        if (!std::isfinite(g[m])) {
            sup = wsup = std::numeric_limits<double>::infinity();
        }
    }
    d.l2_norm = std::sqrt(acc * 2.0 * std::numbers::pi / static_cast<double>(g.size()));
    d.sup_norm = sup;
    d.omega_sup = wsup;

    double leak = 0.0;
    for (std::size_t j = 1; j <= eta.modes(); j += 2) {
        leak += eta.sin[j - 1] * eta.sin[j - 1];
    }
    d.parity_leak = std::sqrt(leak);

    const std::size_t start = (2 * modes) / 3;
    double tail = 0.0;
    for (std::size_t k = start + 1; k <= tilde.size(); ++k) {
        tail += tilde.coeffs[k - 1] * tilde.coeffs[k - 1];
    }
    d.tail_mass = tail;
    return d;
}

// ---------------------------------------------------------------------------
// Time evolution

struct NonlinearSample {
    double t = 0.0;
    Diagnostics diag;
};

struct NonlinearRun {
    SolverConfig config;
    std::vector<NonlinearSample> samples;
    std::vector<NonlinearState> snapshots;
    NonlinearState final_state;  // last good state
    bool guard_tripped = false;
    std::string guard_reason;
};

/// Optional per-step hook; returning true stops the run after that step.
using StepObserver = std::function<bool(const NonlinearState&)>;

namespace detail {

template <class Rhs, class ToState>
NonlinearRun integrate(std::vector<double> x, Rhs& rhs, ToState to_state, const SolverConfig& cfg, double T,
                       const GridTransform& grid, const StepObserver& observe)
{
    NonlinearRun run;
    run.config = cfg;
    const std::size_t steps = step_count(T, cfg.dt);
    Rk4 rk;
    std::size_t sample_index = 0;

    auto sample = [&](const NonlinearState& s) {
        const Diagnostics d = diagnostics(s, grid, cfg.modes);
        if (!std::isfinite(d.omega_sup) || d.omega_sup > cfg.guard_sup) {
            run.guard_tripped = true;
            run.guard_reason = std::isfinite(d.omega_sup) ? "sup|omega| exceeded guard" : "non-finite state";
            return false;
        }
        run.samples.push_back({s.t, d});
        if (cfg.snapshot_every > 0 && sample_index % cfg.snapshot_every == 0) {
            run.snapshots.push_back(s);
        }
        ++sample_index;
        run.final_state = s;
        return true;
    };

    if (!sample(to_state(x, 0.0))) {
        return run;
    }
    for (std::size_t s = 1; s <= steps; ++s) {
        rk.step(x, cfg.dt, rhs);
        const double t = static_cast<double>(s) * cfg.dt;
        bool stop = false;
        if (observe) {
            stop = observe(to_state(x, t));
        }
        if (stop || s % cfg.sample_every == 0 || s == steps) {
            if (!sample(to_state(x, t))) {
                break;
            }
        }
        if (stop) {
            break;
        }
    }
    return run;
}

} // namespace detail

inline NonlinearRun evolve_nonlinear(const NonlinearState& state0, const SolverConfig& cfg, double T,
                                     const StepObserver& observe = {})
{
    cfg.validate();
    if (!(T > 0.0)) {
        throw std::invalid_argument("evolve_nonlinear: T must be positive");
    }
    if (state0.formulation != cfg.formulation) {
        throw std::invalid_argument("evolve_nonlinear: state formulation does not match config.formulation");
    }
    if (cfg.formulation == Formulation::Perturbation) {
        TildeRhs rhs(cfg);
        if (state0.eta.size() > rhs.size()) {
            throw std::invalid_argument("evolve_nonlinear: initial data exceeds modes - 2 tilde coefficients");
        }
        std::vector<double> x(rhs.size(), 0.0);
        std::copy(state0.eta.coeffs.begin(), state0.eta.coeffs.end(), x.begin());
        auto to_state = [](const std::vector<double>& v, double t) {
            NonlinearState s = NonlinearState::perturbation(TildeSeries(v));
            s.t = t;
            return s;
        };
        return detail::integrate(std::move(x), rhs, to_state, cfg, T, rhs.grid(), observe);
    }

    if (state0.omega.modes() > cfg.modes) {
        throw std::invalid_argument("evolve_nonlinear: initial vorticity exceeds config.modes");
    }
    const GridTransform grid(cfg.M);
    const double a = cfg.a;
    auto rhs = [&](const std::vector<double>& v, std::vector<double>& out) {
        out = flatten(rhs_vorticity(unflatten(v), a, grid));
    };
    auto to_state = [](const std::vector<double>& v, double t) {
        NonlinearState s = NonlinearState::vorticity(unflatten(v));
        s.t = t;
        return s;
    };
    return detail::integrate(flatten(resize_modes(state0.omega, cfg.modes).field), rhs, to_state, cfg, T, grid,
                             observe);
}

// ---------------------------------------------------------------------------
// Experiments

struct RateFit {
    double window_start = 0.0;
    double window_end = 0.0;
    double rate = 0.0;      // slope of log ||eta|| against t
    double intercept = 0.0;
    double residual = 0.0;  // RMS of the fit in log space
    std::size_t points = 0;
};

/// Least-squares fit of log y = intercept + rate t over samples with t in [t0, t1].
inline RateFit fit_log_rate(const std::vector<double>& t, const std::vector<double>& y, double t0, double t1)
{
    RateFit fit;
    fit.window_start = t0;
    fit.window_end = t1;
    double st = 0, sy = 0, stt = 0, sty = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t0 - 1e-12 || t[i] > t1 + 1e-12 || !(y[i] > 0.0)) {
            continue;
        }
        const double ly = std::log(y[i]);
        st += t[i];
        sy += ly;
        stt += t[i] * t[i];
        sty += t[i] * ly;
        ++n;
    }
    fit.points = n;
    if (n < 2) {
        fit.rate = std::numeric_limits<double>::quiet_NaN();
        return fit;
    }
    const double dn = static_cast<double>(n);
    fit.rate = (dn * sty - st * sy) / (dn * stt - st * st);
    fit.intercept = (sy - fit.rate * st) / dn;
    double ss = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t0 - 1e-12 || t[i] > t1 + 1e-12 || !(y[i] > 0.0)) {
            continue;
        }
        const double r = std::log(y[i]) - fit.intercept - fit.rate * t[i];
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / dn);
    return fit;
}

struct EpsilonResult {
    double epsilon = 0.0;
    double horizon = 0.0;
    double crossing_time = std::numeric_limits<double>::quiet_NaN();
    double final_ratio = 0.0;
    bool crossed = false;
    bool guard_tripped = false;
    std::vector<double> times;
    std::vector<double> ratio;
};

struct LinearCrossCheck {
    double epsilon = 1e-6;
    double max_relative_diff = 0.0;
    double min_envelope_margin = 0.0; // min over samples of ratio / sqrt(J1 / E0) - 1
    double crossing_time = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> times;
    std::vector<double> ratio_nonlinear;
    std::vector<double> ratio_linear;
    std::vector<double> ratio_envelope;
};

struct ExperimentReport {
    std::string label;
    SolverConfig config;
    double T = 0.0;
    NonlinearRun run;                 // stability runs
    RateFit fit;                      // stability runs
    std::vector<EpsilonResult> eps;   // instability runs
    LinearCrossCheck cross_check;     // instability runs
    std::vector<Verdict> verdicts;
    bool passed() const { return all_pass(verdicts); }
};

inline constexpr double kStabilityRate = -3.0 / 8.0;
inline constexpr double kRateTolerance = 0.05;
inline constexpr double kStabilityConstant = 2.0;
inline constexpr double kParityTolerance = 1e-12;

inline ExperimentReport stability_experiment(double amplitude, const std::set<long>& modes, double T,
                                             SolverConfig cfg)
{
    if (amplitude == 0.0 || !std::isfinite(amplitude)) {
        throw std::invalid_argument("stability_experiment: amplitude must be nonzero and finite (zero data)");
    }
    if (modes.empty()) {
        throw std::invalid_argument("stability_experiment: mode set is empty");
    }
    InitialDataSpec spec;
    spec.kind = InitialKind::EvenFamily;
    for (long k : modes) {
        spec.amplitudes[k] = amplitude;
    }
    const TildeSeries eta0 = build_initial_data(spec);
    cfg.formulation = Formulation::Perturbation;

    ExperimentReport rep;
    rep.label = "stability";
    rep.config = cfg;
    rep.T = T;
    rep.run = evolve_nonlinear(NonlinearState::perturbation(eta0), cfg, T);

    std::vector<double> t, y;
    double worst_bound = 0.0;
    double worst_leak = 0.0;
    const double n0 = hdw_norm(eta0);
    for (const auto& s : rep.run.samples) {
        t.push_back(s.t);
        y.push_back(s.diag.hdw_norm);
        worst_bound = std::max(worst_bound, s.diag.hdw_norm / (n0 * std::exp(kStabilityRate * s.t)));
        worst_leak = std::max(worst_leak, s.diag.parity_leak);
    }
    rep.fit = fit_log_rate(t, y, 0.5 * T, T);

    const bool completed = !rep.run.guard_tripped;
    rep.verdicts.push_back({"run_completed", completed, completed ? 0.0 : 1.0, 0.0, rep.run.guard_reason});
    rep.verdicts.push_back({"decay_rate", completed && rep.fit.rate <= kStabilityRate + kRateTolerance, rep.fit.rate,
                            kStabilityRate + kRateTolerance, "fit of log hdw_norm over [T/2, T]"});
    rep.verdicts.push_back({"decay_bound", completed && worst_bound <= kStabilityConstant, worst_bound,
                            kStabilityConstant, "max of hdw_norm / (hdw_norm0 exp(-3t/8))"});
    rep.verdicts.push_back({"parity_leak", worst_leak < kParityTolerance, worst_leak, kParityTolerance,
                            "max odd-frequency mass"});
    return rep;
}

/// Two-mode and custom data must satisfy 0 <= rayleigh <= sqrt(lambda_1) * norm^2.
inline void require_instability_hypothesis(const TildeSeries& eta0)
{
    const double e = hdw_norm_squared(eta0);
    const double r = rayleigh(eta0);
    const double tol = 1e-12 * e;
    if (!(e > 0.0)) {
        throw InitialDataError("instability data must be nonzero");
    }
    if (r < -tol || r > std::sqrt(lambda_lower_d()) * e + tol) {
        const AmplitudeWindow w = two_mode_window(1.0, 2);
        throw InitialDataError("instability hypothesis 0 <= rayleigh <= sqrt(1/50) norm^2 fails (rayleigh = "
                               + std::to_string(r) + ", norm^2 = " + std::to_string(e)
                               + "); for a_1 e~_1 + a_2 e~_2 the admissible window is a_2^2 / a_1^2 in ["
                               + std::to_string(w.lower) + ", " + std::to_string(w.upper) + "]");
    }
}

struct InstabilityOptions {
    double K = 10.0;
    double horizon = 40.0;
    double cross_check_epsilon = 1e-6;
    double cross_check_tolerance = 0.01;
};

namespace detail {

inline EpsilonResult run_epsilon(const TildeSeries& eta0, double eps, const SolverConfig& cfg,
                                 const InstabilityOptions& opt, LinearCrossCheck* check)
{
    EpsilonResult res;
    res.epsilon = eps;
    res.horizon = opt.horizon;
    TildeSeries start(cfg.tilde_size());
    for (std::size_t i = 0; i < eta0.size(); ++i) {
        start.coeffs[i] = eps * eta0.coeffs[i];
    }
    const double n0 = hdw_norm(start);

    // Linear companion for the cross-check, stepped in lockstep.
    const LinearChainOperator chain(cfg.tilde_size());
    std::vector<double> lin = start.coeffs;
    Rk4 rk;
    auto lin_rhs = [&](const std::vector<double>& in, std::vector<double>& out) { chain.apply(in, out); };
    const double e0 = n0 * n0;
    const double r0 = rayleigh(start);
    if (check) {
        check->epsilon = eps;
        check->min_envelope_margin = std::numeric_limits<double>::infinity();
    }

    auto observe = [&](const NonlinearState& s) {
        const double ratio = hdw_norm(s.eta) / n0;
        if (check) {
            rk.step(lin, cfg.dt, lin_rhs);
            double el = 0.0;
            for (double v : lin) {
                el += v * v;
            }
            const double rl = std::sqrt(el) / n0;
            const double env = std::sqrt(comparison_bound(e0, r0, lambda_lower_d(), s.t) / e0);
            check->times.push_back(s.t);
            check->ratio_nonlinear.push_back(ratio);
            check->ratio_linear.push_back(rl);
            check->ratio_envelope.push_back(env);
            check->max_relative_diff = std::max(check->max_relative_diff, std::abs(ratio - rl) / rl);
            check->min_envelope_margin = std::min(check->min_envelope_margin, ratio / env - 1.0);
        }
        if (ratio > opt.K && !res.crossed) {
            res.crossed = true;
            res.crossing_time = s.t;
            return true;
        }
        return false;
    };

    const NonlinearRun run = evolve_nonlinear(NonlinearState::perturbation(start), cfg, opt.horizon, observe);
    res.guard_tripped = run.guard_tripped;
    if (res.guard_tripped) {
        res.crossed = false;
    }
    for (const auto& s : run.samples) {
        res.times.push_back(s.t);
        res.ratio.push_back(s.diag.hdw_norm / n0);
    }
    res.final_ratio = res.ratio.empty() ? 0.0 : res.ratio.back();
    if (check) {
        check->crossing_time = res.crossing_time;
    }
    return res;
}

} // namespace detail

/// Runs eps * eta0 for each eps until ||u(t)|| / ||u0|| exceeds K, where
/// ||u|| = ||rho^{1/2} eta'||_{L2} = hdw_norm.
inline ExperimentReport instability_experiment(const std::vector<double>& epsilons, const InitialDataSpec& spec,
                                               SolverConfig cfg, const InstabilityOptions& opt = {})
{
    const TildeSeries eta0 = build_initial_data(spec);
    require_instability_hypothesis(eta0);
    if (epsilons.empty()) {
        throw std::invalid_argument("instability_experiment: no epsilons given");
    }
    if (eta0.size() > cfg.modes - 2) {
        throw std::invalid_argument("instability_experiment: initial data exceeds the tilde truncation");
    }
    cfg.formulation = Formulation::Perturbation;
    ExperimentReport rep;
    rep.label = "instability";
    rep.config = cfg;
    rep.T = opt.horizon;

    bool all_crossed = true;
    for (double eps : epsilons) {
        if (!(eps > 0.0)) {
            throw std::invalid_argument("instability_experiment: epsilons must be positive");
        }
        rep.eps.push_back(detail::run_epsilon(eta0, eps, cfg, opt, nullptr));
        const EpsilonResult& r = rep.eps.back();
        all_crossed = all_crossed && r.crossed;
        char tag[32];
        std::snprintf(tag, sizeof tag, "%g", eps);
        rep.verdicts.push_back({std::string("crosses_K_eps_") + tag, r.crossed,
                                r.crossed ? r.crossing_time : r.final_ratio, opt.K,
                                r.guard_tripped ? "guard tripped before crossing" : "first time ratio > K"});
    }

    detail::run_epsilon(eta0, opt.cross_check_epsilon, cfg, opt, &rep.cross_check);
    const bool match = rep.cross_check.max_relative_diff < opt.cross_check_tolerance
                       && !std::isnan(rep.cross_check.crossing_time);
    rep.verdicts.push_back({"linear_cross_check", match, rep.cross_check.max_relative_diff,
                            opt.cross_check_tolerance, "max |ratio_nl - ratio_lin| / ratio_lin up to crossing"});
    rep.verdicts.push_back({"linear_envelope", rep.cross_check.min_envelope_margin > -opt.cross_check_tolerance,
                            rep.cross_check.min_envelope_margin, -opt.cross_check_tolerance,
                            "min of ratio_nl / sqrt(J1 / E0) - 1"});
    return rep;
}

} // namespace dglab
