#pragma once

// Linearized dynamics around the excited state -sin(2 theta).
//
// In tilde coordinates the linearized equation is the stride-2 chain
//
//   d/dt eta_k = -d_k eta_{k-2} + (d_k - d_{k+2}) eta_k + d_{k+2} eta_{k+2},
//
// with eta_{-1} = eta_0 = 0. Truncation at N drops every coupling into an index
// above N; the dropped rate is reported as tail flux.

#include "dglab/coefficients.hpp"
#include "dglab/rk4.hpp"
#include "dglab/series.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dglab {

/// Exact coefficients of -L e_k on the sine basis as (index, coefficient).
inline std::vector<std::pair<long, Rational>> apply_L_sine(long k)
{
    if (k < 1) {
        throw std::domain_error("apply_L_sine: k must be >= 1");
    }
    if (k == 1) {
        return {{3, Rational(-1, 4)}, {1, Rational(3, 4)}};
    }
    if (k == 2) {
        return {};
    }
    const mpz_class kk(k);
    const Rational up = make_rational(-(kk - 2) * (kk - 2), 4 * kk);    // A_k at e_{k+2}
    const Rational down = make_rational((kk + 2) * (kk - 2), 4 * kk);   // B_k at e_{k-2}
    return {{k + 2, up}, {k - 2, down}};
}

/// -L applied to a sine series by superposition; the result has two more modes.
inline SineSeries apply_L_sine(const SineSeries& b)
{
    SineSeries out(b.size() + 2);
    for (long k = 1; k <= static_cast<long>(b.size()); ++k) {
        const double bk = b(k);
        if (bk == 0.0) {
            continue;
        }
        for (const auto& [j, c] : apply_L_sine(k)) {
            out.at(j) += c.get_d() * bk;
        }
    }
    return out;
}

/// Chain matrix at truncation N, stored by diagonals. Row k (1-based) reads
/// sub[k-1] * eta_{k-2} + diag[k-1] * eta_k + sup[k-1] * eta_{k+2}.
struct LinearChainOperator {
    std::size_t N = 0;
    std::vector<double> sub;  // -d_k
    std::vector<double> diag; // d_k - d_{k+2}
    std::vector<double> sup;  // d_{k+2}, zero where k+2 > N

    explicit LinearChainOperator(std::size_t n) : N(n), sub(n), diag(n), sup(n)
    {
        for (std::size_t i = 0; i < n; ++i) {
            const long k = static_cast<long>(i) + 1;
            sub[i] = k > 2 ? -d_coeff(k).get_d() : 0.0;
            diag[i] = diff_coeff(k).get_d();
            sup[i] = static_cast<std::size_t>(k + 2) <= n ? d_coeff(k + 2).get_d() : 0.0;
        }
    }

    /// out = chain * eta for raw coefficient arrays of length N.
    void apply(const double* eta, double* out) const
    {
        for (std::size_t i = 0; i < N; ++i) {
            double acc = diag[i] * eta[i];
            if (i >= 2) {
                acc += sub[i] * eta[i - 2];
            }
            if (i + 2 < N) {
                acc += sup[i] * eta[i + 2];
            }
            out[i] = acc;
        }
    }

    void apply(const std::vector<double>& eta, std::vector<double>& out) const
    {
        out.resize(N);
        apply(eta.data(), out.data());
    }

    /// Magnitude of the couplings dropped at the top: d_{N+1} eta_{N-1} and
    /// d_{N+2} eta_N.
    double truncation_flux(const double* eta) const
    {
        if (N == 0) {
            return 0.0;
        }
        const double top = d_coeff(static_cast<long>(N) + 2).get_d() * eta[N - 1];
        const double next = N >= 2 ? d_coeff(static_cast<long>(N) + 1).get_d() * eta[N - 2] : 0.0;
        return std::hypot(top, next);
    }
};

struct LTildeResult {
    TildeSeries value;
    double truncation_flux = 0.0;
};

/// -L eta on the tilde basis, truncated at N (N = 0 keeps eta's own length).
inline LTildeResult apply_L_tilde(const TildeSeries& eta, std::size_t N = 0)
{
    if (N == 0) {
        N = eta.size();
    }
    LTildeResult out{TildeSeries(N), 0.0};
    for (long k = 1; k <= static_cast<long>(N); ++k) {
        out.value.at(k) = -d_coeff(k).get_d() * eta(k - 2) + diff_coeff(k).get_d() * eta(k)
                          + d_coeff(k + 2).get_d() * eta(k + 2);
    }
    // Components that would land on N+1 and N+2.
    const long n = static_cast<long>(N);
    const double f1 = -d_coeff(n + 1).get_d() * eta(n - 1) + diff_coeff(n + 1).get_d() * eta(n + 1)
                      + d_coeff(n + 3).get_d() * eta(n + 3);
    const double f2 = -d_coeff(n + 2).get_d() * eta(n) + diff_coeff(n + 2).get_d() * eta(n + 2)
                      + d_coeff(n + 4).get_d() * eta(n + 4);
    out.truncation_flux = std::hypot(f1, f2);
    return out;
}

/// <-L eta, eta>_rho = sum_k (d_k - d_{k+2}) eta_k^2.
template <class T>
T rayleigh(const BasicTildeSeries<T>& eta)
{
    T acc(0);
    for (long k = 1; k <= static_cast<long>(eta.size()); ++k) {
        const T c = eta(k);
        acc += ScalarTraits<T>::from(diff_coeff(k)) * c * c;
    }
    return acc;
}

/// Comparison solution of y'' = 4 lambda y, y(0) = energy0, y'(0) = 2 rayleigh0.
inline double comparison_bound(double energy0, double rayleigh0, double lambda, double t)
{
    if (!(lambda > 0.0)) {
        throw std::domain_error("comparison_bound: lambda must be positive");
    }
    const double s = std::sqrt(lambda);
    return energy0 * std::cosh(2.0 * s * t) + rayleigh0 / s * std::sinh(2.0 * s * t);
}

inline double comparison_bounds(const TildeSeries& eta0, double lambda, double t)
{
    return comparison_bound(hdw_norm_squared(eta0), rayleigh(eta0), lambda, t);
}

// ---------------------------------------------------------------------------
// Second-derivative decomposition

template <class T>
struct SFormDecomposition {
    T direct{0};
    T decomposed{0};
    T boundary{0};   // diagonal terms at indices 1, 2, n-1, n
    T forms{0};      // sum_{k=1}^{n-2} f_k
    T remainders{0}; // R_{n-1} + R_n
};

/// Evaluates S_n = sum_{k<=n} d/dt (d_k - d_{k+2}) eta_k^2 two ways: directly
/// from the chain, and as boundary terms + positive forms f_k + remainders
/// R_{n-1}, R_n. Both use eta_k for k up to n+2.
template <class T>
SFormDecomposition<T> sform_decomposition(const BasicTildeSeries<T>& eta, long n)
{
    if (n < 2) {
        throw std::domain_error("sform_decomposition: n must be >= 2");
    }
    auto d = [](long k) { return k >= 1 ? ScalarTraits<T>::from(d_coeff(k)) : T(0); };
    auto diff = [](long k) { return ScalarTraits<T>::from(diff_coeff(k)); };
    auto eps = [](long k) { return ScalarTraits<T>::from(eps_coeff(k)); };

    SFormDecomposition<T> out;
    for (long k = 1; k <= n; ++k) {
        const T df = diff(k);
        out.direct += T(2) * (-d(k) * df * eta(k - 2) * eta(k) + df * df * eta(k) * eta(k)
                              + d(k + 2) * df * eta(k) * eta(k + 2));
    }

    auto diag = [&](long k) -> T {
        if (k < 1) {
            return T(0);
        }
        const T df = diff(k);
        return df * df * eta(k) * eta(k);
    };
    out.boundary = diag(1) + diag(2) + diag(n - 1) + diag(n);
    for (long k = 1; k <= n - 2; ++k) {
        const T ak = diff(k) * diff(k);
        const T ak2 = diff(k + 2) * diff(k + 2);
        out.forms += ak * eta(k) * eta(k) + T(2) * eps(k) * eta(k) * eta(k + 2) + ak2 * eta(k + 2) * eta(k + 2);
    }
    auto remainder = [&](long k) -> T { return T(2) * d(k + 2) * diff(k) * eta(k) * eta(k + 2); };
    out.remainders = remainder(n - 1) + remainder(n);
    out.decomposed = out.boundary + out.forms + out.remainders;
    return out;
}

// ---------------------------------------------------------------------------
// Initial data

enum class InitialKind { SingleMode, TwoMode, EvenFamily, Custom };

struct InitialDataSpec {
    InitialKind kind = InitialKind::SingleMode;
    std::map<long, double> amplitudes;
    bool window = false;
};

class InitialDataError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline std::string to_string(InitialKind k)
{
    switch (k) {
    case InitialKind::SingleMode: return "single_mode";
    case InitialKind::TwoMode: return "two_mode";
    case InitialKind::EvenFamily: return "even_family";
    case InitialKind::Custom: return "custom";
    }
    return "custom";
}

inline InitialKind parse_initial_kind(const std::string& s)
{
    if (s == "single_mode") return InitialKind::SingleMode;
    if (s == "two_mode") return InitialKind::TwoMode;
    if (s == "even_family") return InitialKind::EvenFamily;
    if (s == "custom") return InitialKind::Custom;
    throw InitialDataError("unknown initial data kind '" + s + "'");
}

/// Admissible interval for a_k^2 given a_1 in the two-mode construction:
/// the lower end keeps rayleigh <= sqrt(lambda_1) * norm^2, the upper end
/// keeps rayleigh >= 0.
struct AmplitudeWindow {
    double lower = 0.0;
    double upper = 0.0;
};

inline AmplitudeWindow two_mode_window(double a1, long k, double lambda1 = lambda_lower_d())
{
    if (k < 2) {
        throw InitialDataError("two-mode window needs k >= 2");
    }
    const double growth = diff_coeff(1).get_d();        // 11/18
    const double gap = -diff_coeff(k).get_d();          // d_{k+2} - d_k > 0
    const double s = std::sqrt(lambda1);
    return {(growth - s) / (s + gap) * a1 * a1, growth / gap * a1 * a1};
}

/// Two-mode data a1 e~_1 + a_k e~_k with a_k^2 placed at `fraction` of the window.
inline InitialDataSpec window_two_mode(double a1, long k, double fraction = 0.5)
{
    const AmplitudeWindow w = two_mode_window(a1, k);
    InitialDataSpec spec;
    spec.kind = InitialKind::TwoMode;
    spec.window = true;
    spec.amplitudes[1] = a1;
    spec.amplitudes[k] = std::sqrt(w.lower + fraction * (w.upper - w.lower));
    return spec;
}

inline TildeSeries build_initial_data(const InitialDataSpec& spec)
{
    long top = 0;
    for (const auto& [k, a] : spec.amplitudes) {
        if (k < 1) {
            throw InitialDataError("tilde index must be >= 1, got " + std::to_string(k));
        }
        if (!std::isfinite(a)) {
            throw InitialDataError("amplitude for index " + std::to_string(k) + " is not finite");
        }
        top = std::max(top, k);
    }
    TildeSeries eta(static_cast<std::size_t>(top));
    for (const auto& [k, a] : spec.amplitudes) {
        eta.at(k) = a;
    }

    switch (spec.kind) {
    case InitialKind::SingleMode:
        if (spec.amplitudes.size() != 1) {
            throw InitialDataError("single_mode needs exactly one amplitude");
        }
        break;
    case InitialKind::EvenFamily:
        for (const auto& [k, a] : spec.amplitudes) {
            if (k % 2 != 0) {
                throw InitialDataError("even_family admits only even indices, got " + std::to_string(k));
            }
        }
        break;
    case InitialKind::TwoMode: {
        if (spec.amplitudes.size() != 2 || !spec.amplitudes.count(1)) {
            throw InitialDataError("two_mode needs amplitudes at index 1 and one index k >= 2");
        }
        if (!spec.window) {
            break;
        }
        const double a1 = spec.amplitudes.at(1);
        const long k = std::prev(spec.amplitudes.end())->first;
        const double ak = spec.amplitudes.at(k);
        const AmplitudeWindow w = two_mode_window(a1, k);
        const double ak2 = ak * ak;
        const double slack = 1e-12 * std::max(1.0, w.upper);
        auto describe = [&](const char* side) {
            return std::string("two_mode window violated on the ") + side + " side: a_" + std::to_string(k)
                   + "^2 = " + std::to_string(ak2) + " must lie in [" + std::to_string(w.lower) + ", "
                   + std::to_string(w.upper) + "]";
        };
        if (ak2 < w.lower - slack) {
            throw InitialDataError(describe("lower"));
        }
        if (ak2 > w.upper + slack) {
            throw InitialDataError(describe("upper"));
        }
        const double r = rayleigh(eta);
        const double e = hdw_norm_squared(eta);
        const double tol = 1e-12 * e;
        if (r < -tol) {
            throw InitialDataError(describe("upper") + " (rayleigh < 0)");
        }
        if (r > std::sqrt(lambda_lower_d()) * e + tol) {
            throw InitialDataError(describe("lower") + " (rayleigh > sqrt(lambda_1) * norm^2)");
        }
        break;
    }
    case InitialKind::Custom:
        break;
    }
    return eta;
}

// ---------------------------------------------------------------------------
// Time integration

struct LinearRunOptions {
    double T = 10.0;
    double dt = 1e-3;
    std::size_t N = 256;
    std::size_t sample_every = 10;     // steps between recorded samples
    std::size_t snapshot_every = 100;  // samples between state snapshots
    double guard_factor = 1e12;        // abort if energy exceeds this times the initial energy
    double lambda1 = 1.0 / 50.0;
    double lambda2 = 3.0 / 5.0;
};

struct TrajectoryRecord {
    std::size_t N = 0;
    double dt = 0.0;
    TildeSeries initial;
    std::vector<double> times;
    std::vector<double> energy;
    std::vector<double> rayleigh;
    std::vector<double> j1;
    std::vector<double> j2;
    std::vector<double> tail_flux;
    std::vector<double> tail_mass; // energy in tilde indices above 2N/3
    std::vector<double> snapshot_times;
    std::vector<TildeSeries> snapshots;
    TildeSeries final_state;
    bool guard_tripped = false;
    std::string guard_reason;
};

inline double upper_third_mass(const std::vector<double>& eta)
{
    const std::size_t start = (2 * eta.size()) / 3;
    double acc = 0.0;
    for (std::size_t i = start; i < eta.size(); ++i) {
        acc += eta[i] * eta[i];
    }
    return acc;
}

inline TrajectoryRecord evolve_linear(const TildeSeries& eta0, const LinearRunOptions& opt)
{
    if (!(opt.dt > 0.0) || !(opt.T >= 0.0)) {
        throw std::invalid_argument("evolve_linear: need dt > 0 and T >= 0");
    }
    if (opt.sample_every == 0) {
        throw std::invalid_argument("evolve_linear: sample_every must be >= 1");
    }
    std::size_t active = 0;
    for (std::size_t i = 0; i < eta0.size(); ++i) {
        if (eta0.coeffs[i] != 0.0) {
            active = i + 1;
        }
    }
    if (active == 0) {
        throw std::invalid_argument("evolve_linear: initial data must be nonzero");
    }
    if (opt.N < active + 4) {
        throw std::invalid_argument("evolve_linear: N must be at least the highest active mode + 4");
    }

    const LinearChainOperator chain(opt.N);
    std::vector<double> x(opt.N, 0.0);
    std::copy(eta0.coeffs.begin(), eta0.coeffs.end(), x.begin());

    TrajectoryRecord rec;
    rec.N = opt.N;
    rec.dt = opt.dt;
    rec.initial = TildeSeries(x);
    const double e0 = hdw_norm_squared(rec.initial);
    const double r0 = rayleigh(rec.initial);

    auto record = [&](double t, std::size_t sample_index) {
        const TildeSeries s(x);
        rec.times.push_back(t);
        rec.energy.push_back(hdw_norm_squared(s));
        rec.rayleigh.push_back(rayleigh(s));
        rec.j1.push_back(comparison_bound(e0, r0, opt.lambda1, t));
        rec.j2.push_back(comparison_bound(e0, r0, opt.lambda2, t));
        rec.tail_flux.push_back(chain.truncation_flux(x.data()));
        rec.tail_mass.push_back(upper_third_mass(x));
        if (opt.snapshot_every > 0 && sample_index % opt.snapshot_every == 0) {
            rec.snapshot_times.push_back(t);
            rec.snapshots.push_back(s);
        }
    };

    const std::size_t steps = step_count(opt.T, opt.dt);
    Rk4 rk;
    auto rhs = [&](const std::vector<double>& in, std::vector<double>& out) { chain.apply(in, out); };
    record(0.0, 0);
    std::size_t sample_index = 1;
    for (std::size_t s = 1; s <= steps; ++s) {
        rk.step(x, opt.dt, rhs);
        if (s % opt.sample_every == 0 || s == steps) {
            const double t = static_cast<double>(s) * opt.dt;
            double e = 0.0;
            for (double v : x) {
                e += v * v;
            }
            if (!std::isfinite(e) || e > opt.guard_factor * e0) {
                rec.guard_tripped = true;
                rec.guard_reason = std::isfinite(e) ? "energy exceeded guard factor" : "non-finite state";
                break;
            }
            record(t, sample_index++);
        }
    }
    rec.final_state = TildeSeries(x);
    return rec;
}

} // namespace dglab
