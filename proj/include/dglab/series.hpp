#pragma once

// Representations of odd/periodic fields on the torus [-pi, pi):
//
//   TildeSeries   eta = sum_k eta_k  e~_k,  e~_k = sin((k+2)t)/(k+2) - sin(kt)/k
//   SineSeries    xi  = sum_j b_j    sin(jt)
//   FourierField  f   = mean + sum_j (a_j cos(jt) + b_j sin(jt))
//   GridField     values at t_m = -pi + 2 pi m / M
//
// The tilde basis is orthonormal for <xi, eta>_rho = int rho xi' eta',
// rho = 1 / (4 pi sin^2 t), so the H_DW norm is the l2 norm of the tilde
// coefficients.

#include "dglab/rational.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

namespace dglab {

/// Coefficients on the tilde basis; entry k-1 holds eta_k.
template <class T>
struct BasicTildeSeries {
    std::vector<T> coeffs;

    BasicTildeSeries() = default;
    explicit BasicTildeSeries(std::size_t n) : coeffs(n, T(0)) {}
    explicit BasicTildeSeries(std::vector<T> c) : coeffs(std::move(c)) {}

    std::size_t size() const { return coeffs.size(); }

    /// eta_k with the convention eta_k = 0 outside 1..N.
    T operator()(long k) const
    {
        if (k < 1 || static_cast<std::size_t>(k) > coeffs.size()) {
            return T(0);
        }
        return coeffs[static_cast<std::size_t>(k - 1)];
    }
    T& at(long k) { return coeffs.at(static_cast<std::size_t>(k - 1)); }

    static BasicTildeSeries unit(long k, std::size_t n)
    {
        BasicTildeSeries s(n);
        s.at(k) = T(1);
        return s;
    }
};

/// Coefficients of sin(j t); entry j-1 holds b_j.
template <class T>
struct BasicSineSeries {
    std::vector<T> coeffs;

    BasicSineSeries() = default;
    explicit BasicSineSeries(std::size_t n) : coeffs(n, T(0)) {}
    explicit BasicSineSeries(std::vector<T> c) : coeffs(std::move(c)) {}

    std::size_t size() const { return coeffs.size(); }

    T operator()(long j) const
    {
        if (j < 1 || static_cast<std::size_t>(j) > coeffs.size()) {
            return T(0);
        }
        return coeffs[static_cast<std::size_t>(j - 1)];
    }
    T& at(long j) { return coeffs.at(static_cast<std::size_t>(j - 1)); }
};

using TildeSeries = BasicTildeSeries<double>;
using SineSeries = BasicSineSeries<double>;

/// Real periodic field truncated at `modes` frequencies.
struct FourierField {
    double mean = 0.0;
    std::vector<double> cos; // cos[j-1] multiplies cos(j t)
    std::vector<double> sin; // sin[j-1] multiplies sin(j t)

    FourierField() = default;
    explicit FourierField(std::size_t modes) : cos(modes, 0.0), sin(modes, 0.0) {}

    std::size_t modes() const { return cos.size(); }

    double cos_at(long j) const { return (j >= 1 && static_cast<std::size_t>(j) <= cos.size()) ? cos[j - 1] : 0.0; }
    double sin_at(long j) const { return (j >= 1 && static_cast<std::size_t>(j) <= sin.size()) ? sin[j - 1] : 0.0; }

    /// Zero mean and no cosine content.
    bool is_odd(double tol = 0.0) const
    {
        if (std::abs(mean) > tol) {
            return false;
        }
        for (double c : cos) {
            if (std::abs(c) > tol) {
                return false;
            }
        }
        return true;
    }

    /// No sine content.
    bool is_even(double tol = 0.0) const
    {
        for (double s : sin) {
            if (std::abs(s) > tol) {
                return false;
            }
        }
        return true;
    }
};

struct GridField {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
};

inline double grid_theta(std::size_t m, std::size_t M)
{
    return -std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(M);
}

// ---------------------------------------------------------------------------
// tilde <-> sine

/// b_j = (eta_{j-2} - eta_j) / j for j = 1..N+2.
template <class T>
BasicSineSeries<T> tilde_to_sine(const BasicTildeSeries<T>& eta)
{
    const long n = static_cast<long>(eta.size());
    BasicSineSeries<T> out(static_cast<std::size_t>(n + 2));
    for (long j = 1; j <= n + 2; ++j) {
        out.at(j) = (eta(j - 2) - eta(j)) / ScalarTraits<T>::from_int(j);
    }
    return out;
}

template <class T>
struct TildeProjection {
    BasicTildeSeries<T> tilde;   // eta_1..eta_{J-2}
    BasicTildeSeries<T> tail;    // eta_{J-1}, eta_J from the recurrence
    double relative_residual = 0.0;

    bool in_span(double tol = 1e-10) const { return relative_residual <= tol; }
};

/// Inverse of tilde_to_sine via eta_k = eta_{k-2} - k b_k. The recurrence
/// computes the rho-inner products <xi, e~_k>; for xi in the span the last two
/// values vanish, otherwise they carry the non-terminating tail.
template <class T>
TildeProjection<T> sine_to_tilde(const BasicSineSeries<T>& xi)
{
    const long J = static_cast<long>(xi.size());
    std::vector<T> eta(static_cast<std::size_t>(J), T(0));
    auto get = [&](long k) { return (k >= 1) ? eta[static_cast<std::size_t>(k - 1)] : T(0); };
    for (long k = 1; k <= J; ++k) {
        eta[static_cast<std::size_t>(k - 1)] = get(k - 2) - ScalarTraits<T>::from_int(k) * xi(k);
    }
    TildeProjection<T> out;
    const long keep = J > 2 ? J - 2 : 0;
    out.tilde.coeffs.assign(eta.begin(), eta.begin() + keep);
    out.tail.coeffs.assign(eta.begin() + keep, eta.end());

    double total = 0.0;
    double tail = 0.0;
    for (long k = 1; k <= J; ++k) {
        double v;
        if constexpr (std::is_same_v<T, double>) {
            v = get(k);
        } else {
            v = get(k).get_d();
        }
        total += v * v;
        if (k > keep) {
            tail += v * v;
        }
    }
    out.relative_residual = total > 0.0 ? std::sqrt(tail / total) : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Fourier-space operators

/// Sine series as a FourierField with `modes` frequencies (zero-padded or
/// truncated).
inline FourierField to_fourier(const SineSeries& s, std::size_t modes)
{
    FourierField f(modes);
    for (std::size_t j = 0; j < modes && j < s.size(); ++j) {
        f.sin[j] = s.coeffs[j];
    }
    return f;
}

inline FourierField to_fourier(const SineSeries& s) { return to_fourier(s, s.size()); }

inline SineSeries sine_part(const FourierField& f)
{
    return SineSeries(f.sin);
}

struct Truncation {
    FourierField field;
    double tail_mass = 0.0; // sum of squared dropped coefficients
};

inline Truncation resize_modes(const FourierField& f, std::size_t modes)
{
    Truncation out{FourierField(modes), 0.0};
    out.field.mean = f.mean;
    for (std::size_t j = 0; j < f.modes(); ++j) {
        if (j < modes) {
            out.field.cos[j] = f.cos[j];
            out.field.sin[j] = f.sin[j];
        } else {
            out.tail_mass += f.cos[j] * f.cos[j] + f.sin[j] * f.sin[j];
        }
    }
    return out;
}

inline FourierField derivative(const FourierField& f)
{
    FourierField d(f.modes());
    for (std::size_t i = 0; i < f.modes(); ++i) {
        const double j = static_cast<double>(i + 1);
        d.cos[i] = j * f.sin[i];
        d.sin[i] = -j * f.cos[i];
    }
    return d;
}

/// Multiplier -i sgn(k): sin(jt) -> -cos(jt), cos(jt) -> sin(jt), mean -> 0.
inline FourierField hilbert(const FourierField& f)
{
    FourierField h(f.modes());
    for (std::size_t i = 0; i < f.modes(); ++i) {
        h.cos[i] = -f.sin[i];
        h.sin[i] = f.cos[i];
    }
    return h;
}

enum class Gauge { UAtZero, ZeroMean };

/// u with u' = H omega. The mean of omega does not enter (H kills it); the
/// additive constant is fixed by the gauge.
inline FourierField velocity_from_vorticity(const FourierField& omega, Gauge gauge = Gauge::UAtZero)
{
    FourierField u(omega.modes());
    double at_zero = 0.0;
    for (std::size_t i = 0; i < omega.modes(); ++i) {
        const double j = static_cast<double>(i + 1);
        u.sin[i] = -omega.sin[i] / j;
        u.cos[i] = -omega.cos[i] / j;
        at_zero += u.cos[i];
    }
    u.mean = gauge == Gauge::UAtZero ? -at_zero : 0.0;
    return u;
}

/// v_k = (eta_k - eta_{k-2}) / k^2, k = 1..N+2.
template <class T>
BasicSineSeries<T> velocity_from_tilde(const BasicTildeSeries<T>& eta)
{
    const long n = static_cast<long>(eta.size());
    BasicSineSeries<T> v(static_cast<std::size_t>(n + 2));
    for (long k = 1; k <= n + 2; ++k) {
        v.at(k) = (eta(k) - eta(k - 2)) / ScalarTraits<T>::from_int(k * k);
    }
    return v;
}

template <class T>
T hdw_norm_squared(const BasicTildeSeries<T>& eta)
{
    T acc(0);
    for (const T& c : eta.coeffs) {
        acc += c * c;
    }
    return acc;
}

inline double hdw_norm(const TildeSeries& eta) { return std::sqrt(hdw_norm_squared(eta)); }

/// -sqrt(pi) rho^{1/2} eta' with the signed weight rho^{1/2} = 1/(2 sqrt(pi) sin t);
/// the coefficient of sin((k+1) t) is eta_k.
inline SineSeries weighted_derivative(const TildeSeries& eta)
{
    SineSeries out(eta.size() + 1);
    for (std::size_t k = 1; k <= eta.size(); ++k) {
        out.coeffs[k] = eta.coeffs[k - 1];
    }
    return out;
}

/// Mean and cosine coefficients of sin(k t) / sin(t).
inline FourierField sin_ratio_expansion(long k)
{
    if (k < 1) {
        throw std::domain_error("sin_ratio_expansion: k must be >= 1");
    }
    FourierField f(static_cast<std::size_t>(k > 1 ? k - 1 : 0));
    if (k % 2 == 1) {
        // 1 + 2 sum_{j=1}^{l-1} cos(2 j t), k = 2l - 1
        f.mean = 1.0;
        for (long j = 2; j <= k - 1; j += 2) {
            f.cos[static_cast<std::size_t>(j - 1)] = 2.0;
        }
    } else {
        // 2 sum_{j=1}^{l} cos((2j-1) t), k = 2l
        for (long j = 1; j <= k - 1; j += 2) {
            f.cos[static_cast<std::size_t>(j - 1)] = 2.0;
        }
    }
    return f;
}

/// Direct pointwise evaluation.
inline double evaluate(const FourierField& f, double theta)
{
    double acc = f.mean;
    for (std::size_t i = 0; i < f.modes(); ++i) {
        const double j = static_cast<double>(i + 1);
        acc += f.cos[i] * std::cos(j * theta) + f.sin[i] * std::sin(j * theta);
    }
    return acc;
}

inline double evaluate(const SineSeries& s, double theta)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        acc += s.coeffs[i] * std::sin(static_cast<double>(i + 1) * theta);
    }
    return acc;
}

/// L2 norm of a sine series: sqrt(pi sum b_j^2).
inline double l2_norm(const SineSeries& s)
{
    double acc = 0.0;
    for (double b : s.coeffs) {
        acc += b * b;
    }
    return std::sqrt(std::numbers::pi * acc);
}

inline FourierField operator+(FourierField a, const FourierField& b)
{
    if (b.modes() > a.modes()) {
        a.cos.resize(b.modes(), 0.0);
        a.sin.resize(b.modes(), 0.0);
    }
    a.mean += b.mean;
    for (std::size_t i = 0; i < b.modes(); ++i) {
        a.cos[i] += b.cos[i];
        a.sin[i] += b.sin[i];
    }
    return a;
}

inline FourierField operator*(double s, FourierField a)
{
    a.mean *= s;
    for (auto& c : a.cos) {
        c *= s;
    }
    for (auto& c : a.sin) {
        c *= s;
    }
    return a;
}

inline FourierField operator-(const FourierField& a, const FourierField& b) { return a + (-1.0) * b; }

/// Largest coefficient magnitude, mean included.
inline double max_abs_coeff(const FourierField& f)
{
    double m = std::abs(f.mean);
    for (double c : f.cos) {
        m = std::max(m, std::abs(c));
    }
    for (double c : f.sin) {
        m = std::max(m, std::abs(c));
    }
    return m;
}

} // namespace dglab
