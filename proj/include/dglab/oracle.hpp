#pragma once

// Slow reference computations for cross-validation. Nothing here goes through
// the FFT transforms or the tilde recurrences; coefficients are recovered with
// a direct O(M^2) DFT and derivatives are summed term by term.

#include "dglab/series.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace dglab::oracle {

/// Trigonometric coefficients of grid samples on t_m = -pi + 2 pi m / M.
struct Trig {
    double mean = 0.0;
    std::vector<double> a; // cos
    std::vector<double> b; // sin
};

inline Trig naive_dft(const std::vector<double>& values)
{
    const std::size_t M = values.size();
    if (M < 4 || M % 2 != 0) {
        throw std::invalid_argument("naive_dft: need an even number of samples >= 4");
    }
    const std::size_t K = M / 2 - 1;
    Trig c;
    c.a.assign(K, 0.0);
    c.b.assign(K, 0.0);
    const double h = 2.0 * std::numbers::pi / static_cast<double>(M);
    for (std::size_t m = 0; m < M; ++m) {
        c.mean += values[m];
    }
    c.mean /= static_cast<double>(M);
    for (std::size_t j = 1; j <= K; ++j) {
        double sa = 0.0;
        double sb = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            const double t = -std::numbers::pi + h * static_cast<double>(m);
            // reduce j*t exactly on the grid to keep the phase accurate
            const std::size_t idx = (j * m) % M;
            const double phase = h * static_cast<double>(idx) - std::numbers::pi * static_cast<double>(j % 2);
            (void)t;
            sa += values[m] * std::cos(phase);
            sb += values[m] * std::sin(phase);
        }
        c.a[j - 1] = 2.0 * sa / static_cast<double>(M);
        c.b[j - 1] = 2.0 * sb / static_cast<double>(M);
    }
    return c;
}

inline double eval(const Trig& c, double t)
{
    double s = c.mean;
    for (std::size_t i = 0; i < c.a.size(); ++i) {
        const double j = static_cast<double>(i + 1);
        s += c.a[i] * std::cos(j * t) + c.b[i] * std::sin(j * t);
    }
    return s;
}

inline double eval_derivative(const Trig& c, double t)
{
    double s = 0.0;
    for (std::size_t i = 0; i < c.a.size(); ++i) {
        const double j = static_cast<double>(i + 1);
        s += j * (-c.a[i] * std::sin(j * t) + c.b[i] * std::cos(j * t));
    }
    return s;
}

/// L eta at the grid nodes, L eta = 1/2 sin2t eta' - cos2t eta + sin2t H eta - 2 cos2t v
/// with v' = H eta and v(0) = 0.
inline GridField collocation_apply_L(const GridField& eta)
{
    const std::size_t M = eta.size();
    const Trig c = naive_dft(eta.values);
    Trig h;  // H eta: sin -> -cos, cos -> sin
    Trig v;  // antiderivative of H eta
    h.a.resize(c.a.size());
    h.b.resize(c.a.size());
    v.a.resize(c.a.size());
    v.b.resize(c.a.size());
    double v0 = 0.0;
    for (std::size_t i = 0; i < c.a.size(); ++i) {
        const double j = static_cast<double>(i + 1);
        h.a[i] = -c.b[i];
        h.b[i] = c.a[i];
        v.a[i] = -c.a[i] / j;
        v.b[i] = -c.b[i] / j;
        v0 += v.a[i];
    }
    v.mean = -v0;

    GridField out;
    out.values.resize(M);
    const double step = 2.0 * std::numbers::pi / static_cast<double>(M);
    for (std::size_t m = 0; m < M; ++m) {
        const double t = -std::numbers::pi + step * static_cast<double>(m);
        const double s2 = std::sin(2.0 * t);
        const double c2 = std::cos(2.0 * t);
        out.values[m] = 0.5 * s2 * eval_derivative(c, t) - c2 * eta.values[m] + s2 * eval(h, t)
                        - 2.0 * c2 * eval(v, t);
    }
    return out;
}

struct QuadratureScheme {
    std::size_t panels = 0;
    double value = 0.0;
    double reported_error_estimate = 0.0;
    bool outside_span = false;
};

namespace detail {

inline double weight(double t) { return 1.0 / (4.0 * std::numbers::pi * std::sin(t) * std::sin(t)); }

/// Midpoint sum of rho (eta')^2 on P panels; also returns the largest
/// integrand value at the nodes adjacent to 0 and +-pi.
inline double midpoint(const Trig& c, std::size_t P, double& near_singular)
{
    const double h = 2.0 * std::numbers::pi / static_cast<double>(P);
    double acc = 0.0;
    near_singular = 0.0;
    for (std::size_t m = 0; m < P; ++m) {
        const double t = -std::numbers::pi + (static_cast<double>(m) + 0.5) * h;
        const double d = eval_derivative(c, t);
        const double f = weight(t) * d * d;
        acc += f;
        const double dist = std::min({std::abs(t), std::abs(t - std::numbers::pi), std::abs(t + std::numbers::pi)});
        if (dist < h) {
            near_singular = std::max(near_singular, f);
        }
    }
    return acc * h;
}

} // namespace detail

/// Midpoint quadrature of int rho (eta')^2 with the error estimated from
/// halving the panel count. Integrand values next to the singular points that
/// keep growing under refinement mark data outside the H_DW span.
inline QuadratureScheme quadrature_hdw(const GridField& eta, std::size_t panels = 0)
{
    const Trig c = naive_dft(eta.values);
    if (panels == 0) {
        panels = 2 * eta.size();
    }
    if (panels < 4 || panels % 2 != 0) {
        throw std::invalid_argument("quadrature_hdw: panel count must be even and >= 4");
    }
    QuadratureScheme q;
    q.panels = panels;
    double edge_coarse = 0.0;
    double edge_fine = 0.0;
    double edge_finer = 0.0;
    const double coarse = detail::midpoint(c, panels / 2, edge_coarse);
    q.value = detail::midpoint(c, panels, edge_fine);
    detail::midpoint(c, 2 * panels, edge_finer);
    q.reported_error_estimate = std::abs(q.value - coarse);
    // A bounded integrand has edge values that settle; 1/t^2 growth quadruples them.
    const double scale = std::max(q.value, 1e-300);
    q.outside_span = edge_finer > 2.0 * edge_fine && edge_finer > 1e-8 * scale * static_cast<double>(panels);
    return q;
}

struct FdEstimate {
    double value = 0.0;
    double error = 0.0;
};

/// Centered second difference at index i of a uniformly sampled series with
/// spacing h, with Richardson error |D_h - D_2h| / 3.
inline FdEstimate fd_second_derivative(const std::vector<double>& y, std::size_t i, double h)
{
    if (y.size() < 3 || i < 1 || i + 1 >= y.size()) {
        throw std::out_of_range("fd_second_derivative: need 1 <= i <= len - 2");
    }
    if (!(h > 0.0)) {
        throw std::invalid_argument("fd_second_derivative: spacing must be positive");
    }
    auto second = [&](std::size_t c, std::size_t s, double hh) { return (y[c + s] - 2.0 * y[c] + y[c - s]) / (hh * hh); };
    FdEstimate out;
    out.value = second(i, 1, h);
    if (i >= 2 && i + 2 < y.size()) {
        out.error = std::abs(out.value - second(i, 2, 2.0 * h)) / 3.0;
    } else {
        // next to the ends: difference against the neighbouring stencil
        const std::size_t j = i >= 2 ? i - 1 : i + 1;
        out.error = (j >= 1 && j + 1 < y.size()) ? std::abs(out.value - second(j, 1, h)) : 0.0;
    }
    return out;
}

} // namespace dglab::oracle
