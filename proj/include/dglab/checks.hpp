#pragma once

// Verdict computations that only need persisted columns, so a run can be
// re-judged from its CSV files.

#include "dglab/coefficients.hpp"
#include "dglab/oracle.hpp"
#include "dglab/verdict.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace dglab::checks {

inline constexpr double kSandwichMargin = 1e-9;
inline constexpr double kBracketFraction = 0.99;
inline constexpr double kEvenDecaySlack = 1e-6;

/// min over t > 0 of min(E - J1, J2 - E).
inline double sandwich_margin(const std::vector<double>& t, const std::vector<double>& energy,
                              const std::vector<double>& j1, const std::vector<double>& j2)
{
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] <= 0.0) {
            continue;
        }
        m = std::min({m, energy[i] - j1[i], j2[i] - energy[i]});
    }
    return m;
}

struct BracketStats {
    std::size_t interior = 0;
    std::size_t inside = 0;
    double fraction = 0.0;
};

/// Centered second differences of the energy against [4 l1 E, 4 l2 E], each
/// side widened by the Richardson error bar and the absolute sandwich margin.
inline BracketStats second_derivative_bracket(const std::vector<double>& t, const std::vector<double>& energy,
                                              double l1 = lambda_lower_d(), double l2 = lambda_upper_d())
{
    BracketStats s;
    if (t.size() < 3) {
        return s;
    }
    for (std::size_t i = 1; i + 1 < t.size(); ++i) {
        const double h_left = t[i] - t[i - 1];
        const double h_right = t[i + 1] - t[i];
        if (std::abs(h_left - h_right) > 1e-9 * h_left) {
            continue; // last sample may close a partial interval
        }
        const auto fd = oracle::fd_second_derivative(energy, i, h_left);
        const double pad = fd.error + kSandwichMargin;
        ++s.interior;
        if (fd.value >= 4.0 * l1 * energy[i] - pad && fd.value <= 4.0 * l2 * energy[i] + pad) {
            ++s.inside;
        }
    }
    s.fraction = s.interior ? static_cast<double>(s.inside) / static_cast<double>(s.interior) : 0.0;
    return s;
}

/// max over samples of E(t) / (E(0) exp(-3t/4)).
inline double even_decay_ratio(const std::vector<double>& t, const std::vector<double>& energy)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        worst = std::max(worst, energy[i] / (energy[0] * std::exp(-0.75 * t[i])));
    }
    return worst;
}

inline std::vector<Verdict> linear_verdicts(const std::vector<double>& t, const std::vector<double>& energy,
                                            const std::vector<double>& j1, const std::vector<double>& j2,
                                            bool sandwich_applies, bool even_data)
{
    std::vector<Verdict> out;
    if (sandwich_applies) {
        const double m = sandwich_margin(t, energy, j1, j2);
        out.push_back({"j_sandwich", m > kSandwichMargin, m, kSandwichMargin, "min over t > 0 of min(E - J1, J2 - E)"});
    }
    const BracketStats b = second_derivative_bracket(t, energy);
    out.push_back({"second_derivative_bracket", b.interior > 0 && b.fraction >= kBracketFraction, b.fraction,
                   kBracketFraction, "fraction of interior samples inside [4 l1 E, 4 l2 E] +- error bar"});
    if (even_data) {
        const double r = even_decay_ratio(t, energy);
        out.push_back({"even_decay", r <= 1.0 + kEvenDecaySlack, r, 1.0 + kEvenDecaySlack,
                       "max E(t) / (E(0) exp(-3t/4))"});
    }
    return out;
}

} // namespace dglab::checks
