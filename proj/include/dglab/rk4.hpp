#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace dglab {

/// Classical fourth-order Runge-Kutta step on a flat state vector. Scratch
/// buffers are reused across steps.
class Rk4 {
public:
    /// rhs(const std::vector<double>& x, std::vector<double>& dxdt)
    template <class Rhs>
    void step(std::vector<double>& x, double dt, Rhs&& rhs)
    {
        const std::size_t n = x.size();
        k1_.resize(n);
        k2_.resize(n);
        k3_.resize(n);
        k4_.resize(n);
        tmp_.resize(n);

        rhs(x, k1_);
        for (std::size_t i = 0; i < n; ++i) {
            tmp_[i] = x[i] + 0.5 * dt * k1_[i];
        }
        rhs(tmp_, k2_);
        for (std::size_t i = 0; i < n; ++i) {
            tmp_[i] = x[i] + 0.5 * dt * k2_[i];
        }
        rhs(tmp_, k3_);
        for (std::size_t i = 0; i < n; ++i) {
            tmp_[i] = x[i] + dt * k3_[i];
        }
        rhs(tmp_, k4_);
        const double w = dt / 6.0;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += w * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
        }
    }

private:
    std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

inline bool is_step_multiple(double T, double dt)
{
    const double n = T / dt;
    return std::abs(n - std::round(n)) <= 1e-9 * std::max(1.0, n);
}

/// Number of fixed steps covering [0, T]; T must be a multiple of dt up to
/// rounding, otherwise the last sample would not land on T.
inline std::size_t step_count(double T, double dt)
{
    if (!is_step_multiple(T, dt)) {
        throw std::invalid_argument("step_count: T is not a multiple of dt");
    }
    return static_cast<std::size_t>(std::llround(T / dt));
}

} // namespace dglab
