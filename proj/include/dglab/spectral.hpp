#pragma once

// FFTW-backed transforms between FourierField and GridField on the grid
// t_m = -pi + 2 pi m / M. The grid offset contributes a factor (-1)^j to mode j.

#include "dglab/series.hpp"

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dglab {

class GridTransform {
public:
    explicit GridTransform(std::size_t M) : M_(M)
    {
        if (M < 4 || (M & (M - 1)) != 0) {
            throw std::invalid_argument("GridTransform: M must be a power of two >= 4, got " + std::to_string(M));
        }
        real_ = fftw_alloc_real(M_);
        spec_ = fftw_alloc_complex(M_ / 2 + 1);
        forward_ = fftw_plan_dft_r2c_1d(static_cast<int>(M_), real_, spec_, FFTW_ESTIMATE);
        backward_ = fftw_plan_dft_c2r_1d(static_cast<int>(M_), spec_, real_, FFTW_ESTIMATE);
    }

    ~GridTransform()
    {
        fftw_destroy_plan(backward_);
        fftw_destroy_plan(forward_);
        fftw_free(spec_);
        fftw_free(real_);
    }

    GridTransform(const GridTransform&) = delete;
    GridTransform& operator=(const GridTransform&) = delete;

    std::size_t size() const { return M_; }

    /// Highest frequency representable without touching the Nyquist mode.
    std::size_t max_modes() const { return M_ / 2 - 1; }

    void to_grid(const FourierField& f, std::vector<double>& out) const
    {
        check_modes(f.modes());
        spec_[0][0] = f.mean;
        spec_[0][1] = 0.0;
        for (std::size_t j = 1; j <= M_ / 2; ++j) {
            if (j <= f.modes()) {
                const double sign = (j % 2 == 0) ? 1.0 : -1.0;
                spec_[j][0] = 0.5 * sign * f.cos[j - 1];
                spec_[j][1] = -0.5 * sign * f.sin[j - 1];
            } else {
                spec_[j][0] = 0.0;
                spec_[j][1] = 0.0;
            }
        }
        fftw_execute(backward_);
        out.assign(real_, real_ + M_);
    }

    std::vector<double> to_grid(const FourierField& f) const
    {
        std::vector<double> out;
        to_grid(f, out);
        return out;
    }

    /// Projects grid values onto frequencies 0..modes.
    void from_grid(const std::vector<double>& values, std::size_t modes, FourierField& out) const
    {
        if (values.size() != M_) {
            throw std::invalid_argument("GridTransform::from_grid: size mismatch");
        }
        check_modes(modes);
        std::copy(values.begin(), values.end(), real_);
        fftw_execute(forward_);
        const double scale = 1.0 / static_cast<double>(M_);
        out.mean = spec_[0][0] * scale;
        out.cos.assign(modes, 0.0);
        out.sin.assign(modes, 0.0);
        for (std::size_t j = 1; j <= modes; ++j) {
            const double sign = (j % 2 == 0) ? 1.0 : -1.0;
            out.cos[j - 1] = 2.0 * sign * spec_[j][0] * scale;
            out.sin[j - 1] = -2.0 * sign * spec_[j][1] * scale;
        }
    }

    FourierField from_grid(const std::vector<double>& values, std::size_t modes) const
    {
        FourierField out;
        from_grid(values, modes, out);
        return out;
    }

    GridField to_grid_field(const FourierField& f) const { return GridField{to_grid(f)}; }
    FourierField from_grid_field(const GridField& g, std::size_t modes) const { return from_grid(g.values, modes); }

private:
    void check_modes(std::size_t modes) const
    {
        if (modes > max_modes()) {
            throw std::invalid_argument("GridTransform: " + std::to_string(modes) + " modes exceed grid capacity "
                                        + std::to_string(max_modes()));
        }
    }

    std::size_t M_;
    double* real_ = nullptr;
    fftw_complex* spec_ = nullptr;
    fftw_plan forward_{};
    fftw_plan backward_{};
};

/// Modes retained by the two-thirds rule on an M-point grid.
inline std::size_t two_thirds_modes(std::size_t M) { return M / 3; }

} // namespace dglab
