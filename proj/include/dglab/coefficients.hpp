#pragma once

// Coefficient sequences of the linearized chain around -sin(2 theta) and the
// exact certification of their bounds.
//
//   d_k      = (k-2)^2 (k+2) / (4 k^2)
//   diff_k   = -d_{k+2} + d_k
//   a_k      = diff_k^2
//   eps_k    = -2 d_{k+2}^2 + d_k d_{k+2} + d_{k+2} d_{k+4}
//   A_k      = [[a_k, eps_k], [eps_k, a_{k+2}]]

#include "dglab/rational.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dglab {

/// Lower and upper constants used wherever the stability/instability
/// arguments need an explicit bracket.
inline const Rational& lambda_lower()
{
    static const Rational v(1, 50);
    return v;
}
inline const Rational& lambda_upper()
{
    static const Rational v(3, 5);
    return v;
}
inline double lambda_lower_d() { return 1.0 / 50.0; }
inline double lambda_upper_d() { return 3.0 / 5.0; }

namespace detail {
inline void require_positive_index(std::int64_t k, const char* what)
{
    if (k < 1) {
        throw std::domain_error(std::string(what) + ": index must be >= 1, got " + std::to_string(k));
    }
}
} // namespace detail

inline Rational d_coeff(std::int64_t k)
{
    detail::require_positive_index(k, "d_coeff");
    const mpz_class kk(static_cast<long>(k));
    const mpz_class km2 = kk - 2;
    return make_rational(km2 * km2 * (kk + 2), 4 * kk * kk);
}

/// -d_{k+2} + d_k via its own closed form -1/2 - (2k^2 - 4k - 8) / ((k+2)^2 k^2).
inline Rational diff_coeff(std::int64_t k)
{
    detail::require_positive_index(k, "diff_coeff");
    const mpz_class kk(static_cast<long>(k));
    const mpz_class kp2 = kk + 2;
    return Rational(-1, 2) - make_rational(2 * kk * kk - 4 * kk - 8, kp2 * kp2 * kk * kk);
}

/// Off-diagonal entry via the closed form (-2k^3 + 32k + 32) / ((k+2)^4 (k+4)).
inline Rational eps_coeff(std::int64_t k)
{
    detail::require_positive_index(k, "eps_coeff");
    const mpz_class kk(static_cast<long>(k));
    const mpz_class kp2 = kk + 2;
    const mpz_class kp2sq = kp2 * kp2;
    return make_rational(-2 * kk * kk * kk + 32 * kk + 32, kp2sq * kp2sq * (kk + 4));
}

inline Rational a_coeff(std::int64_t k)
{
    const Rational diff = diff_coeff(k);
    return diff * diff;
}

struct FormMatrix {
    Rational a11;
    Rational a12;
    Rational a22;

    Rational trace() const { return a11 + a22; }
    Rational determinant() const { return a11 * a22 - a12 * a12; }

    /// Exact Sylvester test.
    bool positive_definite() const { return sgn(a11) > 0 && sgn(determinant()) > 0; }

    /// this - shift * I
    FormMatrix shifted(const Rational& shift) const { return {a11 - shift, a12, a22 - shift}; }

    /// shift * I - this
    FormMatrix reflected(const Rational& shift) const { return {shift - a11, -a12, shift - a22}; }
};

inline FormMatrix form_matrix(std::int64_t k)
{
    detail::require_positive_index(k, "form_matrix");
    return {a_coeff(k), eps_coeff(k), a_coeff(k + 2)};
}

/// Eigenvalues (smaller, larger) of a symmetric 2x2 form. The discriminant,
/// trace and determinant are exact; only the final square root and divisions
/// are rounded. The smaller root uses 2 det / (tr + sqrt(disc)) to avoid
/// cancellation.
inline std::pair<double, double> eigenvalues(const FormMatrix& m)
{
    const Rational gap = m.a11 - m.a22;
    const Rational disc = gap * gap + 4 * m.a12 * m.a12;
    const double root = std::sqrt(disc.get_d());
    const double tr = m.trace().get_d();
    const double det = m.determinant().get_d();
    const double upper = 0.5 * (tr + root);
    const double lower = (tr + root) > 0.0 ? 2.0 * det / (tr + root) : 0.5 * (tr - root);
    return {lower, upper};
}

inline std::pair<double, double> eigenvalues(std::int64_t k)
{
    return eigenvalues(form_matrix(k));
}

struct CoeffRecord {
    std::int64_t k = 0;
    Rational d;
    Rational diff;
    Rational a;
    Rational eps;
    double lam1 = 0.0;
    double lam2 = 0.0;
};

inline CoeffRecord coeff_record(std::int64_t k)
{
    CoeffRecord rec;
    rec.k = k;
    rec.d = d_coeff(k);
    rec.diff = diff_coeff(k);
    rec.a = rec.diff * rec.diff;
    rec.eps = eps_coeff(k);
    const auto [l1, l2] = eigenvalues(FormMatrix{rec.a, rec.eps, a_coeff(k + 2)});
    rec.lam1 = l1;
    rec.lam2 = l2;
    return rec;
}

struct BoundsCertificate {
    std::int64_t k_min = 1;
    std::int64_t k_max = 0;
    Rational lower{1, 50};
    Rational upper{3, 5};
    Rational a_lower{9, 64};
    Rational a_upper{121, 324};
    bool verified = true;
    std::vector<std::int64_t> failures;
};

/// Certifies lower < lam1_k <= lam2_k < upper and a_lower <= a_k <= a_upper for
/// k in [k_min, k_max] with exact leading-minor tests on A_k - lower*I and
/// upper*I - A_k. Disjoint ranges can be certified independently and merged.
inline BoundsCertificate certify_bounds_range(std::int64_t k_min, std::int64_t k_max)
{
    detail::require_positive_index(k_min, "certify_bounds");
    if (k_max < k_min) {
        throw std::domain_error("certify_bounds: k_max must be >= k_min");
    }
    BoundsCertificate cert;
    cert.k_min = k_min;
    cert.k_max = k_max;

    // a0 = a_k, a1 = a_{k+1}; each step computes a_{k+2} once.
    Rational a0 = a_coeff(k_min);
    Rational a1 = a_coeff(k_min + 1);
    for (std::int64_t k = k_min; k <= k_max; ++k) {
        const Rational a2 = a_coeff(k + 2);
        const FormMatrix m{a0, eps_coeff(k), a2};
        const bool a_ok = a0 >= cert.a_lower && a0 <= cert.a_upper;
        const bool lower_ok = m.shifted(cert.lower).positive_definite();
        const bool upper_ok = m.reflected(cert.upper).positive_definite();
        if (!(a_ok && lower_ok && upper_ok)) {
            cert.failures.push_back(k);
        }
        a0 = a1;
        a1 = a2;
    }
    cert.verified = cert.failures.empty();
    return cert;
}

inline BoundsCertificate certify_bounds(std::int64_t k_max)
{
    return certify_bounds_range(1, k_max);
}

inline BoundsCertificate merge(const BoundsCertificate& lhs, const BoundsCertificate& rhs)
{
    BoundsCertificate out = lhs;
    out.k_min = std::min(lhs.k_min, rhs.k_min);
    out.k_max = std::max(lhs.k_max, rhs.k_max);
    out.failures.insert(out.failures.end(), rhs.failures.begin(), rhs.failures.end());
    out.verified = lhs.verified && rhs.verified;
    return out;
}

/// Continuous envelope whose integer samples are diff_coeff(k).
inline double f_envelope(double x)
{
    if (!(x >= 1.0)) {
        throw std::domain_error("f_envelope: x must be >= 1");
    }
    const double xp2 = x + 2.0;
    return -0.5 - 2.0 * (x * x - 2.0 * x - 4.0) / (xp2 * xp2 * x * x);
}

/// Exact value of the envelope at an integer point.
inline Rational f_envelope_exact(std::int64_t k)
{
    detail::require_positive_index(k, "f_envelope_exact");
    const mpz_class x(static_cast<long>(k));
    const mpz_class xp2 = x + 2;
    return Rational(-1, 2) - make_rational(2 * (x * x - 2 * x - 4), xp2 * xp2 * x * x);
}

inline double f_envelope_derivative(double x)
{
    const double xp2 = x + 2.0;
    return 4.0 * x * xp2 * (x * x * x - 3.0 * x * x - 10.0 * x - 8.0) / (xp2 * xp2 * xp2 * xp2 * x * x);
}

/// The single critical point of the envelope on [1, inf), i.e. the real root
/// of x^3 - 3x^2 - 10x - 8. Located by bisection on a sign-changing bracket.
inline double envelope_critical_point()
{
    auto cubic = [](double x) { return ((x - 3.0) * x - 10.0) * x - 8.0; };
    double lo = 5.0;
    double hi = 6.0;
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) {
            break;
        }
        (cubic(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace dglab
