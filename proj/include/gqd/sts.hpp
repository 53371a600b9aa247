#pragma once

// Two-mode squeezed thermal states (STS) and their Gaussian quantum discord.
//
// A state is identified by the effective photon numbers (N_s, N_t), or by the
// physical knobs (r, gamma, eta) of a realistic parametric amplifier read out
// with efficiency eta. All entropies are in nats. Quadratures are expressed in
// shot-noise units; covariance matrices carry an explicit vacuum-variance
// convention (1 or 1/2).

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace gqd {

// Negative values this close to zero are treated as floating-point noise and
// clamped; anything further below is a genuine domain violation.
inline constexpr double radicand_tol = 1e-12;
inline constexpr double negative_result_tol = 1e-9;

struct StsParams {
    double n_s = 0.0;  // effective squeezing photons, sinh^2(s)
    double n_t = 0.0;  // effective thermal photons

    bool valid() const {
        return std::isfinite(n_s) && std::isfinite(n_t) && n_s >= 0.0 && n_t >= 0.0;
    }
};

struct PhysicalParams {
    double r = 0.0;      // squeezing strength
    double gamma = 0.0;  // relative parasite gain (parasite strength is gamma*r)
    double eta = 1.0;    // overall homodyne efficiency

    bool valid() const {
        return std::isfinite(r) && std::isfinite(gamma) && std::isfinite(eta) &&
               r >= 0.0 && gamma >= 0.0 && eta > 0.0 && eta <= 1.0;
    }
};

enum class VacuumUnit { one, half };

inline double vacuum_variance(VacuumUnit unit) {
    return unit == VacuumUnit::one ? 1.0 : 0.5;
}

// Symmetric two-mode covariance matrix with blocks a*1 and +-c*sigma_z.
struct CovMatrix2Mode {
    double a = 1.0;  // single-mode variance, identical on both modes
    double c = 0.0;  // inter-mode correlation magnitude, c >= 0
    VacuumUnit vacuum_unit = VacuumUnit::one;

    bool valid() const {
        if (!std::isfinite(a) || !std::isfinite(c) || c < 0.0) return false;
        const double vac = vacuum_variance(vacuum_unit);
        if (a < vac - radicand_tol) return false;
        // physicality: a^2 - c^2 >= vac^2, evaluated in the stable product form
        return (a - c) * (a + c) >= vac * vac - radicand_tol;
    }
};

namespace detail {

inline void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

// x*log(x) with the 0*log(0) = 0 limit convention.
inline double xlogx(double v) {
    return v > 0.0 ? v * std::log(v) : 0.0;
}

// Clamp a tiny negative produced by rounding, reject anything larger.
inline double clamp_nonnegative(double v, double tol, const char* what) {
    if (v >= 0.0) return v;
    if (v < -tol) throw std::domain_error(std::string(what) + " negative beyond tolerance");
    return 0.0;
}

// Central-difference step: relative scale, floored at the scale itself.
inline double fd_step(double x, double scale) {
    return scale * std::max(1.0, std::fabs(x));
}

}  // namespace detail

/// Binary entropy h(x) = (x+1/2)ln(x+1/2) - (x-1/2)ln(x-1/2), in nats.
/// Defined for x >= 1/2; h(1/2) = 0 via the 0*log(0) convention.
inline double binary_entropy(double x) {
    if (!std::isfinite(x) || x < 0.5 - radicand_tol)
        throw std::domain_error("binary_entropy: argument below 1/2");
    if (x < 0.5) x = 0.5;  // rounding noise below the boundary
    return detail::xlogx(x + 0.5) - detail::xlogx(x - 0.5);
}

/// Gaussian quantum discord of an STS, supplemental closed form in (N_s, N_t).
inline double sts_discord(const StsParams& p) {
    detail::require(p.valid(), "sts_discord: invalid StsParams");
    const double ns = p.n_s, nt = p.n_t;
    const double s = ns + nt + 2.0 * ns * nt;
    using detail::xlogx;
    return 2.0 * xlogx(nt) - 2.0 * xlogx(nt + 1.0) - xlogx(s)
         - xlogx(nt * (nt + 1.0) / (1.0 + s))
         + xlogx(1.0 + s)
         + xlogx((ns + 2.0 * ns * nt + (1.0 + nt) * (1.0 + nt)) / (1.0 + s));
}

/// Same discord through the entropic form h(k1/2) - 2 h(k2) + h(k3).
/// Kept as an independent route; must agree with sts_discord.
inline double sts_discord_kappa(const StsParams& p) {
    detail::require(p.valid(), "sts_discord_kappa: invalid StsParams");
    const double ns = p.n_s, nt = p.n_t;
    const double k1 = (1.0 + 2.0 * ns) * (1.0 + 2.0 * nt);
    const double k2 = nt + 0.5;
    const double k3 = (1.0 + ns + nt) * (nt + 0.5) / (1.0 + ns + nt + 2.0 * ns * nt);
    return binary_entropy(0.5 * k1) - 2.0 * binary_entropy(k2) + binary_entropy(k3);
}

struct QuadVariances {
    double sq = 1.0;   // squeezed joint-quadrature variance
    double asq = 1.0;  // anti-squeezed joint-quadrature variance
};

/// Variances of the squeezed/anti-squeezed quadrature combinations,
/// sigma^2 = (1 + 2N_s -+ 2 sqrt(N_s(1+N_s))) (1 + 2N_t).
/// Their product is (1 + 2N_t)^2.
inline QuadVariances quadrature_variances(const StsParams& p) {
    detail::require(p.valid(), "quadrature_variances: invalid StsParams");
    const double root = 2.0 * std::sqrt(p.n_s * (1.0 + p.n_s));
    const double thermal = 1.0 + 2.0 * p.n_t;
    return {(1.0 + 2.0 * p.n_s - root) * thermal,
            (1.0 + 2.0 * p.n_s + root) * thermal};
}

namespace detail {

// The (r, gamma, eta) -> (N_s, N_t) map without parameter validation, so
// finite-difference probes may evaluate it slightly outside the physical
// domain (the expression is even in gamma).
inline StsParams effective_photons_unchecked(double r, double gamma, double eta) {
    const double ch = std::cosh(r);
    const double sh = std::sinh(r);
    const double ch2 = ch * ch;
    const double sh2 = sh * sh;
    const double cg = std::cosh(r * gamma);
    const double c2g = std::cosh(2.0 * r * gamma);
    const double A = 1.0 - eta + eta * ch2 * c2g + eta * sh2;
    const double B = 1.0 - eta + eta * sh2;

    double rad = eta * eta * ch2 * ch2 * c2g * c2g + B * B
               + 2.0 * eta * ch2 * (-2.0 * eta * cg * cg * cg * cg * sh2 + c2g * B);
    rad = clamp_nonnegative(rad, radicand_tol, "effective_photons: radicand");
    const double ns_raw = 0.5 * (A / std::sqrt(rad) - 1.0);

    const double x = eta * cg * cg * std::sinh(2.0 * r);
    double prod = (A - x) * (A + x);
    prod = clamp_nonnegative(prod, radicand_tol, "effective_photons: radicand");
    const double nt_raw = 0.5 * (std::sqrt(prod) - 1.0);

    if (!std::isfinite(ns_raw) || !std::isfinite(nt_raw))
        throw std::domain_error("effective_photons: non-finite result");
    return {clamp_nonnegative(ns_raw, negative_result_tol, "effective_photons: N_s"),
            clamp_nonnegative(nt_raw, negative_result_tol, "effective_photons: N_t")};
}

}  // namespace detail

/// Effective photon numbers of the state prepared with squeezing r, parasite
/// gain gamma*r and detected with efficiency eta.
inline StsParams effective_photons(const PhysicalParams& q) {
    detail::require(q.valid(), "effective_photons: invalid PhysicalParams");
    return detail::effective_photons_unchecked(q.r, q.gamma, q.eta);
}

/// STS covariance matrix entries in the requested vacuum convention:
/// a = (1+2N_t)(1+2N_s), c = 2(1+2N_t)sqrt(N_s(N_s+1)) for vacuum variance 1.
inline CovMatrix2Mode sts_covariance(const StsParams& p, VacuumUnit unit) {
    detail::require(p.valid(), "sts_covariance: invalid StsParams");
    const double thermal = 1.0 + 2.0 * p.n_t;
    double a = thermal * (1.0 + 2.0 * p.n_s);
    double c = 2.0 * thermal * std::sqrt(p.n_s * (p.n_s + 1.0));
    if (unit == VacuumUnit::half) {
        a *= 0.5;
        c *= 0.5;
    }
    return {a, c, unit};
}

/// Symplectic eigenvalues d-, d+ of the two-mode covariance matrix.
inline std::pair<double, double> cm_symplectic_eigenvalues(const CovMatrix2Mode& cm) {
    detail::require(cm.valid(), "cm_symplectic_eigenvalues: unphysical covariance matrix");
    // Delta = I1 + I2 + 2 I3 = 2(a^2 - c^2) and I4 = (a^2 - c^2)^2 for the
    // symmetric family, so the discriminant Delta^2 - 4 I4 is evaluated from
    // the single stable product t = (a - c)(a + c).
    const double t = (cm.a - cm.c) * (cm.a + cm.c);
    const double delta = 2.0 * t;
    const double i4 = t * t;
    double disc = delta * delta - 4.0 * i4;
    if (disc < -radicand_tol)
        throw std::domain_error("cm_symplectic_eigenvalues: negative discriminant");
    if (disc < 0.0) disc = 0.0;
    const double root = std::sqrt(disc);
    const double dm2 = detail::clamp_nonnegative(0.5 * (delta - root), radicand_tol,
                                                 "cm_symplectic_eigenvalues: d-");
    const double dp2 = 0.5 * (delta + root);
    return {std::sqrt(dm2), std::sqrt(dp2)};
}

/// Gaussian discord straight from the covariance matrix (vacuum-1/2 only,
/// where the symplectic-invariant formula applies):
/// D = h(sqrt(I2)) - h(d-) - h(d+) + h((sqrt(I1) + 2 sqrt(I1 I2) + 2 I3)/(1 + 2 sqrt(I2))).
inline double cm_discord(const CovMatrix2Mode& cm) {
    detail::require(cm.vacuum_unit == VacuumUnit::half,
                    "cm_discord: covariance matrix must use the vacuum-1/2 convention");
    detail::require(cm.valid(), "cm_discord: unphysical covariance matrix");
    const auto [dm, dp] = cm_symplectic_eigenvalues(cm);
    const double t = (cm.a - cm.c) * (cm.a + cm.c);  // = sqrt(I1 I2) + I3
    const double last = (cm.a + 2.0 * t) / (1.0 + 2.0 * cm.a);
    return binary_entropy(cm.a) - binary_entropy(dm) - binary_entropy(dp)
         + binary_entropy(last);
}

}  // namespace gqd
