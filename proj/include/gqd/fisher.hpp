#pragma once

// Quantum and classical Fisher information for STS parameters, the
// reparametrization chain {N_s,N_t} -> {r,gamma} -> {D,gamma}, and the
// resulting Cramer-Rao bounds on the discord.
//
// gamma counts as an unknown nuisance parameter; eta is a separately
// calibrated constant and is never estimated.

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "gqd/errors.hpp"
#include "gqd/sts.hpp"

namespace gqd {

enum class ParamBasis { ns_nt, r_gamma, d_gamma };
enum class InfoKind { quantum, classical };
enum class QuadratureKind { squeezed, anti_squeezed };

struct Mat2 {
    double m00 = 0.0, m01 = 0.0;
    double m10 = 0.0, m11 = 0.0;

    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

    Mat2 transpose() const { return {m00, m10, m01, m11}; }

    Mat2 operator*(const Mat2& o) const {
        return {m00 * o.m00 + m01 * o.m10, m00 * o.m01 + m01 * o.m11,
                m10 * o.m00 + m11 * o.m10, m10 * o.m01 + m11 * o.m11};
    }

    double det() const { return m00 * m11 - m01 * m10; }

    // Explicit adjugate inverse; the determinant guard rejects matrices that
    // are singular to machine scale.
    Mat2 inverse() const {
        const double d = det();
        if (!std::isfinite(d) || std::fabs(d) < 1e-300)
            throw std::runtime_error("Mat2::inverse: determinant underflow");
        return {m11 / d, -m01 / d, -m10 / d, m00 / d};
    }

    double min_eigenvalue_symmetric() const {
        const double tr = m00 + m11;
        const double gap = m00 - m11;
        const double rad = std::sqrt(gap * gap + 4.0 * m01 * m10);
        return 0.5 * (tr - rad);
    }

    bool finite() const {
        return std::isfinite(m00) && std::isfinite(m01) &&
               std::isfinite(m10) && std::isfinite(m11);
    }
};

struct InfoMatrix2 {
    Mat2 m;
    ParamBasis basis = ParamBasis::ns_nt;
    InfoKind kind = InfoKind::classical;

    bool valid(double sym_tol = 1e-12, double psd_tol = 1e-10) const {
        if (!m.finite()) return false;
        const double scale = std::fabs(m.m00) + std::fabs(m.m11) + 1.0;
        if (std::fabs(m.m01 - m.m10) > sym_tol * scale) return false;
        return m.min_eigenvalue_symmetric() >= -psd_tol * scale;
    }
};

// Transfer matrix between parameter bases. Entries are stored as
// j[i][k] = d(old_i)/d(new_k): rows run over the from_basis parameters,
// columns over the to_basis parameters.
struct Jacobian2 {
    Mat2 j;
    ParamBasis from_basis = ParamBasis::ns_nt;
    ParamBasis to_basis = ParamBasis::ns_nt;
};

struct CrbResult {
    double var_bound_per_shot = 0.0;  // lower bound on sigma^2(D) * M
    InfoKind kind = InfoKind::classical;
    PhysicalParams at_params;
};

/// QFI matrix in the (N_s, N_t) basis:
/// diag( (1+2N_t)^2 / (N_s(1+N_s)(1+2N_t+2N_t^2)), 1/(N_t(1+N_t)) ).
/// Both entries diverge at zero photon number.
inline InfoMatrix2 qfi_ns_nt(const StsParams& p) {
    detail::require(p.valid(), "qfi_ns_nt: invalid StsParams");
    if (p.n_s <= 0.0 || p.n_t <= 0.0)
        throw std::domain_error("qfi_ns_nt: pole at N_s = 0 or N_t = 0");
    const double nt1 = 1.0 + 2.0 * p.n_t;
    const double h00 = nt1 * nt1 /
        (p.n_s * (1.0 + p.n_s) * (1.0 + 2.0 * p.n_t + 2.0 * p.n_t * p.n_t));
    const double h11 = 1.0 / (p.n_t * (1.0 + p.n_t));
    return {{h00, 0.0, 0.0, h11}, ParamBasis::ns_nt, InfoKind::quantum};
}

/// Fisher matrix of homodyne sampling of one joint quadrature (squeezed or
/// anti-squeezed), per outcome, in the (N_s, N_t) basis.
inline InfoMatrix2 cfi_quadrature(const StsParams& p, QuadratureKind which) {
    detail::require(p.valid(), "cfi_quadrature: invalid StsParams");
    if (p.n_s <= 0.0)
        throw std::domain_error("cfi_quadrature: pole at N_s = 0");
    const double nt1 = 1.0 + 2.0 * p.n_t;
    const double f00 = 1.0 / (2.0 * p.n_s + 2.0 * p.n_s * p.n_s);
    const double f11 = 2.0 / (nt1 * nt1);
    double off = 1.0 / (std::sqrt(p.n_s * (1.0 + p.n_s)) * nt1);
    if (which == QuadratureKind::squeezed) off = -off;
    return {{f00, off, off, f11}, ParamBasis::ns_nt, InfoKind::classical};
}

/// Per-outcome Fisher matrix when half the shots sample the squeezed and half
/// the anti-squeezed quadrature. The opposite-sign off-diagonals cancel
/// exactly, leaving diag(1/(2N_s+2N_s^2), 2/(1+2N_t)^2).
inline InfoMatrix2 cfi_combined(const StsParams& p) {
    const InfoMatrix2 sq = cfi_quadrature(p, QuadratureKind::squeezed);
    const InfoMatrix2 asq = cfi_quadrature(p, QuadratureKind::anti_squeezed);
    return {{0.5 * (sq.m.m00 + asq.m.m00), 0.5 * (sq.m.m01 + asq.m.m01),
             0.5 * (sq.m.m10 + asq.m.m10), 0.5 * (sq.m.m11 + asq.m.m11)},
            ParamBasis::ns_nt, InfoKind::classical};
}

namespace detail {

inline double discord_of_physical(double r, double gamma, double eta) {
    return sts_discord(effective_photons_unchecked(r, gamma, eta));
}

}  // namespace detail

/// Transfer matrix B12 with entries d(N_s,N_t)/d(r,gamma), by central finite
/// differences of the effective-photon map. `step_scale` sets the relative
/// step; the default passes step-halving at 1e-4.
inline Jacobian2 jacobian_b12(const PhysicalParams& q, double step_scale = 1e-6) {
    detail::require(q.valid() && q.r > 0.0, "jacobian_b12: requires r > 0");
    double hr = detail::fd_step(q.r, step_scale);
    if (hr >= q.r) hr = 0.5 * q.r;  // keep the r probe inside the domain
    const double hg = detail::fd_step(q.gamma, step_scale);
    const auto at = [&](double r, double g) {
        return detail::effective_photons_unchecked(r, g, q.eta);
    };
    const StsParams rp = at(q.r + hr, q.gamma), rm = at(q.r - hr, q.gamma);
    const StsParams gp = at(q.r, q.gamma + hg), gm = at(q.r, q.gamma - hg);
    Mat2 j;
    j.m00 = (rp.n_s - rm.n_s) / (2.0 * hr);
    j.m01 = (gp.n_s - gm.n_s) / (2.0 * hg);
    j.m10 = (rp.n_t - rm.n_t) / (2.0 * hr);
    j.m11 = (gp.n_t - gm.n_t) / (2.0 * hg);
    if (!j.finite()) throw std::domain_error("jacobian_b12: non-finite derivative");
    return {j, ParamBasis::ns_nt, ParamBasis::r_gamma};
}

/// Transfer matrix B23 = d(r,gamma)/d(D,gamma)
///   [[ 1/(dD/dr), -(dD/dgamma)/(dD/dr) ],
///    [ 0,          1                   ]]
/// with D(r,gamma) the model discord at fixed eta.
inline Jacobian2 jacobian_b23(const PhysicalParams& q, double step_scale = 1e-6) {
    detail::require(q.valid() && q.r > 0.0, "jacobian_b23: requires r > 0");
    double hr = detail::fd_step(q.r, step_scale);
    if (hr >= q.r) hr = 0.5 * q.r;
    const double hg = detail::fd_step(q.gamma, step_scale);
    const double dr = (detail::discord_of_physical(q.r + hr, q.gamma, q.eta) -
                       detail::discord_of_physical(q.r - hr, q.gamma, q.eta)) / (2.0 * hr);
    const double dg = (detail::discord_of_physical(q.r, q.gamma + hg, q.eta) -
                       detail::discord_of_physical(q.r, q.gamma - hg, q.eta)) / (2.0 * hg);
    if (std::fabs(dr) < 1e-12)
        throw singular_jacobian_error("jacobian_b23: dD/dr vanishes");
    return {{1.0 / dr, -dg / dr, 0.0, 1.0}, ParamBasis::r_gamma, ParamBasis::d_gamma};
}

/// Congruence transform of an information matrix into the Jacobian's target
/// basis. With entries stored as d(old)/d(new) the new matrix is B^T m B;
/// the result is symmetrized to keep rounding from breaking the invariant.
inline InfoMatrix2 reparametrize(const InfoMatrix2& m, const Jacobian2& b) {
    if (m.basis != b.from_basis)
        throw basis_mismatch_error("reparametrize: matrix basis does not match Jacobian");
    Mat2 r = b.j.transpose() * m.m * b.j;
    const double off = 0.5 * (r.m01 + r.m10);
    r.m01 = r.m10 = off;
    return {r, b.to_basis, m.kind};
}

namespace detail {

// At N_t = 0 (reached only for gamma = 0, eta = 1) the thermal row of the
// quantum matrix diverges -- N_t is then known exactly -- and the gamma
// direction is flat, so both bounds reduce to the single-parameter r-block:
// var(D) >= (dD/dr)^2 / ((dN_s/dr)^2 M_00).
inline double crb_pole_fallback(const PhysicalParams& q, InfoKind kind) {
    const StsParams p = effective_photons(q);
    if (p.n_s <= 0.0)
        throw std::domain_error("crb_discord: pole at N_s = 0");
    const double m00 = kind == InfoKind::quantum
        ? 1.0 / (p.n_s * (1.0 + p.n_s))        // QFI N_s entry at N_t = 0
        : 1.0 / (2.0 * p.n_s * (1.0 + p.n_s));
    double hr = fd_step(q.r, 1e-6);
    if (hr >= q.r) hr = 0.5 * q.r;
    const double dns_dr =
        (effective_photons_unchecked(q.r + hr, q.gamma, q.eta).n_s -
         effective_photons_unchecked(q.r - hr, q.gamma, q.eta).n_s) / (2.0 * hr);
    const double dd_dr = (discord_of_physical(q.r + hr, q.gamma, q.eta) -
                          discord_of_physical(q.r - hr, q.gamma, q.eta)) / (2.0 * hr);
    if (std::fabs(dns_dr) < 1e-12 || std::fabs(dd_dr) < 1e-12)
        throw singular_jacobian_error("crb_discord: flat direction at pole fallback");
    return (dd_dr * dd_dr) / (dns_dr * dns_dr * m00);
}

}  // namespace detail

/// Per-shot Cramer-Rao bound on the discord variance: build the information
/// matrix at the effective photons, push it through B12 and B23, invert, and
/// take the (D,D) element.
inline CrbResult crb_discord(const PhysicalParams& q, InfoKind kind) {
    detail::require(q.valid() && q.r > 0.0, "crb_discord: requires r > 0");
    const StsParams p = effective_photons(q);
    if (p.n_t <= 1e-9)
        return {detail::crb_pole_fallback(q, kind), kind, q};

    const InfoMatrix2 m1 = kind == InfoKind::quantum ? qfi_ns_nt(p) : cfi_combined(p);
    const InfoMatrix2 m2 = reparametrize(m1, jacobian_b12(q));
    const InfoMatrix2 m3 = reparametrize(m2, jacobian_b23(q));
    const double bound = m3.m.inverse().m00;
    if (!std::isfinite(bound) || bound <= 0.0)
        throw std::runtime_error("crb_discord: non-positive bound");
    return {bound, kind, q};
}

/// Noise ratio K_M = M var(D) / bound, in dB. 0 dB is optimal estimation.
inline double noise_ratio_db(double var_d, std::uint64_t m, const CrbResult& bound) {
    if (!(var_d > 0.0) || m < 1 || !(bound.var_bound_per_shot > 0.0))
        throw std::domain_error("noise_ratio_db: non-positive input");
    return 10.0 * std::log10(static_cast<double>(m) * var_d / bound.var_bound_per_shot);
}

}  // namespace gqd
