#pragma once

// The two discord estimators.
//
// Inversion: pooled squeezed/anti-squeezed sample variances are inverted in
// closed form; means and uncertainties come from a Monte Carlo over the
// Gaussian sampling distribution of the two variance estimates.
//
// Bayesian: the dataset is split into blocks; each block gets a posterior on a
// (N_s, N_t) grid with Gaussian priors taken from the whole-data inversion;
// block moments are combined by inverse-variance weighting and pushed through
// the discord function with first-order error propagation.
//
// All likelihood work stays in the log domain, so block sizes are not limited
// by probability underflow; the block protocol is kept for resource
// accounting parity with the measurement scheme.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gqd/dataset.hpp"
#include "gqd/errors.hpp"
#include "gqd/rng.hpp"
#include "gqd/sts.hpp"

namespace gqd {

struct VarianceEstimate {
    double value = 0.0;            // second moment about zero
    double var_of_estimate = 0.0;  // 2 value^2 / n_samples
    std::size_t n_samples = 0;
};

enum class EstimationMethod { inversion, bayes };

struct EstimateRecord {
    double d_hat = 0.0;
    double var_d = 0.0;
    double ns_hat = 0.0;
    double nt_hat = 0.0;
    double var_ns = 0.0;
    double var_nt = 0.0;
    EstimationMethod method = EstimationMethod::inversion;
    std::uint64_t resources_m = 0;  // 4 M_q for inversion, N_b * 4 M_q for Bayes
};

/// Variance of zero-mean homodyne samples: the second moment about zero (the
/// likelihood model has no mean parameter). Assuming Gaussian statistics the
/// estimate itself has variance 2 value^2 / n.
inline VarianceEstimate sample_variance(std::span<const double> samples) {
    if (samples.size() < 2)
        throw std::invalid_argument("sample_variance: need at least 2 samples");
    double ss = 0.0;
    for (double v : samples) ss += v * v;
    const double value = ss / static_cast<double>(samples.size());
    if (value <= 0.0)
        throw std::domain_error("sample_variance: degenerate all-zero samples");
    return {value, 2.0 * value * value / static_cast<double>(samples.size()),
            samples.size()};
}

/// Closed-form inversion of the squeezed/anti-squeezed variance pair:
///   N_t = (sqrt(s_sq s_asq) - 1)/2
///   N_s = ((s_sq + s_asq)/(2 sqrt(s_sq s_asq)) - 1)/2
/// Exact round trip with quadrature_variances. Results are clamped at zero;
/// negatives beyond tolerance signal inconsistent inputs.
inline StsParams invert_variances(double s_sq, double s_asq) {
    if (!(s_sq > 0.0) || !std::isfinite(s_sq) || !std::isfinite(s_asq))
        throw std::invalid_argument("invert_variances: variances must be positive");
    if (s_sq > s_asq)
        throw std::invalid_argument("invert_variances: squeezed variance exceeds anti-squeezed");
    const double geo = std::sqrt(s_sq * s_asq);
    const double nt = 0.5 * (geo - 1.0);
    const double ns = 0.5 * ((s_sq + s_asq) / (2.0 * geo) - 1.0);
    return {detail::clamp_nonnegative(ns, negative_result_tol, "invert_variances: N_s"),
            detail::clamp_nonnegative(nt, negative_result_tol, "invert_variances: N_t")};
}

namespace detail {

// Inversion for Monte Carlo draws: the map is symmetric in the variance pair,
// so an ordering flip is processed through (min, max), and draws landing just
// outside N >= 0 are projected onto the boundary instead of rejected.
inline StsParams invert_variances_projected(double va, double vb) {
    const double lo = std::min(va, vb);
    const double hi = std::max(va, vb);
    const double geo = std::sqrt(lo * hi);
    const double nt = 0.5 * (geo - 1.0);
    const double ns = 0.5 * ((lo + hi) / (2.0 * geo) - 1.0);
    return {std::max(0.0, ns), std::max(0.0, nt)};
}

struct MomentAccumulator {
    double sum = 0.0;
    double sum_sq = 0.0;

    void add(double v) {
        sum += v;
        sum_sq += v * v;
    }
    void merge(const MomentAccumulator& o) {
        sum += o.sum;
        sum_sq += o.sum_sq;
    }
    double mean(std::size_t n) const { return sum / static_cast<double>(n); }
    double sample_variance(std::size_t n) const {
        const double m = mean(n);
        const double v = (sum_sq - static_cast<double>(n) * m * m) /
                         static_cast<double>(n - 1);
        return std::max(v, 0.0);
    }
};

}  // namespace detail

/// Inversion estimate with Monte Carlo uncertainty propagation.
///
/// Q(1) and Q(4) are pooled as 2 M_q squeezed samples, Q(2) and Q(3) as 2 M_q
/// anti-squeezed samples. `mc_trials` variance pairs are drawn from the
/// Gaussian sampling distribution of the two estimates and mapped through the
/// inversion and the discord; the returned values are their means, the
/// uncertainties their sample variances. Non-positive variance draws are
/// redrawn, with an alarm when more than 1% of draws get rejected.
inline EstimateRecord inversion_estimate(const HomodyneDataset& ds,
                                         std::size_t mc_trials, std::uint64_t seed) {
    detail::require(ds.valid(), "inversion_estimate: invalid dataset");
    if (mc_trials < 10000)
        throw std::invalid_argument("inversion_estimate: mc_trials must be >= 1e4");

    const QuadratureSamples q = derive_quadratures(ds);
    std::vector<double> pooled_sq(q.q1);
    pooled_sq.insert(pooled_sq.end(), q.q4.begin(), q.q4.end());
    std::vector<double> pooled_asq(q.q2);
    pooled_asq.insert(pooled_asq.end(), q.q3.begin(), q.q3.end());
    const VarianceEstimate vsq = sample_variance(pooled_sq);
    const VarianceEstimate vasq = sample_variance(pooled_asq);
    const double sd_sq = std::sqrt(vsq.var_of_estimate);
    const double sd_asq = std::sqrt(vasq.var_of_estimate);

    constexpr std::uint32_t max_attempts = 256;
    detail::MomentAccumulator acc_ns, acc_nt, acc_d;
    std::uint64_t rejected = 0;
    for (std::size_t trial = 0; trial < mc_trials; ++trial) {
        double draw_sq = 0.0, draw_asq = 0.0;
        std::uint32_t attempt = 0;
        for (;; ++attempt) {
            if (attempt == max_attempts)
                throw rejection_rate_error(
                    "inversion_estimate: persistent non-positive variance draws");
            const auto z = rng::normal_pair(seed, trial, rng::stream_inversion_mc, attempt);
            draw_sq = vsq.value + sd_sq * z.z0;
            draw_asq = vasq.value + sd_asq * z.z1;
            if (draw_sq > 0.0 && draw_asq > 0.0) break;
            ++rejected;
        }
        const StsParams t = detail::invert_variances_projected(draw_sq, draw_asq);
        acc_ns.add(t.n_s);
        acc_nt.add(t.n_t);
        acc_d.add(sts_discord(t));
    }
    const double total = static_cast<double>(mc_trials + rejected);
    if (static_cast<double>(rejected) > 0.01 * total)
        throw rejection_rate_error("inversion_estimate: rejection rate above 1%");

    EstimateRecord rec;
    rec.ns_hat = acc_ns.mean(mc_trials);
    rec.nt_hat = acc_nt.mean(mc_trials);
    rec.d_hat = acc_d.mean(mc_trials);
    rec.var_ns = acc_ns.sample_variance(mc_trials);
    rec.var_nt = acc_nt.sample_variance(mc_trials);
    rec.var_d = acc_d.sample_variance(mc_trials);
    rec.method = EstimationMethod::inversion;
    rec.resources_m = 4 * static_cast<std::uint64_t>(ds.m_q());
    return rec;
}

/// Joint log-likelihood of the four quadrature channels under the STS model:
/// channels 1 and 4 are zero-mean Gaussian with the squeezed variance,
/// channels 2 and 3 with the anti-squeezed one. Channels may be empty.
inline double log_likelihood(const QuadratureSamples& q, const StsParams& p) {
    const QuadVariances v = quadrature_variances(p);
    if (!(v.sq > 0.0) || !(v.asq > 0.0))
        throw std::domain_error("log_likelihood: non-positive model variance");
    constexpr double ln_two_pi = 1.8378770664093454836;
    const auto channel = [](const std::vector<double>& samples, double var) {
        double ss = 0.0;
        for (double x : samples) ss += x * x;
        return -0.5 * static_cast<double>(samples.size()) * (ln_two_pi + std::log(var))
             - ss / (2.0 * var);
    };
    return channel(q.q1, v.sq) + channel(q.q4, v.sq) +
           channel(q.q2, v.asq) + channel(q.q3, v.asq);
}

struct GaussianPrior {
    double mean = 0.0;
    double var = 0.0;
};

struct GridSpec {
    std::size_t points_per_axis = 201;
    double width_sigmas = 6.0;  // half-width of each axis in prior sigmas
};

// Posterior on a rectangular (N_s, N_t) grid. log_post holds the normalized
// log-density row-major (N_s index slow); normalizer is the log of the
// integral that was divided out.
struct PosteriorGrid {
    std::vector<double> ns_axis;
    std::vector<double> nt_axis;
    std::vector<double> log_post;
    double normalizer = 0.0;

    double at(std::size_t i, std::size_t j) const {
        return log_post[i * nt_axis.size() + j];
    }
};

struct BlockEstimate {
    double ns = 0.0;
    double var_ns = 0.0;
    double nt = 0.0;
    double var_nt = 0.0;
};

namespace detail {

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) v[i] = lo + step * static_cast<double>(i);
    v.back() = hi;
    return v;
}

inline std::vector<double> prior_axis(const GaussianPrior& prior, const GridSpec& spec) {
    if (!(prior.var > 0.0) || !std::isfinite(prior.var) || !std::isfinite(prior.mean))
        throw std::invalid_argument("posterior grid: prior variance must be positive");
    if (spec.points_per_axis < 8)
        throw std::invalid_argument("posterior grid: too few points per axis");
    const double sigma = std::sqrt(prior.var);
    const double lo = std::max(0.0, prior.mean - spec.width_sigmas * sigma);
    const double hi = prior.mean + spec.width_sigmas * sigma;
    if (!(hi > lo)) throw std::invalid_argument("posterior grid: empty axis");
    return linspace(lo, hi, spec.points_per_axis);
}

// Trapezoid weight along a uniform axis.
inline double trap_weight(std::size_t i, std::size_t n, double step) {
    return (i == 0 || i + 1 == n) ? 0.5 * step : step;
}

struct ChannelStats {
    double n = 0.0;
    double ss = 0.0;
};

inline ChannelStats stats_of(const std::vector<double>& samples) {
    ChannelStats s;
    s.n = static_cast<double>(samples.size());
    for (double x : samples) s.ss += x * x;
    return s;
}

}  // namespace detail

/// Posterior density of (N_s, N_t) given one data block and Gaussian priors
/// truncated to the physical region (the truncation constant cancels in the
/// normalization; the grid itself enforces N >= 0).
inline PosteriorGrid build_posterior_grid(const QuadratureSamples& block,
                                          const GaussianPrior& prior_ns,
                                          const GaussianPrior& prior_nt,
                                          const GridSpec& spec = {}) {
    if (block.q1.size() != block.q2.size() || block.q1.size() != block.q3.size() ||
        block.q1.size() != block.q4.size() || block.q1.empty())
        throw std::invalid_argument("build_posterior_grid: channels must hold equal, non-zero counts");

    PosteriorGrid grid;
    grid.ns_axis = detail::prior_axis(prior_ns, spec);
    grid.nt_axis = detail::prior_axis(prior_nt, spec);
    const std::size_t ni = grid.ns_axis.size();
    const std::size_t nj = grid.nt_axis.size();
    grid.log_post.resize(ni * nj);

    const detail::ChannelStats c1 = detail::stats_of(block.q1);
    const detail::ChannelStats c2 = detail::stats_of(block.q2);
    const detail::ChannelStats c3 = detail::stats_of(block.q3);
    const detail::ChannelStats c4 = detail::stats_of(block.q4);
    const double n_sq = c1.n + c4.n, ss_sq = c1.ss + c4.ss;
    const double n_asq = c2.n + c3.n, ss_asq = c2.ss + c3.ss;
    constexpr double ln_two_pi = 1.8378770664093454836;

    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ni; ++i) {
        const double ns = grid.ns_axis[i];
        const double dns = ns - prior_ns.mean;
        const double lp_ns = -0.5 * dns * dns / prior_ns.var;
        const double root = 2.0 * std::sqrt(ns * (1.0 + ns));
        const double f_sq = 1.0 + 2.0 * ns - root;
        const double f_asq = 1.0 + 2.0 * ns + root;
        for (std::size_t j = 0; j < nj; ++j) {
            const double nt = grid.nt_axis[j];
            const double thermal = 1.0 + 2.0 * nt;
            const double v_sq = f_sq * thermal;
            const double v_asq = f_asq * thermal;
            const double dnt = nt - prior_nt.mean;
            const double ll =
                -0.5 * n_sq * (ln_two_pi + std::log(v_sq)) - ss_sq / (2.0 * v_sq)
                - 0.5 * n_asq * (ln_two_pi + std::log(v_asq)) - ss_asq / (2.0 * v_asq);
            const double lp = ll + lp_ns - 0.5 * dnt * dnt / prior_nt.var;
            grid.log_post[i * nj + j] = lp;
            peak = std::max(peak, lp);
        }
    }

    // Max-shifted exponentiation, trapezoidal normalization.
    const double step_ns = grid.ns_axis[1] - grid.ns_axis[0];
    const double step_nt = grid.nt_axis[1] - grid.nt_axis[0];
    double mass = 0.0;
    for (std::size_t i = 0; i < ni; ++i) {
        const double wi = detail::trap_weight(i, ni, step_ns);
        double rowsum = 0.0;
        for (std::size_t j = 0; j < nj; ++j)
            rowsum += detail::trap_weight(j, nj, step_nt) *
                      std::exp(grid.log_post[i * nj + j] - peak);
        mass += wi * rowsum;
    }
    if (!(mass > 0.0) || !std::isfinite(mass))
        throw std::runtime_error("build_posterior_grid: degenerate posterior mass");
    grid.normalizer = peak + std::log(mass);
    for (double& lp : grid.log_post) lp -= grid.normalizer;
    return grid;
}

/// Posterior means and variances by trapezoidal integration. Raises
/// grid_coverage_error when more than 1e-3 of the mass sits on the grid
/// boundary; an edge clipped at the physical limit N = 0 is exempt, since the
/// grid cannot extend below it.
inline BlockEstimate posterior_moments(const PosteriorGrid& grid) {
    const std::size_t ni = grid.ns_axis.size();
    const std::size_t nj = grid.nt_axis.size();
    const double step_ns = grid.ns_axis[1] - grid.ns_axis[0];
    const double step_nt = grid.nt_axis[1] - grid.nt_axis[0];

    double mass = 0.0, edge_mass = 0.0;
    double s1 = 0.0, s2 = 0.0, t1 = 0.0, t2 = 0.0;
    const bool ns_zero_edge = grid.ns_axis.front() == 0.0;
    const bool nt_zero_edge = grid.nt_axis.front() == 0.0;
    for (std::size_t i = 0; i < ni; ++i) {
        const double wi = detail::trap_weight(i, ni, step_ns);
        const double ns = grid.ns_axis[i];
        const bool i_edge = (i == 0 && !ns_zero_edge) || i + 1 == ni;
        for (std::size_t j = 0; j < nj; ++j) {
            const double w = wi * detail::trap_weight(j, nj, step_nt);
            const double p = std::exp(grid.at(i, j));
            const double nt = grid.nt_axis[j];
            const double wp = w * p;
            mass += wp;
            if (i_edge || (j == 0 && !nt_zero_edge) || j + 1 == nj) edge_mass += wp;
            s1 += wp * ns;
            s2 += wp * ns * ns;
            t1 += wp * nt;
            t2 += wp * nt * nt;
        }
    }
    if (edge_mass > 1e-3 * mass)
        throw grid_coverage_error("posterior_moments: mass on grid boundary, grid too narrow");

    BlockEstimate est;
    est.ns = s1 / mass;
    est.nt = t1 / mass;
    est.var_ns = std::max(s2 / mass - est.ns * est.ns, 0.0);
    est.var_nt = std::max(t2 / mass - est.nt * est.nt, 0.0);
    return est;
}

inline BlockEstimate bayesian_block_estimate(const QuadratureSamples& block,
                                             const GaussianPrior& prior_ns,
                                             const GaussianPrior& prior_nt,
                                             const GridSpec& spec = {}) {
    return posterior_moments(build_posterior_grid(block, prior_ns, prior_nt, spec));
}

struct BayesOptions {
    std::size_t n_blocks = 100;
    std::size_t mc_trials = 1000000;  // for the whole-data inversion priors
    GridSpec grid;
};

namespace detail {

// Central-difference gradient of the discord, with steps kept inside N >= 0.
inline std::pair<double, double> discord_gradient(const StsParams& p) {
    const auto partial = [&](bool wrt_ns) {
        const double x = wrt_ns ? p.n_s : p.n_t;
        double h = fd_step(x, 1e-6);
        const double lo = std::max(0.0, x - h);
        const double hi = x + h;
        const StsParams pl = wrt_ns ? StsParams{lo, p.n_t} : StsParams{p.n_s, lo};
        const StsParams ph = wrt_ns ? StsParams{hi, p.n_t} : StsParams{p.n_s, hi};
        return (sts_discord(ph) - sts_discord(pl)) / (hi - lo);
    };
    return {partial(true), partial(false)};
}

inline QuadratureSamples slice_block(const QuadratureSamples& q, std::size_t begin,
                                     std::size_t len) {
    QuadratureSamples b;
    b.q1.assign(q.q1.begin() + begin, q.q1.begin() + begin + len);
    b.q2.assign(q.q2.begin() + begin, q.q2.begin() + begin + len);
    b.q3.assign(q.q3.begin() + begin, q.q3.begin() + begin + len);
    b.q4.assign(q.q4.begin() + begin, q.q4.begin() + begin + len);
    return b;
}

}  // namespace detail

/// Full Bayesian estimate: whole-data inversion sets the priors, each of the
/// n_blocks data blocks is estimated on its posterior grid, blocks combine by
/// inverse-variance weighting, and the result maps to the discord with
/// first-order error propagation. Resource count is n_blocks * 4 M_q, since
/// the whole-data priors enter every block.
inline EstimateRecord bayesian_estimate(const HomodyneDataset& ds,
                                        const BayesOptions& opts, std::uint64_t seed) {
    detail::require(ds.valid(), "bayesian_estimate: invalid dataset");
    if (opts.n_blocks == 0 || ds.m_q() % opts.n_blocks != 0)
        throw std::invalid_argument("bayesian_estimate: M_q must be divisible by n_blocks");

    const EstimateRecord inv = inversion_estimate(ds, opts.mc_trials, seed);
    if (!(inv.var_ns > 0.0) || !(inv.var_nt > 0.0))
        throw std::runtime_error("bayesian_estimate: degenerate inversion priors");
    const GaussianPrior prior_ns{inv.ns_hat, inv.var_ns};
    const GaussianPrior prior_nt{inv.nt_hat, inv.var_nt};

    const QuadratureSamples q = derive_quadratures(ds);
    const std::size_t block_len = ds.m_q() / opts.n_blocks;
    double wsum_ns = 0.0, wmean_ns = 0.0, wsum_nt = 0.0, wmean_nt = 0.0;
    for (std::size_t b = 0; b < opts.n_blocks; ++b) {
        const QuadratureSamples block = detail::slice_block(q, b * block_len, block_len);
        BlockEstimate be;
        try {
            be = bayesian_block_estimate(block, prior_ns, prior_nt, opts.grid);
        } catch (const grid_coverage_error&) {
            GridSpec widened = opts.grid;  // one retry with a doubled span
            widened.width_sigmas *= 2.0;
            be = bayesian_block_estimate(block, prior_ns, prior_nt, widened);
        }
        if (!(be.var_ns > 0.0) || !(be.var_nt > 0.0))
            throw std::runtime_error("bayesian_estimate: degenerate block variance");
        wsum_ns += 1.0 / be.var_ns;
        wmean_ns += be.ns / be.var_ns;
        wsum_nt += 1.0 / be.var_nt;
        wmean_nt += be.nt / be.var_nt;
    }

    EstimateRecord rec;
    rec.ns_hat = wmean_ns / wsum_ns;
    rec.nt_hat = wmean_nt / wsum_nt;
    rec.var_ns = 1.0 / wsum_ns;
    rec.var_nt = 1.0 / wsum_nt;
    const StsParams combined{rec.ns_hat, rec.nt_hat};
    rec.d_hat = sts_discord(combined);
    const auto [g_ns, g_nt] = detail::discord_gradient(combined);
    rec.var_d = g_ns * g_ns * rec.var_ns + g_nt * g_nt * rec.var_nt;
    rec.method = EstimationMethod::bayes;
    rec.resources_m = static_cast<std::uint64_t>(opts.n_blocks) * 4 *
                      static_cast<std::uint64_t>(ds.m_q());
    return rec;
}

}  // namespace gqd
