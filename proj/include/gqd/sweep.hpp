#pragma once

// Sweep orchestration: for each (r, seed) cell simulate a dataset, run both
// estimators, evaluate both Cramer-Rao bounds, and tabulate the noise ratios.
// Cells are independent and may run as a parallel map (GQD_THREADS); results
// are assembled in (r, seed) order, so tables are bit-identical for any
// worker count.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "gqd/dataset.hpp"
#include "gqd/estimation.hpp"
#include "gqd/fisher.hpp"
#include "gqd/sts.hpp"
#include "gqd/version.hpp"

namespace gqd {

struct BoundsRow {
    double r = 0.0;
    double d_true = 0.0;
    double crb_quantum = 0.0;
    double crb_classical = 0.0;
    double ratio_db = 0.0;  // 10 log10(classical / quantum)
};

/// Per-shot bounds along an r grid at fixed (gamma, eta). Rows that fail
/// (r = 0 is singular) are skipped; a note lands in `warnings` if given.
inline std::vector<BoundsRow> bounds_table(const std::vector<double>& r_values,
                                           double gamma, double eta,
                                           std::vector<std::string>* warnings = nullptr) {
    std::vector<BoundsRow> rows;
    rows.reserve(r_values.size());
    for (double r : r_values) {
        try {
            const PhysicalParams q{r, gamma, eta};
            const double d = sts_discord(effective_photons(q));
            const CrbResult cq = crb_discord(q, InfoKind::quantum);
            const CrbResult cc = crb_discord(q, InfoKind::classical);
            rows.push_back({r, d, cq.var_bound_per_shot, cc.var_bound_per_shot,
                            10.0 * std::log10(cc.var_bound_per_shot / cq.var_bound_per_shot)});
        } catch (const std::exception& e) {
            if (warnings) {
                std::ostringstream os;
                os << "r=" << r << " skipped: " << e.what();
                warnings->push_back(os.str());
            }
        }
    }
    return rows;
}

struct SweepConfig {
    std::vector<double> r_values;  // strictly positive and increasing
    double gamma = 0.73;
    double eta = 0.62;
    std::size_t m_q = 20000;
    std::size_t n_blocks = 100;
    std::size_t mc_trials = 1000000;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    GridSpec grid;

    static std::vector<double> default_r_values() {
        std::vector<double> r;
        for (int i = 1; i <= 20; ++i) r.push_back(0.05 * i);
        return r;
    }

    void validate() const {
        if (r_values.empty()) throw std::invalid_argument("sweep: empty r grid");
        double prev = 0.0;
        for (double r : r_values) {
            if (!(r > prev)) throw std::invalid_argument(
                "sweep: r values must be strictly positive and increasing");
            prev = r;
        }
        if (seeds.empty()) throw std::invalid_argument("sweep: no seeds");
        if (!PhysicalParams{r_values.front(), gamma, eta}.valid())
            throw std::invalid_argument("sweep: invalid gamma/eta");
    }
};

struct SweepCell {
    double r = 0.0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double n_s = 0.0, n_t = 0.0, d_true = 0.0;
    double d_inv = 0.0, sigma_d_inv = 0.0;
    double d_bay = 0.0, sigma_d_bay = 0.0;
    double crb_quantum = 0.0, crb_classical = 0.0;
    double k_m_inv_db = 0.0, k_m_bay_db = 0.0;
    double k_m_quantum_inv_db = 0.0, k_m_quantum_bay_db = 0.0;
    std::uint64_t resources_inv = 0, resources_bay = 0;
    double elapsed_ms = 0.0;
};

struct SweepSummaryRow {
    double r = 0.0;
    std::size_t n_ok = 0;
    double d_true = 0.0, crb_quantum = 0.0, crb_classical = 0.0;
    double d_inv_mean = 0.0, d_inv_spread = 0.0;
    double d_bay_mean = 0.0, d_bay_spread = 0.0;
    double k_m_inv_db_mean = 0.0, k_m_bay_db_mean = 0.0;
    double k_m_quantum_inv_db_mean = 0.0, k_m_quantum_bay_db_mean = 0.0;
};

struct SweepResult {
    SweepConfig config;
    std::vector<SweepCell> cells;        // (r, seed) order
    std::vector<SweepSummaryRow> summary;  // one row per r
};

namespace detail {

inline unsigned env_thread_count() {
    if (const char* env = std::getenv("GQD_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n >= 1 && n <= 256) return static_cast<unsigned>(n);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Parallel map over [0, n) with results keyed by index; `fn` must not touch
// shared state. Worker count never changes the output.
template <typename Fn>
void parallel_for_index(std::size_t n, Fn&& fn) {
    const unsigned threads = std::min<std::size_t>(env_thread_count(), n == 0 ? 1 : n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += threads) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

inline double sample_spread(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

inline double mean_of(const std::vector<double>& xs) {
    double m = 0.0;
    for (double x : xs) m += x;
    return xs.empty() ? 0.0 : m / static_cast<double>(xs.size());
}

}  // namespace detail

inline SweepCell run_sweep_cell(const SweepConfig& cfg, double r, std::uint64_t seed) {
    SweepCell cell;
    cell.r = r;
    cell.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const PhysicalParams q{r, cfg.gamma, cfg.eta};
        const StsParams p = effective_photons(q);
        cell.n_s = p.n_s;
        cell.n_t = p.n_t;
        cell.d_true = sts_discord(p);

        const HomodyneDataset ds = simulate_dataset(q, cfg.m_q, seed);
        const EstimateRecord inv = inversion_estimate(ds, cfg.mc_trials, seed);
        BayesOptions bopt;
        bopt.n_blocks = cfg.n_blocks;
        bopt.mc_trials = cfg.mc_trials;
        bopt.grid = cfg.grid;
        const EstimateRecord bay = bayesian_estimate(ds, bopt, seed);

        // Bounds evaluated at the generating parameters, not at the estimate.
        const CrbResult cq = crb_discord(q, InfoKind::quantum);
        const CrbResult cc = crb_discord(q, InfoKind::classical);

        cell.d_inv = inv.d_hat;
        cell.sigma_d_inv = std::sqrt(inv.var_d);
        cell.d_bay = bay.d_hat;
        cell.sigma_d_bay = std::sqrt(bay.var_d);
        cell.crb_quantum = cq.var_bound_per_shot;
        cell.crb_classical = cc.var_bound_per_shot;
        cell.resources_inv = inv.resources_m;
        cell.resources_bay = bay.resources_m;
        cell.k_m_inv_db = noise_ratio_db(inv.var_d, inv.resources_m, cc);
        cell.k_m_bay_db = noise_ratio_db(bay.var_d, bay.resources_m, cc);
        cell.k_m_quantum_inv_db = noise_ratio_db(inv.var_d, inv.resources_m, cq);
        cell.k_m_quantum_bay_db = noise_ratio_db(bay.var_d, bay.resources_m, cq);
        cell.ok = true;
    } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
    }
    cell.elapsed_ms = std::chrono::duration<double, std::milli>(
        std::chrono::steady_clock::now() - t0).count();
    return cell;
}

inline SweepResult run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    SweepResult result;
    result.config = cfg;
    const std::size_t n_cells = cfg.r_values.size() * cfg.seeds.size();
    result.cells.resize(n_cells);
    detail::parallel_for_index(n_cells, [&](std::size_t idx) {
        const double r = cfg.r_values[idx / cfg.seeds.size()];
        const std::uint64_t seed = cfg.seeds[idx % cfg.seeds.size()];
        result.cells[idx] = run_sweep_cell(cfg, r, seed);
    });

    for (std::size_t ri = 0; ri < cfg.r_values.size(); ++ri) {
        SweepSummaryRow row;
        row.r = cfg.r_values[ri];
        std::vector<double> d_inv, d_bay, k_inv, k_bay, kq_inv, kq_bay;
        for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
            const SweepCell& c = result.cells[ri * cfg.seeds.size() + si];
            if (!c.ok) continue;
            ++row.n_ok;
            row.d_true = c.d_true;
            row.crb_quantum = c.crb_quantum;
            row.crb_classical = c.crb_classical;
            d_inv.push_back(c.d_inv);
            d_bay.push_back(c.d_bay);
            k_inv.push_back(c.k_m_inv_db);
            k_bay.push_back(c.k_m_bay_db);
            kq_inv.push_back(c.k_m_quantum_inv_db);
            kq_bay.push_back(c.k_m_quantum_bay_db);
        }
        row.d_inv_mean = detail::mean_of(d_inv);
        row.d_inv_spread = detail::sample_spread(d_inv);
        row.d_bay_mean = detail::mean_of(d_bay);
        row.d_bay_spread = detail::sample_spread(d_bay);
        row.k_m_inv_db_mean = detail::mean_of(k_inv);
        row.k_m_bay_db_mean = detail::mean_of(k_bay);
        row.k_m_quantum_inv_db_mean = detail::mean_of(kq_inv);
        row.k_m_quantum_bay_db_mean = detail::mean_of(kq_bay);
        result.summary.push_back(row);
    }
    return result;
}

namespace detail {

inline std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline const char* sweep_csv_header() {
    return "r,seed,n_s,n_t,d_true,d_inv,sigma_d_inv,d_bay,sigma_d_bay,"
           "crb_quantum,crb_classical,k_m_inv_db,k_m_bay_db,"
           "k_m_quantum_inv_db,k_m_quantum_bay_db,resources_inv,resources_bay";
}

inline const char* summary_csv_header() {
    return "r,n_ok,d_true,crb_quantum,crb_classical,d_inv_mean,d_inv_spread,"
           "d_bay_mean,d_bay_spread,k_m_inv_db_mean,k_m_bay_db_mean,"
           "k_m_quantum_inv_db_mean,k_m_quantum_bay_db_mean";
}

inline const char* bounds_csv_header() {
    return "r,d_true,crb_quantum,crb_classical,ratio_db";
}

inline nlohmann::json config_to_json(const SweepConfig& cfg) {
    return {
        {"r_values", cfg.r_values}, {"gamma", cfg.gamma}, {"eta", cfg.eta},
        {"m_q", cfg.m_q}, {"n_blocks", cfg.n_blocks}, {"mc_trials", cfg.mc_trials},
        {"seeds", cfg.seeds},
        {"grid", {{"points_per_axis", cfg.grid.points_per_axis},
                  {"width_sigmas", cfg.grid.width_sigmas}}},
    };
}

inline nlohmann::json cell_to_json(const SweepCell& c) {
    nlohmann::json j = {{"r", c.r}, {"seed", c.seed}, {"ok", c.ok}};
    if (!c.ok) {
        j["error"] = c.error;
        return j;
    }
    j["n_s"] = c.n_s;
    j["n_t"] = c.n_t;
    j["d_true"] = c.d_true;
    j["d_inv"] = c.d_inv;
    j["sigma_d_inv"] = c.sigma_d_inv;
    j["d_bay"] = c.d_bay;
    j["sigma_d_bay"] = c.sigma_d_bay;
    j["crb_quantum"] = c.crb_quantum;
    j["crb_classical"] = c.crb_classical;
    j["k_m_inv_db"] = c.k_m_inv_db;
    j["k_m_bay_db"] = c.k_m_bay_db;
    j["k_m_quantum_inv_db"] = c.k_m_quantum_inv_db;
    j["k_m_quantum_bay_db"] = c.k_m_quantum_bay_db;
    j["resources_inv"] = c.resources_inv;
    j["resources_bay"] = c.resources_bay;
    return j;
}

}  // namespace detail

inline void write_bounds_csv(const std::vector<BoundsRow>& rows, std::ostream& out) {
    out << detail::bounds_csv_header() << '\n';
    for (const auto& b : rows)
        out << detail::fmt17(b.r) << ',' << detail::fmt17(b.d_true) << ','
            << detail::fmt17(b.crb_quantum) << ',' << detail::fmt17(b.crb_classical)
            << ',' << detail::fmt17(b.ratio_db) << '\n';
}

/// Write sweep.csv (per cell), sweep_summary.csv (per r), sweep.json and
/// manifest.json into `dir`. The two CSV tables and sweep.json depend only on
/// the configuration and seeds; timings live in the manifest.
inline void write_sweep_outputs(const SweepResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto open = [](const std::filesystem::path& p) {
        std::ofstream out(p, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open " + p.string());
        return out;
    };

    {
        std::ofstream out = open(dir / "sweep.csv");
        out << detail::sweep_csv_header() << '\n';
        for (const auto& c : result.cells) {
            if (!c.ok) continue;
            out << detail::fmt17(c.r) << ',' << c.seed << ','
                << detail::fmt17(c.n_s) << ',' << detail::fmt17(c.n_t) << ','
                << detail::fmt17(c.d_true) << ',' << detail::fmt17(c.d_inv) << ','
                << detail::fmt17(c.sigma_d_inv) << ',' << detail::fmt17(c.d_bay) << ','
                << detail::fmt17(c.sigma_d_bay) << ',' << detail::fmt17(c.crb_quantum)
                << ',' << detail::fmt17(c.crb_classical) << ','
                << detail::fmt17(c.k_m_inv_db) << ',' << detail::fmt17(c.k_m_bay_db)
                << ',' << detail::fmt17(c.k_m_quantum_inv_db) << ','
                << detail::fmt17(c.k_m_quantum_bay_db) << ',' << c.resources_inv
                << ',' << c.resources_bay << '\n';
        }
    }
    {
        std::ofstream out = open(dir / "sweep_summary.csv");
        out << detail::summary_csv_header() << '\n';
        for (const auto& s : result.summary) {
            out << detail::fmt17(s.r) << ',' << s.n_ok << ','
                << detail::fmt17(s.d_true) << ',' << detail::fmt17(s.crb_quantum) << ','
                << detail::fmt17(s.crb_classical) << ',' << detail::fmt17(s.d_inv_mean)
                << ',' << detail::fmt17(s.d_inv_spread) << ','
                << detail::fmt17(s.d_bay_mean) << ',' << detail::fmt17(s.d_bay_spread)
                << ',' << detail::fmt17(s.k_m_inv_db_mean) << ','
                << detail::fmt17(s.k_m_bay_db_mean) << ','
                << detail::fmt17(s.k_m_quantum_inv_db_mean) << ','
                << detail::fmt17(s.k_m_quantum_bay_db_mean) << '\n';
        }
    }
    {
        nlohmann::json j = {
            {"format_version", gqd::format_version},
            {"config", detail::config_to_json(result.config)},
            {"cells", nlohmann::json::array()},
        };
        for (const auto& c : result.cells) j["cells"].push_back(detail::cell_to_json(c));
        std::ofstream out = open(dir / "sweep.json");
        out << j.dump(2) << '\n';
    }
    {
        nlohmann::json manifest = {
            {"format_version", gqd::format_version},
            {"tool", "gqd"},
            {"version", gqd::version},
            {"config", detail::config_to_json(result.config)},
            {"outputs", {"sweep.csv", "sweep_summary.csv", "sweep.json"}},
            {"cells", nlohmann::json::array()},
        };
        std::size_t failures = 0;
        for (const auto& c : result.cells) {
            nlohmann::json jc = {{"r", c.r}, {"seed", c.seed},
                                 {"status", c.ok ? "ok" : "failed"},
                                 {"elapsed_ms", c.elapsed_ms}};
            if (!c.ok) {
                jc["error"] = c.error;
                ++failures;
            }
            manifest["cells"].push_back(jc);
        }
        manifest["n_failures"] = failures;
        std::ofstream out = open(dir / "manifest.json");
        out << manifest.dump(2) << '\n';
    }
}

namespace detail {

inline void check_csv_header(const std::filesystem::path& p, const char* expected) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("schema check: missing " + p.string());
    std::string line;
    std::getline(in, line);
    if (line != expected)
        throw std::runtime_error("schema check: bad header in " + p.string());
}

}  // namespace detail

/// Validate the structure of every file a sweep emits.
inline void validate_sweep_outputs(const std::filesystem::path& dir) {
    detail::check_csv_header(dir / "sweep.csv", detail::sweep_csv_header());
    detail::check_csv_header(dir / "sweep_summary.csv", detail::summary_csv_header());
    for (const char* name : {"sweep.json", "manifest.json"}) {
        std::ifstream in(dir / name, std::ios::binary);
        if (!in) throw std::runtime_error(std::string("schema check: missing ") + name);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(std::string("schema check: bad JSON in ") + name +
                                     ": " + e.what());
        }
        if (j.value("format_version", std::string{}) != gqd::format_version)
            throw std::runtime_error(std::string("schema check: format_version mismatch in ") + name);
        if (!j.contains("config") || !j.contains("cells"))
            throw std::runtime_error(std::string("schema check: missing keys in ") + name);
    }
}

}  // namespace gqd
