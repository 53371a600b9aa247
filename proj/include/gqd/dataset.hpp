#pragma once

// Synthetic dual-homodyne datasets and their on-disk format.
//
// A dataset holds M_q shots of the quadrature pairs {X0, X1} and {P0, P1} in
// shot-noise units (vacuum variance 1). Files are a CSV with header
// `x0,x1,p0,p1` plus a JSON sidecar `<name>.meta.json` carrying
// {format_version, seed, m_q, generator, rng}.

#include <array>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gqd/errors.hpp"
#include "gqd/rng.hpp"
#include "gqd/sts.hpp"
#include "gqd/version.hpp"

namespace gqd {

struct DatasetGenerator {
    enum class Kind { sts, physical, external };
    Kind kind = Kind::external;
    StsParams sts;            // meaningful when kind == sts
    PhysicalParams physical;  // meaningful when kind == physical
};

struct DatasetMeta {
    std::string format_version = gqd::format_version;
    std::uint64_t seed = 0;
    std::size_t m_q = 0;
    DatasetGenerator generator;
    std::string rng_algorithm = rng::algorithm_id;
};

struct HomodyneDataset {
    std::vector<double> x0, x1, p0, p1;
    DatasetMeta meta;

    std::size_t m_q() const { return meta.m_q; }

    bool valid() const {
        const std::size_t n = meta.m_q;
        if (x0.size() != n || x1.size() != n || p0.size() != n || p1.size() != n)
            return false;
        for (const auto* ch : {&x0, &x1, &p0, &p1})
            for (double v : *ch)
                if (!std::isfinite(v)) return false;
        return true;
    }
};

// Per-shot joint quadratures Q(1/2) = (x0 +- x1)/sqrt(2), Q(3/4) = (p0 +- p1)/sqrt(2).
struct QuadratureSamples {
    std::vector<double> q1, q2, q3, q4;
};

/// Draw M_q pairs per quadrature from the STS statistics. The x pair carries
/// correlation -c and the p pair +c, so Q(1) = (x0+x1)/sqrt(2) and
/// Q(4) = (p0-p1)/sqrt(2) are the squeezed combinations. Deterministic in seed.
inline HomodyneDataset simulate_dataset(const StsParams& p, std::size_t m_q,
                                        std::uint64_t seed) {
    detail::require(p.valid(), "simulate_dataset: invalid StsParams");
    if (m_q < 2) throw std::invalid_argument("simulate_dataset: m_q must be >= 2");

    const CovMatrix2Mode cm = sts_covariance(p, VacuumUnit::one);
    // Cholesky factor of [[a, rho], [rho, a]] with rho = -+c.
    const double l00 = std::sqrt(cm.a);
    const double l11 = std::sqrt((cm.a - cm.c) * (cm.a + cm.c) / cm.a);
    const double l10 = cm.c / l00;

    HomodyneDataset ds;
    ds.x0.resize(m_q);
    ds.x1.resize(m_q);
    ds.p0.resize(m_q);
    ds.p1.resize(m_q);
    for (std::size_t i = 0; i < m_q; ++i) {
        const auto zx = rng::normal_pair(seed, i, rng::stream_dataset_x);
        ds.x0[i] = l00 * zx.z0;
        ds.x1[i] = -l10 * zx.z0 + l11 * zx.z1;
        const auto zp = rng::normal_pair(seed, i, rng::stream_dataset_p);
        ds.p0[i] = l00 * zp.z0;
        ds.p1[i] = l10 * zp.z0 + l11 * zp.z1;
    }
    ds.meta.seed = seed;
    ds.meta.m_q = m_q;
    ds.meta.generator = {DatasetGenerator::Kind::sts, p, {}};
    return ds;
}

/// Same, from the physical knobs; the metadata records (r, gamma, eta).
inline HomodyneDataset simulate_dataset(const PhysicalParams& q, std::size_t m_q,
                                        std::uint64_t seed) {
    HomodyneDataset ds = simulate_dataset(effective_photons(q), m_q, seed);
    ds.meta.generator = {DatasetGenerator::Kind::physical, {}, q};
    return ds;
}

inline QuadratureSamples derive_quadratures(const HomodyneDataset& ds) {
    detail::require(ds.valid(), "derive_quadratures: invalid dataset");
    const double inv_sqrt2 = 0.70710678118654752440;
    const std::size_t n = ds.m_q();
    QuadratureSamples q;
    q.q1.resize(n);
    q.q2.resize(n);
    q.q3.resize(n);
    q.q4.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        q.q1[i] = (ds.x0[i] + ds.x1[i]) * inv_sqrt2;
        q.q2[i] = (ds.x0[i] - ds.x1[i]) * inv_sqrt2;
        q.q3[i] = (ds.p0[i] + ds.p1[i]) * inv_sqrt2;
        q.q4[i] = (ds.p0[i] - ds.p1[i]) * inv_sqrt2;
    }
    return q;
}

inline std::filesystem::path meta_path_for(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p.replace_extension();
    p += ".meta.json";
    return p;
}

namespace detail {

inline nlohmann::json generator_to_json(const DatasetGenerator& g) {
    switch (g.kind) {
        case DatasetGenerator::Kind::sts:
            return {{"type", "sts"}, {"n_s", g.sts.n_s}, {"n_t", g.sts.n_t}};
        case DatasetGenerator::Kind::physical:
            return {{"type", "physical"}, {"r", g.physical.r},
                    {"gamma", g.physical.gamma}, {"eta", g.physical.eta}};
        default:
            return {{"type", "external"}};
    }
}

inline DatasetGenerator generator_from_json(const nlohmann::json& j) {
    DatasetGenerator g;
    const std::string type = j.at("type").get<std::string>();
    if (type == "sts") {
        g.kind = DatasetGenerator::Kind::sts;
        g.sts = {j.at("n_s").get<double>(), j.at("n_t").get<double>()};
    } else if (type == "physical") {
        g.kind = DatasetGenerator::Kind::physical;
        g.physical = {j.at("r").get<double>(), j.at("gamma").get<double>(),
                      j.at("eta").get<double>()};
    } else if (type == "external") {
        g.kind = DatasetGenerator::Kind::external;
    } else {
        throw std::runtime_error("dataset meta: unknown generator type '" + type + "'");
    }
    return g;
}

inline void format_sample(char* buf, std::size_t len, double v) {
    std::snprintf(buf, len, "%.17g", v);
}

inline double parse_sample(std::string_view field, std::size_t row) {
    // strtod accepts leading whitespace and partial parses; require the field
    // to be fully consumed.
    if (field.empty()) throw malformed_row_error(row, "empty cell");
    const std::string cell(field);
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size() || errno == ERANGE || !std::isfinite(v))
        throw malformed_row_error(row, "non-numeric cell '" + cell + "'");
    return v;
}

}  // namespace detail

/// Write the CSV and its JSON sidecar. Samples are printed with 17 significant
/// digits so reloading reproduces every double bit-exactly.
inline void save_dataset(const HomodyneDataset& ds, const std::filesystem::path& csv_path) {
    detail::require(ds.valid(), "save_dataset: invalid dataset");
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw std::runtime_error("save_dataset: cannot open " + csv_path.string());
    out << "x0,x1,p0,p1\n";
    char cell[4][32];
    for (std::size_t i = 0; i < ds.m_q(); ++i) {
        detail::format_sample(cell[0], sizeof cell[0], ds.x0[i]);
        detail::format_sample(cell[1], sizeof cell[1], ds.x1[i]);
        detail::format_sample(cell[2], sizeof cell[2], ds.p0[i]);
        detail::format_sample(cell[3], sizeof cell[3], ds.p1[i]);
        out << cell[0] << ',' << cell[1] << ',' << cell[2] << ',' << cell[3] << '\n';
    }
    if (!out) throw std::runtime_error("save_dataset: write failed for " + csv_path.string());
    out.close();

    nlohmann::json meta = {
        {"format_version", ds.meta.format_version},
        {"seed", ds.meta.seed},
        {"m_q", ds.meta.m_q},
        {"generator", detail::generator_to_json(ds.meta.generator)},
        {"rng", ds.meta.rng_algorithm},
    };
    std::ofstream mout(meta_path_for(csv_path), std::ios::binary);
    if (!mout)
        throw std::runtime_error("save_dataset: cannot open " +
                                 meta_path_for(csv_path).string());
    mout << meta.dump(2) << '\n';
}

inline HomodyneDataset load_dataset(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) throw std::runtime_error("load_dataset: cannot open " + csv_path.string());

    HomodyneDataset ds;
    std::string line;
    if (!std::getline(in, line) || line != "x0,x1,p0,p1")
        throw std::runtime_error("load_dataset: missing or unexpected CSV header in " +
                                 csv_path.string());
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::array<std::string_view, 4> fields;
        std::string_view rest = line;
        for (int k = 0; k < 4; ++k) {
            const std::size_t comma = rest.find(',');
            if (k < 3) {
                if (comma == std::string_view::npos)
                    throw malformed_row_error(row, "expected 4 cells");
                fields[k] = rest.substr(0, comma);
                rest.remove_prefix(comma + 1);
            } else {
                if (comma != std::string_view::npos)
                    throw malformed_row_error(row, "expected 4 cells");
                fields[k] = rest;
            }
        }
        ds.x0.push_back(detail::parse_sample(fields[0], row));
        ds.x1.push_back(detail::parse_sample(fields[1], row));
        ds.p0.push_back(detail::parse_sample(fields[2], row));
        ds.p1.push_back(detail::parse_sample(fields[3], row));
    }

    const std::filesystem::path mp = meta_path_for(csv_path);
    std::ifstream min(mp, std::ios::binary);
    if (!min) throw std::runtime_error("load_dataset: missing sidecar " + mp.string());
    nlohmann::json meta;
    try {
        min >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("load_dataset: bad sidecar " + mp.string() + ": " + e.what());
    }
    ds.meta.format_version = meta.at("format_version").get<std::string>();
    if (ds.meta.format_version != gqd::format_version)
        throw std::runtime_error("load_dataset: unsupported format_version '" +
                                 ds.meta.format_version + "' in " + mp.string());
    ds.meta.seed = meta.at("seed").get<std::uint64_t>();
    ds.meta.m_q = meta.at("m_q").get<std::size_t>();
    ds.meta.generator = detail::generator_from_json(meta.at("generator"));
    ds.meta.rng_algorithm = meta.value("rng", std::string{});

    if (ds.meta.m_q != ds.x0.size())
        throw std::runtime_error("load_dataset: sidecar m_q disagrees with CSV rows in " +
                                 csv_path.string());
    if (!ds.valid()) throw std::runtime_error("load_dataset: dataset fails invariants");
    return ds;
}

}  // namespace gqd
