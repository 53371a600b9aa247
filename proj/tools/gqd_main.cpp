// gqd command line: simulate dual-homodyne datasets, estimate Gaussian quantum
// discord from them, evaluate Cramer-Rao bounds, and run full sweeps.
//
// Exit status: 0 success, 1 runtime failure, 2 usage error.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gqd/dataset.hpp"
#include "gqd/estimation.hpp"
#include "gqd/fisher.hpp"
#include "gqd/sts.hpp"
#include "gqd/sweep.hpp"
#include "gqd/version.hpp"

namespace {

std::vector<double> parse_r_grid(const std::string& spec) {
    // start:stop:step, inclusive of stop up to half a step
    double start = 0, stop = 0, step = 0;
    char extra = 0;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%lf%c", &start, &stop, &step, &extra) != 3 ||
        step <= 0 || stop < start)
        throw CLI::ValidationError("--r-grid", "expected start:stop:step with step > 0");
    std::vector<double> values;
    for (double r = start; r <= stop + 0.5 * step; r += step) values.push_back(r);
    return values;
}

std::vector<double> parse_double_list(const std::string& spec, const char* flag) {
    std::vector<double> values;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            values.push_back(std::stod(item, &pos));
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw CLI::ValidationError(flag, "bad number '" + item + "'");
        }
    }
    if (values.empty()) throw CLI::ValidationError(flag, "empty list");
    return values;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& spec) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            seeds.push_back(std::stoull(item, &pos));
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw CLI::ValidationError("--seeds", "bad seed '" + item + "'");
        }
    }
    if (seeds.empty()) throw CLI::ValidationError("--seeds", "empty list");
    return seeds;
}

gqd::GridSpec parse_grid_spec(const std::string& spec) {
    unsigned long points = 0;
    double width = 0;
    char extra = 0;
    if (std::sscanf(spec.c_str(), "%lux%lf%c", &points, &width, &extra) != 2 ||
        points < 8 || width <= 0)
        throw CLI::ValidationError("--grid", "expected POINTSxWIDTH, e.g. 201x6");
    return {static_cast<std::size_t>(points), width};
}

std::filesystem::path resolve_dataset_path(const std::string& out) {
    std::filesystem::path p(out);
    if (p.extension() == ".csv") {
        if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
        return p;
    }
    std::filesystem::create_directories(p);
    return p / "dataset.csv";
}

nlohmann::json record_to_json(const gqd::EstimateRecord& rec) {
    return {
        {"method", rec.method == gqd::EstimationMethod::inversion ? "inversion" : "bayes"},
        {"d_hat", rec.d_hat},
        {"var_d", rec.var_d},
        {"ns_hat", rec.ns_hat},
        {"nt_hat", rec.nt_hat},
        {"var_ns", rec.var_ns},
        {"var_nt", rec.var_nt},
        {"resources_m", rec.resources_m},
    };
}

struct SimulateArgs {
    std::optional<double> r;
    std::optional<double> ns, nt;
    double gamma = 0.73;
    double eta = 0.62;
    std::size_t m_q = 20000;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
    gqd::StsParams params;
    gqd::HomodyneDataset ds;
    if (a.r) {
        const gqd::PhysicalParams q{*a.r, a.gamma, a.eta};
        params = gqd::effective_photons(q);
        ds = gqd::simulate_dataset(q, a.m_q, a.seed);
    } else {
        params = {*a.ns, *a.nt};
        ds = gqd::simulate_dataset(params, a.m_q, a.seed);
    }
    const std::filesystem::path csv = resolve_dataset_path(a.out);
    gqd::save_dataset(ds, csv);
    const nlohmann::json report = {
        {"path", csv.string()},
        {"meta_path", gqd::meta_path_for(csv).string()},
        {"n_s", params.n_s},
        {"n_t", params.n_t},
        {"d_true", gqd::sts_discord(params)},
        {"m_q", a.m_q},
        {"seed", a.seed},
    };
    std::cout << report.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian quantum discord estimation from dual-homodyne data"};
    app.set_version_flag("--version", std::string("gqd ") + gqd::version);
    app.require_subcommand(1);

    // simulate
    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "generate a synthetic dataset");
    auto* opt_r = simulate->add_option("--r", sim.r, "squeezing strength r");
    auto* opt_ns = simulate->add_option("--ns", sim.ns, "effective squeezing photons N_s");
    auto* opt_nt = simulate->add_option("--nt", sim.nt, "effective thermal photons N_t");
    simulate->add_option("--gamma", sim.gamma, "relative parasite gain")->capture_default_str();
    simulate->add_option("--eta", sim.eta, "homodyne efficiency")->capture_default_str();
    simulate->add_option("--mq", sim.m_q, "shots per quadrature")->capture_default_str();
    simulate->add_option("--seed", sim.seed, "RNG seed")->required();
    simulate->add_option("--out", sim.out, "output directory or .csv path")->required();
    opt_r->excludes(opt_ns)->excludes(opt_nt);
    opt_ns->needs(opt_nt);
    opt_nt->needs(opt_ns);

    // estimate
    std::string est_method, est_in, est_grid = "201x6";
    std::size_t est_mc = 1000000, est_blocks = 100;
    std::uint64_t est_seed = 0;
    auto* estimate = app.add_subcommand("estimate", "estimate discord from a dataset");
    estimate->add_option("--method", est_method, "inversion or bayes")
        ->required()->check(CLI::IsMember({"inversion", "bayes"}));
    estimate->add_option("--in", est_in, "dataset CSV path")->required();
    estimate->add_option("--seed", est_seed, "RNG seed")->required();
    estimate->add_option("--mc-trials", est_mc, "Monte Carlo trials")->capture_default_str();
    estimate->add_option("--blocks", est_blocks, "Bayesian block count")->capture_default_str();
    estimate->add_option("--grid", est_grid, "posterior grid, POINTSxWIDTH")->capture_default_str();

    // bounds
    std::string bounds_grid;
    double bounds_gamma = 0.73, bounds_eta = 0.62;
    std::string bounds_out;
    auto* bounds = app.add_subcommand("bounds", "tabulate Cramer-Rao bounds over r");
    bounds->add_option("--r-grid", bounds_grid, "r grid start:stop:step")->required();
    bounds->add_option("--gamma", bounds_gamma, "relative parasite gain")->capture_default_str();
    bounds->add_option("--eta", bounds_eta, "homodyne efficiency")->capture_default_str();
    bounds->add_option("--out", bounds_out, "output CSV path (default stdout)");

    // sweep
    std::string sweep_r_values, sweep_r_grid, sweep_seeds, sweep_grid = "201x6", sweep_out;
    gqd::SweepConfig scfg;
    auto* sweep = app.add_subcommand("sweep", "simulate + estimate + bounds over an r grid");
    auto* opt_rv = sweep->add_option("--r-values", sweep_r_values, "comma-separated r list");
    auto* opt_rg = sweep->add_option("--r-grid", sweep_r_grid, "r grid start:stop:step");
    opt_rv->excludes(opt_rg);
    sweep->add_option("--gamma", scfg.gamma, "relative parasite gain")->capture_default_str();
    sweep->add_option("--eta", scfg.eta, "homodyne efficiency")->capture_default_str();
    sweep->add_option("--mq", scfg.m_q, "shots per quadrature")->capture_default_str();
    sweep->add_option("--blocks", scfg.n_blocks, "Bayesian block count")->capture_default_str();
    sweep->add_option("--mc-trials", scfg.mc_trials, "Monte Carlo trials")->capture_default_str();
    sweep->add_option("--seeds", sweep_seeds, "comma-separated seed list (default 1,2,3,4,5)");
    sweep->add_option("--grid", sweep_grid, "posterior grid, POINTSxWIDTH")->capture_default_str();
    sweep->add_option("--out", sweep_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the usage message
        return 2;
    }

    try {
        if (simulate->parsed()) {
            if (!sim.r && !sim.ns) {
                std::cerr << "simulate: provide --r or --ns/--nt\n";
                return 2;
            }
            return cmd_simulate(sim);
        }
        if (estimate->parsed()) {
            const gqd::HomodyneDataset ds = gqd::load_dataset(est_in);
            gqd::EstimateRecord rec;
            if (est_method == "inversion") {
                rec = gqd::inversion_estimate(ds, est_mc, est_seed);
            } else {
                gqd::BayesOptions opts;
                opts.n_blocks = est_blocks;
                opts.mc_trials = est_mc;
                opts.grid = parse_grid_spec(est_grid);
                rec = gqd::bayesian_estimate(ds, opts, est_seed);
            }
            std::cout << record_to_json(rec).dump(2) << '\n';
            return 0;
        }
        if (bounds->parsed()) {
            const std::vector<double> grid = parse_r_grid(bounds_grid);
            std::vector<std::string> warnings;
            const auto rows = gqd::bounds_table(grid, bounds_gamma, bounds_eta, &warnings);
            for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
            if (bounds_out.empty()) {
                gqd::write_bounds_csv(rows, std::cout);
            } else {
                std::ofstream out(bounds_out, std::ios::binary);
                if (!out) throw std::runtime_error("cannot open " + bounds_out);
                gqd::write_bounds_csv(rows, out);
            }
            return 0;
        }
        if (sweep->parsed()) {
            if (!sweep_r_values.empty())
                scfg.r_values = parse_double_list(sweep_r_values, "--r-values");
            else if (!sweep_r_grid.empty())
                scfg.r_values = parse_r_grid(sweep_r_grid);
            else
                scfg.r_values = gqd::SweepConfig::default_r_values();
            if (!sweep_seeds.empty()) scfg.seeds = parse_seed_list(sweep_seeds);
            scfg.grid = parse_grid_spec(sweep_grid);
            const gqd::SweepResult result = gqd::run_sweep(scfg);
            gqd::write_sweep_outputs(result, sweep_out);
            gqd::validate_sweep_outputs(sweep_out);
            std::size_t failed = 0;
            for (const auto& c : result.cells)
                if (!c.ok) ++failed;
            std::cerr << "sweep: " << result.cells.size() - failed << "/"
                      << result.cells.size() << " cells ok, outputs in "
                      << sweep_out << '\n';
            return 0;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
