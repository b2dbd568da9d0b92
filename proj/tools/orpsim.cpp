// Command-line front end: run single simulations, strategy comparisons,
// learning-rate sweeps, and trace ingestion, all emitting CSV reports.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "orpsim/config.hpp"
#include "orpsim/csv.hpp"
#include "orpsim/simulator.hpp"
#include "orpsim/workload.hpp"

namespace fs = std::filesystem;
using namespace orpsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

// "synthetic:count=50,mix=class1:0.4+class2:0.4+class3:0.2" or a file path.
Workload resolve_workload(const std::string& spec, std::uint64_t seed) {
    const std::string prefix = "synthetic:";
    if (spec.rfind(prefix, 0) != 0) {
        return load_workload(spec);
    }
    SyntheticSpec syn;
    std::string body = spec.substr(prefix.size());
    for (const auto& part : csv::split(body, ',')) {
        auto kv = csv::split(part, '=');
        if (kv.size() != 2) {
            throw validation_error("workload spec: expected key=value, got '" + part + "'");
        }
        if (kv[0] == "count") {
            syn.count = std::stoul(kv[1]);
        } else if (kv[0] == "mix") {
            for (const auto& entry : csv::split(kv[1], '+')) {
                auto tw = csv::split(entry, ':');
                if (tw.size() != 2) {
                    throw validation_error("workload spec: expected template:weight in mix");
                }
                syn.mix.emplace_back(request_template_from_string(tw[0]), std::stod(tw[1]));
            }
        } else {
            throw validation_error("workload spec: unknown key '" + kv[0] + "'");
        }
    }
    if (syn.mix.empty()) {
        syn.mix = {{RequestTemplate::Class1, 1.0 / 3},
                   {RequestTemplate::Class2, 1.0 / 3},
                   {RequestTemplate::Class3, 1.0 / 3}};
    }
    Rng rng = make_rng(seed, 0x776b6c64ULL, 0);
    return generate_synthetic(syn, rng);
}

// "lambda_r=0.7:0.9:0.05,lambda_p=0:0.1:0.025"
SweepGrid parse_grid(const std::string& spec) {
    SweepGrid grid;
    for (const auto& part : csv::split(spec, ',')) {
        auto kv = csv::split(part, '=');
        if (kv.size() != 2) {
            throw validation_error("grid spec: expected key=lo:hi:step, got '" + part + "'");
        }
        auto range = csv::split(kv[1], ':');
        std::vector<double> values;
        if (range.size() == 1) {
            values.push_back(std::stod(range[0]));
        } else if (range.size() == 3) {
            double lo = std::stod(range[0]);
            double hi = std::stod(range[1]);
            double step = std::stod(range[2]);
            if (step <= 0.0 || hi < lo) {
                throw validation_error("grid spec: bad range '" + kv[1] + "'");
            }
            for (double v = lo; v <= hi + 1e-12; v += step) values.push_back(v);
        } else {
            throw validation_error("grid spec: expected lo:hi:step or a single value");
        }
        if (kv[0] == "lambda_r") {
            grid.lambda_rewards = values;
        } else if (kv[0] == "lambda_p") {
            grid.lambda_penalties = values;
        } else {
            throw validation_error("grid spec: unknown axis '" + kv[0] + "'");
        }
    }
    if (grid.lambda_rewards.empty() || grid.lambda_penalties.empty()) {
        throw validation_error("grid spec: both lambda_r and lambda_p required");
    }
    for (double b : grid.lambda_penalties) {
        if (b > 0.1 && b < 1.0) {
            std::cerr << "warning: lambda_penalty " << b
                      << " is outside the usual 0..0.1 range (accepted)\n";
        }
    }
    return grid;
}

std::vector<std::uint64_t> seed_list(std::uint64_t base, std::size_t count) {
    std::vector<std::uint64_t> seeds;
    for (std::size_t k = 0; k < count; ++k) seeds.push_back(base + k);
    return seeds;
}

void ensure_out_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir)) {
        throw io_error("cannot create output directory: " + dir.string());
    }
}

struct CommonArgs {
    std::string config_path;
    std::string workload_spec;
    std::uint64_t seed = 0;
    std::string out_dir = ".";

    CliConfig load() const {
        if (config_path.empty()) return CliConfig{};
        return load_config(config_path);
    }
};

void add_common(CLI::App* cmd, CommonArgs& args, bool need_workload = true) {
    cmd->add_option("--config", args.config_path, "JSON config file (flags override it)");
    auto* w = cmd->add_option("--workload", args.workload_spec,
                              "workload CSV file or synthetic:<spec> "
                              "(e.g. synthetic:count=50,mix=class1:0.5+class2:0.5)");
    if (need_workload) w->required();
    cmd->add_option("--seed", args.seed, "master random seed (default 0)");
    cmd->add_option("--out", args.out_dir, "output directory (default .)");
}

int cmd_run(const CommonArgs& common, const std::string& strategy_name) {
    CliConfig cfg = common.load();
    Strategy strategy = strategy_from_string(strategy_name);
    Workload w = resolve_workload(common.workload_spec, common.seed);
    RunResult result = run(cfg.sim, w, strategy, common.seed);

    ensure_out_dir(common.out_dir);
    fs::path out(common.out_dir);
    csv::write_atomic(out / "metrics.csv", metrics_csv({result}));
    csv::write_atomic(out / "allocations.csv", allocations_csv(result));
    csv::write_atomic(out / "cumulative_cost.csv", cumulative_cost_csv({result}));
    if (cfg.sim.engine.trace_iterations) {
        csv::write_atomic(out / "iterations.csv", iteration_trace_csv(result));
    }
    std::cout << "processed " << result.processed() << "/" << result.requests_total
              << " requests, rejected " << result.requests_rejected << ", total cost $"
              << format_double(result.total_cost_usd) << "\n";
    return kExitOk;
}

int cmd_compare(const CommonArgs& common, const std::string& strategies_arg,
                std::size_t seed_count) {
    CliConfig cfg = common.load();
    std::vector<Strategy> strategies;
    for (const auto& name : csv::split(strategies_arg, ',')) {
        Strategy s = strategy_from_string(name);
        bool dup = false;
        for (Strategy t : strategies) dup = dup || t == s;
        if (dup) {
            std::cerr << "warning: duplicate strategy '" << name << "' ignored\n";
            continue;
        }
        strategies.push_back(s);
    }
    if (strategies.size() < 2) {
        throw validation_error("compare needs at least two distinct strategies");
    }
    Workload w = resolve_workload(common.workload_spec, common.seed);
    std::vector<RunResult> runs;
    auto rows = compare(cfg.sim, w, strategies, seed_list(common.seed, seed_count), &runs);

    ensure_out_dir(common.out_dir);
    fs::path out(common.out_dir);
    csv::write_atomic(out / "compare.csv", compare_csv(rows));
    csv::write_atomic(out / "metrics.csv", metrics_csv(runs));
    csv::write_atomic(out / "cumulative_cost.csv", cumulative_cost_csv(runs));
    std::cout << compare_csv(rows);
    return kExitOk;
}

int cmd_sweep(const CommonArgs& common, const std::string& grid_arg, std::size_t seed_count) {
    CliConfig cfg = common.load();
    SweepGrid grid = grid_arg.empty() ? default_sweep_grid() : parse_grid(grid_arg);
    Workload w = resolve_workload(common.workload_spec, common.seed);
    auto cells = sweep(cfg.sim, w, grid, seed_list(common.seed, seed_count));

    ensure_out_dir(common.out_dir);
    csv::write_atomic(fs::path(common.out_dir) / "sweep.csv", sweep_csv(cells));
    std::cout << "swept " << cells.size() << " cells over " << seed_count << " seed(s)\n";
    return kExitOk;
}

int cmd_ingest(const std::string& config_path, const std::string& traces_dir,
               const std::string& out_file, double percentile_arg,
               const std::string& services_arg, std::uint64_t seed) {
    CliConfig cfg = config_path.empty() ? CliConfig{} : load_config(config_path);
    if (percentile_arg >= 0.0) cfg.ingest.percentile = percentile_arg;
    if (!services_arg.empty()) {
        auto parts = csv::split(services_arg, ':');
        if (parts.size() != 2) {
            throw validation_error("--services-per-request expects min:max");
        }
        cfg.ingest.services_min = std::stoul(parts[0]);
        cfg.ingest.services_max = std::stoul(parts[1]);
    }
    std::error_code ec;
    if (!fs::is_directory(traces_dir, ec) || ec) {
        throw io_error("cannot read trace directory: " + traces_dir);
    }
    Rng rng = make_rng(seed, 0x696e67ULL, 0);
    Workload w = ingest_traces(traces_dir, cfg.ingest, rng, &std::cerr);
    save_workload(w, out_file);
    std::size_t files = 0;
    for (const auto& req : w.requests) files += req.services.size();
    std::cout << "ingested " << files << " trace file(s) into " << w.requests.size()
              << " request(s): " << out_file << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"learning-automata VM provisioning simulator"};
    app.require_subcommand(1);

    CommonArgs run_args;
    std::string strategy = "orp";
    auto* run_cmd = app.add_subcommand("run", "run one workload under one strategy");
    add_common(run_cmd, run_args);
    run_cmd->add_option("--strategy", strategy, "orp | random | greedy (default orp)");

    CommonArgs cmp_args;
    std::string strategies = "orp,random";
    std::size_t cmp_seeds = 1;
    auto* cmp_cmd = app.add_subcommand("compare", "compare strategies over several seeds");
    add_common(cmp_cmd, cmp_args);
    cmp_cmd->add_option("--strategies", strategies,
                        "comma-separated strategy list (default orp,random)");
    cmp_cmd->add_option("--seeds", cmp_seeds, "number of seeds (default 1)");

    CommonArgs sweep_args;
    std::string grid;
    std::size_t sweep_seeds = 1;
    auto* sweep_cmd = app.add_subcommand("sweep", "learning-rate sensitivity sweep");
    add_common(sweep_cmd, sweep_args);
    sweep_cmd->add_option("--grid", grid,
                          "grid spec lambda_r=lo:hi:step,lambda_p=lo:hi:step "
                          "(default lambda_r=0.7:0.9:0.05,lambda_p=0:0.1:0.025)");
    sweep_cmd->add_option("--seeds", sweep_seeds, "number of seeds (default 1)");

    std::string ing_config, traces_dir, ing_out, services_arg;
    double percentile_arg = -1.0;
    std::uint64_t ing_seed = 0;
    auto* ing_cmd = app.add_subcommand("ingest", "convert trace files into a workload CSV");
    ing_cmd->add_option("--config", ing_config, "JSON config file");
    ing_cmd->add_option("--traces", traces_dir, "directory of trace files")->required();
    ing_cmd->add_option("--out", ing_out, "output workload CSV")->required();
    ing_cmd->add_option("--percentile", percentile_arg,
                        "aggregation percentile 0..100 (default 95)");
    ing_cmd->add_option("--services-per-request", services_arg,
                        "min:max services per request (default 1:5)");
    ing_cmd->add_option("--seed", ing_seed, "grouping seed (default 0)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (run_cmd->parsed()) return cmd_run(run_args, strategy);
        if (cmp_cmd->parsed()) return cmd_compare(cmp_args, strategies, cmp_seeds);
        if (sweep_cmd->parsed()) return cmd_sweep(sweep_args, grid, sweep_seeds);
        if (ing_cmd->parsed()) {
            return cmd_ingest(ing_config, traces_dir, ing_out, percentile_arg, services_arg,
                              ing_seed);
        }
    } catch (const io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}
