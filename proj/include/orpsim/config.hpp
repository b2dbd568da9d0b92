#ifndef ORPSIM_CONFIG_HPP
#define ORPSIM_CONFIG_HPP

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "orpsim/catalog.hpp"
#include "orpsim/simulator.hpp"
#include "orpsim/workload.hpp"

namespace orpsim {

// JSON config document mapping onto SimConfig and IngestConfig. Every field
// is optional; unknown keys are rejected so typos fail loudly.
//
// {
//   "catalog_path": "catalog.csv",
//   "pool": {"min_size": 20, "max_size": 50, "fixed_types": ["t2.small", ...]},
//   "elastic": false,
//   "delay_per_vm_s": 60.0,
//   "billing_hours": 1.0,
//   "release_after_request": false,
//   "learning": {"lambda_reward": 0.8, "lambda_penalty": 0.05, "threshold": 0.5},
//   "convergence": {"prob_threshold": 0.95, "stall_window": 20,
//                   "stall_epsilon": 1e-6, "max_iterations": 500},
//   "weights": {"size": 0, "memory": 0.25, "core": 0.25,
//               "storage": 0.25, "throughput": 0.25},
//   "use_class_presets": true,
//   "trace_iterations": false,
//   "ingest": {"delimiter": ";", "percentile": 95,
//              "services_min": 1, "services_max": 5, "lenient": true}
// }

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j,
                                const std::vector<std::string>& known,
                                const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const auto& k : known) {
            if (it.key() == k) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw validation_error("config: unknown key '" + it.key() + "' in " + where);
        }
    }
}

} // namespace detail

struct CliConfig {
    SimConfig sim;
    IngestConfig ingest;
};

inline CliConfig parse_config(const nlohmann::json& j) {
    CliConfig cfg;
    detail::reject_unknown_keys(
        j,
        {"catalog_path", "pool", "elastic", "delay_per_vm_s", "billing_hours",
         "release_after_request", "learning", "convergence", "weights",
         "use_class_presets", "trace_iterations", "ingest"},
        "top level");

    if (j.contains("catalog_path")) {
        cfg.sim.catalog = load_catalog(j.at("catalog_path").get<std::string>());
    }
    if (j.contains("pool")) {
        const auto& p = j.at("pool");
        detail::reject_unknown_keys(p, {"min_size", "max_size", "fixed_types"}, "pool");
        if (p.contains("min_size")) cfg.sim.pool_spec.min_size = p.at("min_size").get<std::size_t>();
        if (p.contains("max_size")) cfg.sim.pool_spec.max_size = p.at("max_size").get<std::size_t>();
        if (p.contains("fixed_types")) {
            cfg.sim.fixed_pool_types = p.at("fixed_types").get<std::vector<std::string>>();
        }
    }
    if (j.contains("elastic")) cfg.sim.elastic = j.at("elastic").get<bool>();
    if (j.contains("delay_per_vm_s")) cfg.sim.delay_per_vm_s = j.at("delay_per_vm_s").get<double>();
    if (j.contains("billing_hours")) cfg.sim.billing_hours = j.at("billing_hours").get<double>();
    if (j.contains("release_after_request")) {
        cfg.sim.release_after_request = j.at("release_after_request").get<bool>();
    }
    if (j.contains("learning")) {
        const auto& l = j.at("learning");
        detail::reject_unknown_keys(l, {"lambda_reward", "lambda_penalty", "threshold"},
                                    "learning");
        auto& lp = cfg.sim.engine.learning;
        if (l.contains("lambda_reward")) lp.lambda_reward = l.at("lambda_reward").get<double>();
        if (l.contains("lambda_penalty")) lp.lambda_penalty = l.at("lambda_penalty").get<double>();
        if (l.contains("threshold")) lp.threshold = l.at("threshold").get<double>();
    }
    if (j.contains("convergence")) {
        const auto& c = j.at("convergence");
        detail::reject_unknown_keys(
            c, {"prob_threshold", "stall_window", "stall_epsilon", "max_iterations"},
            "convergence");
        auto& cp = cfg.sim.engine.convergence;
        if (c.contains("prob_threshold")) cp.prob_threshold = c.at("prob_threshold").get<double>();
        if (c.contains("stall_window")) cp.stall_window = c.at("stall_window").get<std::size_t>();
        if (c.contains("stall_epsilon")) cp.stall_epsilon = c.at("stall_epsilon").get<double>();
        if (c.contains("max_iterations")) {
            cp.max_iterations = c.at("max_iterations").get<std::size_t>();
        }
    }
    if (j.contains("weights")) {
        const auto& w = j.at("weights");
        detail::reject_unknown_keys(w, {"size", "memory", "core", "storage", "throughput"},
                                    "weights");
        auto& ww = cfg.sim.engine.weights;
        if (w.contains("size")) ww.v_size = w.at("size").get<double>();
        if (w.contains("memory")) ww.v_memory = w.at("memory").get<double>();
        if (w.contains("core")) ww.v_core = w.at("core").get<double>();
        if (w.contains("storage")) ww.v_storage = w.at("storage").get<double>();
        if (w.contains("throughput")) ww.v_throughput = w.at("throughput").get<double>();
        cfg.sim.engine.use_class_presets = false;
    }
    if (j.contains("use_class_presets")) {
        cfg.sim.engine.use_class_presets = j.at("use_class_presets").get<bool>();
    }
    if (j.contains("trace_iterations")) {
        cfg.sim.engine.trace_iterations = j.at("trace_iterations").get<bool>();
    }
    if (j.contains("ingest")) {
        const auto& g = j.at("ingest");
        detail::reject_unknown_keys(
            g, {"delimiter", "percentile", "services_min", "services_max", "lenient"},
            "ingest");
        if (g.contains("delimiter")) {
            std::string d = g.at("delimiter").get<std::string>();
            if (d.size() != 1) throw validation_error("config: delimiter must be one character");
            cfg.ingest.delimiter = d[0];
        }
        if (g.contains("percentile")) cfg.ingest.percentile = g.at("percentile").get<double>();
        if (g.contains("services_min")) cfg.ingest.services_min = g.at("services_min").get<std::size_t>();
        if (g.contains("services_max")) cfg.ingest.services_max = g.at("services_max").get<std::size_t>();
        if (g.contains("lenient")) cfg.ingest.lenient = g.at("lenient").get<bool>();
    }
    cfg.sim.validate();
    return cfg;
}

inline CliConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw validation_error("config: invalid JSON in " + path.string() + ": " + e.what());
    }
    return parse_config(j);
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

inline std::string metrics_csv(const std::vector<RunResult>& runs) {
    std::string out =
        "strategy,seed,requests_total,requests_rejected,throughput,mean_utilization,"
        "total_cost_usd,mean_iterations,total_negotiation_delay_s\n";
    for (const auto& r : runs) {
        out += to_string(r.strategy) + ',' + std::to_string(r.seed) + ',' +
               std::to_string(r.requests_total) + ',' + std::to_string(r.requests_rejected) +
               ',' + format_double(r.throughput) + ',' + format_double(r.mean_utilization) +
               ',' + format_double(r.total_cost_usd) + ',' +
               format_double(r.mean_iterations) + ',' +
               format_double(r.total_negotiation_delay_s) + '\n';
    }
    return out;
}

inline std::string cumulative_cost_csv(const std::vector<RunResult>& runs) {
    std::string out = "strategy,seed,request_index,cumulative_cost_usd,processed_count\n";
    for (const auto& r : runs) {
        for (std::size_t i = 0; i < r.cumulative.size(); ++i) {
            out += to_string(r.strategy) + ',' + std::to_string(r.seed) + ',' +
                   std::to_string(i) + ',' + format_double(r.cumulative[i].first) + ',' +
                   std::to_string(r.cumulative[i].second) + '\n';
        }
    }
    return out;
}

inline std::string allocations_csv(const RunResult& r) {
    std::string out = "request_id,service_index,instance_id,vm_type,rho\n";
    for (const auto& outcome : r.outcomes) {
        const auto* alloc = std::get_if<Allocation>(&outcome);
        if (!alloc) continue;
        for (std::size_t k = 0; k < alloc->pairs.size(); ++k) {
            const auto& [svc_idx, inst_id] = alloc->pairs[k];
            const VmInstance* inst = r.final_pool.find(inst_id);
            double rho = k < alloc->rho_per_service.size() ? alloc->rho_per_service[k] : 0.0;
            out += alloc->request_id + ',' + std::to_string(svc_idx) + ',' +
                   std::to_string(inst_id) + ',' + (inst ? inst->type.name : "?") + ',' +
                   format_double(rho) + '\n';
        }
    }
    return out;
}

inline std::string iteration_trace_csv(const RunResult& r) {
    std::string out = "request_id,service_index,iteration,action_instance_id,rho,max_prob\n";
    for (const auto& outcome : r.outcomes) {
        const auto* alloc = std::get_if<Allocation>(&outcome);
        if (!alloc) continue;
        for (std::size_t k = 0; k < alloc->trace.size(); ++k) {
            const IterationRecord& rec = alloc->trace[k];
            out += alloc->request_id + ',' + std::to_string(alloc->trace_service_of[k]) +
                   ',' + std::to_string(rec.iteration) + ',' + std::to_string(rec.instance) +
                   ',' + format_double(rec.rho) + ',' + format_double(rec.max_prob) + '\n';
        }
    }
    return out;
}

inline std::string compare_csv(const std::vector<StrategySummary>& rows) {
    std::string out =
        "strategy,seeds,throughput_mean,throughput_std,rejections_mean,rejections_std,"
        "utilization_mean,utilization_std,total_cost_mean,total_cost_std\n";
    for (const auto& s : rows) {
        out += to_string(s.strategy) + ',' + std::to_string(s.seeds) + ',' +
               format_double(s.throughput_mean) + ',' + format_double(s.throughput_std) +
               ',' + format_double(s.rejections_mean) + ',' +
               format_double(s.rejections_std) + ',' + format_double(s.utilization_mean) +
               ',' + format_double(s.utilization_std) + ',' + format_double(s.cost_mean) +
               ',' + format_double(s.cost_std) + '\n';
    }
    return out;
}

inline std::string sweep_csv(const std::vector<SweepCell>& cells) {
    std::string out = "lambda_reward,lambda_penalty,mean_iterations,stddev_iterations\n";
    for (const auto& c : cells) {
        out += format_double(c.lambda_reward) + ',' + format_double(c.lambda_penalty) + ',' +
               format_double(c.mean_iterations) + ',' + format_double(c.stddev_iterations) +
               '\n';
    }
    return out;
}

} // namespace orpsim

#endif
