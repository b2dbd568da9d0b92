#ifndef ORPSIM_SIMULATOR_HPP
#define ORPSIM_SIMULATOR_HPP

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "orpsim/catalog.hpp"
#include "orpsim/common.hpp"
#include "orpsim/engine.hpp"
#include "orpsim/workload.hpp"

namespace orpsim {

enum class Strategy { Orp, RandomSelect, GreedyCheapest };

inline std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::Orp: return "orp";
        case Strategy::RandomSelect: return "random";
        case Strategy::GreedyCheapest: return "greedy";
    }
    return "orp";
}

inline Strategy strategy_from_string(const std::string& s) {
    if (s == "orp") return Strategy::Orp;
    if (s == "random") return Strategy::RandomSelect;
    if (s == "greedy") return Strategy::GreedyCheapest;
    throw validation_error("unknown strategy: " + s);
}

struct SimConfig {
    std::vector<VmType> catalog = builtin_catalog();
    // Fixed pool: explicit multiset of type names. Empty means spawn.
    std::vector<std::string> fixed_pool_types;
    PoolSpec pool_spec;
    bool elastic = false;
    double delay_per_vm_s = 60.0;
    EngineParams engine;
    double billing_hours = 1.0;
    bool release_after_request = false;

    void validate() const {
        if (catalog.empty()) throw validation_error("config: empty catalog");
        if (!(billing_hours > 0.0)) throw validation_error("config: billing_hours must be > 0");
        engine.learning.validate();
        engine.convergence.validate();
        if (!engine.use_class_presets) engine.weights.validate();
        for (const auto& name : fixed_pool_types) {
            bool known = false;
            for (const auto& t : catalog) {
                if (t.name == name) {
                    known = true;
                    break;
                }
            }
            if (!known) throw validation_error("config: unknown pool type '" + name + "'");
        }
    }
};

inline Pool build_pool(const SimConfig& cfg, Rng& rng) {
    if (!cfg.fixed_pool_types.empty()) {
        Pool pool;
        for (const auto& name : cfg.fixed_pool_types) {
            for (const auto& t : cfg.catalog) {
                if (t.name == name) {
                    pool.add(t);
                    break;
                }
            }
        }
        return pool;
    }
    return spawn_pool(cfg.catalog, cfg.pool_spec, rng);
}

// Mean demand/capacity ratio (cpu, memory, disk) over the allocated
// instances of one request.
inline double utilization(const Allocation& alloc, const Pool& pool, const Request& req) {
    if (alloc.pairs.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& [svc_idx, inst_id] : alloc.pairs) {
        const VmInstance* inst = pool.find(inst_id);
        if (!inst) throw internal_error("utilization: unknown instance id");
        const ServiceSpec& svc = req.services[svc_idx];
        const VmType& t = inst->type;
        double u = (static_cast<double>(svc.vcpu) / t.vcpu + svc.memory_gb / t.memory_gb +
                    svc.storage_total_gb() / t.storage.total_gb()) /
                   3.0;
        sum += u;
    }
    return sum / static_cast<double>(alloc.pairs.size());
}

struct RunResult {
    Strategy strategy = Strategy::Orp;
    std::uint64_t seed = 0;
    std::vector<ProvisionResult> outcomes;
    std::size_t requests_total = 0;
    std::size_t requests_rejected = 0;
    double throughput = 0.0; // processed / total
    double mean_utilization = 0.0;
    double total_cost_usd = 0.0;
    double mean_iterations = 0.0;
    double total_negotiation_delay_s = 0.0;
    // One entry per request, in order: cost so far and processed so far.
    std::vector<std::pair<double, std::size_t>> cumulative;
    Pool final_pool;

    std::size_t processed() const { return requests_total - requests_rejected; }
};

// Uniform choice among feasible available instances, per service in order,
// with the same tackle/negotiate/rejection rules as the learning strategy.
inline ProvisionResult baseline_random(Pool& pool, const Request& req,
                                       const std::string& request_id,
                                       const std::vector<VmType>& catalog,
                                       const NegotiationConfig& neg, Rng& rng) {
    req.validate();
    const std::size_t pool_size_before = pool.instances.size();
    std::optional<NegotiationOutcome> negotiation;
    if (!tackle(pool, req)) {
        auto outcome = negotiate(pool, req, catalog, neg);
        if (std::holds_alternative<RejectionReason>(outcome)) {
            return Rejection{request_id, std::get<RejectionReason>(outcome)};
        }
        negotiation = std::get<NegotiationOutcome>(std::move(outcome));
    }
    Allocation alloc;
    alloc.request_id = request_id;
    alloc.negotiation = negotiation;
    std::vector<InstanceId> reserved;
    auto reject = [&]() {
        for (InstanceId id : reserved) {
            if (VmInstance* inst = pool.find(id)) inst->allocated = false;
        }
        while (pool.instances.size() > pool_size_before) {
            pool.instances.pop_back();
            --pool.next_id;
        }
        return Rejection{request_id, RejectionReason::NoFeasibleAssignment};
    };
    for (std::size_t s = 0; s < req.services.size(); ++s) {
        std::vector<std::size_t> candidates;
        for (std::size_t i = 0; i < pool.instances.size(); ++i) {
            if (feasible(pool.instances[i], req.services[s])) candidates.push_back(i);
        }
        if (candidates.empty() && neg.elastic) {
            if (auto t = cheapest_feasible_type(catalog, req.services[s])) {
                InstanceId id = pool.add(**t);
                if (!alloc.negotiation) alloc.negotiation.emplace();
                alloc.negotiation->bought.push_back(id);
                alloc.negotiation->delay_s += neg.delay_per_vm_s;
                candidates.push_back(pool.instances.size() - 1);
            }
        }
        if (candidates.empty()) return reject();
        std::uniform_int_distribution<std::size_t> dist(0, candidates.size() - 1);
        std::size_t pick = candidates[dist(rng)];
        VmInstance& inst = pool.instances[pick];
        inst.allocated = true;
        inst.allocated_request = request_id;
        inst.allocated_service = s;
        reserved.push_back(inst.id);
        alloc.pairs.emplace_back(s, inst.id);
        alloc.rho_per_service.push_back(0.0);
        alloc.iterations_per_service.push_back(0);
    }
    alloc.request_rho = 0.0;
    return alloc;
}

// Cheapest feasible available instance per service; ties break toward the
// lowest instance id. Deterministic, no randomness consumed.
inline ProvisionResult baseline_greedy(Pool& pool, const Request& req,
                                       const std::string& request_id,
                                       const std::vector<VmType>& catalog,
                                       const NegotiationConfig& neg) {
    req.validate();
    const std::size_t pool_size_before = pool.instances.size();
    std::optional<NegotiationOutcome> negotiation;
    if (!tackle(pool, req)) {
        auto outcome = negotiate(pool, req, catalog, neg);
        if (std::holds_alternative<RejectionReason>(outcome)) {
            return Rejection{request_id, std::get<RejectionReason>(outcome)};
        }
        negotiation = std::get<NegotiationOutcome>(std::move(outcome));
    }
    Allocation alloc;
    alloc.request_id = request_id;
    alloc.negotiation = negotiation;
    std::vector<InstanceId> reserved;
    auto reject = [&]() {
        for (InstanceId id : reserved) {
            if (VmInstance* inst = pool.find(id)) inst->allocated = false;
        }
        while (pool.instances.size() > pool_size_before) {
            pool.instances.pop_back();
            --pool.next_id;
        }
        return Rejection{request_id, RejectionReason::NoFeasibleAssignment};
    };
    for (std::size_t s = 0; s < req.services.size(); ++s) {
        VmInstance* best = nullptr;
        for (auto& inst : pool.instances) {
            if (!feasible(inst, req.services[s])) continue;
            if (!best || inst.type.hour_cost_usd < best->type.hour_cost_usd ||
                (inst.type.hour_cost_usd == best->type.hour_cost_usd && inst.id < best->id)) {
                best = &inst;
            }
        }
        if (!best && neg.elastic) {
            if (auto t = cheapest_feasible_type(catalog, req.services[s])) {
                InstanceId id = pool.add(**t);
                if (!alloc.negotiation) alloc.negotiation.emplace();
                alloc.negotiation->bought.push_back(id);
                alloc.negotiation->delay_s += neg.delay_per_vm_s;
                best = pool.find(id);
            }
        }
        if (!best) return reject();
        best->allocated = true;
        best->allocated_request = request_id;
        best->allocated_service = s;
        reserved.push_back(best->id);
        alloc.pairs.emplace_back(s, best->id);
        alloc.rho_per_service.push_back(0.0);
        alloc.iterations_per_service.push_back(0);
    }
    alloc.request_rho = 0.0;
    return alloc;
}

inline RunResult run(const SimConfig& cfg, const Workload& w, Strategy strategy,
                     std::uint64_t seed) {
    cfg.validate();
    if (w.requests.empty()) {
        throw std::invalid_argument("run: empty workload");
    }
    NegotiationConfig neg{cfg.elastic, cfg.delay_per_vm_s};
    Rng pool_rng = make_rng(seed, /*stream_a=*/0x706f6f6cULL, 0);
    Pool pool = build_pool(cfg, pool_rng);

    RunResult result;
    result.strategy = strategy;
    result.seed = seed;
    result.requests_total = w.requests.size();

    double cost = 0.0;
    std::size_t processed = 0;
    std::vector<double> utils;
    std::vector<double> iteration_counts;

    for (std::size_t r = 0; r < w.requests.size(); ++r) {
        const Request& req = w.requests[r];
        std::string request_id = std::to_string(r);
        ProvisionResult outcome = [&]() -> ProvisionResult {
            switch (strategy) {
                case Strategy::Orp:
                    return provision(pool, req, request_id, cfg.catalog, cfg.engine, neg,
                                     [&](std::size_t svc_idx) {
                                         return make_rng(seed, r + 1, svc_idx + 1);
                                     });
                case Strategy::RandomSelect: {
                    Rng rng = make_rng(seed, r + 1, 0x72616e64ULL);
                    return baseline_random(pool, req, request_id, cfg.catalog, neg, rng);
                }
                case Strategy::GreedyCheapest:
                    return baseline_greedy(pool, req, request_id, cfg.catalog, neg);
            }
            throw internal_error("run: unknown strategy");
        }();

        if (const auto* alloc = std::get_if<Allocation>(&outcome)) {
            ++processed;
            double req_cost = 0.0;
            for (const auto& [svc_idx, inst_id] : alloc->pairs) {
                req_cost += pool.find(inst_id)->type.hour_cost_usd * cfg.billing_hours;
            }
            cost += req_cost;
            utils.push_back(utilization(*alloc, pool, req));
            for (std::size_t it : alloc->iterations_per_service) {
                if (strategy == Strategy::Orp) {
                    iteration_counts.push_back(static_cast<double>(it));
                }
            }
            if (alloc->negotiation) {
                result.total_negotiation_delay_s += alloc->negotiation->delay_s;
            }
            if (cfg.release_after_request) {
                for (const auto& [svc_idx, inst_id] : alloc->pairs) {
                    VmInstance* inst = pool.find(inst_id);
                    inst->allocated = false;
                    inst->allocated_request.clear();
                }
            }
        } else {
            ++result.requests_rejected;
        }
        result.cumulative.emplace_back(cost, processed);
        result.outcomes.push_back(std::move(outcome));
    }

    result.total_cost_usd = cost;
    result.throughput = static_cast<double>(processed) / static_cast<double>(w.requests.size());
    result.mean_utilization = mean_of(utils);
    result.mean_iterations = mean_of(iteration_counts);
    result.final_pool = std::move(pool);
    return result;
}

inline double total_cost(const RunResult& r) { return r.total_cost_usd; }

// ---------------------------------------------------------------------------
// Aggregation: strategy comparison and learning-rate sweep
// ---------------------------------------------------------------------------

struct StrategySummary {
    Strategy strategy = Strategy::Orp;
    std::size_t seeds = 0;
    double throughput_mean = 0, throughput_std = 0;
    double rejections_mean = 0, rejections_std = 0;
    double utilization_mean = 0, utilization_std = 0;
    double cost_mean = 0, cost_std = 0;
};

inline std::size_t parallelism_cap() {
    if (const char* env = std::getenv("ORP_SIM_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<std::size_t>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// Runs jobs [0,n) on up to parallelism_cap() threads; results are written
// by index so the reduction order is deterministic.
template <typename Fn>
inline void parallel_for(std::size_t n, Fn&& fn) {
    std::size_t threads = std::min(parallelism_cap(), n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        workers.emplace_back([&]() {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) break;
                fn(i);
            }
        });
    }
    for (auto& th : workers) th.join();
}

inline std::vector<StrategySummary> compare(const SimConfig& cfg, const Workload& w,
                                            const std::vector<Strategy>& strategies,
                                            const std::vector<std::uint64_t>& seeds,
                                            std::vector<RunResult>* all_runs = nullptr) {
    if (strategies.size() < 2) {
        throw std::invalid_argument("compare: at least two strategies required");
    }
    if (seeds.empty()) {
        throw std::invalid_argument("compare: at least one seed required");
    }
    std::vector<RunResult> runs(strategies.size() * seeds.size());
    parallel_for(runs.size(), [&](std::size_t i) {
        std::size_t si = i / seeds.size();
        std::size_t ki = i % seeds.size();
        runs[i] = run(cfg, w, strategies[si], seeds[ki]);
    });
    std::vector<StrategySummary> out;
    for (std::size_t si = 0; si < strategies.size(); ++si) {
        std::vector<double> tp, rej, util, cost;
        for (std::size_t ki = 0; ki < seeds.size(); ++ki) {
            const RunResult& r = runs[si * seeds.size() + ki];
            tp.push_back(r.throughput);
            rej.push_back(static_cast<double>(r.requests_rejected));
            util.push_back(r.mean_utilization);
            cost.push_back(r.total_cost_usd);
        }
        StrategySummary s;
        s.strategy = strategies[si];
        s.seeds = seeds.size();
        s.throughput_mean = mean_of(tp);
        s.throughput_std = stddev_of(tp);
        s.rejections_mean = mean_of(rej);
        s.rejections_std = stddev_of(rej);
        s.utilization_mean = mean_of(util);
        s.utilization_std = stddev_of(util);
        s.cost_mean = mean_of(cost);
        s.cost_std = stddev_of(cost);
        out.push_back(s);
    }
    if (all_runs) *all_runs = std::move(runs);
    return out;
}

struct SweepCell {
    double lambda_reward = 0.0;
    double lambda_penalty = 0.0;
    double mean_iterations = 0.0;
    double stddev_iterations = 0.0;
};

struct SweepGrid {
    std::vector<double> lambda_rewards;
    std::vector<double> lambda_penalties;
};

inline SweepGrid default_sweep_grid() {
    SweepGrid g;
    for (int i = 0; i <= 4; ++i) g.lambda_rewards.push_back(0.7 + 0.05 * i);
    for (int i = 0; i <= 4; ++i) g.lambda_penalties.push_back(0.025 * i);
    return g;
}

// Mean per-service iterations-to-convergence per (reward, penalty) cell,
// over all requests and seeds.
inline std::vector<SweepCell> sweep(const SimConfig& cfg, const Workload& w,
                                    const SweepGrid& grid,
                                    const std::vector<std::uint64_t>& seeds) {
    if (grid.lambda_rewards.empty() || grid.lambda_penalties.empty()) {
        throw std::invalid_argument("sweep: empty grid");
    }
    for (double a : grid.lambda_rewards) {
        if (!(a > 0.0 && a <= 1.0)) {
            throw validation_error("sweep: lambda_reward outside (0,1]");
        }
    }
    for (double b : grid.lambda_penalties) {
        if (!(b >= 0.0 && b < 1.0)) {
            throw validation_error("sweep: lambda_penalty outside [0,1)");
        }
    }
    if (seeds.empty()) {
        throw std::invalid_argument("sweep: at least one seed required");
    }
    std::vector<SweepCell> cells(grid.lambda_rewards.size() * grid.lambda_penalties.size());
    parallel_for(cells.size(), [&](std::size_t i) {
        std::size_t ai = i / grid.lambda_penalties.size();
        std::size_t bi = i % grid.lambda_penalties.size();
        SimConfig cell_cfg = cfg;
        cell_cfg.engine.learning.lambda_reward = grid.lambda_rewards[ai];
        cell_cfg.engine.learning.lambda_penalty = grid.lambda_penalties[bi];
        std::vector<double> iters;
        for (std::uint64_t seed : seeds) {
            RunResult r = run(cell_cfg, w, Strategy::Orp, seed);
            for (const auto& outcome : r.outcomes) {
                if (const auto* alloc = std::get_if<Allocation>(&outcome)) {
                    for (std::size_t it : alloc->iterations_per_service) {
                        iters.push_back(static_cast<double>(it));
                    }
                }
            }
        }
        cells[i] = {grid.lambda_rewards[ai], grid.lambda_penalties[bi], mean_of(iters),
                    stddev_of(iters)};
    });
    return cells;
}

} // namespace orpsim

#endif
