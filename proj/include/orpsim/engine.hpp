#ifndef ORPSIM_ENGINE_HPP
#define ORPSIM_ENGINE_HPP

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "orpsim/automaton.hpp"
#include "orpsim/catalog.hpp"
#include "orpsim/common.hpp"
#include "orpsim/workload.hpp"

namespace orpsim {

// Attribute weights of the compatibility sum, in the order
// size, memory, core, storage, throughput. Weights of attributes absent
// from a comparison are dropped and the rest renormalized to sum 1.
struct Weights {
    double v_size = 0.0;
    double v_memory = 0.25;
    double v_core = 0.25;
    double v_storage = 0.25;
    double v_throughput = 0.25;

    void validate() const {
        if (v_size < 0 || v_memory < 0 || v_core < 0 || v_storage < 0 || v_throughput < 0) {
            throw std::invalid_argument("weights must be non-negative");
        }
        if (v_size + v_memory + v_core + v_storage + v_throughput <= 0.0) {
            throw std::invalid_argument("weights must not all be zero");
        }
    }
};

inline Weights preset_weights(AppClass c) {
    switch (c) {
        case AppClass::DataIntensive: return {0.0, 0.30, 0.10, 0.35, 0.25};
        case AppClass::ProcessIntensive: return {0.0, 0.15, 0.55, 0.15, 0.15};
        default: return {0.0, 0.25, 0.25, 0.25, 0.25};
    }
}

// Tightness of one attribute: demand/capacity in (0,1], 1 at exact match.
// Feasibility (capacity >= demand) must already hold.
inline double adapted(double vm_value, double req_value) {
    if (!(req_value > 0.0)) {
        throw internal_error("adapted: demand must be positive");
    }
    if (vm_value < req_value) {
        throw internal_error("adapted: capacity below demand (feasibility not enforced)");
    }
    return req_value / vm_value;
}

// Weighted compatibility of an instance to a service demand, in [0,1].
inline double total_compat(const VmInstance& inst, const ServiceSpec& svc,
                           const Weights& w) {
    w.validate();
    if (!feasible(inst, svc)) {
        throw internal_error("total_compat: instance not feasible for service");
    }
    const VmType& t = inst.type;
    double sum = 0.0;
    double wsum = 0.0;
    if (w.v_size > 0.0 && svc.size_rank) {
        // Size rank is not part of the feasibility gate, so the ratio is
        // taken symmetrically to stay within [0,1].
        double a = static_cast<double>(t.size_rank);
        double b = static_cast<double>(*svc.size_rank);
        sum += w.v_size * (std::min(a, b) / std::max(a, b));
        wsum += w.v_size;
    }
    sum += w.v_memory * adapted(t.memory_gb, svc.memory_gb);
    wsum += w.v_memory;
    sum += w.v_core * adapted(t.vcpu, svc.vcpu);
    wsum += w.v_core;
    sum += w.v_storage * adapted(t.storage.total_gb(), svc.storage_total_gb());
    wsum += w.v_storage;
    if (svc.throughput_kbps && t.throughput_kbps) {
        sum += w.v_throughput * adapted(*t.throughput_kbps, *svc.throughput_kbps);
        wsum += w.v_throughput;
    }
    if (!(wsum > 0.0)) {
        throw internal_error("total_compat: no attribute carries weight");
    }
    return sum / wsum;
}

struct NormalizationBounds {
    double a_min = 0.0;
    double b_max = 0.0;
};

struct NoFeasibleVm : std::runtime_error {
    NoFeasibleVm() : std::runtime_error("no feasible available instance") {}
};

inline double raw_score(const VmInstance& inst, const ServiceSpec& svc, const Weights& w) {
    return total_compat(inst, svc, w) / inst.type.hour_cost_usd;
}

// Min/max of the compatibility-per-cost score over all feasible available
// instances of the pool.
inline NormalizationBounds normalization_bounds(const Pool& pool, const ServiceSpec& svc,
                                                const Weights& w) {
    bool any = false;
    NormalizationBounds b;
    for (const auto& inst : pool.instances) {
        if (!feasible(inst, svc)) continue;
        double r = raw_score(inst, svc, w);
        if (!any) {
            b.a_min = b.b_max = r;
            any = true;
        } else {
            b.a_min = std::min(b.a_min, r);
            b.b_max = std::max(b.b_max, r);
        }
    }
    if (!any) throw NoFeasibleVm();
    return b;
}

// (p-A)/(B-A); a degenerate band (B=A) maps to 1: all candidates equal.
inline double normalize(double p, const NormalizationBounds& b) {
    if (p < b.a_min || p > b.b_max) {
        throw std::invalid_argument("normalize: value outside bounds");
    }
    if (b.b_max == b.a_min) return 1.0;
    return (p - b.a_min) / (b.b_max - b.a_min);
}

struct PerfScore {
    double rho = 0.0; // normalized, in [0,1]
    double raw = 0.0; // compatibility / hour cost
};

inline PerfScore perf_factor(const VmInstance& inst, const ServiceSpec& svc,
                             const Weights& w, const NormalizationBounds& bounds) {
    PerfScore s;
    s.raw = raw_score(inst, svc, w);
    s.rho = normalize(s.raw, bounds);
    return s;
}

// ---------------------------------------------------------------------------
// Tackle: does a pairwise-distinct feasible assignment exist for all
// services? Decided by maximum bipartite matching (Kuhn's algorithm;
// service counts are small).
// ---------------------------------------------------------------------------

namespace detail {

inline bool try_match(std::size_t svc, const std::vector<std::vector<std::size_t>>& adj,
                      std::vector<bool>& visited, std::vector<std::ptrdiff_t>& match_of) {
    for (std::size_t inst : adj[svc]) {
        if (visited[inst]) continue;
        visited[inst] = true;
        if (match_of[inst] < 0 ||
            try_match(static_cast<std::size_t>(match_of[inst]), adj, visited, match_of)) {
            match_of[inst] = static_cast<std::ptrdiff_t>(svc);
            return true;
        }
    }
    return false;
}

inline std::size_t max_matching(const std::vector<std::vector<std::size_t>>& adj,
                                std::size_t n_instances) {
    std::vector<std::ptrdiff_t> match_of(n_instances, -1);
    std::size_t matched = 0;
    for (std::size_t s = 0; s < adj.size(); ++s) {
        std::vector<bool> visited(n_instances, false);
        if (try_match(s, adj, visited, match_of)) ++matched;
    }
    return matched;
}

} // namespace detail

inline bool tackle(const Pool& pool, const Request& req) {
    std::vector<std::vector<std::size_t>> adj(req.services.size());
    for (std::size_t s = 0; s < req.services.size(); ++s) {
        for (std::size_t i = 0; i < pool.instances.size(); ++i) {
            if (feasible(pool.instances[i], req.services[s])) {
                adj[s].push_back(i);
            }
        }
    }
    return detail::max_matching(adj, pool.instances.size()) == req.services.size();
}

// ---------------------------------------------------------------------------
// Negotiation: elastic acquisition from an unlimited IaaS catalog.
// ---------------------------------------------------------------------------

struct NegotiationConfig {
    bool elastic = false;
    double delay_per_vm_s = 60.0;
};

struct NegotiationOutcome {
    std::vector<InstanceId> bought;
    double delay_s = 0.0;
};

enum class RejectionReason { NoFeasibleAssignment, ElasticDisabled };

inline std::string to_string(RejectionReason r) {
    return r == RejectionReason::NoFeasibleAssignment ? "no-feasible-assignment"
                                                      : "elastic-disabled";
}

struct Rejection {
    std::string request_id;
    RejectionReason reason = RejectionReason::NoFeasibleAssignment;
};

inline std::optional<const VmType*> cheapest_feasible_type(const std::vector<VmType>& catalog,
                                                           const ServiceSpec& svc) {
    const VmType* best = nullptr;
    for (const auto& t : catalog) {
        if (!feasible_type(t, svc)) continue;
        if (!best || t.hour_cost_usd < best->hour_cost_usd) best = &t;
    }
    if (!best) return std::nullopt;
    return best;
}

// Buys the cheapest feasible type for each service the current matching
// cannot cover, until the request is tackleable. Throws Rejection via
// return value instead: the caller inspects the variant.
inline std::variant<NegotiationOutcome, RejectionReason> negotiate(
    Pool& pool, const Request& req, const std::vector<VmType>& catalog,
    const NegotiationConfig& cfg) {
    if (!cfg.elastic) {
        return RejectionReason::ElasticDisabled;
    }
    // With unlimited supply the request is servable iff every service has
    // some feasible catalog type; check before mutating the pool.
    for (const auto& svc : req.services) {
        if (!cheapest_feasible_type(catalog, svc)) {
            return RejectionReason::NoFeasibleAssignment;
        }
    }
    NegotiationOutcome out;
    while (!tackle(pool, req)) {
        // Find one service not covered by a maximum matching and buy for it.
        std::vector<std::vector<std::size_t>> adj(req.services.size());
        for (std::size_t s = 0; s < req.services.size(); ++s) {
            for (std::size_t i = 0; i < pool.instances.size(); ++i) {
                if (feasible(pool.instances[i], req.services[s])) adj[s].push_back(i);
            }
        }
        std::vector<std::ptrdiff_t> match_of(pool.instances.size(), -1);
        std::vector<bool> svc_matched(req.services.size(), false);
        for (std::size_t s = 0; s < req.services.size(); ++s) {
            std::vector<bool> visited(pool.instances.size(), false);
            svc_matched[s] = detail::try_match(s, adj, visited, match_of);
        }
        for (std::size_t s = 0; s < req.services.size(); ++s) {
            if (svc_matched[s]) continue;
            auto t = cheapest_feasible_type(catalog, req.services[s]);
            out.bought.push_back(pool.add(**t));
            out.delay_s += cfg.delay_per_vm_s;
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Per-service provisioning: one learning-automaton episode over the
// feasible available instances.
// ---------------------------------------------------------------------------

struct IterationRecord {
    std::size_t iteration = 0;
    InstanceId instance = 0;
    double rho = 0.0;
    double max_prob = 0.0;
};

struct ServiceProvisionResult {
    InstanceId instance = 0;
    double rho = 0.0; // score of the returned instance
    std::size_t iterations = 0;
    ConvergenceStatus::State stop_state = ConvergenceStatus::State::Running;
    std::vector<IterationRecord> trace; // filled only when tracing
};

struct EngineParams {
    LearningParams learning;
    ConvergencePolicy convergence;
    Weights weights; // used when use_class_presets is false
    bool use_class_presets = true;
    bool trace_iterations = false;
};

inline ServiceProvisionResult provision_service(const Pool& pool, const ServiceSpec& svc,
                                                const Weights& w,
                                                const LearningParams& learning,
                                                const ConvergencePolicy& policy, Rng& rng,
                                                bool trace = false) {
    learning.validate();
    policy.validate();
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < pool.instances.size(); ++i) {
        if (feasible(pool.instances[i], svc)) candidates.push_back(i);
    }
    if (candidates.empty()) throw NoFeasibleVm();

    NormalizationBounds bounds = normalization_bounds(pool, svc, w);
    std::vector<double> rho(candidates.size());
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        rho[k] = perf_factor(pool.instances[candidates[k]], svc, w, bounds).rho;
    }

    Automaton aut(candidates.size());
    std::deque<double> history;
    std::vector<IterationRecord> records;
    ConvergenceStatus status = check_convergence(aut, history, policy);
    while (!status.done()) {
        std::size_t action = aut.select_action(rng);
        double r = rho[action];
        if (r >= learning.threshold) {
            aut.reward(action, learning.lambda_reward);
        } else {
            aut.penalize(action, learning.lambda_penalty);
        }
        history.push_back(r);
        if (history.size() > policy.stall_window) history.pop_front();
        if (trace) {
            records.push_back({aut.iterations(), pool.instances[candidates[action]].id,
                               r, aut.probs()[aut.best_action()]});
        }
        status = check_convergence(aut, history, policy);
    }

    ServiceProvisionResult res;
    res.instance = pool.instances[candidates[status.action]].id;
    res.rho = rho[status.action];
    res.iterations = aut.iterations();
    res.stop_state = status.state;
    res.trace = std::move(records);
    return res;
}

// ---------------------------------------------------------------------------
// Whole-request provisioning (the full algorithm): feasibility check,
// optional elastic acquisition, then one LA episode per service with
// sequential reservation, summed into the request-level score.
// ---------------------------------------------------------------------------

struct Allocation {
    std::string request_id;
    std::vector<std::pair<std::size_t, InstanceId>> pairs; // (service index, instance)
    double request_rho = 0.0;                              // sum of per-service rho
    std::vector<double> rho_per_service;
    std::vector<std::size_t> iterations_per_service;
    std::optional<NegotiationOutcome> negotiation;
    std::vector<IterationRecord> trace;
    std::vector<std::size_t> trace_service_of; // parallel to trace
};

using ProvisionResult = std::variant<Allocation, Rejection>;

inline double request_perf(const std::vector<double>& rhos) {
    if (rhos.empty()) {
        throw std::invalid_argument("request_perf: empty score list");
    }
    double s = 0.0;
    for (double r : rhos) s += r;
    return s;
}

// rng_factory yields an independent stream per service index so that
// observer changes never perturb sibling services.
template <typename RngFactory>
inline ProvisionResult provision(Pool& pool, const Request& req, const std::string& request_id,
                                 const std::vector<VmType>& catalog,
                                 const EngineParams& params, const NegotiationConfig& neg,
                                 RngFactory&& rng_for_service) {
    req.validate();
    std::optional<NegotiationOutcome> negotiation;
    const std::size_t pool_size_before = pool.instances.size();
    auto rollback = [&]() {
        while (pool.instances.size() > pool_size_before) {
            pool.instances.pop_back();
            --pool.next_id;
        }
    };

    if (!tackle(pool, req)) {
        auto outcome = negotiate(pool, req, catalog, neg);
        if (std::holds_alternative<RejectionReason>(outcome)) {
            return Rejection{request_id, std::get<RejectionReason>(outcome)};
        }
        negotiation = std::get<NegotiationOutcome>(std::move(outcome));
    }

    Weights w = params.use_class_presets ? preset_weights(req.app_class) : params.weights;

    Allocation alloc;
    alloc.request_id = request_id;
    alloc.negotiation = negotiation;
    std::vector<double> rhos;
    std::vector<InstanceId> reserved;
    auto unreserve = [&]() {
        for (InstanceId id : reserved) {
            if (VmInstance* inst = pool.find(id)) {
                inst->allocated = false;
                inst->allocated_request.clear();
                inst->allocated_service = 0;
            }
        }
    };

    for (std::size_t s = 0; s < req.services.size(); ++s) {
        const ServiceSpec& svc = req.services[s];
        bool has_candidate = false;
        for (const auto& inst : pool.instances) {
            if (feasible(inst, svc)) {
                has_candidate = true;
                break;
            }
        }
        if (!has_candidate && neg.elastic) {
            auto t = cheapest_feasible_type(catalog, svc);
            if (t) {
                InstanceId id = pool.add(**t);
                if (!alloc.negotiation) alloc.negotiation.emplace();
                alloc.negotiation->bought.push_back(id);
                alloc.negotiation->delay_s += neg.delay_per_vm_s;
                has_candidate = true;
            }
        }
        if (!has_candidate) {
            unreserve();
            rollback();
            return Rejection{request_id, RejectionReason::NoFeasibleAssignment};
        }
        Rng rng = rng_for_service(s);
        ServiceProvisionResult r = provision_service(
            pool, svc, w, params.learning, params.convergence, rng, params.trace_iterations);
        VmInstance* inst = pool.find(r.instance);
        inst->allocated = true;
        inst->allocated_request = request_id;
        inst->allocated_service = s;
        reserved.push_back(r.instance);
        alloc.pairs.emplace_back(s, r.instance);
        alloc.iterations_per_service.push_back(r.iterations);
        alloc.rho_per_service.push_back(r.rho);
        rhos.push_back(r.rho);
        for (const auto& rec : r.trace) {
            alloc.trace.push_back(rec);
            alloc.trace_service_of.push_back(s);
        }
    }
    alloc.request_rho = request_perf(rhos);
    return alloc;
}

} // namespace orpsim

#endif
