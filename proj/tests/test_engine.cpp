#include <doctest.h>

#include <cmath>
#include <set>

#include "orpsim/engine.hpp"

using namespace orpsim;

namespace {

Pool one_of_each() {
    Pool pool;
    for (const auto& t : builtin_catalog()) pool.add(t);
    return pool;
}

Pool pool_of(std::initializer_list<const char*> names) {
    Pool pool;
    for (const char* name : names) {
        for (const auto& t : builtin_catalog()) {
            if (t.name == name) pool.add(t);
        }
    }
    return pool;
}

const VmType& type_named(const std::string& name) {
    for (const auto& t : builtin_catalog()) {
        if (t.name == name) return t;
    }
    throw std::runtime_error("unknown type " + name);
}

// Independent re-derivation of the compatibility-per-cost score for the
// throughput-free case, used as an oracle against the engine path.
double oracle_raw(const VmType& t, const ServiceSpec& svc) {
    double m = svc.memory_gb / t.memory_gb;
    double c = static_cast<double>(svc.vcpu) / t.vcpu;
    double s = svc.storage_total_gb() / t.storage.total_gb();
    return ((m + c + s) / 3.0) / t.hour_cost_usd;
}

} // namespace

TEST_CASE("adapted ratio") {
    CHECK(adapted(4.0, 4.0) == doctest::Approx(1.0));
    CHECK(adapted(8.0, 4.0) == doctest::Approx(0.5));
    CHECK(adapted(61.0, 15.0) == doctest::Approx(15.0 / 61.0)); // ~0.2459
    CHECK_THROWS_AS(adapted(2.0, 4.0), internal_error);
    CHECK_THROWS_AS(adapted(2.0, 0.0), internal_error);
}

TEST_CASE("total compatibility") {
    Weights w; // size 0, others 0.25 each
    SUBCASE("worked example") {
        VmInstance inst;
        inst.type = type_named("t2.medium");
        ServiceSpec svc = make_service(1, 2.0, 1, 4.0);
        // memory 2/4, core 1/2, storage 4/4, throughput absent -> mean 2/3
        CHECK(total_compat(inst, svc, w) == doctest::Approx(2.0 / 3.0));
    }
    SUBCASE("exact fit scores 1") {
        VmInstance inst;
        inst.type = type_named("m4.large");
        ServiceSpec svc = make_service(2, 8.0, 1, 32.0);
        CHECK(total_compat(inst, svc, w) == doctest::Approx(1.0));
    }
    SUBCASE("absent attributes are renormalized away") {
        VmInstance inst;
        inst.type = type_named("i3.xlarge");
        ServiceSpec svc = make_service(2, 15.0, 1, 32.0);
        Weights explicit_thirds{0.0, 1.0 / 3, 1.0 / 3, 1.0 / 3, 0.0};
        CHECK(total_compat(inst, svc, w) ==
              doctest::Approx(total_compat(inst, svc, explicit_thirds)));
    }
    SUBCASE("infeasible pairing is a contract violation") {
        VmInstance inst;
        inst.type = type_named("t2.small");
        CHECK_THROWS_AS(total_compat(inst, make_service(2, 4.0, 1, 4.0), w), internal_error);
    }
    SUBCASE("scores stay within the unit interval") {
        Pool pool = one_of_each();
        for (const auto& t : {RequestTemplate::Class1, RequestTemplate::Class2,
                              RequestTemplate::Class3}) {
            for (const auto& svc : template_services(t)) {
                for (const auto& inst : pool.instances) {
                    if (!feasible(inst, svc)) continue;
                    double c = total_compat(inst, svc, w);
                    CHECK(c > 0.0);
                    CHECK(c <= 1.0);
                }
            }
        }
    }
}

TEST_CASE("normalization bounds") {
    Weights w;
    ServiceSpec svc = make_service(2, 4.0, 1, 4.0);
    SUBCASE("frozen extremes over the full catalog") {
        Pool pool = one_of_each();
        NormalizationBounds b = normalization_bounds(pool, svc, w);
        // min: i3.2xlarge, max: the exact-fit t2.medium
        CHECK(b.a_min == doctest::Approx(0.2603775));
        CHECK(b.b_max == doctest::Approx(1.0 / 0.052));
    }
    SUBCASE("matches a brute-force oracle") {
        Pool pool = one_of_each();
        NormalizationBounds b = normalization_bounds(pool, svc, w);
        double lo = 1e300, hi = -1e300;
        for (const auto& inst : pool.instances) {
            if (!feasible(inst, svc)) continue;
            double r = oracle_raw(inst.type, svc);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        CHECK(b.a_min == doctest::Approx(lo).epsilon(1e-12));
        CHECK(b.b_max == doctest::Approx(hi).epsilon(1e-12));
    }
    SUBCASE("singleton pool degenerates") {
        Pool pool = pool_of({"t2.medium"});
        NormalizationBounds b = normalization_bounds(pool, svc, w);
        CHECK(b.a_min == b.b_max);
        CHECK(normalize(b.a_min, b) == 1.0);
    }
    SUBCASE("no feasible instance") {
        Pool pool = pool_of({"t2.small"});
        CHECK_THROWS_AS(normalization_bounds(pool, svc, w), NoFeasibleVm);
    }
}

TEST_CASE("normalize maps the band onto [0,1]") {
    NormalizationBounds b{2.0, 10.0};
    CHECK(normalize(2.0, b) == doctest::Approx(0.0));
    CHECK(normalize(10.0, b) == doctest::Approx(1.0));
    CHECK(normalize(6.0, b) == doctest::Approx(0.5));
    CHECK_THROWS_AS(normalize(1.0, b), std::invalid_argument);
    CHECK_THROWS_AS(normalize(11.0, b), std::invalid_argument);
}

TEST_CASE("performance factor ranks the exact-fit cheapest instance first") {
    Weights w;
    ServiceSpec svc = make_service(2, 4.0, 1, 4.0);
    Pool pool = one_of_each();
    NormalizationBounds b = normalization_bounds(pool, svc, w);
    const VmInstance* best = nullptr;
    double best_rho = -1.0;
    int above_threshold = 0;
    for (const auto& inst : pool.instances) {
        if (!feasible(inst, svc)) continue;
        double rho = perf_factor(inst, svc, w, b).rho;
        CHECK(rho >= 0.0);
        CHECK(rho <= 1.0);
        if (rho >= 0.5) ++above_threshold;
        if (rho > best_rho) {
            best_rho = rho;
            best = &inst;
        }
    }
    REQUIRE(best != nullptr);
    CHECK(best->type.name == "t2.medium");
    CHECK(best_rho == doctest::Approx(1.0));
    CHECK(above_threshold == 1); // a wide margin separates the winner here
}

TEST_CASE("tackle decides distinct assignability") {
    Request req;
    req.services = {make_service(2, 4.0, 1, 4.0), make_service(2, 4.0, 1, 4.0)};
    SUBCASE("one instance cannot host two services") {
        Pool pool = pool_of({"t2.medium", "t2.small"});
        CHECK_FALSE(tackle(pool, req));
    }
    SUBCASE("two feasible instances suffice") {
        Pool pool = pool_of({"t2.medium", "m4.large"});
        CHECK(tackle(pool, req));
    }
    SUBCASE("matching routes around a contended instance") {
        Request class2;
        class2.services = template_services(RequestTemplate::Class2);
        CHECK_FALSE(tackle(pool_of({"t2.medium", "m4.large", "c4.xlarge"}), class2));
        CHECK(tackle(pool_of({"t2.medium", "m4.large", "i3.xlarge"}), class2));
    }
    SUBCASE("allocated instances do not count") {
        Pool pool = pool_of({"t2.medium", "m4.large"});
        pool.instances[0].allocated = true;
        CHECK_FALSE(tackle(pool, req));
    }
}

TEST_CASE("negotiation") {
    Request req;
    req.services = {make_service(2, 4.0, 1, 4.0)};
    SUBCASE("disabled elasticity rejects") {
        Pool pool = pool_of({"t2.small"});
        auto out = negotiate(pool, req, builtin_catalog(), {false, 60.0});
        REQUIRE(std::holds_alternative<RejectionReason>(out));
        CHECK(std::get<RejectionReason>(out) == RejectionReason::ElasticDisabled);
        CHECK(pool.instances.size() == 1);
    }
    SUBCASE("buys the cheapest feasible type") {
        Pool pool = pool_of({"t2.small"});
        auto out = negotiate(pool, req, builtin_catalog(), {true, 60.0});
        REQUIRE(std::holds_alternative<NegotiationOutcome>(out));
        const auto& n = std::get<NegotiationOutcome>(out);
        REQUIRE(n.bought.size() == 1);
        CHECK(pool.find(n.bought[0])->type.name == "t2.medium");
        CHECK(n.delay_s == doctest::Approx(60.0));
        CHECK(tackle(pool, req));
    }
    SUBCASE("already tackleable is a no-op") {
        Pool pool = pool_of({"t2.medium"});
        auto out = negotiate(pool, req, builtin_catalog(), {true, 60.0});
        REQUIRE(std::holds_alternative<NegotiationOutcome>(out));
        CHECK(std::get<NegotiationOutcome>(out).bought.empty());
        CHECK(pool.instances.size() == 1);
    }
    SUBCASE("unservable demand is rejected without purchases") {
        Request huge;
        huge.services = {make_service(1, 128.0, 1, 4.0)};
        Pool pool = pool_of({"t2.small"});
        auto out = negotiate(pool, huge, builtin_catalog(), {true, 60.0});
        REQUIRE(std::holds_alternative<RejectionReason>(out));
        CHECK(std::get<RejectionReason>(out) == RejectionReason::NoFeasibleAssignment);
        CHECK(pool.instances.size() == 1);
    }
}

TEST_CASE("per-service provisioning") {
    LearningParams learning;
    ConvergencePolicy policy;
    Weights w;
    ServiceSpec svc = make_service(2, 4.0, 1, 4.0);
    SUBCASE("single candidate converges to it") {
        Pool pool = pool_of({"t2.medium"});
        Rng rng = make_rng(0);
        auto r = provision_service(pool, svc, w, learning, policy, rng);
        CHECK(r.instance == pool.instances[0].id);
        CHECK(r.rho == doctest::Approx(1.0));
        // A lone action starts at probability 1: converged before any step.
        CHECK(r.iterations == 0);
    }
    SUBCASE("overwhelmingly picks the top-scoring instance") {
        int hits = 0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            Pool pool = one_of_each();
            Rng rng = make_rng(seed, 0x7e57, 0);
            auto r = provision_service(pool, svc, w, learning, policy, rng);
            CHECK(r.iterations <= policy.max_iterations);
            if (pool.find(r.instance)->type.name == "t2.medium") ++hits;
        }
        CHECK(hits >= 95);
    }
    SUBCASE("no candidate throws") {
        Pool pool = pool_of({"t2.small"});
        Rng rng = make_rng(0);
        CHECK_THROWS_AS(provision_service(pool, svc, w, learning, policy, rng),
                        NoFeasibleVm);
    }
    SUBCASE("tracing records one row per learning step") {
        Pool pool = one_of_each();
        Rng rng = make_rng(4);
        auto r = provision_service(pool, svc, w, learning, policy, rng, true);
        CHECK(r.trace.size() == r.iterations);
        for (std::size_t k = 0; k < r.trace.size(); ++k) {
            CHECK(r.trace[k].iteration == k + 1);
            CHECK(r.trace[k].max_prob <= 1.0);
        }
    }
}

TEST_CASE("whole-request provisioning") {
    EngineParams params;
    NegotiationConfig rigid{false, 60.0};
    auto rng_factory = [](std::uint64_t seed) {
        return [seed](std::size_t svc_idx) { return make_rng(seed, 1, svc_idx + 1); };
    };
    Request class1;
    class1.app_id = "app-0";
    class1.services = template_services(RequestTemplate::Class1);

    SUBCASE("services land on distinct instances") {
        Pool pool = one_of_each();
        auto out = provision(pool, class1, "0", builtin_catalog(), params, rigid,
                             rng_factory(0));
        REQUIRE(std::holds_alternative<Allocation>(out));
        const auto& alloc = std::get<Allocation>(out);
        REQUIRE(alloc.pairs.size() == 2);
        CHECK(alloc.pairs[0].second != alloc.pairs[1].second);
        CHECK(alloc.rho_per_service.size() == 2);
        CHECK(alloc.request_rho ==
              doctest::Approx(alloc.rho_per_service[0] + alloc.rho_per_service[1]));
        for (const auto& [svc_idx, inst_id] : alloc.pairs) {
            const VmInstance* inst = pool.find(inst_id);
            CHECK(inst->allocated);
            CHECK(inst->allocated_request == "0");
        }
    }
    SUBCASE("deterministic under the same stream factory") {
        Pool p1 = one_of_each(), p2 = one_of_each();
        auto a = provision(p1, class1, "0", builtin_catalog(), params, rigid, rng_factory(7));
        auto b = provision(p2, class1, "0", builtin_catalog(), params, rigid, rng_factory(7));
        REQUIRE(std::holds_alternative<Allocation>(a));
        REQUIRE(std::holds_alternative<Allocation>(b));
        CHECK(std::get<Allocation>(a).pairs == std::get<Allocation>(b).pairs);
    }
    SUBCASE("rejection leaves the pool untouched") {
        Request twice;
        twice.services = {make_service(2, 4.0, 1, 4.0), make_service(2, 4.0, 1, 4.0)};
        Pool pool = pool_of({"t2.medium", "t2.small"});
        auto snapshot = [](const Pool& p) {
            std::vector<std::tuple<InstanceId, std::string, bool>> s;
            for (const auto& i : p.instances) s.emplace_back(i.id, i.type.name, i.allocated);
            return s;
        };
        auto before = snapshot(pool);
        InstanceId next_before = pool.next_id;
        auto out = provision(pool, twice, "0", builtin_catalog(), params, rigid,
                             rng_factory(0));
        REQUIRE(std::holds_alternative<Rejection>(out));
        CHECK(std::get<Rejection>(out).reason == RejectionReason::ElasticDisabled);
        CHECK(snapshot(pool) == before);
        CHECK(pool.next_id == next_before);
    }
    SUBCASE("elastic rejection of an unservable request rolls purchases back") {
        Request mixed;
        mixed.services = {make_service(2, 4.0, 1, 4.0), make_service(1, 128.0, 1, 4.0)};
        Pool pool = pool_of({"t2.small"});
        NegotiationConfig elastic{true, 60.0};
        auto out = provision(pool, mixed, "0", builtin_catalog(), params, elastic,
                             rng_factory(0));
        REQUIRE(std::holds_alternative<Rejection>(out));
        CHECK(std::get<Rejection>(out).reason == RejectionReason::NoFeasibleAssignment);
        CHECK(pool.instances.size() == 1);
        CHECK(pool.next_id == 1);
        CHECK(pool.available_count() == 1);
    }
    SUBCASE("elastic path buys what the pool lacks") {
        Pool pool = pool_of({"t2.small"});
        NegotiationConfig elastic{true, 60.0};
        auto out = provision(pool, class1, "0", builtin_catalog(), params, elastic,
                             rng_factory(0));
        REQUIRE(std::holds_alternative<Allocation>(out));
        const auto& alloc = std::get<Allocation>(out);
        REQUIRE(alloc.negotiation.has_value());
        CHECK(!alloc.negotiation->bought.empty());
        CHECK(alloc.negotiation->delay_s ==
              doctest::Approx(60.0 * static_cast<double>(alloc.negotiation->bought.size())));
    }
    SUBCASE("class presets select the weighting") {
        Request data = class1;
        data.app_class = AppClass::DataIntensive;
        Pool pool = one_of_each();
        // Just exercises the preset path end to end.
        auto out = provision(pool, data, "0", builtin_catalog(), params, rigid,
                             rng_factory(3));
        CHECK(std::holds_alternative<Allocation>(out));
    }
}

TEST_CASE("request performance is the plain sum") {
    CHECK(request_perf({0.5, 0.25}) == doctest::Approx(0.75));
    CHECK(request_perf({1.0}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(request_perf({}), std::invalid_argument);
}

TEST_CASE("provisioning properties over the demand classes") {
    EngineParams params;
    NegotiationConfig rigid{false, 60.0};
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        for (RequestTemplate t : {RequestTemplate::Class1, RequestTemplate::Class2}) {
            Request req;
            req.services = template_services(t);
            Pool pool = one_of_each();
            auto out = provision(pool, req, "0", builtin_catalog(), params, rigid,
                                 [seed](std::size_t s) { return make_rng(seed, 1, s + 1); });
            REQUIRE(std::holds_alternative<Allocation>(out));
            const auto& alloc = std::get<Allocation>(out);
            std::set<InstanceId> distinct;
            for (const auto& [svc_idx, inst_id] : alloc.pairs) distinct.insert(inst_id);
            CHECK(distinct.size() == req.services.size());
            for (double rho : alloc.rho_per_service) {
                CHECK(rho >= 0.0);
                CHECK(rho <= 1.0);
            }
            for (std::size_t it : alloc.iterations_per_service) {
                CHECK(it <= params.convergence.max_iterations);
            }
        }
    }
}
