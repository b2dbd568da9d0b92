#ifndef ORPSIM_CATALOG_HPP
#define ORPSIM_CATALOG_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "orpsim/common.hpp"
#include "orpsim/csv.hpp"
#include "orpsim/workload.hpp"

namespace orpsim {

struct StorageSpec {
    std::uint32_t volume_count = 1;
    double volume_gb = 0.0;

    double total_gb() const { return volume_count * volume_gb; }
};

// size_rank is derived from the vcpu count: 1->1, 2->2, 4->3, 8->4.
inline std::uint32_t size_rank_for_vcpu(std::uint32_t vcpu) {
    if (vcpu >= 8) return 4;
    if (vcpu >= 4) return 3;
    if (vcpu >= 2) return 2;
    return 1;
}

struct VmType {
    std::string name;
    std::uint32_t vcpu = 1;
    double memory_gb = 0.0;
    StorageSpec storage;
    std::optional<double> throughput_kbps;
    double hour_cost_usd = 0.0;
    std::uint32_t size_rank = 1;

    void validate() const {
        if (vcpu < 1) throw validation_error("vm type '" + name + "': vcpu must be >= 1");
        if (!(memory_gb > 0.0)) throw validation_error("vm type '" + name + "': memory must be > 0");
        if (!(storage.total_gb() > 0.0)) {
            throw validation_error("vm type '" + name + "': storage must be > 0");
        }
        if (throughput_kbps && !(*throughput_kbps > 0.0)) {
            throw validation_error("vm type '" + name + "': throughput must be > 0");
        }
        if (!(hour_cost_usd > 0.0)) {
            throw validation_error("vm type '" + name + "': hour cost must be > 0");
        }
    }
};

inline VmType make_vm_type(std::string name, std::uint32_t vcpu, double memory_gb,
                           std::uint32_t volume_count, double volume_gb,
                           double hour_cost_usd,
                           std::optional<double> throughput_kbps = std::nullopt) {
    VmType t{std::move(name), vcpu, memory_gb, {volume_count, volume_gb},
             throughput_kbps, hour_cost_usd, size_rank_for_vcpu(vcpu)};
    t.validate();
    return t;
}

// Amazon EC2 instance catalog (Feb 2017 prices, Windows usage).
inline const std::vector<VmType>& builtin_catalog() {
    static const std::vector<VmType> kCatalog = {
        make_vm_type("t2.small", 1, 2.0, 1, 4.0, 0.026),
        make_vm_type("t2.medium", 2, 4.0, 1, 4.0, 0.052),
        make_vm_type("m3.medium", 1, 3.75, 1, 4.0, 0.070),
        make_vm_type("m4.large", 2, 8.0, 1, 32.0, 0.1041),
        make_vm_type("c3.large", 2, 3.75, 2, 16.0, 0.141),
        make_vm_type("c4.xlarge", 4, 7.5, 2, 40.0, 0.2067),
        make_vm_type("c4.2xlarge", 8, 15.0, 2, 80.0, 0.412),
        make_vm_type("r3.large", 2, 15.0, 1, 32.0, 0.175),
        make_vm_type("i3.large", 2, 15.25, 1, 32.0, 0.109),
        make_vm_type("i3.xlarge", 4, 30.5, 1, 80.0, 0.218),
        make_vm_type("i3.2xlarge", 8, 61.0, 1, 160.0, 0.436),
    };
    return kCatalog;
}

// Schema: name,vcpu,memory_gb,volume_count,volume_gb,throughput_kbps,hour_cost_usd
// An empty throughput field means the attribute is absent.
inline std::vector<VmType> load_catalog(const std::filesystem::path& path) {
    auto rows = csv::read_file(path);
    if (rows.empty()) {
        throw validation_error("catalog file is empty: " + path.string());
    }
    const std::vector<std::string> expected = {
        "name", "vcpu", "memory_gb", "volume_count",
        "volume_gb", "throughput_kbps", "hour_cost_usd"};
    if (rows[0].size() != expected.size()) {
        throw validation_error("catalog header mismatch in " + path.string());
    }
    for (std::size_t c = 0; c < expected.size(); ++c) {
        if (csv::strip(rows[0][c]) != expected[c]) {
            throw validation_error("catalog header mismatch in " + path.string() +
                                   ": expected column '" + expected[c] + "'");
        }
    }
    std::vector<VmType> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != expected.size()) {
            throw validation_error("catalog row " + std::to_string(r) +
                                   ": wrong field count");
        }
        try {
            std::string tp = csv::strip(row[5]);
            std::optional<double> throughput;
            if (!tp.empty()) throughput = std::stod(tp);
            out.push_back(make_vm_type(
                csv::strip(row[0]), static_cast<std::uint32_t>(std::stoul(row[1])),
                std::stod(row[2]), static_cast<std::uint32_t>(std::stoul(row[3])),
                std::stod(row[4]), std::stod(row[6]), throughput));
        } catch (const validation_error& e) {
            throw validation_error("catalog row " + std::to_string(r) + ": " + e.what());
        } catch (const std::exception& e) {
            throw validation_error("catalog row " + std::to_string(r) +
                                   ": unparseable field (" + e.what() + ")");
        }
    }
    return out;
}

inline std::string save_catalog_csv(const std::vector<VmType>& types) {
    std::string out = "name,vcpu,memory_gb,volume_count,volume_gb,throughput_kbps,hour_cost_usd\n";
    for (const auto& t : types) {
        out += t.name + ',' + std::to_string(t.vcpu) + ',' + format_double(t.memory_gb) +
               ',' + std::to_string(t.storage.volume_count) + ',' +
               format_double(t.storage.volume_gb) + ',' +
               (t.throughput_kbps ? format_double(*t.throughput_kbps) : std::string()) +
               ',' + format_double(t.hour_cost_usd) + '\n';
    }
    return out;
}

using InstanceId = std::uint64_t;

struct VmInstance {
    InstanceId id = 0;
    VmType type;
    bool allocated = false;
    std::string allocated_request;     // valid when allocated
    std::size_t allocated_service = 0; // valid when allocated
};

struct Pool {
    std::vector<VmInstance> instances;
    std::string owner = "provider-0";
    InstanceId next_id = 0;

    InstanceId add(const VmType& type) {
        VmInstance inst;
        inst.id = next_id++;
        inst.type = type;
        instances.push_back(std::move(inst));
        return instances.back().id;
    }

    VmInstance* find(InstanceId id) {
        for (auto& inst : instances) {
            if (inst.id == id) return &inst;
        }
        return nullptr;
    }

    const VmInstance* find(InstanceId id) const {
        for (const auto& inst : instances) {
            if (inst.id == id) return &inst;
        }
        return nullptr;
    }

    std::size_t available_count() const {
        std::size_t n = 0;
        for (const auto& inst : instances) {
            if (!inst.allocated) ++n;
        }
        return n;
    }
};

struct PoolSpec {
    std::size_t min_size = 20;
    std::size_t max_size = 50;
};

// Pool size uniform in [min,max]; types drawn uniformly from the catalog.
inline Pool spawn_pool(const std::vector<VmType>& catalog, const PoolSpec& spec, Rng& rng) {
    if (catalog.empty()) {
        throw std::invalid_argument("spawn_pool: empty catalog");
    }
    if (spec.min_size > spec.max_size) {
        throw std::invalid_argument("spawn_pool: min_size > max_size");
    }
    std::uniform_int_distribution<std::size_t> size_dist(spec.min_size, spec.max_size);
    std::uniform_int_distribution<std::size_t> type_dist(0, catalog.size() - 1);
    std::size_t n = size_dist(rng);
    Pool pool;
    pool.instances.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        pool.add(catalog[type_dist(rng)]);
    }
    return pool;
}

// Capacity check of one instance against one service demand. Allocated
// instances are never feasible. Throughput participates only when both
// sides state it.
inline bool feasible(const VmInstance& inst, const ServiceSpec& svc) {
    if (inst.allocated) return false;
    const VmType& t = inst.type;
    if (t.vcpu < svc.vcpu) return false;
    if (t.memory_gb < svc.memory_gb) return false;
    if (t.storage.total_gb() < svc.storage_total_gb()) return false;
    if (svc.throughput_kbps && t.throughput_kbps &&
        *t.throughput_kbps < *svc.throughput_kbps) {
        return false;
    }
    return true;
}

inline bool feasible_type(const VmType& t, const ServiceSpec& svc) {
    VmInstance tmp;
    tmp.type = t;
    return feasible(tmp, svc);
}

} // namespace orpsim

#endif
