#ifndef ORPSIM_WORKLOAD_HPP
#define ORPSIM_WORKLOAD_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "orpsim/common.hpp"
#include "orpsim/csv.hpp"

namespace orpsim {

enum class AppClass { Normal, DataIntensive, ProcessIntensive, Unclassified };

inline std::string to_string(AppClass c) {
    switch (c) {
        case AppClass::Normal: return "normal";
        case AppClass::DataIntensive: return "data-intensive";
        case AppClass::ProcessIntensive: return "process-intensive";
        case AppClass::Unclassified: return "unclassified";
    }
    return "unclassified";
}

inline AppClass app_class_from_string(const std::string& s) {
    if (s == "normal") return AppClass::Normal;
    if (s == "data-intensive") return AppClass::DataIntensive;
    if (s == "process-intensive") return AppClass::ProcessIntensive;
    if (s == "unclassified") return AppClass::Unclassified;
    throw validation_error("unknown app class: " + s);
}

// One deployable constituent of an application, hosted on exactly one VM.
struct ServiceSpec {
    std::uint32_t vcpu = 1;
    double memory_gb = 0.0;
    std::uint32_t volume_count = 1;
    double volume_gb = 0.0;
    std::optional<double> throughput_kbps;
    std::optional<std::uint32_t> size_rank;

    double storage_total_gb() const { return volume_count * volume_gb; }

    void validate() const {
        if (vcpu < 1) throw validation_error("service: vcpu must be >= 1");
        if (!(memory_gb > 0.0)) throw validation_error("service: memory must be > 0");
        if (!(storage_total_gb() > 0.0)) throw validation_error("service: storage must be > 0");
        if (throughput_kbps && !(*throughput_kbps > 0.0)) {
            throw validation_error("service: throughput must be > 0");
        }
        if (size_rank && *size_rank < 1) {
            throw validation_error("service: size rank must be >= 1");
        }
    }

    bool operator==(const ServiceSpec&) const = default;
};

struct Request {
    std::string app_id;
    std::vector<ServiceSpec> services;
    std::optional<double> deadline_s; // carried through, never enforced
    AppClass app_class = AppClass::Unclassified;

    void validate() const {
        if (services.empty()) throw validation_error("request: needs at least one service");
        for (const auto& s : services) s.validate();
    }

    bool operator==(const Request&) const = default;
};

struct Workload {
    std::vector<Request> requests;
    std::string source;

    bool operator==(const Workload& other) const { return requests == other.requests; }
};

// Request class templates: demand rows of the small/medium/high classes and
// the three application-type workloads.
enum class RequestTemplate { Class1, Class2, Class3, Normal, DataIntensive, ProcessIntensive };

inline RequestTemplate request_template_from_string(const std::string& s) {
    if (s == "class1") return RequestTemplate::Class1;
    if (s == "class2") return RequestTemplate::Class2;
    if (s == "class3") return RequestTemplate::Class3;
    if (s == "normal") return RequestTemplate::Normal;
    if (s == "data") return RequestTemplate::DataIntensive;
    if (s == "process") return RequestTemplate::ProcessIntensive;
    throw validation_error("unknown request template: " + s);
}

inline ServiceSpec make_service(std::uint32_t vcpu, double memory_gb,
                                std::uint32_t volume_count, double volume_gb) {
    ServiceSpec s;
    s.vcpu = vcpu;
    s.memory_gb = memory_gb;
    s.volume_count = volume_count;
    s.volume_gb = volume_gb;
    return s;
}

inline const std::vector<ServiceSpec>& template_services(RequestTemplate t) {
    static const std::vector<ServiceSpec> kClass1 = {
        make_service(1, 1.0, 1, 4.0), make_service(1, 4.0, 1, 4.0)};
    static const std::vector<ServiceSpec> kClass2 = {
        make_service(2, 4.0, 1, 4.0), make_service(2, 8.0, 1, 32.0),
        make_service(4, 8.0, 2, 40.0)};
    static const std::vector<ServiceSpec> kClass3 = {
        make_service(2, 15.0, 2, 32.0), make_service(4, 15.0, 2, 80.0),
        make_service(4, 30.0, 1, 32.0), make_service(8, 15.0, 1, 32.0),
        make_service(8, 30.0, 1, 80.0)};
    static const std::vector<ServiceSpec> kData = {
        make_service(1, 15.0, 2, 40.0), make_service(1, 30.0, 1, 32.0),
        make_service(2, 60.0, 1, 80.0)};
    static const std::vector<ServiceSpec> kProcess = {
        make_service(4, 2.0, 1, 4.0), make_service(8, 4.0, 1, 4.0),
        make_service(8, 8.0, 2, 16.0)};
    static const std::vector<ServiceSpec> kNormal = {
        make_service(1, 4.0, 1, 4.0), make_service(2, 8.0, 1, 32.0),
        make_service(4, 15.0, 2, 80.0)};
    switch (t) {
        case RequestTemplate::Class1: return kClass1;
        case RequestTemplate::Class2: return kClass2;
        case RequestTemplate::Class3: return kClass3;
        case RequestTemplate::DataIntensive: return kData;
        case RequestTemplate::ProcessIntensive: return kProcess;
        case RequestTemplate::Normal: return kNormal;
    }
    return kClass1;
}

inline AppClass template_app_class(RequestTemplate t) {
    switch (t) {
        case RequestTemplate::Normal: return AppClass::Normal;
        case RequestTemplate::DataIntensive: return AppClass::DataIntensive;
        case RequestTemplate::ProcessIntensive: return AppClass::ProcessIntensive;
        default: return AppClass::Unclassified;
    }
}

struct SyntheticSpec {
    std::size_t count = 50;
    std::vector<std::pair<RequestTemplate, double>> mix; // weights, must sum to 1
};

constexpr std::size_t kAppIdCycle = 20;

inline Workload generate_synthetic(const SyntheticSpec& spec, Rng& rng) {
    if (spec.count < 1) throw std::invalid_argument("generate_synthetic: count must be >= 1");
    if (spec.mix.empty()) throw std::invalid_argument("generate_synthetic: empty mix");
    double wsum = 0.0;
    for (const auto& [t, w] : spec.mix) {
        if (w < 0.0) throw std::invalid_argument("generate_synthetic: negative mix weight");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-9) {
        throw std::invalid_argument("generate_synthetic: mix weights must sum to 1");
    }
    std::vector<double> weights;
    for (const auto& [t, w] : spec.mix) weights.push_back(w);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());

    Workload w;
    w.source = "synthetic";
    w.requests.reserve(spec.count);
    for (std::size_t k = 0; k < spec.count; ++k) {
        RequestTemplate t = spec.mix[pick(rng)].first;
        Request req;
        req.app_id = "app-" + std::to_string(k % kAppIdCycle);
        req.services = template_services(t);
        req.app_class = template_app_class(t);
        req.validate();
        w.requests.push_back(std::move(req));
    }
    return w;
}

// ---------------------------------------------------------------------------
// Trace ingestion (GWA-T-12 Bitbrains-style per-VM metric files)
// ---------------------------------------------------------------------------

struct IngestConfig {
    char delimiter = ';';
    double percentile = 95.0;
    std::size_t services_min = 1;
    std::size_t services_max = 5;
    bool lenient = true;
    // Traces carry no storage capacity; demand is assigned by memory class.
    double small_memory_cutoff_gb = 8.0;
    double large_memory_cutoff_gb = 16.0;
};

// One trace file summarized into a single service demand.
inline ServiceSpec summarize_trace(const std::filesystem::path& file,
                                   const IngestConfig& cfg,
                                   std::ostream* warnings = nullptr) {
    auto rows = csv::read_file(file, cfg.delimiter);
    if (rows.size() < 2) {
        throw validation_error("trace file has no data rows: " + file.string());
    }
    std::map<std::string, std::size_t> col;
    for (std::size_t c = 0; c < rows[0].size(); ++c) {
        col[csv::strip(rows[0][c])] = c;
    }
    auto need = [&](const char* name) -> std::size_t {
        auto it = col.find(name);
        if (it == col.end()) {
            throw validation_error(std::string("trace missing column '") + name +
                                   "': " + file.string());
        }
        return it->second;
    };
    std::size_t c_cores = need("CPU cores");
    std::size_t c_mem = need("Memory capacity provisioned [KB]");
    auto it_rx = col.find("Network received throughput [KB/s]");
    auto it_tx = col.find("Network transmitted throughput [KB/s]");

    double max_cores = 0.0;
    std::vector<double> mem_kb;
    std::vector<double> net_kbps;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        try {
            if (row.size() <= std::max(c_cores, c_mem)) {
                throw validation_error("short row");
            }
            double cores = std::stod(row[c_cores]);
            double mem = std::stod(row[c_mem]);
            max_cores = std::max(max_cores, cores);
            mem_kb.push_back(mem);
            if (it_rx != col.end() && it_tx != col.end() &&
                row.size() > std::max(it_rx->second, it_tx->second)) {
                net_kbps.push_back(std::stod(row[it_rx->second]) +
                                   std::stod(row[it_tx->second]));
            }
        } catch (const std::exception& e) {
            if (cfg.lenient) {
                if (warnings) {
                    *warnings << "warning: " << file.string() << ":" << (r + 1)
                              << ": skipping unparseable row (" << e.what() << ")\n";
                }
                continue;
            }
            throw validation_error(file.string() + ":" + std::to_string(r + 1) +
                                   ": unparseable row (" + e.what() + ")");
        }
    }
    if (mem_kb.empty() || max_cores < 1.0) {
        throw validation_error("trace yields no usable rows: " + file.string());
    }

    ServiceSpec svc;
    svc.vcpu = static_cast<std::uint32_t>(max_cores);
    svc.memory_gb = percentile(mem_kb, cfg.percentile) / (1024.0 * 1024.0);
    if (!net_kbps.empty()) {
        double tp = percentile(net_kbps, cfg.percentile);
        if (tp > 0.0) svc.throughput_kbps = tp;
    }
    if (svc.memory_gb < cfg.small_memory_cutoff_gb) {
        svc.volume_count = 1;
        svc.volume_gb = 4.0;
    } else if (svc.memory_gb <= cfg.large_memory_cutoff_gb) {
        svc.volume_count = 1;
        svc.volume_gb = 32.0;
    } else {
        svc.volume_count = 1;
        svc.volume_gb = 80.0;
    }
    svc.validate();
    return svc;
}

// Files ordered by name; consecutive service demands grouped into requests
// with the per-request service count drawn from cfg.
inline Workload ingest_traces(const std::filesystem::path& dir, const IngestConfig& cfg,
                              Rng& rng, std::ostream* warnings = nullptr) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        throw std::invalid_argument("ingest_traces: not a directory: " + dir.string());
    }
    if (cfg.services_min < 1 || cfg.services_min > cfg.services_max) {
        throw std::invalid_argument("ingest_traces: bad services-per-request range");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw std::invalid_argument("ingest_traces: empty directory: " + dir.string());
    }

    std::vector<ServiceSpec> specs;
    for (const auto& f : files) {
        specs.push_back(summarize_trace(f, cfg, warnings));
    }

    std::uniform_int_distribution<std::size_t> sdist(cfg.services_min, cfg.services_max);
    Workload w;
    w.source = "trace:" + dir.string();
    std::size_t k = 0;
    std::size_t idx = 0;
    while (idx < specs.size()) {
        std::size_t s = std::min(sdist(rng), specs.size() - idx);
        Request req;
        req.app_id = "app-" + std::to_string(k % kAppIdCycle);
        req.services.assign(specs.begin() + static_cast<std::ptrdiff_t>(idx),
                            specs.begin() + static_cast<std::ptrdiff_t>(idx + s));
        req.app_class = AppClass::Unclassified;
        req.validate();
        w.requests.push_back(std::move(req));
        idx += s;
        ++k;
    }
    return w;
}

// ---------------------------------------------------------------------------
// Workload CSV round-trip
// ---------------------------------------------------------------------------

inline std::string save_workload_csv(const Workload& w) {
    std::string out =
        "request_id,app_id,app_class,service_index,vcpu,memory_gb,volume_count,"
        "volume_gb,throughput_kbps,deadline_s\n";
    for (std::size_t r = 0; r < w.requests.size(); ++r) {
        const Request& req = w.requests[r];
        for (std::size_t s = 0; s < req.services.size(); ++s) {
            const ServiceSpec& svc = req.services[s];
            out += std::to_string(r) + ',' + req.app_id + ',' + to_string(req.app_class) +
                   ',' + std::to_string(s) + ',' + std::to_string(svc.vcpu) + ',' +
                   format_double(svc.memory_gb) + ',' + std::to_string(svc.volume_count) +
                   ',' + format_double(svc.volume_gb) + ',' +
                   (svc.throughput_kbps ? format_double(*svc.throughput_kbps)
                                        : std::string()) +
                   ',' +
                   (req.deadline_s ? format_double(*req.deadline_s) : std::string()) +
                   '\n';
        }
    }
    return out;
}

inline void save_workload(const Workload& w, const std::filesystem::path& path) {
    csv::write_atomic(path, save_workload_csv(w));
}

inline Workload load_workload(const std::filesystem::path& path) {
    auto rows = csv::read_file(path);
    if (rows.empty()) {
        throw validation_error("workload file is empty: " + path.string());
    }
    const std::string header =
        "request_id,app_id,app_class,service_index,vcpu,memory_gb,volume_count,"
        "volume_gb,throughput_kbps,deadline_s";
    {
        std::string got;
        for (std::size_t c = 0; c < rows[0].size(); ++c) {
            if (c) got += ',';
            got += csv::strip(rows[0][c]);
        }
        if (got != header) {
            throw validation_error("workload header mismatch in " + path.string());
        }
    }
    Workload w;
    w.source = "file:" + path.string();
    std::optional<std::size_t> current;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != 10) {
            throw validation_error("workload row " + std::to_string(r) +
                                   ": wrong field count");
        }
        try {
            std::size_t req_id = std::stoul(row[0]);
            std::size_t svc_idx = std::stoul(row[3]);
            if (!current || *current != req_id) {
                if (svc_idx != 0) {
                    throw validation_error("service_index must start at 0");
                }
                if (current && req_id != *current + 1) {
                    throw validation_error("request rows must be contiguous");
                }
                if (!current && req_id != 0) {
                    throw validation_error("request ids must start at 0");
                }
                current = req_id;
                Request req;
                req.app_id = csv::strip(row[1]);
                req.app_class = app_class_from_string(csv::strip(row[2]));
                std::string dl = csv::strip(row[9]);
                if (!dl.empty()) req.deadline_s = std::stod(dl);
                w.requests.push_back(std::move(req));
            } else if (svc_idx != w.requests.back().services.size()) {
                throw validation_error("service_index must ascend from 0");
            }
            ServiceSpec svc;
            svc.vcpu = static_cast<std::uint32_t>(std::stoul(row[4]));
            svc.memory_gb = std::stod(row[5]);
            svc.volume_count = static_cast<std::uint32_t>(std::stoul(row[6]));
            svc.volume_gb = std::stod(row[7]);
            std::string tp = csv::strip(row[8]);
            if (!tp.empty()) svc.throughput_kbps = std::stod(tp);
            svc.validate();
            w.requests.back().services.push_back(svc);
        } catch (const validation_error& e) {
            throw validation_error("workload row " + std::to_string(r) + ": " + e.what());
        } catch (const std::exception& e) {
            throw validation_error("workload row " + std::to_string(r) +
                                   ": unparseable field (" + e.what() + ")");
        }
    }
    if (w.requests.empty()) {
        throw validation_error("workload has no requests: " + path.string());
    }
    for (const auto& req : w.requests) req.validate();
    return w;
}

} // namespace orpsim

#endif
