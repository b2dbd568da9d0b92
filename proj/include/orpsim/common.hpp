#ifndef ORPSIM_COMMON_HPP
#define ORPSIM_COMMON_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace orpsim {

// Raised when an input file cannot be read or written.
class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised when parsed data violates a schema or a domain invariant.
class validation_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised when an engine-internal contract is broken (a bug, not bad input).
class internal_error : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic sub-stream derivation: one master seed, independent streams
// per (request, service) so that adding observers never perturbs a run.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream_a = 0,
                    std::uint64_t stream_b = 0) {
    std::uint64_t s = splitmix64(seed);
    s = splitmix64(s ^ (stream_a * 0x9e3779b97f4a7c15ULL + 1));
    s = splitmix64(s ^ (stream_b * 0xd1b54a32d192ed03ULL + 2));
    return Rng(s);
}

// Shortest decimal representation that round-trips through parsing.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Nearest-rank percentile on a copy of the input; pct in [0,100].
inline double percentile(std::vector<double> values, double pct) {
    if (values.empty()) {
        throw std::invalid_argument("percentile: empty input");
    }
    if (pct < 0.0 || pct > 100.0) {
        throw std::invalid_argument("percentile: pct outside [0,100]");
    }
    std::sort(values.begin(), values.end());
    if (pct == 0.0) {
        return values.front();
    }
    auto n = static_cast<std::size_t>(values.size());
    auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(n)));
    if (rank == 0) rank = 1;
    if (rank > n) rank = n;
    return values[rank - 1];
}

inline double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

inline double stddev_of(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    double m = mean_of(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

} // namespace orpsim

#endif
