#pragma once

// Synthetic datasets, query workloads, and their on-disk formats.
//
// Binary dataset layout (little-endian):
//   [0, 8)   magic "MDLBENCH"
//   [8, 16)  u64 point count n
//   [16, 24) u64 dimension d
//   [24, 32) reserved, zero
//   then n * d IEEE-754 doubles, point by point.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mdli/core.hpp"

namespace mdli {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Distribution { Uniform, Normal, Lognormal };

inline std::string to_string(Distribution d)
{
    switch (d) {
    case Distribution::Uniform: return "uniform";
    case Distribution::Normal: return "normal";
    case Distribution::Lognormal: return "lognormal";
    }
    return "unknown";
}

inline Distribution parse_distribution(std::string_view s)
{
    if (s == "uniform") return Distribution::Uniform;
    if (s == "normal") return Distribution::Normal;
    if (s == "lognormal") return Distribution::Lognormal;
    throw ContractError("unknown distribution: " + std::string(s));
}

struct DatasetSpec {
    Distribution distribution = Distribution::Uniform;
    std::size_t n = 0;
    std::size_t d = 2;
    std::uint64_t seed = 1;
    // uniform on [uniform_lo, uniform_hi); normal(normal_mean, normal_stddev); lognormal(log_mean, log_sigma)
    double uniform_lo = 0.0;
    double uniform_hi = 1.0;
    double normal_mean = 0.5;
    double normal_stddev = 0.15;
    double log_mean = 0.0;
    double log_sigma = 0.6;
};

/// I.i.d. samples per coordinate; a pure function of `spec`.
inline Dataset gen_dataset(const DatasetSpec& spec)
{
    require(spec.n >= 1, "dataset size must be positive");
    require(spec.d >= 2, "dataset dimension must be at least 2");
    std::mt19937_64 rng(spec.seed);
    std::vector<double> coords(spec.n * spec.d);
    switch (spec.distribution) {
    case Distribution::Uniform: {
        require(spec.uniform_lo < spec.uniform_hi, "uniform range is empty");
        std::uniform_real_distribution<double> dist(spec.uniform_lo, spec.uniform_hi);
        for (double& c : coords) c = dist(rng);
        break;
    }
    case Distribution::Normal: {
        require(spec.normal_stddev > 0, "normal stddev must be positive");
        std::normal_distribution<double> dist(spec.normal_mean, spec.normal_stddev);
        for (double& c : coords) c = dist(rng);
        break;
    }
    case Distribution::Lognormal: {
        require(spec.log_sigma > 0, "lognormal sigma must be positive");
        std::lognormal_distribution<double> dist(spec.log_mean, spec.log_sigma);
        for (double& c : coords) c = dist(rng);
        break;
    }
    }
    return Dataset(spec.d, std::move(coords));
}

struct RangeWorkload {
    std::vector<RangeBox> boxes;
    std::vector<double> selectivity;  ///< realized fraction of points inside each box
    std::vector<double> target;       ///< generation target per box; empty when loaded from disk

    friend bool operator==(const RangeWorkload&, const RangeWorkload&) = default;
};

struct KnnWorkload {
    std::vector<KnnQuery> queries;
    friend bool operator==(const KnnWorkload&, const KnnWorkload&) = default;
};

inline const std::vector<double>& default_selectivities()
{
    static const std::vector<double> v{1e-4, 1e-3, 1e-2, 1e-1};
    return v;
}

inline const std::vector<std::size_t>& default_knn_ks()
{
    static const std::vector<std::size_t> v{1, 10, 100, 1000, 10000};
    return v;
}

/// Boxes anchored at sampled data points. Query i aims at targets[i % targets.size()];
/// each side is target^(1/d) of the data extent times a U[0.5, 2] jitter.
inline RangeWorkload gen_range_queries(const Dataset& ds, std::size_t count, const std::vector<double>& targets,
                                       std::uint64_t seed)
{
    require(count >= 1, "workload needs at least one query");
    require(!targets.empty(), "workload needs at least one selectivity target");
    for (double t : targets) require(t > 0 && t <= 1, "selectivity targets must lie in (0, 1]");
    const std::size_t d = ds.dim();
    auto [lo, hi] = ds.bounds();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, ds.size() - 1);
    std::uniform_real_distribution<double> jitter(0.5, 2.0);

    RangeWorkload w;
    for (std::size_t i = 0; i < count; ++i) {
        const double target = targets[i % targets.size()];
        const auto corner = ds.point(pick(rng));
        Point qlo(corner.begin(), corner.end());
        Point qhi(d);
        const double side = std::pow(target, 1.0 / static_cast<double>(d));
        for (std::size_t j = 0; j < d; ++j) qhi[j] = qlo[j] + side * (hi[j] - lo[j]) * jitter(rng);
        RangeBox box(std::move(qlo), std::move(qhi));
        w.selectivity.push_back(selectivity(ds, box));
        w.boxes.push_back(std::move(box));
        w.target.push_back(target);
    }
    return w;
}

/// `count` query points per k, sampled from the dataset.
inline KnnWorkload gen_knn_queries(const Dataset& ds, std::size_t count, const std::vector<std::size_t>& ks,
                                   std::uint64_t seed)
{
    require(count >= 1, "workload needs at least one query per k");
    for (std::size_t k : ks) require(k >= 1 && k <= ds.size(), "knn needs 1 <= k <= N");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, ds.size() - 1);
    KnnWorkload w;
    for (std::size_t k : ks) {
        for (std::size_t i = 0; i < count; ++i) {
            const auto p = ds.point(pick(rng));
            w.queries.emplace_back(Point(p.begin(), p.end()), k);
        }
    }
    return w;
}

// ---------------------------------------------------------------------------
// Binary dataset files

inline constexpr std::array<char, 8> kDatasetMagic{'M', 'D', 'L', 'B', 'E', 'N', 'C', 'H'};
inline constexpr std::size_t kDatasetHeaderBytes = 32;

namespace detail {

inline void put_u64(std::string& out, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline std::uint64_t get_u64(const unsigned char* p)
{
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s)
{
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw FormatError("not a number: '" + s + "'");
    return v;
}

inline std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, ',')) {
        while (!cur.empty() && (cur.back() == '\r' || cur.back() == ' ')) cur.pop_back();
        while (!cur.empty() && cur.front() == ' ') cur.erase(cur.begin());
        out.push_back(cur);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("short write to " + path);
}

}  // namespace detail

inline std::string encode_dataset(const Dataset& ds)
{
    std::string out;
    out.reserve(kDatasetHeaderBytes + ds.coords().size() * 8);
    out.append(kDatasetMagic.data(), kDatasetMagic.size());
    detail::put_u64(out, ds.size());
    detail::put_u64(out, ds.dim());
    detail::put_u64(out, 0);
    for (double c : ds.coords()) detail::put_u64(out, std::bit_cast<std::uint64_t>(c));
    return out;
}

inline Dataset decode_dataset(std::string_view bytes)
{
    if (bytes.size() < kDatasetHeaderBytes) throw FormatError("dataset file is truncated");
    if (std::memcmp(bytes.data(), kDatasetMagic.data(), kDatasetMagic.size()) != 0)
        throw FormatError("dataset file has a bad magic");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::uint64_t n = detail::get_u64(p + 8);
    const std::uint64_t d = detail::get_u64(p + 16);
    if (n == 0 || d == 0) throw FormatError("dataset file declares no points");
    if (d > 64 || n > (std::uint64_t{1} << 40)) throw FormatError("dataset dimension or size overflows");
    const std::uint64_t values = n * d;
    if (bytes.size() != kDatasetHeaderBytes + values * 8) throw FormatError("dataset file is truncated");
    std::vector<double> coords(values);
    for (std::uint64_t i = 0; i < values; ++i)
        coords[i] = std::bit_cast<double>(detail::get_u64(p + kDatasetHeaderBytes + i * 8));
    try {
        return Dataset(d, std::move(coords));
    } catch (const ContractError& e) {
        throw FormatError(std::string("dataset file is invalid: ") + e.what());
    }
}

inline void save_dataset(const Dataset& ds, const std::string& path) { detail::write_file(path, encode_dataset(ds)); }

inline Dataset load_dataset(const std::string& path) { return decode_dataset(detail::read_file(path)); }

/// One point per row; a first row that does not parse as numbers is a header.
inline Dataset parse_dataset_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    std::vector<double> coords;
    std::size_t d = 0;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv(line);
        std::vector<double> row;
        try {
            for (const auto& f : fields) row.push_back(detail::parse_double(f));
        } catch (const FormatError&) {
            if (first) {
                first = false;
                continue;
            }
            throw;
        }
        first = false;
        if (d == 0) d = row.size();
        if (row.size() != d) throw FormatError("csv rows have different widths");
        coords.insert(coords.end(), row.begin(), row.end());
    }
    if (d == 0) throw FormatError("csv holds no points");
    try {
        return Dataset(d, std::move(coords));
    } catch (const ContractError& e) {
        throw FormatError(std::string("csv dataset is invalid: ") + e.what());
    }
}

inline Dataset load_dataset_csv(const std::string& path) { return parse_dataset_csv(detail::read_file(path)); }

// ---------------------------------------------------------------------------
// Workload files

inline std::string encode_range_workload(const RangeWorkload& w)
{
    require(!w.boxes.empty(), "range workload is empty");
    const std::size_t d = w.boxes.front().dim();
    std::string out;
    for (std::size_t j = 0; j < d; ++j) out += "lo_" + std::to_string(j) + ",";
    for (std::size_t j = 0; j < d; ++j) out += "hi_" + std::to_string(j) + ",";
    out += "selectivity\n";
    for (std::size_t i = 0; i < w.boxes.size(); ++i) {
        for (double v : w.boxes[i].lo) out += detail::format_double(v) + ",";
        for (double v : w.boxes[i].hi) out += detail::format_double(v) + ",";
        out += detail::format_double(w.selectivity[i]) + "\n";
    }
    return out;
}

inline std::string encode_knn_workload(const KnnWorkload& w)
{
    require(!w.queries.empty(), "knn workload is empty");
    const std::size_t d = w.queries.front().q.size();
    std::string out;
    for (std::size_t j = 0; j < d; ++j) out += "q_" + std::to_string(j) + ",";
    out += "k\n";
    for (const auto& q : w.queries) {
        for (double v : q.q) out += detail::format_double(v) + ",";
        out += std::to_string(q.k) + "\n";
    }
    return out;
}

enum class WorkloadKind { Range, Knn };

/// Detects the workload kind from a CSV header line.
inline WorkloadKind workload_kind(const std::string& text)
{
    if (text.rfind("lo_", 0) == 0) return WorkloadKind::Range;
    if (text.rfind("q_", 0) == 0) return WorkloadKind::Knn;
    throw FormatError("unrecognized workload header");
}

inline RangeWorkload parse_range_workload(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("range workload is empty");
    const auto header = detail::split_csv(line);
    if (header.size() < 3 || (header.size() - 1) % 2 != 0 || header.back() != "selectivity")
        throw FormatError("bad range workload header");
    const std::size_t d = (header.size() - 1) / 2;
    for (std::size_t j = 0; j < d; ++j)
        if (header[j] != "lo_" + std::to_string(j) || header[d + j] != "hi_" + std::to_string(j))
            throw FormatError("bad range workload header");
    RangeWorkload w;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto f = detail::split_csv(line);
        if (f.size() != header.size()) throw FormatError("range workload row has the wrong width");
        Point lo(d), hi(d);
        for (std::size_t j = 0; j < d; ++j) {
            lo[j] = detail::parse_double(f[j]);
            hi[j] = detail::parse_double(f[d + j]);
        }
        try {
            w.boxes.emplace_back(std::move(lo), std::move(hi));
        } catch (const ContractError& e) {
            throw FormatError(std::string("range workload row is invalid: ") + e.what());
        }
        w.selectivity.push_back(detail::parse_double(f.back()));
    }
    return w;
}

inline KnnWorkload parse_knn_workload(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("knn workload is empty");
    const auto header = detail::split_csv(line);
    if (header.size() < 2 || header.back() != "k") throw FormatError("bad knn workload header");
    const std::size_t d = header.size() - 1;
    for (std::size_t j = 0; j < d; ++j)
        if (header[j] != "q_" + std::to_string(j)) throw FormatError("bad knn workload header");
    KnnWorkload w;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto f = detail::split_csv(line);
        if (f.size() != header.size()) throw FormatError("knn workload row has the wrong width");
        Point q(d);
        for (std::size_t j = 0; j < d; ++j) q[j] = detail::parse_double(f[j]);
        char* end = nullptr;
        const unsigned long long k = std::strtoull(f.back().c_str(), &end, 10);
        if (end == f.back().c_str() || *end != '\0' || k == 0) throw FormatError("bad k value '" + f.back() + "'");
        w.queries.emplace_back(std::move(q), static_cast<std::size_t>(k));
    }
    return w;
}

inline void save_range_workload(const RangeWorkload& w, const std::string& path)
{
    detail::write_file(path, encode_range_workload(w));
}
inline void save_knn_workload(const KnnWorkload& w, const std::string& path)
{
    detail::write_file(path, encode_knn_workload(w));
}
inline RangeWorkload load_range_workload(const std::string& path) { return parse_range_workload(detail::read_file(path)); }
inline KnnWorkload load_knn_workload(const std::string& path) { return parse_knn_workload(detail::read_file(path)); }

}  // namespace mdli
