#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mdli/core.hpp"
#include "mdli/full_scan.hpp"
#include "mdli/grid.hpp"
#include "mdli/ifi.hpp"
#include "mdli/kd_tree.hpp"
#include "mdli/knn.hpp"
#include "mdli/lisa.hpp"
#include "mdli/mli.hpp"
#include "mdli/str_tree.hpp"
#include "mdli/workload.hpp"
#include "mdli/zmi.hpp"

namespace mdli {

/// An index answered a query differently from the brute-force oracle.
class VerificationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct IndexParams {
    std::size_t epsilon = 64;
    std::uint64_t seed = 42;
};

/// Type-erased view of a built index.
class AnyIndex {
public:
    virtual ~AnyIndex() = default;
    virtual std::string_view name() const noexcept = 0;
    virtual ResultSet range(const RangeBox& box) const = 0;
    virtual bool supports_knn() const noexcept = 0;
    virtual ResultSet knn(const KnnQuery& query) const = 0;
    virtual std::size_t metadata_bytes() const = 0;
    virtual bool uses_epsilon() const noexcept = 0;
};

namespace detail {

template <typename Index>
class NativeKnnAdapter final : public AnyIndex {
public:
    NativeKnnAdapter(std::string name, Index idx, bool eps) : name_(std::move(name)), idx_(std::move(idx)), eps_(eps) {}
    std::string_view name() const noexcept override { return name_; }
    ResultSet range(const RangeBox& box) const override { return idx_.range(box); }
    bool supports_knn() const noexcept override { return true; }
    ResultSet knn(const KnnQuery& query) const override { return idx_.knn(query); }
    std::size_t metadata_bytes() const override { return idx_.metadata_bytes(); }
    bool uses_epsilon() const noexcept override { return eps_; }

private:
    std::string name_;
    Index idx_;
    bool eps_;
};

template <typename Index>
class ProgressiveKnnAdapter final : public AnyIndex {
public:
    ProgressiveKnnAdapter(std::string name, Index idx) : name_(std::move(name)), idx_(std::move(idx)), knn_(idx_) {}
    ProgressiveKnnAdapter(const ProgressiveKnnAdapter&) = delete;
    ProgressiveKnnAdapter& operator=(const ProgressiveKnnAdapter&) = delete;

    std::string_view name() const noexcept override { return name_; }
    ResultSet range(const RangeBox& box) const override { return idx_.range(box); }
    bool supports_knn() const noexcept override { return true; }
    ResultSet knn(const KnnQuery& query) const override { return knn_(query); }
    std::size_t metadata_bytes() const override { return idx_.metadata_bytes(); }
    bool uses_epsilon() const noexcept override { return true; }

private:
    std::string name_;
    Index idx_;
    ProgressiveKnn<Index> knn_;
};

template <typename Index>
class RangeOnlyAdapter final : public AnyIndex {
public:
    RangeOnlyAdapter(std::string name, Index idx, bool eps) : name_(std::move(name)), idx_(std::move(idx)), eps_(eps) {}
    std::string_view name() const noexcept override { return name_; }
    ResultSet range(const RangeBox& box) const override { return idx_.range(box); }
    bool supports_knn() const noexcept override { return false; }
    ResultSet knn(const KnnQuery&) const override { throw ContractError(name_ + " does not answer knn queries"); }
    std::size_t metadata_bytes() const override { return idx_.metadata_bytes(); }
    bool uses_epsilon() const noexcept override { return eps_; }

private:
    std::string name_;
    Index idx_;
    bool eps_;
};

}  // namespace detail

inline const std::vector<std::string>& index_names()
{
    static const std::vector<std::string> v{"zmi", "mli", "lisa", "flood", "ifi", "str", "kd", "ug", "edg", "fullscan"};
    return v;
}

/// Builds the named index over `ds`, which must outlive it.
inline std::unique_ptr<AnyIndex> make_index(const std::string& name, const Dataset& ds, const IndexParams& p)
{
    using namespace detail;
    if (name == "zmi") return std::make_unique<ProgressiveKnnAdapter<ZmiIndex>>(name, ZmiIndex::build(ds, p.epsilon));
    if (name == "mli")
        return std::make_unique<ProgressiveKnnAdapter<MliIndex>>(
            name, MliIndex::build(ds, p.epsilon, MliIndex::kAutoPartitions, p.seed));
    if (name == "lisa") return std::make_unique<ProgressiveKnnAdapter<LisaIndex>>(name, LisaIndex::build(ds, p.epsilon));
    if (name == "flood") return std::make_unique<RangeOnlyAdapter<FloodIndex>>(name, FloodIndex::build(ds, p.epsilon), true);
    if (name == "ifi") return std::make_unique<RangeOnlyAdapter<IfiIndex>>(name, IfiIndex::build(ds), false);
    if (name == "str") return std::make_unique<NativeKnnAdapter<StrTree>>(name, StrTree::build(ds), false);
    if (name == "kd") return std::make_unique<NativeKnnAdapter<KdTree>>(name, KdTree::build(ds), false);
    if (name == "ug")
        return std::make_unique<RangeOnlyAdapter<GridIndex>>(name, GridIndex::build(ds, GridMode::EqualWidth), false);
    if (name == "edg")
        return std::make_unique<RangeOnlyAdapter<GridIndex>>(name, GridIndex::build(ds, GridMode::EqualDepth), false);
    if (name == "fullscan") return std::make_unique<NativeKnnAdapter<FullScanIndex>>(name, FullScanIndex::build(ds), false);
    throw ContractError("unknown index: " + name);
}

using IndexFactory = std::function<std::unique_ptr<AnyIndex>(const std::string&, const Dataset&, const IndexParams&)>;

struct BenchRecord {
    std::string index;
    std::string dist;
    std::size_t n = 0;
    std::size_t d = 0;
    std::string op;     ///< build, range, or knn
    std::string param;  ///< epsilon for builds, selectivity bucket or k for queries; "-" when not applicable
    double mean_ns = 0;
    double p50_ns = 0;
    double p99_ns = 0;
    std::size_t result_count = 0;
    std::size_t metadata_bytes = 0;

    friend bool operator==(const BenchRecord&, const BenchRecord&) = default;
};

/// A dataset together with the descriptor that names it in reports.
struct BenchDataset {
    std::string dist;
    std::uint64_t seed = 0;
    Dataset data;
};

struct BenchConfig {
    std::vector<std::string> indices;
    std::vector<BenchDataset> datasets;
    std::vector<RangeWorkload> range_workloads;  ///< run against every dataset of matching dimension
    std::vector<KnnWorkload> knn_workloads;
    std::vector<std::size_t> epsilons{64};
    std::size_t repetitions = 1;
    bool verify = false;
    std::vector<double> selectivity_buckets = default_selectivities();
    std::uint64_t seed = 42;  ///< seeds randomized builds such as k-means
    IndexFactory factory = make_index;
};

struct LatencyStats {
    double mean = 0;
    double p50 = 0;
    double p99 = 0;
};

/// Nearest-rank percentiles.
inline LatencyStats latency_stats(std::vector<double> ns)
{
    require(!ns.empty(), "no latencies to summarize");
    std::sort(ns.begin(), ns.end());
    LatencyStats s;
    for (double v : ns) s.mean += v;
    s.mean /= static_cast<double>(ns.size());
    auto rank = [&](double q) {
        const auto r = static_cast<std::size_t>(std::ceil(q * static_cast<double>(ns.size())));
        return ns[std::clamp<std::size_t>(r, 1, ns.size()) - 1];
    };
    s.p50 = rank(0.50);
    s.p99 = rank(0.99);
    return s;
}

/// Index of the bucket nearest to `s` in log space; zero selectivity maps to the smallest bucket.
inline std::size_t selectivity_bucket(double s, const std::vector<double>& buckets)
{
    require(!buckets.empty(), "no selectivity buckets");
    std::size_t best = 0;
    for (std::size_t i = 1; i < buckets.size(); ++i)
        if (buckets[i] < buckets[best]) best = i;
    if (!(s > 0)) return best;
    double best_gap = std::abs(std::log(s) - std::log(buckets[best]));
    for (std::size_t i = 0; i < buckets.size(); ++i) {
        const double gap = std::abs(std::log(s) - std::log(buckets[i]));
        if (gap < best_gap) {
            best = i;
            best_gap = gap;
        }
    }
    return best;
}

inline std::string format_param(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

namespace detail {

inline double elapsed_ns(std::chrono::steady_clock::time_point since)
{
    return std::chrono::duration<double, std::nano>(std::chrono::steady_clock::now() - since).count();
}

inline BenchRecord base_record(const std::string& index, const BenchDataset& ds, std::string op, std::string param)
{
    BenchRecord r;
    r.index = index;
    r.dist = ds.dist;
    r.n = ds.data.size();
    r.d = ds.data.dim();
    r.op = std::move(op);
    r.param = std::move(param);
    return r;
}

inline bool index_uses_epsilon(const std::string& name)
{
    return name == "zmi" || name == "mli" || name == "lisa" || name == "flood";
}

/// The (index, epsilon) pairs a run covers; epsilon-free indices appear once.
inline std::vector<std::pair<std::string, std::optional<std::size_t>>> build_plan(const BenchConfig& cfg)
{
    require(!cfg.indices.empty(), "benchmark needs at least one index");
    require(!cfg.epsilons.empty(), "benchmark needs at least one epsilon");
    std::vector<std::pair<std::string, std::optional<std::size_t>>> plan;
    for (const auto& name : cfg.indices) {
        if (index_uses_epsilon(name))
            for (std::size_t eps : cfg.epsilons) plan.emplace_back(name, eps);
        else
            plan.emplace_back(name, std::nullopt);
    }
    return plan;
}

inline std::string eps_param(const std::optional<std::size_t>& eps) { return eps ? std::to_string(*eps) : "-"; }

inline std::string with_eps(const std::string& param, const std::optional<std::size_t>& eps)
{
    return eps ? param + "@eps=" + std::to_string(*eps) : param;
}

inline void verify_range(const AnyIndex& idx, const FullScanIndex& oracle, const RangeWorkload& w)
{
    for (std::size_t i = 0; i < w.boxes.size(); ++i) {
        ResultSet got = idx.range(w.boxes[i]);
        ResultSet want = oracle.range(w.boxes[i]);
        std::sort(got.begin(), got.end());
        std::sort(want.begin(), want.end());
        if (got != want) {
            const auto diff = static_cast<long long>(got.size()) - static_cast<long long>(want.size());
            throw VerificationError(std::string(idx.name()) + ": range query " + std::to_string(i) + " returned " +
                                    std::to_string(got.size()) + " ids, oracle " + std::to_string(want.size()) +
                                    " (cardinality diff " + std::to_string(diff) + ")");
        }
    }
}

/// Sorted distances of `ids` to `q`.
inline std::vector<double> distances(const Dataset& ds, const ResultSet& ids, const Point& q)
{
    std::vector<double> out;
    out.reserve(ids.size());
    for (PointId id : ids) {
        require(id < ds.size(), "result id out of range");
        out.push_back(dist_l2(ds.point(id), q));
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline bool distances_match(const std::vector<double>& a, const std::vector<double>& b, double rel_tol)
{
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > rel_tol * std::max({1e-300, std::abs(a[i]), std::abs(b[i])})) return false;
    return true;
}

inline void verify_knn(const AnyIndex& idx, const FullScanIndex& oracle, const KnnWorkload& w)
{
    const Dataset& ds = oracle.dataset();
    for (std::size_t i = 0; i < w.queries.size(); ++i) {
        const auto& q = w.queries[i];
        const auto got = distances(ds, idx.knn(q), q.q);
        const auto want = distances(ds, oracle.knn(q), q.q);
        if (!distances_match(got, want, 1e-9)) {
            const auto diff = static_cast<long long>(got.size()) - static_cast<long long>(want.size());
            throw VerificationError(std::string(idx.name()) + ": knn query " + std::to_string(i) + " (k=" +
                                    std::to_string(q.k) + ") disagrees with brute force (cardinality diff " +
                                    std::to_string(diff) + ")");
        }
    }
}

}  // namespace detail

/// Wall-clock construction time for every (index, dataset, epsilon).
inline std::vector<BenchRecord> run_build_bench(const BenchConfig& cfg)
{
    require(!cfg.datasets.empty(), "benchmark needs at least one dataset");
    require(cfg.repetitions >= 1, "repetitions must be positive");
    const auto plan = detail::build_plan(cfg);
    std::vector<BenchRecord> out;
    for (const auto& ds : cfg.datasets) {
        for (const auto& [name, eps] : plan) {
            const IndexParams params{eps.value_or(cfg.epsilons.front()), cfg.seed};
            std::vector<double> times;
            std::size_t bytes = 0;
            for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
                std::unique_ptr<AnyIndex> idx;
                const auto start = std::chrono::steady_clock::now();
                try {
                    idx = cfg.factory(name, ds.data, params);
                } catch (const std::exception& e) {
                    throw std::runtime_error("building " + name + " failed: " + e.what());
                }
                times.push_back(detail::elapsed_ns(start));
                bytes = idx->metadata_bytes();
            }
            auto r = detail::base_record(name, ds, "build", detail::eps_param(eps));
            const auto s = latency_stats(times);
            r.mean_ns = s.mean;
            r.p50_ns = s.p50;
            r.p99_ns = s.p99;
            r.metadata_bytes = bytes;
            out.push_back(std::move(r));
        }
    }
    return out;
}

/// Per-query latency for every workload of matching dimension. Queries run once per
/// repetition in file order. With verification on, every index is checked against the
/// brute-force oracle before any record is returned.
inline std::vector<BenchRecord> run_query_bench(const BenchConfig& cfg)
{
    require(!cfg.datasets.empty(), "benchmark needs at least one dataset");
    require(!cfg.range_workloads.empty() || !cfg.knn_workloads.empty(), "benchmark needs at least one workload");
    require(cfg.repetitions >= 1, "repetitions must be positive");
    const auto plan = detail::build_plan(cfg);
    std::vector<BenchRecord> out;
    for (const auto& ds : cfg.datasets) {
        std::optional<FullScanIndex> oracle;
        if (cfg.verify) oracle = FullScanIndex::build(ds.data);
        const std::size_t d = ds.data.dim();

        for (const auto& [name, eps] : plan) {
            const IndexParams params{eps.value_or(cfg.epsilons.front()), cfg.seed};
            std::unique_ptr<AnyIndex> idx;
            try {
                idx = cfg.factory(name, ds.data, params);
            } catch (const std::exception& e) {
                throw std::runtime_error("building " + name + " failed: " + e.what());
            }
            const std::size_t bytes = idx->metadata_bytes();

            for (const auto& w : cfg.range_workloads) {
                if (w.boxes.empty() || w.boxes.front().dim() != d) continue;
                if (oracle) detail::verify_range(*idx, *oracle, w);
                const std::size_t nb = cfg.selectivity_buckets.size();
                std::vector<std::vector<double>> lat(nb);
                std::vector<std::size_t> results(nb, 0);
                std::vector<std::size_t> bucket_of(w.boxes.size());
                for (std::size_t i = 0; i < w.boxes.size(); ++i)
                    bucket_of[i] = selectivity_bucket(w.selectivity[i], cfg.selectivity_buckets);
                for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
                    for (std::size_t i = 0; i < w.boxes.size(); ++i) {
                        const auto start = std::chrono::steady_clock::now();
                        const ResultSet hits = idx->range(w.boxes[i]);
                        lat[bucket_of[i]].push_back(detail::elapsed_ns(start));
                        if (rep == 0) results[bucket_of[i]] += hits.size();
                    }
                }
                for (std::size_t b = 0; b < nb; ++b) {
                    if (lat[b].empty()) continue;
                    auto r = detail::base_record(name, ds, "range",
                                                 detail::with_eps(format_param(cfg.selectivity_buckets[b]), eps));
                    const auto s = latency_stats(lat[b]);
                    r.mean_ns = s.mean;
                    r.p50_ns = s.p50;
                    r.p99_ns = s.p99;
                    r.result_count = results[b];
                    r.metadata_bytes = bytes;
                    out.push_back(std::move(r));
                }
            }

            if (!idx->supports_knn()) continue;
            for (const auto& w : cfg.knn_workloads) {
                if (w.queries.empty() || w.queries.front().q.size() != d) continue;
                if (oracle) detail::verify_knn(*idx, *oracle, w);
                std::map<std::size_t, std::vector<double>> lat;
                std::map<std::size_t, std::size_t> results;
                for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
                    for (const auto& q : w.queries) {
                        const auto start = std::chrono::steady_clock::now();
                        const ResultSet hits = idx->knn(q);
                        lat[q.k].push_back(detail::elapsed_ns(start));
                        if (rep == 0) results[q.k] += hits.size();
                    }
                }
                // The summary row averages the per-k means, so every k weighs the same.
                LatencyStats avg;
                std::size_t avg_results = 0;
                for (const auto& [k, ns] : lat) {
                    auto r = detail::base_record(name, ds, "knn", detail::with_eps(std::to_string(k), eps));
                    const auto s = latency_stats(ns);
                    r.mean_ns = s.mean;
                    r.p50_ns = s.p50;
                    r.p99_ns = s.p99;
                    r.result_count = results[k];
                    r.metadata_bytes = bytes;
                    out.push_back(std::move(r));
                    avg.mean += s.mean;
                    avg.p50 += s.p50;
                    avg.p99 += s.p99;
                    avg_results += results[k];
                }
                const auto kinds = static_cast<double>(lat.size());
                auto r = detail::base_record(name, ds, "knn", detail::with_eps("avg", eps));
                r.mean_ns = avg.mean / kinds;
                r.p50_ns = avg.p50 / kinds;
                r.p99_ns = avg.p99 / kinds;
                r.result_count = avg_results;
                r.metadata_bytes = bytes;
                out.push_back(std::move(r));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reports

enum class ReportFormat { Csv, Markdown };

inline ReportFormat parse_report_format(std::string_view s)
{
    if (s == "csv") return ReportFormat::Csv;
    if (s == "markdown" || s == "md") return ReportFormat::Markdown;
    throw ContractError("unknown report format: " + std::string(s));
}

inline constexpr std::string_view kReportCsvHeader =
    "index,dist,n,d,op,param,mean_ns,p50_ns,p99_ns,result_count,metadata_bytes";

namespace detail {

inline std::string csv_row(const BenchRecord& r)
{
    std::string s = r.index + "," + r.dist + "," + std::to_string(r.n) + "," + std::to_string(r.d) + "," + r.op +
                    "," + r.param + ",";
    s += format_double(r.mean_ns) + "," + format_double(r.p50_ns) + "," + format_double(r.p99_ns) + ",";
    s += std::to_string(r.result_count) + "," + std::to_string(r.metadata_bytes);
    return s;
}

inline std::string fixed(double v, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

/// The STR row a record is compared against: same dataset, operation, and query
/// parameter, ignoring epsilon since STR has none.
inline const BenchRecord* str_baseline(const std::vector<BenchRecord>& records, const BenchRecord& r)
{
    auto strip = [](const std::string& p) { return p.substr(0, p.find("@eps=")); };
    for (const auto& s : records) {
        if (s.index != "str" || s.dist != r.dist || s.n != r.n || s.d != r.d || s.op != r.op) continue;
        if (r.op == "build" || strip(s.param) == strip(r.param)) return &s;
    }
    return nullptr;
}

inline std::uint64_t parse_u64(const std::string& s)
{
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0') throw FormatError("not an unsigned integer: '" + s + "'");
    return v;
}

}  // namespace detail

inline std::string emit_report(const std::vector<BenchRecord>& records, ReportFormat format)
{
    require(!records.empty(), "report needs at least one record");
    std::string out;
    if (format == ReportFormat::Csv) {
        out += std::string(kReportCsvHeader) + "\n";
        for (const auto& r : records) out += detail::csv_row(r) + "\n";
        return out;
    }

    // One table per dataset, in order of first appearance.
    std::vector<std::tuple<std::string, std::size_t, std::size_t>> keys;
    for (const auto& r : records) {
        const auto key = std::make_tuple(r.dist, r.n, r.d);
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    }
    for (const auto& [dist, n, d] : keys) {
        if (!out.empty()) out += "\n";
        out += "### " + dist + " n=" + std::to_string(n) + " d=" + std::to_string(d) + "\n\n";
        out += "| index | op | param | mean_ns | p50_ns | p99_ns | results | metadata_bytes | time vs STR | memory vs STR |\n";
        out += "|---|---|---|---:|---:|---:|---:|---:|---:|---:|\n";
        for (const auto& r : records) {
            if (r.dist != dist || r.n != n || r.d != d) continue;
            const BenchRecord* base = detail::str_baseline(records, r);
            std::string time_ratio = "n/a";
            std::string mem_ratio = "n/a";
            if (base != nullptr && base->mean_ns > 0) time_ratio = detail::fixed(r.mean_ns / base->mean_ns, 2) + "x";
            if (base != nullptr && base->metadata_bytes > 0)
                mem_ratio = detail::fixed(static_cast<double>(r.metadata_bytes) / static_cast<double>(base->metadata_bytes), 4) + "x";
            if (r.index == "str") time_ratio = mem_ratio = "1.0x";
            out += "| " + r.index + " | " + r.op + " | " + r.param + " | " + detail::fixed(r.mean_ns, 0) + " | " +
                   detail::fixed(r.p50_ns, 0) + " | " + detail::fixed(r.p99_ns, 0) + " | " +
                   std::to_string(r.result_count) + " | " + std::to_string(r.metadata_bytes) + " | " + time_ratio +
                   " | " + mem_ratio + " |\n";
        }
    }
    return out;
}

/// Inverse of the CSV report.
inline std::vector<BenchRecord> parse_report_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("report is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kReportCsvHeader) throw FormatError("bad report header");
    std::vector<BenchRecord> out;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto f = detail::split_csv(line);
        if (f.size() != 11) throw FormatError("report row has the wrong width");
        BenchRecord r;
        r.index = f[0];
        r.dist = f[1];
        r.n = detail::parse_u64(f[2]);
        r.d = detail::parse_u64(f[3]);
        r.op = f[4];
        r.param = f[5];
        r.mean_ns = detail::parse_double(f[6]);
        r.p50_ns = detail::parse_double(f[7]);
        r.p99_ns = detail::parse_double(f[8]);
        r.result_count = detail::parse_u64(f[9]);
        r.metadata_bytes = detail::parse_u64(f[10]);
        out.push_back(std::move(r));
    }
    if (out.empty()) throw FormatError("report holds no records");
    return out;
}

}  // namespace mdli
