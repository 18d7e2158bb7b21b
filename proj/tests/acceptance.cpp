// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero when any of them fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mdli/mdli.hpp"

using namespace mdli;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& check)
{
    const auto start = Clock::now();
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("[%s] %2d %s (%.1fs)%s%s\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), secs,
                o.detail.empty() ? "" : ": ", o.detail.c_str());
    std::fflush(stdout);
}

Dataset make(Distribution dist, std::size_t n, std::size_t d, std::uint64_t seed)
{
    DatasetSpec s;
    s.distribution = dist;
    s.n = n;
    s.d = d;
    s.seed = seed;
    return gen_dataset(s);
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Median wall time of three builds of `name`.
double build_seconds(const std::string& name, const Dataset& ds, std::size_t eps)
{
    std::vector<double> t;
    for (int r = 0; r < 3; ++r) {
        const auto start = Clock::now();
        auto idx = make_index(name, ds, {eps, 42});
        t.push_back(seconds_since(start));
    }
    return median(t);
}

/// Median per-query latency of each index. Queries run in file order, five
/// passes, with the indices interleaved per query so drift hits all of them alike.
std::vector<double> median_latencies_ns(const std::vector<const AnyIndex*>& indices, const RangeWorkload& w)
{
    std::vector<std::vector<double>> lat(indices.size());
    std::size_t sink = 0;
    for (int rep = 0; rep < 5; ++rep) {
        for (const auto& box : w.boxes) {
            for (std::size_t i = 0; i < indices.size(); ++i) {
                const auto start = Clock::now();
                sink += indices[i]->range(box).size();
                lat[i].push_back(std::chrono::duration<double, std::nano>(Clock::now() - start).count());
            }
        }
    }
    if (sink == SIZE_MAX) std::puts("");
    std::vector<double> out;
    for (auto& l : lat) out.push_back(median(std::move(l)));
    return out;
}

std::vector<double> brute_knn_distances(const Dataset& ds, const Point& q, std::size_t k)
{
    std::vector<double> dist(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        double s = 0;
        const auto p = ds.point(i);
        for (std::size_t j = 0; j < ds.dim(); ++j) s += (p[j] - q[j]) * (p[j] - q[j]);
        dist[i] = std::sqrt(s);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    dist.resize(k);
    return dist;
}

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// Criteria ------------------------------------------------------------------

Outcome range_oracle()
{
    std::size_t mismatches = 0, queries = 0;
    std::string first;
    for (Distribution dist : {Distribution::Uniform, Distribution::Normal, Distribution::Lognormal}) {
        for (std::size_t d : {2u, 3u, 4u}) {
            const Dataset ds = make(dist, 100000, d, 100 + d);
            const auto w = gen_range_queries(ds, 100, default_selectivities(), 200 + d);
            const auto oracle = FullScanIndex::build(ds);
            std::vector<ResultSet> want;
            for (const auto& box : w.boxes) {
                auto r = oracle.range(box);
                std::sort(r.begin(), r.end());
                want.push_back(std::move(r));
            }
            for (const auto& name : index_names()) {
                if (name == "fullscan") continue;
                const auto idx = make_index(name, ds, {});
                for (std::size_t q = 0; q < w.boxes.size(); ++q) {
                    auto got = idx->range(w.boxes[q]);
                    std::sort(got.begin(), got.end());
                    ++queries;
                    if (got != want[q]) {
                        if (mismatches++ == 0)
                            first = name + " on " + to_string(dist) + " d=" + std::to_string(d) + " query " +
                                    std::to_string(q);
                    }
                }
            }
        }
    }
    return {mismatches == 0,
            std::to_string(queries) + " queries, " + std::to_string(mismatches) + " mismatches" +
                (first.empty() ? "" : " (first: " + first + ")")};
}

Outcome knn_oracle()
{
    const Dataset ds = make(Distribution::Uniform, 100000, 2, 300);
    const auto w = gen_knn_queries(ds, 20, {1, 10, 100, 1000}, 301);
    std::vector<std::vector<double>> want;
    for (const auto& q : w.queries) want.push_back(brute_knn_distances(ds, q.q, q.k));
    std::size_t mismatches = 0;
    std::string first;
    for (const char* name : {"zmi", "mli", "lisa", "str", "kd"}) {
        const auto idx = make_index(name, ds, {});
        for (std::size_t i = 0; i < w.queries.size(); ++i) {
            const auto ids = idx->knn(w.queries[i]);
            std::vector<double> got;
            for (PointId id : ids) {
                double s = 0;
                for (std::size_t j = 0; j < 2; ++j) s += std::pow(ds.point(id)[j] - w.queries[i].q[j], 2);
                got.push_back(std::sqrt(s));
            }
            std::sort(got.begin(), got.end());
            bool ok = got.size() == want[i].size();
            for (std::size_t r = 0; ok && r < got.size(); ++r)
                ok = std::abs(got[r] - want[i][r]) <= 1e-9 * std::max(1.0, std::abs(want[i][r]));
            if (!ok && mismatches++ == 0) first = std::string(name) + " query " + std::to_string(i);
        }
    }
    return {mismatches == 0, std::to_string(5 * w.queries.size()) + " queries, " + std::to_string(mismatches) +
                                 " mismatches" + (first.empty() ? "" : " (first: " + first + ")")};
}

Outcome pla_bound()
{
    std::mt19937_64 rng(400);
    std::vector<double> uni(1000000), logn(1000000);
    std::uniform_real_distribution<double> u(0, 1);
    std::lognormal_distribution<double> ln(0, 1);
    for (double& x : uni) x = u(rng);
    for (double& x : logn) x = ln(rng);
    std::string detail;
    bool pass = true;
    for (auto* keys : {&uni, &logn}) {
        std::sort(keys->begin(), keys->end());
        std::size_t prev = SIZE_MAX;
        detail += keys == &uni ? "uniform segments" : "; lognormal segments";
        for (std::size_t eps : {4u, 16u, 64u, 256u, 1024u}) {
            const auto m = PlaModel<double>::build(*keys, eps);
            double worst = 0;
            std::size_t rank = 0;
            for (std::size_t i = 0; i < keys->size(); ++i) {
                if (i == 0 || (*keys)[i] != (*keys)[i - 1]) rank = i;
                worst = std::max(worst, std::abs(m.predict((*keys)[i]) - static_cast<double>(rank)));
            }
            pass &= worst <= static_cast<double>(eps) && m.segment_count() <= prev;
            prev = m.segment_count();
            detail += " " + std::to_string(prev);
        }
    }
    return {pass, detail};
}

Outcome bigmin_exhaustive()
{
    std::size_t boxes = 0, mismatches = 0;
    for (auto [d, bits] : {std::pair<std::size_t, unsigned>{2, 3}, {3, 2}}) {
        const std::uint32_t side = 1u << bits;
        const zorder::ZValue total = zorder::ZValue{1} << (d * bits);
        std::vector<zorder::CellCoord> cells(total);
        for (zorder::ZValue z = 0; z < total; ++z) cells[z] = zorder::z_decode(z, d, bits);
        zorder::CellCoord lo(d), hi(d);
        std::function<void(std::size_t)> rec = [&](std::size_t m) {
            if (m < d) {
                for (lo[m] = 0; lo[m] < side; ++lo[m])
                    for (hi[m] = lo[m]; hi[m] < side; ++hi[m]) rec(m + 1);
                return;
            }
            ++boxes;
            std::vector<bool> inside(total);
            for (zorder::ZValue z = 0; z < total; ++z) {
                bool in = true;
                for (std::size_t j = 0; j < d; ++j) in &= cells[z][j] >= lo[j] && cells[z][j] <= hi[j];
                inside[z] = in;
            }
            const auto z_lo = zorder::z_encode(lo, bits);
            const auto z_hi = zorder::z_encode(hi, bits);
            std::optional<zorder::ZValue> expected;
            for (zorder::ZValue start = total; start-- > 0;) {
                if (inside[start]) expected = start;
                mismatches += zorder::bigmin(start, z_lo, z_hi, d, bits) != expected;
            }
            std::vector<zorder::ZInterval> runs;
            for (zorder::ZValue z = 0; z < total; ++z) {
                if (!inside[z]) continue;
                if (!runs.empty() && runs.back().last + 1 == z)
                    runs.back().last = z;
                else
                    runs.push_back({z, z});
            }
            mismatches += zorder::decompose_box(lo, hi, bits) != runs;
        };
        rec(0);
    }
    return {mismatches == 0, std::to_string(boxes) + " rectangles, " + std::to_string(mismatches) + " mismatches"};
}

/// The first `count` generated queries whose realized selectivity is at most `max_sel`.
RangeWorkload low_selectivity_queries(const Dataset& ds, std::size_t count, double max_sel, std::uint64_t seed)
{
    RangeWorkload out;
    for (std::uint64_t batch = 0; out.boxes.size() < count; ++batch) {
        require(batch < 100, "cannot draw enough low-selectivity queries");
        const auto w = gen_range_queries(ds, 1000, {1e-4, 1e-3, 1e-2}, seed + batch);
        for (std::size_t i = 0; i < w.boxes.size() && out.boxes.size() < count; ++i) {
            if (w.selectivity[i] > max_sel) continue;
            out.boxes.push_back(w.boxes[i]);
            out.selectivity.push_back(w.selectivity[i]);
            out.target.push_back(w.target[i]);
        }
    }
    return out;
}

struct Shared {
    Dataset uniform = make(Distribution::Uniform, 1000000, 2, 500);
    Dataset lognormal = make(Distribution::Lognormal, 1000000, 2, 501);
    RangeWorkload uniform_queries = low_selectivity_queries(uniform, 200, 1e-2, 502);
    RangeWorkload lognormal_queries = low_selectivity_queries(lognormal, 200, 1e-2, 503);
};

Outcome memory(const Shared& s)
{
    const std::size_t str = make_index("str", s.uniform, {})->metadata_bytes();
    bool pass = true;
    std::string detail = "str " + std::to_string(str) + " B";
    for (const char* name : {"zmi", "mli", "lisa", "flood"}) {
        const std::size_t b = make_index(name, s.uniform, {64, 42})->metadata_bytes();
        pass &= b * 50 <= str;
        detail += std::string(", ") + name + " " + std::to_string(b) + " B (" +
                  fmt("%.0fx smaller)", static_cast<double>(str) / static_cast<double>(b));
    }
    return {pass, detail};
}

Outcome construction(const Shared& s)
{
    const double str = build_seconds("str", s.uniform, 64);
    const double zmi = build_seconds("zmi", s.uniform, 64);
    const double mli = build_seconds("mli", s.uniform, 64);
    return {zmi <= 1.2 * str && mli >= 3 * str,
            fmt("str %.3fs", str) + fmt(", zmi %.3fs", zmi) + fmt(" (%.2fx)", zmi / str) + fmt(", mli %.3fs", mli) +
                fmt(" (%.1fx)", mli / str)};
}

Outcome range_direction(const Shared& s)
{
    bool pass = true;
    std::string detail;
    for (auto [label, ds, w] : {std::tuple{"uniform", &s.uniform, &s.uniform_queries},
                                std::tuple{"lognormal", &s.lognormal, &s.lognormal_queries}}) {
        const std::vector<std::string> names{"str", "flood", "lisa", "ifi"};
        std::vector<std::unique_ptr<AnyIndex>> owned;
        std::vector<const AnyIndex*> indices;
        for (const auto& name : names) {
            owned.push_back(make_index(name, *ds, {64, 42}));
            indices.push_back(owned.back().get());
        }
        const auto lat = median_latencies_ns(indices, *w);
        detail += std::string(detail.empty() ? "" : "; ") + label + fmt(" str %.0fns", lat[0]);
        for (std::size_t i = 1; i < names.size(); ++i) {
            pass &= lat[i] <= 1.2 * lat[0];
            detail += " " + names[i] + fmt(" %.2fx", lat[i] / lat[0]);
        }
    }
    return {pass, detail};
}

Outcome epsilon_insensitivity(const Shared& s)
{
    bool pass = true;
    std::string detail;
    for (const char* name : {"lisa", "flood"}) {
        std::vector<double> builds;
        std::vector<std::unique_ptr<AnyIndex>> owned;
        std::vector<const AnyIndex*> indices;
        for (std::size_t eps : {4u, 64u, 1024u}) {
            builds.push_back(build_seconds(name, s.uniform, eps));
            owned.push_back(make_index(name, s.uniform, {eps, 42}));
            indices.push_back(owned.back().get());
        }
        const auto lats = median_latencies_ns(indices, s.uniform_queries);
        const double b = *std::max_element(builds.begin(), builds.end()) / *std::min_element(builds.begin(), builds.end());
        const double l = *std::max_element(lats.begin(), lats.end()) / *std::min_element(lats.begin(), lats.end());
        pass &= b < 2 && l < 2;
        detail += std::string(detail.empty() ? "" : "; ") + name + fmt(" build spread %.2fx", b) +
                  fmt(", latency spread %.2fx", l);
    }
    return {pass, detail};
}

/// Largest marginal population over its bound, per bucketed dimension.
template <typename CoordOf>
bool balanced(const Dataset& ds, std::size_t dim, std::size_t parts, CoordOf coord_of, double& worst)
{
    std::vector<std::size_t> pop(parts, 0);
    for (std::size_t i = 0; i < ds.size(); ++i) ++pop[coord_of(ds.point(i)[dim])];
    const double mean = static_cast<double>(ds.size()) / static_cast<double>(parts);
    const double mx = static_cast<double>(*std::max_element(pop.begin(), pop.end()));
    worst = std::max(worst, mx / mean);
    return mx <= 2 * mean + 1;
}

Outcome balance()
{
    const Dataset ds = make(Distribution::Lognormal, 100000, 2, 600);
    bool pass = true;
    std::string detail;
    {
        const auto idx = LisaIndex::build(ds, 64);
        double worst = 0;
        for (std::size_t j = 0; j < 2; ++j)
            pass &= balanced(ds, j, idx.grid().parts(j), [&](double x) { return idx.grid().coord(j, x); }, worst);
        detail += fmt("lisa max/mean %.2f", worst);
    }
    {
        const auto idx = GridIndex::build(ds, GridMode::EqualDepth);
        double worst = 0;
        for (std::size_t j = 0; j < 2; ++j)
            pass &= balanced(ds, j, idx.parts()[j], [&](double x) { return idx.coord(j, x); }, worst);
        detail += fmt(", edg %.2f", worst);
    }
    {
        const auto idx = FloodIndex::build(ds, 64);
        double worst = 0;
        for (std::size_t g = 0; g < idx.grid_dims().size(); ++g)
            pass &= balanced(ds, idx.grid_dims()[g], idx.parts()[g], [&](double x) { return idx.coord(g, x); }, worst);
        detail += fmt(", flood %.2f", worst);
    }
    return {pass, detail};
}

std::string untimed_csv(std::uint64_t seed)
{
    BenchConfig cfg;
    cfg.indices = index_names();
    cfg.verify = true;
    cfg.datasets.push_back({"lognormal", seed, make(Distribution::Lognormal, 20000, 3, seed)});
    cfg.range_workloads.push_back(gen_range_queries(cfg.datasets[0].data, 40, default_selectivities(), seed + 1));
    cfg.knn_workloads.push_back(gen_knn_queries(cfg.datasets[0].data, 5, {1, 10, 100}, seed + 2));
    auto recs = run_build_bench(cfg);
    const auto q = run_query_bench(cfg);
    recs.insert(recs.end(), q.begin(), q.end());
    for (auto& r : recs) r.mean_ns = r.p50_ns = r.p99_ns = 0;
    return emit_report(recs, ReportFormat::Csv);
}

Outcome determinism()
{
    bool pass = true;
    for (Distribution dist : {Distribution::Uniform, Distribution::Normal, Distribution::Lognormal}) {
        const auto a = make(dist, 50000, 3, 700);
        const auto b = make(dist, 50000, 3, 700);
        pass &= encode_dataset(a) == encode_dataset(b);
        pass &= encode_range_workload(gen_range_queries(a, 100, default_selectivities(), 701)) ==
                encode_range_workload(gen_range_queries(b, 100, default_selectivities(), 701));
        pass &= encode_knn_workload(gen_knn_queries(a, 20, default_knn_ks(), 702)) ==
                encode_knn_workload(gen_knn_queries(b, 20, default_knn_ks(), 702));
    }
    pass &= encode_dataset(make(Distribution::Uniform, 1000, 2, 1)) != encode_dataset(make(Distribution::Uniform, 1000, 2, 2));
    const std::string first = untimed_csv(703);
    pass &= first == untimed_csv(703);
    return {pass, "datasets, workloads and " + std::to_string(std::count(first.begin(), first.end(), '\n') - 1) +
                      " untimed records compared"};
}

}  // namespace

int main()
{
    report(1, "range results equal the full scan", range_oracle);
    report(2, "knn distances equal brute force", knn_oracle);
    report(3, "pla error bound and segment monotonicity", pla_bound);
    report(4, "bigmin and box decomposition, exhaustive", bigmin_exhaustive);
    const Shared shared;
    report(5, "learned metadata <= 1/50 of str", [&] { return memory(shared); });
    report(6, "build ordering against str", [&] { return construction(shared); });
    report(7, "range latency <= 1.2x str", [&] { return range_direction(shared); });
    report(8, "epsilon insensitivity", [&] { return epsilon_insensitivity(shared); });
    report(9, "equal-depth balance", balance);
    report(10, "determinism", determinism);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
