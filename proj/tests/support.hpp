#pragma once

// Brute-force oracles and random generators shared by the unit tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "mdli/core.hpp"

namespace mdli::oracle {

inline std::vector<PointId> sorted(std::vector<PointId> v)
{
    std::sort(v.begin(), v.end());
    return v;
}

/// Unsorted linear scan, independent of every index.
inline std::vector<PointId> scan_range(const Dataset& ds, const RangeBox& box)
{
    std::vector<PointId> out;
    for (PointId i = 0; i < ds.size(); ++i) {
        bool in = true;
        for (std::size_t j = 0; j < ds.dim(); ++j) {
            const double x = ds.point(i)[j];
            if (x < box.lo[j] || x > box.hi[j]) in = false;
        }
        if (in) out.push_back(i);
    }
    return out;
}

/// The k smallest distances to q, ascending.
inline std::vector<double> scan_knn_distances(const Dataset& ds, const Point& q, std::size_t k)
{
    std::vector<double> all;
    for (PointId i = 0; i < ds.size(); ++i) {
        double s = 0;
        for (std::size_t j = 0; j < ds.dim(); ++j) s += (ds.point(i)[j] - q[j]) * (ds.point(i)[j] - q[j]);
        all.push_back(std::sqrt(s));
    }
    std::sort(all.begin(), all.end());
    all.resize(k);
    return all;
}

inline std::vector<double> result_distances(const Dataset& ds, const std::vector<PointId>& ids, const Point& q)
{
    std::vector<double> out;
    for (PointId id : ids) out.push_back(dist_l2(ds.point(id), q));
    std::sort(out.begin(), out.end());
    return out;
}

inline bool same_distances(const std::vector<double>& a, const std::vector<double>& b, double rel = 1e-9)
{
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > rel * std::max({1e-300, std::abs(a[i]), std::abs(b[i])})) return false;
    return true;
}

enum class Shape { Uniform, Normal, Lognormal, Clustered, Duplicates, Lattice };

/// Hand-rolled point generator covering skew, duplicates, and lattice ties.
inline Dataset random_dataset(std::size_t n, std::size_t d, Shape shape, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.5, 0.15);
    std::lognormal_distribution<double> ln(0.0, 0.6);
    std::uniform_int_distribution<int> small(0, 7);
    std::vector<double> c(n * d);
    std::vector<double> centers;
    for (int k = 0; k < 4 * static_cast<int>(d); ++k) centers.push_back(u(rng));
    for (std::size_t i = 0; i < n; ++i) {
        const auto blob = static_cast<std::size_t>(small(rng) % 4);
        for (std::size_t j = 0; j < d; ++j) {
            double& x = c[i * d + j];
            switch (shape) {
            case Shape::Uniform: x = u(rng); break;
            case Shape::Normal: x = g(rng); break;
            case Shape::Lognormal: x = ln(rng); break;
            case Shape::Clustered: x = centers[blob * d + j] + 0.01 * (u(rng) - 0.5); break;
            case Shape::Duplicates: x = std::floor(u(rng) * 3.0) / 3.0; break;
            case Shape::Lattice: x = static_cast<double>(small(rng)); break;
            }
        }
    }
    return Dataset(d, std::move(c));
}

inline const std::vector<Shape>& all_shapes()
{
    static const std::vector<Shape> v{Shape::Uniform, Shape::Normal,     Shape::Lognormal,
                                      Shape::Clustered, Shape::Duplicates, Shape::Lattice};
    return v;
}

/// Random box: mostly near the data, sometimes degenerate or outside it.
inline RangeBox random_box(const Dataset& ds, std::mt19937_64& rng)
{
    const std::size_t d = ds.dim();
    auto [lo, hi] = ds.bounds();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> kind(0, 9);
    std::uniform_int_distribution<std::size_t> pick(0, ds.size() - 1);
    Point a(d), b(d);
    const int k = kind(rng);
    const auto anchor = ds.point(pick(rng));
    for (std::size_t j = 0; j < d; ++j) {
        const double ext = hi[j] - lo[j] > 0 ? hi[j] - lo[j] : 1.0;
        if (k == 0) {  // a single data point
            a[j] = b[j] = anchor[j];
        } else if (k == 1) {  // reaching past the data
            a[j] = lo[j] - ext * u(rng);
            b[j] = hi[j] + ext * u(rng);
        } else {
            const double w = ext * std::pow(u(rng), 2.0) * 0.6;
            a[j] = k == 2 ? anchor[j] : lo[j] - 0.1 * ext + 1.2 * ext * u(rng);
            b[j] = a[j] + w;
        }
    }
    return RangeBox(std::move(a), std::move(b));
}

}  // namespace mdli::oracle
