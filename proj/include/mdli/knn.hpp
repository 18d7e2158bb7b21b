#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "mdli/core.hpp"

namespace mdli {

/// An index that answers closed range queries over a dataset.
template <typename T>
concept RangeIndex = requires(const T& idx, const RangeBox& box) {
    { idx.range(box) } -> std::convertible_to<ResultSet>;
    { idx.dataset() } -> std::convertible_to<const Dataset&>;
};

struct Neighbor {
    double dist;
    PointId id;
    friend bool operator<(const Neighbor& a, const Neighbor& b)
    {
        return a.dist < b.dist || (a.dist == b.dist && a.id < b.id);
    }
};

inline double average_extent(const Dataset& ds)
{
    auto [lo, hi] = ds.bounds();
    double extent = 0.0;
    for (std::size_t j = 0; j < ds.dim(); ++j) extent += hi[j] - lo[j];
    extent /= static_cast<double>(ds.dim());
    return extent > 0 ? extent : 1.0;
}

/// Starting radius for progressive kNN: the side of a box expected to hold k points.
inline double initial_knn_radius(std::size_t n, std::size_t d, double extent, std::size_t k)
{
    const double r = std::pow(static_cast<double>(k) / static_cast<double>(n), 1.0 / static_cast<double>(d)) * extent;
    return std::max(r, std::numeric_limits<double>::epsilon() * extent);
}

/// Exact kNN by range queries over q +- r, doubling r until the k-th nearest
/// candidate lies within r. Ties break toward lower ids.
template <RangeIndex Index>
ResultSet knn_progressive(const Index& idx, const KnnQuery& query, double initial_radius)
{
    const Dataset& ds = idx.dataset();
    require(query.q.size() == ds.dim(), "query and index dimensions differ");
    require(query.k >= 1 && query.k <= ds.size(), "knn needs 1 <= k <= N");
    const std::size_t d = ds.dim();

    double r = initial_radius;
    std::vector<Neighbor> cand;
    while (true) {
        Point lo(d), hi(d);
        for (std::size_t j = 0; j < d; ++j) {
            lo[j] = query.q[j] - r;
            hi[j] = query.q[j] + r;
        }
        const ResultSet hits = idx.range(RangeBox(std::move(lo), std::move(hi)));
        if (hits.size() >= query.k) {
            cand.clear();
            cand.reserve(hits.size());
            for (PointId id : hits)
                cand.push_back({std::sqrt(detail::squared_l2(ds.data() + id * d, query.q.data(), d)), id});
            std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(query.k - 1), cand.end());
            // Every point within r of q is inside the box, so the k-th candidate is final.
            if (cand[query.k - 1].dist <= r * (1.0 - 1e-12)) {
                std::sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(query.k));
                ResultSet out(query.k);
                for (std::size_t i = 0; i < query.k; ++i) out[i] = cand[i].id;
                return out;
            }
        }
        r *= 2.0;
    }
}

/// Progressive kNN bound to one index, with the data extent computed once.
template <RangeIndex Index>
class ProgressiveKnn {
public:
    explicit ProgressiveKnn(const Index& idx) : idx_(&idx), extent_(average_extent(idx.dataset())) {}

    double initial_radius(std::size_t k) const
    {
        return initial_knn_radius(idx_->dataset().size(), idx_->dataset().dim(), extent_, k);
    }

    ResultSet operator()(const KnnQuery& query) const { return knn_progressive(*idx_, query, initial_radius(query.k)); }

private:
    const Index* idx_;
    double extent_;
};

template <RangeIndex Index>
ResultSet knn_progressive(const Index& idx, const KnnQuery& query)
{
    return ProgressiveKnn<Index>(idx)(query);
}

}  // namespace mdli
