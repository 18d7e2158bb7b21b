#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "mdli/core.hpp"
#include "mdli/knn.hpp"
#include "mdli/zmi.hpp"

namespace mdli {

/// Sequential scan over points stored in Z-order of an equal-width grid.
/// Range scans start at the box's lowest Z-value and stop after its highest.
class FullScanIndex {
public:
    static FullScanIndex build(const Dataset& ds)
    {
        FullScanIndex idx;
        idx.ds_ = &ds;
        auto [lo, hi] = ds.bounds();
        idx.cells_ = EqualWidthCells(std::move(lo), std::move(hi), EqualWidthCells::bits_for(ds.size(), ds.dim()));
        std::vector<std::pair<zorder::ZValue, PointId>> pairs(ds.size());
        for (std::size_t i = 0; i < ds.size(); ++i) pairs[i] = {idx.cells_.z_of(ds.data() + i * ds.dim()), i};
        std::sort(pairs.begin(), pairs.end());
        idx.keys_.resize(pairs.size());
        idx.ids_.resize(pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            idx.keys_[i] = pairs[i].first;
            idx.ids_[i] = pairs[i].second;
        }
        idx.points_ = gather_points(ds, idx.ids_);
        return idx;
    }

    ResultSet range(const RangeBox& box) const
    {
        const std::size_t d = ds_->dim();
        require(box.dim() == d, "box and index dimensions differ");
        ResultSet out;
        Point lo, hi;
        if (!clip_box(box, cells_.lo(), cells_.hi(), lo, hi)) return out;
        const zorder::ZValue z_lo = cells_.z_of(lo.data());
        const zorder::ZValue z_hi = cells_.z_of(hi.data());
        const auto first = static_cast<std::size_t>(std::lower_bound(keys_.begin(), keys_.end(), z_lo) - keys_.begin());
        const auto last = static_cast<std::size_t>(std::upper_bound(keys_.begin(), keys_.end(), z_hi) - keys_.begin());
        detail::append_in_box(box.lo.data(), box.hi.data(), points_.data(), ids_.data(), first, last, d, out);
        return out;
    }

    ResultSet knn(const KnnQuery& query) const
    {
        const std::size_t d = ds_->dim();
        require(query.q.size() == d, "query and index dimensions differ");
        require(query.k >= 1 && query.k <= ds_->size(), "knn needs 1 <= k <= N");
        std::vector<Neighbor> all(ds_->size());
        for (std::size_t pos = 0; pos < all.size(); ++pos)
            all[pos] = {detail::squared_l2(points_.data() + pos * d, query.q.data(), d), ids_[pos]};
        const auto kth = all.begin() + static_cast<std::ptrdiff_t>(query.k);
        std::partial_sort(all.begin(), kth, all.end());
        ResultSet out(query.k);
        for (std::size_t i = 0; i < query.k; ++i) out[i] = all[i].id;
        return out;
    }

    const Dataset& dataset() const noexcept { return *ds_; }
    std::span<const zorder::ZValue> keys() const noexcept { return keys_; }
    std::span<const PointId> ids() const noexcept { return ids_; }
    const EqualWidthCells& cells() const noexcept { return cells_; }

    std::size_t metadata_bytes() const noexcept { return kIndexHeaderBytes + 2 * ds_->dim() * sizeof(double); }

private:
    const Dataset* ds_ = nullptr;
    EqualWidthCells cells_;
    std::vector<zorder::ZValue> keys_;
    std::vector<PointId> ids_;
    std::vector<double> points_;
};

}  // namespace mdli
