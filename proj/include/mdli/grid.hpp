#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "mdli/core.hpp"
#include "mdli/lisa.hpp"
#include "mdli/pla.hpp"

namespace mdli {

namespace detail {

/// Row-major bucketing of points into cells; returns per-cell begin offsets (size cells + 1)
/// and fills `order` with point ids grouped by cell.
template <typename CellOf>
std::vector<std::size_t> bucket_points(std::size_t n, std::size_t cells, CellOf&& cell_of, std::vector<PointId>& order)
{
    std::vector<std::size_t> cell(n);
    std::vector<std::size_t> begin(cells + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        cell[i] = cell_of(i);
        ++begin[cell[i] + 1];
    }
    std::partial_sum(begin.begin(), begin.end(), begin.begin());
    order.resize(n);
    std::vector<std::size_t> fill(begin.begin(), begin.end() - 1);
    for (std::size_t i = 0; i < n; ++i) order[fill[cell[i]]++] = i;
    return begin;
}

/// Visits every row-major cell index in the box [lo, hi] of per-dimension cell coordinates.
template <typename Visit>
void for_each_cell(std::span<const std::size_t> parts, std::span<const std::size_t> lo, std::span<const std::size_t> hi,
                   Visit&& visit)
{
    const std::size_t d = parts.size();
    if (d == 0) {
        visit(std::size_t{0});
        return;
    }
    std::vector<std::size_t> cur(lo.begin(), lo.end());
    while (true) {
        std::size_t t = 0;
        for (std::size_t j = 0; j < d; ++j) t = t * parts[j] + cur[j];
        visit(t);
        std::size_t j = d;
        while (true) {
            --j;
            if (cur[j] < hi[j]) {
                ++cur[j];
                break;
            }
            cur[j] = lo[j];
            if (j == 0) return;
        }
    }
}

}  // namespace detail

/// Learned grid: non-sort dimensions are bucketed through learned CDFs,
/// each cell keeps its points sorted on the sort dimension with its own CDF.
class FloodIndex {
public:
    static constexpr std::size_t kDefaultCellSize = 2000;
    static constexpr std::size_t kLastDimension = static_cast<std::size_t>(-1);

    static FloodIndex build(const Dataset& ds, std::size_t epsilon, std::size_t cell_size = kDefaultCellSize,
                            std::size_t sort_dim = kLastDimension)
    {
        const std::size_t d = ds.dim();
        require(d >= 2, "Flood needs at least two dimensions");
        require(cell_size >= 1, "cell size must be positive");
        if (sort_dim == kLastDimension) sort_dim = d - 1;
        require(sort_dim < d, "sort dimension out of range");

        FloodIndex idx;
        idx.ds_ = &ds;
        idx.sort_dim_ = sort_dim;
        for (std::size_t j = 0; j < d; ++j)
            if (j != sort_dim) idx.grid_dims_.push_back(j);
        const std::size_t k = partitions_per_dim(ds.size(), cell_size, d - 1);
        idx.parts_.assign(d - 1, k);

        std::vector<double> column(ds.size());
        for (std::size_t g = 0; g < d - 1; ++g) {
            const std::size_t j = idx.grid_dims_[g];
            for (std::size_t i = 0; i < ds.size(); ++i) column[i] = ds.data()[i * d + j];
            std::sort(column.begin(), column.end());
            idx.cdfs_.push_back(PlaModel<double>::build(column, epsilon));
        }

        std::size_t cells = 1;
        for (std::size_t p : idx.parts_) cells *= p;
        std::vector<PointId> order;
        idx.begin_ = detail::bucket_points(
            ds.size(), cells, [&](std::size_t i) { return idx.cell_of(ds.data() + i * d); }, order);

        const double* data = ds.data();
        for (std::size_t c = 0; c < cells; ++c) {
            std::sort(order.begin() + static_cast<std::ptrdiff_t>(idx.begin_[c]),
                      order.begin() + static_cast<std::ptrdiff_t>(idx.begin_[c + 1]), [&](PointId a, PointId b) {
                          const double va = data[a * d + sort_dim];
                          const double vb = data[b * d + sort_dim];
                          return va < vb || (va == vb && a < b);
                      });
        }
        idx.ids_ = std::move(order);
        idx.points_ = gather_points(ds, idx.ids_);
        idx.sort_keys_.resize(ds.size());
        for (std::size_t i = 0; i < ds.size(); ++i) idx.sort_keys_[i] = idx.points_[i * d + sort_dim];

        idx.cell_models_.resize(cells);
        for (std::size_t c = 0; c < cells; ++c) {
            if (idx.begin_[c] == idx.begin_[c + 1]) continue;
            idx.cell_models_[c] = PlaModel<double>::build(idx.cell_keys(c), epsilon);
        }
        return idx;
    }

    /// Grid coordinate along the g-th non-sort dimension.
    std::size_t coord(std::size_t g, double x) const noexcept
    {
        const auto& cdf = cdfs_[g];
        const double frac = cdf.predict(x) / static_cast<double>(cdf.size());
        const auto c = static_cast<std::size_t>(std::max(0.0, std::floor(frac * static_cast<double>(parts_[g]))));
        return std::min(c, parts_[g] - 1);
    }

    std::size_t cell_of(const double* p) const noexcept
    {
        std::size_t t = 0;
        for (std::size_t g = 0; g < grid_dims_.size(); ++g) t = t * parts_[g] + coord(g, p[grid_dims_[g]]);
        return t;
    }

    std::size_t cell_of(std::span<const double> p) const
    {
        require(p.size() == ds_->dim(), "point and index dimensions differ");
        return cell_of(p.data());
    }

    ResultSet range(const RangeBox& box) const
    {
        const std::size_t d = ds_->dim();
        require(box.dim() == d, "box and index dimensions differ");
        ResultSet out;
        const std::size_t g_count = grid_dims_.size();
        std::vector<std::size_t> lo(g_count), hi(g_count);
        for (std::size_t g = 0; g < g_count; ++g) {
            lo[g] = coord(g, box.lo[grid_dims_[g]]);
            hi[g] = coord(g, box.hi[grid_dims_[g]]);
        }
        const double s_lo = box.lo[sort_dim_];
        const double s_hi = box.hi[sort_dim_];
        detail::for_each_cell(parts_, lo, hi, [&](std::size_t c) {
            const std::size_t b = begin_[c];
            const std::size_t e = begin_[c + 1];
            if (b == e) return;
            const auto keys = cell_keys(c);
            const std::size_t first = b + cell_models_[c].search(keys, s_lo);
            const std::size_t last = b + cell_models_[c].search(keys, detail::next_up(s_hi));
            detail::append_in_box(box.lo.data(), box.hi.data(), points_.data(), ids_.data(), first, last, d, out);
        });
        return out;
    }

    const Dataset& dataset() const noexcept { return *ds_; }
    std::size_t sort_dim() const noexcept { return sort_dim_; }
    std::span<const std::size_t> parts() const noexcept { return parts_; }
    std::span<const std::size_t> grid_dims() const noexcept { return grid_dims_; }
    std::size_t cell_count() const noexcept { return begin_.size() - 1; }
    std::size_t cell_size(std::size_t c) const noexcept { return begin_[c + 1] - begin_[c]; }
    std::span<const PointId> cell_ids(std::size_t c) const noexcept
    {
        return std::span<const PointId>(ids_).subspan(begin_[c], cell_size(c));
    }
    std::span<const double> cell_keys(std::size_t c) const noexcept
    {
        return std::span<const double>(sort_keys_).subspan(begin_[c], cell_size(c));
    }

    std::size_t metadata_bytes() const noexcept
    {
        std::size_t bytes = kIndexHeaderBytes + parts_.size() * sizeof(std::uint64_t);
        for (const auto& m : cdfs_) bytes += m.metadata_bytes();
        for (const auto& m : cell_models_)
            if (m.size() > 0) bytes += m.metadata_bytes();
        return bytes;
    }

private:
    const Dataset* ds_ = nullptr;
    std::size_t sort_dim_ = 0;
    std::vector<std::size_t> grid_dims_;
    std::vector<std::size_t> parts_;
    std::vector<PlaModel<double>> cdfs_;
    std::vector<std::size_t> begin_;
    std::vector<PointId> ids_;
    std::vector<double> points_;
    std::vector<double> sort_keys_;
    std::vector<PlaModel<double>> cell_models_;
};

enum class GridMode { EqualWidth, EqualDepth };

/// Non-learned grid with equal-width (UG) or equal-depth (EDG) boundaries.
class GridIndex {
public:
    static constexpr std::size_t kDefaultCellSize = 2000;

    static GridIndex build(const Dataset& ds, GridMode mode, std::size_t cell_size = kDefaultCellSize)
    {
        require(cell_size >= 1, "cell size must be positive");
        const std::size_t d = ds.dim();
        GridIndex idx;
        idx.ds_ = &ds;
        idx.mode_ = mode;
        const std::size_t k = partitions_per_dim(ds.size(), cell_size, d);
        idx.parts_.assign(d, k);
        idx.bounds_.resize(d);
        auto [lo, hi] = ds.bounds();
        std::vector<double> column(ds.size());
        for (std::size_t j = 0; j < d; ++j) {
            if (mode == GridMode::EqualDepth) {
                for (std::size_t i = 0; i < ds.size(); ++i) column[i] = ds.data()[i * d + j];
                idx.bounds_[j] = equal_depth_boundaries(column, k);
            } else {
                auto& b = idx.bounds_[j];
                b.resize(k + 1);
                for (std::size_t m = 0; m <= k; ++m)
                    b[m] = lo[j] + (hi[j] - lo[j]) * static_cast<double>(m) / static_cast<double>(k);
                b.back() = hi[j];
            }
        }
        std::size_t cells = 1;
        for (std::size_t p : idx.parts_) cells *= p;
        std::vector<PointId> order;
        idx.begin_ = detail::bucket_points(
            ds.size(), cells, [&](std::size_t i) { return idx.cell_of(ds.data() + i * d); }, order);
        idx.ids_ = std::move(order);
        idx.points_ = gather_points(ds, idx.ids_);
        return idx;
    }

    std::size_t coord(std::size_t j, double x) const noexcept
    {
        const auto& b = bounds_[j];
        const std::size_t k = parts_[j];
        if (mode_ == GridMode::EqualWidth) {
            const double extent = b.back() - b.front();
            if (!(extent > 0)) return 0;
            const double pos = (x - b.front()) / extent * static_cast<double>(k);
            if (!(pos > 0)) return 0;
            return std::min(static_cast<std::size_t>(pos), k - 1);
        }
        return static_cast<std::size_t>(std::upper_bound(b.begin() + 1, b.end() - 1, x) - (b.begin() + 1));
    }

    std::size_t cell_of(const double* p) const noexcept
    {
        std::size_t t = 0;
        for (std::size_t j = 0; j < parts_.size(); ++j) t = t * parts_[j] + coord(j, p[j]);
        return t;
    }

    ResultSet range(const RangeBox& box) const
    {
        const std::size_t d = ds_->dim();
        require(box.dim() == d, "box and index dimensions differ");
        ResultSet out;
        std::vector<std::size_t> lo(d), hi(d);
        for (std::size_t j = 0; j < d; ++j) {
            if (box.hi[j] < bounds_[j].front() || box.lo[j] > bounds_[j].back()) return out;
            lo[j] = coord(j, box.lo[j]);
            hi[j] = coord(j, box.hi[j]);
        }
        detail::for_each_cell(parts_, lo, hi, [&](std::size_t c) {
            detail::append_in_box(box.lo.data(), box.hi.data(), points_.data(), ids_.data(), begin_[c], begin_[c + 1], d,
                                  out);
        });
        return out;
    }

    const Dataset& dataset() const noexcept { return *ds_; }
    GridMode mode() const noexcept { return mode_; }
    std::span<const std::size_t> parts() const noexcept { return parts_; }
    const std::vector<double>& boundaries(std::size_t j) const noexcept { return bounds_[j]; }
    std::size_t cell_count() const noexcept { return begin_.size() - 1; }
    std::size_t cell_size(std::size_t c) const noexcept { return begin_[c + 1] - begin_[c]; }
    std::span<const PointId> cell_ids(std::size_t c) const noexcept
    {
        return std::span<const PointId>(ids_).subspan(begin_[c], cell_size(c));
    }

    /// Boundary arrays only; bucket offsets are per-point bookkeeping.
    std::size_t metadata_bytes() const noexcept
    {
        std::size_t bytes = kIndexHeaderBytes;
        for (const auto& b : bounds_) bytes += b.size() * sizeof(double);
        return bytes;
    }

private:
    const Dataset* ds_ = nullptr;
    GridMode mode_ = GridMode::EqualWidth;
    std::vector<std::size_t> parts_;
    std::vector<std::vector<double>> bounds_;
    std::vector<std::size_t> begin_;
    std::vector<PointId> ids_;
    std::vector<double> points_;
};

}  // namespace mdli
