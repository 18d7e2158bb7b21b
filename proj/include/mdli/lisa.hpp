#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mdli/core.hpp"
#include "mdli/pla.hpp"

namespace mdli {

/// Partition count per dimension so that cells hold about `per_cell` points.
inline std::size_t partitions_per_dim(std::size_t n, std::size_t per_cell, std::size_t dims)
{
    const double cells = static_cast<double>(n) / static_cast<double>(per_cell);
    if (cells <= 1.0) return 1;
    const double t = std::pow(cells, 1.0 / static_cast<double>(dims));
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t - 1e-9)));
}

/// Quantile boundaries of one dimension: parts + 1 values, from min to max.
inline std::vector<double> equal_depth_boundaries(std::vector<double> values, std::size_t parts)
{
    require(!values.empty() && parts >= 1, "equal-depth boundaries need values and parts");
    std::sort(values.begin(), values.end());
    std::vector<double> b(parts + 1);
    b.front() = values.front();
    b.back() = values.back();
    for (std::size_t m = 1; m < parts; ++m) b[m] = values[m * values.size() / parts];
    return b;
}

/// Grid whose cells are [theta_l, theta_h) per dimension, numbered row-major.
class LisaGrid {
public:
    LisaGrid() = default;

    /// `boundaries[j]` holds T_j + 1 nondecreasing values.
    explicit LisaGrid(std::vector<std::vector<double>> boundaries) : bounds_(std::move(boundaries))
    {
        require(!bounds_.empty(), "grid needs at least one dimension");
        for (const auto& b : bounds_) {
            require(b.size() >= 2, "each dimension needs at least one partition");
            require(std::is_sorted(b.begin(), b.end()), "grid boundaries must be nondecreasing");
        }
        cells_ = 1;
        for (const auto& b : bounds_) cells_ *= b.size() - 1;
    }

    std::size_t dim() const noexcept { return bounds_.size(); }
    std::size_t parts(std::size_t j) const noexcept { return bounds_[j].size() - 1; }
    std::size_t cell_count() const noexcept { return cells_; }
    const std::vector<double>& boundaries(std::size_t j) const noexcept { return bounds_[j]; }

    /// Partition index along dimension j; values outside the grid clamp to the edge cells.
    std::size_t coord(std::size_t j, double x) const noexcept
    {
        const auto& b = bounds_[j];
        // Inner boundaries b[1..T-1]: count those <= x.
        const auto it = std::upper_bound(b.begin() + 1, b.end() - 1, x);
        return static_cast<std::size_t>(it - (b.begin() + 1));
    }

    /// Fraction of cell `c` along dimension j below x, in [0, 1].
    double fraction(std::size_t j, std::size_t c, double x) const noexcept
    {
        const double lo = bounds_[j][c];
        const double width = bounds_[j][c + 1] - lo;
        if (!(width > 0)) return 0.0;
        return std::clamp((x - lo) / width, 0.0, 1.0);
    }

    /// Key for cell t with intra-cell measure `frac`, kept inside [t, t+1).
    static double key_of(std::size_t t, double frac) noexcept
    {
        const double base = static_cast<double>(t);
        const double key = base + frac;
        const double ceiling = base + 1.0;
        return key < ceiling ? key : std::nextafter(ceiling, base);
    }

    double project(std::span<const double> p) const
    {
        require(p.size() == dim(), "point and grid dimensions differ");
        std::size_t t = 0;
        double frac = 1.0;
        for (std::size_t j = 0; j < dim(); ++j) {
            const std::size_t c = coord(j, p[j]);
            t = t * parts(j) + c;
            frac *= fraction(j, c, p[j]);
        }
        return key_of(t, frac);
    }

private:
    std::vector<std::vector<double>> bounds_;
    std::size_t cells_ = 0;
};

/// Grid projection onto [t, t + 1) per cell using the volume fraction of the
/// sub-box below the point, indexed with one learned CDF over the keys.
class LisaIndex {
public:
    static constexpr std::size_t kDefaultCellSize = 2000;

    static LisaIndex build(const Dataset& ds, std::size_t epsilon, std::size_t cell_size = kDefaultCellSize)
    {
        require(cell_size >= 1, "cell size must be positive");
        const std::size_t d = ds.dim();
        const std::size_t t = partitions_per_dim(ds.size(), cell_size, d);
        std::vector<std::vector<double>> bounds(d);
        std::vector<double> column(ds.size());
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t i = 0; i < ds.size(); ++i) column[i] = ds.data()[i * d + j];
            bounds[j] = equal_depth_boundaries(column, t);
        }
        return build_with_grid(ds, epsilon, LisaGrid(std::move(bounds)));
    }

    static LisaIndex build_with_grid(const Dataset& ds, std::size_t epsilon, LisaGrid grid)
    {
        require(grid.dim() == ds.dim(), "grid and dataset dimensions differ");
        LisaIndex idx;
        idx.ds_ = &ds;
        idx.grid_ = std::move(grid);
        std::vector<std::pair<double, PointId>> pairs(ds.size());
        for (std::size_t i = 0; i < ds.size(); ++i) pairs[i] = {idx.grid_.project(ds.point(i)), i};
        std::sort(pairs.begin(), pairs.end());
        idx.keys_.resize(pairs.size());
        idx.ids_.resize(pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            idx.keys_[i] = pairs[i].first;
            idx.ids_[i] = pairs[i].second;
        }
        idx.points_ = gather_points(ds, idx.ids_);
        idx.pla_ = PlaModel<double>::build(idx.keys_, epsilon);
        return idx;
    }

    ResultSet range(const RangeBox& box) const
    {
        const std::size_t d = ds_->dim();
        require(box.dim() == d, "box and index dimensions differ");
        ResultSet out;
        std::vector<std::size_t> lo_c(d), hi_c(d), cur(d);
        for (std::size_t j = 0; j < d; ++j) {
            const auto& b = grid_.boundaries(j);
            if (box.hi[j] < b.front() || box.lo[j] > b.back()) return out;
            lo_c[j] = grid_.coord(j, box.lo[j]);
            hi_c[j] = grid_.coord(j, box.hi[j]);
            cur[j] = lo_c[j];
        }
        while (true) {
            // Bounds on the product of per-dimension fractions of points in box and cell.
            std::size_t t = 0;
            double f_lo = 1.0;
            double f_hi = 1.0;
            for (std::size_t j = 0; j < d; ++j) {
                t = t * grid_.parts(j) + cur[j];
                f_lo *= grid_.fraction(j, cur[j], box.lo[j]);
                f_hi *= grid_.fraction(j, cur[j], box.hi[j]);
            }
            const double first = LisaGrid::key_of(t, f_lo);
            const double last = LisaGrid::key_of(t, f_hi);
            detail::append_in_box(box.lo.data(), box.hi.data(), points_.data(), ids_.data(), pla_.search(keys_, first),
                                  pla_.search(keys_, detail::next_up(last)), d, out);

            std::size_t j = d;
            while (j > 0) {
                --j;
                if (cur[j] < hi_c[j]) {
                    ++cur[j];
                    break;
                }
                cur[j] = lo_c[j];
                if (j == 0) return out;
            }
        }
    }

    const Dataset& dataset() const noexcept { return *ds_; }
    const LisaGrid& grid() const noexcept { return grid_; }
    std::span<const double> keys() const noexcept { return keys_; }
    std::span<const PointId> ids() const noexcept { return ids_; }
    const PlaModel<double>& model() const noexcept { return pla_; }

    std::size_t metadata_bytes() const noexcept
    {
        std::size_t bytes = kIndexHeaderBytes + pla_.metadata_bytes();
        for (std::size_t j = 0; j < grid_.dim(); ++j) bytes += grid_.boundaries(j).size() * sizeof(double);
        return bytes;
    }

private:
    const Dataset* ds_ = nullptr;
    LisaGrid grid_;
    std::vector<double> keys_;
    std::vector<PointId> ids_;
    std::vector<double> points_;
    PlaModel<double> pla_;
};

}  // namespace mdli
