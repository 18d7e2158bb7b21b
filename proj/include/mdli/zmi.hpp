#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "mdli/core.hpp"
#include "mdli/pla.hpp"
#include "mdli/zorder.hpp"

namespace mdli {

/// Equal-width grid over the data's bounding box, with 2^bits buckets per dimension.
class EqualWidthCells {
public:
    EqualWidthCells() = default;
    EqualWidthCells(Point lo, Point hi, unsigned bits) : lo_(std::move(lo)), hi_(std::move(hi)), bits_(bits)
    {
        zorder::check_layout(lo_.size(), bits_);
        scale_.resize(lo_.size());
        const double buckets = std::ldexp(1.0, static_cast<int>(bits_));
        for (std::size_t j = 0; j < lo_.size(); ++j) {
            const double extent = hi_[j] - lo_[j];
            scale_[j] = extent > 0 ? buckets / extent : 0.0;
        }
    }

    /// Bits per dimension so that each dimension has at least ceil(n^(1/d)) buckets.
    static unsigned bits_for(std::size_t n, std::size_t d)
    {
        const auto per_dim = static_cast<std::uint64_t>(std::ceil(std::pow(static_cast<double>(n), 1.0 / static_cast<double>(d)) - 1e-9));
        unsigned bits = std::max(1u, static_cast<unsigned>(std::bit_width(std::max<std::uint64_t>(per_dim, 2) - 1)));
        while (bits > 1 && d * bits > 64) --bits;
        return bits;
    }

    std::uint32_t bucket(std::size_t j, double x) const noexcept
    {
        const std::uint32_t top = (std::uint32_t{1} << bits_) - 1;
        const double b = (x - lo_[j]) * scale_[j];
        if (!(b > 0)) return 0;
        if (b >= static_cast<double>(top)) return top;
        return static_cast<std::uint32_t>(b);
    }

    zorder::ZValue z_of(const double* p) const noexcept
    {
        const std::size_t d = lo_.size();
        zorder::ZValue z = 0;
        for (std::size_t m = 0; m < d; ++m) {
            const std::uint32_t c = bucket(m, p[m]);
            for (unsigned j = 0; j < bits_; ++j) z |= static_cast<zorder::ZValue>((c >> j) & 1u) << (j * d + m);
        }
        return z;
    }

    unsigned bits() const noexcept { return bits_; }
    std::size_t dim() const noexcept { return lo_.size(); }
    const Point& lo() const noexcept { return lo_; }
    const Point& hi() const noexcept { return hi_; }

private:
    Point lo_;
    Point hi_;
    Point scale_;
    unsigned bits_ = 1;
};

/// Z-order projection followed by a learned CDF over the sorted Z-values.
class ZmiIndex {
public:
    static ZmiIndex build(const Dataset& ds, std::size_t epsilon)
    {
        ZmiIndex idx;
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
        idx.pla_ = PlaModel<zorder::ZValue>::build(idx.keys_, epsilon);
        return idx;
    }

    ResultSet range(const RangeBox& box) const
    {
        require(box.dim() == ds_->dim(), "box and index dimensions differ");
        ResultSet out;
        Point lo, hi;
        if (!clip_box(box, cells_.lo(), cells_.hi(), lo, hi)) return out;
        const std::size_t d = ds_->dim();
        zorder::CellCoord lo_cell(d), hi_cell(d);
        for (std::size_t j = 0; j < d; ++j) {
            lo_cell[j] = cells_.bucket(j, lo[j]);
            hi_cell[j] = cells_.bucket(j, hi[j]);
        }
        for (const auto& iv : zorder::decompose_box(lo_cell, hi_cell, cells_.bits())) {
            const std::size_t first = pla_.search(keys_, iv.first);
            const std::size_t last = iv.last == ~zorder::ZValue{0} ? keys_.size() : pla_.search(keys_, iv.last + 1);
            detail::append_in_box(box.lo.data(), box.hi.data(), points_.data(), ids_.data(), first, last, d, out);
        }
        return out;
    }

    const Dataset& dataset() const noexcept { return *ds_; }
    const EqualWidthCells& cells() const noexcept { return cells_; }
    std::span<const zorder::ZValue> keys() const noexcept { return keys_; }
    std::span<const PointId> ids() const noexcept { return ids_; }
    const PlaModel<zorder::ZValue>& model() const noexcept { return pla_; }

    std::size_t metadata_bytes() const noexcept
    {
        return kIndexHeaderBytes + 2 * ds_->dim() * sizeof(double) + pla_.metadata_bytes();
    }

private:
    const Dataset* ds_ = nullptr;
    EqualWidthCells cells_;
    std::vector<zorder::ZValue> keys_;
    std::vector<PointId> ids_;
    std::vector<double> points_;
    PlaModel<zorder::ZValue> pla_;
};

}  // namespace mdli
