#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "mdli/core.hpp"
#include "mdli/str_tree.hpp"

namespace mdli {

/// Least-squares line from a coordinate to its position inside a sorted leaf.
struct LeafModel {
    double slope = 0.0;
    double intercept = 0.0;
    double max_error = 0.0;  ///< largest |slope * x + intercept - rank| over the leaf

    double predict(double x) const noexcept { return slope * x + intercept; }

    /// Fits ranks 0..n-1 against `xs`, which must be sorted.
    static LeafModel fit(std::span<const double> xs)
    {
        LeafModel m;
        const std::size_t n = xs.size();
        if (n == 0) return m;
        const double mean_r = static_cast<double>(n - 1) / 2.0;
        double mean_x = 0.0;
        for (double x : xs) mean_x += x;
        mean_x /= static_cast<double>(n);
        double var = 0.0;
        double cov = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double dx = xs[r] - mean_x;
            var += dx * dx;
            cov += dx * (static_cast<double>(r) - mean_r);
        }
        if (var > 0 && std::isfinite(cov / var)) {
            m.slope = std::max(0.0, cov / var);
            m.intercept = mean_r - m.slope * mean_x;
        } else {
            m.slope = 0.0;
            m.intercept = mean_r;
        }
        for (std::size_t r = 0; r < n; ++r)
            m.max_error = std::max(m.max_error, std::abs(m.predict(xs[r]) - static_cast<double>(r)));
        return m;
    }
};

inline constexpr std::size_t kLeafModelBytes = 32;  // sort dimension, slope, intercept, error

/// R-tree whose leaves are searched through a linear model on one sort dimension.
class IfiIndex {
public:
    static constexpr std::size_t kDefaultLeafCapacity = 1000;
    static constexpr std::size_t kDefaultNodeCapacity = 64;

    static IfiIndex build(const Dataset& ds, std::size_t leaf_cap = kDefaultLeafCapacity,
                          std::size_t node_cap = kDefaultNodeCapacity, std::size_t sort_dim = 0)
    {
        require(sort_dim < ds.dim(), "sort dimension out of range");
        IfiIndex idx;
        idx.sort_dim_ = sort_dim;
        idx.tree_ = detail::PackedRTree(ds, leaf_cap, node_cap);
        const std::size_t d = ds.dim();

        auto& ids = idx.tree_.ids();
        auto& points = idx.tree_.points();
        idx.keys_.resize(ids.size());
        idx.models_.resize(idx.tree_.nodes().size());
        std::vector<std::pair<double, PointId>> scratch;
        for (std::size_t n = 0; n < idx.tree_.nodes().size(); ++n) {
            const auto& node = idx.tree_.nodes()[n];
            if (!node.leaf) continue;
            scratch.clear();
            for (std::size_t pos = node.begin; pos < node.end; ++pos)
                scratch.push_back({points[pos * d + sort_dim], ids[pos]});
            std::sort(scratch.begin(), scratch.end());
            for (std::size_t i = 0; i < scratch.size(); ++i) {
                const std::size_t pos = node.begin + i;
                ids[pos] = scratch[i].second;
                const double* p = ds.data() + scratch[i].second * d;
                std::copy(p, p + d, points.data() + pos * d);
                idx.keys_[pos] = scratch[i].first;
            }
            idx.models_[n] = LeafModel::fit(std::span<const double>(idx.keys_).subspan(node.begin, node.end - node.begin));
        }
        return idx;
    }

    ResultSet range(const RangeBox& box) const
    {
        const std::size_t d = tree_.dim();
        require(box.dim() == d, "box and index dimensions differ");
        ResultSet out;
        const auto points = tree_.points();
        const auto ids = tree_.ids();
        tree_.visit_leaves(box, [&](std::size_t leaf) {
            const auto& node = tree_.nodes()[leaf];
            const auto [first, last] = window(leaf, box.lo[sort_dim_], box.hi[sort_dim_]);
            detail::append_in_box(box.lo.data(), box.hi.data(), points.data(), ids.data(), node.begin + first,
                                  node.begin + last, d, out);
        });
        return out;
    }

    /// Leaf-relative [first, last) positions that may hold sort keys in [lo, hi].
    std::pair<std::size_t, std::size_t> window(std::size_t leaf, double lo, double hi) const noexcept
    {
        const auto& node = tree_.nodes()[leaf];
        const auto& m = models_[leaf];
        const double size = static_cast<double>(node.end - node.begin);
        // One extra slot each side covers rounding in the stored error.
        const double a = std::floor(m.predict(lo) - m.max_error) - 1.0;
        const double b = std::ceil(m.predict(hi) + m.max_error) + 2.0;
        const auto first = static_cast<std::size_t>(std::clamp(a, 0.0, size));
        const auto last = static_cast<std::size_t>(std::clamp(b, 0.0, size));
        return {first, std::max(first, last)};
    }

    const Dataset& dataset() const noexcept { return tree_.dataset(); }
    const detail::PackedRTree& tree() const noexcept { return tree_; }
    std::size_t sort_dim() const noexcept { return sort_dim_; }
    const LeafModel& model(std::size_t leaf) const noexcept { return models_[leaf]; }
    std::span<const double> leaf_keys(std::size_t leaf) const noexcept
    {
        const auto& node = tree_.nodes()[leaf];
        return std::span<const double>(keys_).subspan(node.begin, node.end - node.begin);
    }

    std::size_t metadata_bytes() const noexcept
    {
        return kIndexHeaderBytes + tree_.structure_bytes() + tree_.leaf_count() * kLeafModelBytes;
    }

private:
    std::size_t sort_dim_ = 0;
    detail::PackedRTree tree_;
    std::vector<LeafModel> models_;
    std::vector<double> keys_;
};

}  // namespace mdli
