#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <utility>
#include <vector>

#include "mdli/core.hpp"
#include "mdli/knn.hpp"

namespace mdli {

inline constexpr std::size_t kTreeNodeHeaderBytes = 16;

namespace detail {

/// Sort-tile-recursive grouping. Reorders `items` so that consecutive runs of
/// at most `cap` items form tiles, appending each run's end offset to `ends`.
template <typename CoordOf>
void str_tile(std::span<std::uint64_t> items, std::size_t offset, std::size_t dim, std::size_t d, std::size_t cap,
              const CoordOf& coord_of, std::vector<std::size_t>& ends, std::vector<std::pair<double, std::uint64_t>>& scratch)
{
    const std::size_t n = items.size();
    if (n == 0) return;
    auto sort_by = [&](std::span<std::uint64_t> span, std::size_t j) {
        scratch.resize(span.size());
        for (std::size_t i = 0; i < span.size(); ++i) scratch[i] = {coord_of(span[i], j), span[i]};
        std::sort(scratch.begin(), scratch.end());
        for (std::size_t i = 0; i < span.size(); ++i) span[i] = scratch[i].second;
    };
    if (n <= cap) {
        sort_by(items, d - 1);
        ends.push_back(offset + n);
        return;
    }
    sort_by(items, dim);
    if (dim + 1 == d) {
        for (std::size_t b = 0; b < n; b += cap) ends.push_back(offset + std::min(n, b + cap));
        return;
    }
    const double pages = std::ceil(static_cast<double>(n) / static_cast<double>(cap));
    const auto slabs = static_cast<std::size_t>(std::ceil(std::pow(pages, 1.0 / static_cast<double>(d - dim)) - 1e-9));
    const std::size_t slab_size = cap * static_cast<std::size_t>(std::ceil(pages / static_cast<double>(std::max<std::size_t>(slabs, 1))));
    for (std::size_t b = 0; b < n; b += slab_size) {
        const std::size_t e = std::min(n, b + slab_size);
        str_tile(items.subspan(b, e - b), offset + b, dim + 1, d, cap, coord_of, ends, scratch);
    }
}

/// Static R-tree packed bottom-up with STR tiling at every level.
/// Nodes are stored level by level, leaves first; the root is the last node.
class PackedRTree {
public:
    struct Node {
        std::size_t begin;  ///< first child node, or first entry position for leaves
        std::size_t end;
        bool leaf;
    };

    PackedRTree() = default;

    PackedRTree(const Dataset& ds, std::size_t leaf_cap, std::size_t node_cap)
        : ds_(&ds), d_(ds.dim())
    {
        require(leaf_cap >= 2 && node_cap >= 2, "node capacities must be at least 2");
        const std::size_t n = ds.size();
        std::vector<std::uint64_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::vector<std::size_t> ends;
        std::vector<std::pair<double, std::uint64_t>> scratch;
        const double* data = ds.data();
        str_tile(std::span<std::uint64_t>(order), 0, 0, d_, leaf_cap,
                 [&](std::uint64_t id, std::size_t j) { return data[id * d_ + j]; }, ends, scratch);

        ids_.assign(order.begin(), order.end());
        points_ = gather_points(ds, ids_);
        std::size_t b = 0;
        for (std::size_t e : ends) {
            nodes_.push_back({b, e, true});
            b = e;
        }
        boxes_.resize(nodes_.size() * 2 * d_);
        for (std::size_t i = 0; i < nodes_.size(); ++i) fit_leaf_box(i);
        ++height_;

        std::size_t level_begin = 0;
        std::size_t level_end = nodes_.size();
        while (level_end - level_begin > 1) {
            // Tile the nodes of this level by their box centers.
            const std::size_t count = level_end - level_begin;
            std::vector<std::uint64_t> local(count);
            std::iota(local.begin(), local.end(), 0);
            std::vector<double> centers(count * d_);
            for (std::size_t i = 0; i < count; ++i)
                for (std::size_t j = 0; j < d_; ++j)
                    centers[i * d_ + j] = 0.5 * (lo(level_begin + i)[j] + hi(level_begin + i)[j]);
            std::vector<std::size_t> groups;
            str_tile(std::span<std::uint64_t>(local), 0, 0, d_, node_cap,
                     [&](std::uint64_t i, std::size_t j) { return centers[i * d_ + j]; }, groups, scratch);
            permute_level(level_begin, local);

            std::size_t gb = level_begin;
            for (std::size_t ge : groups) {
                nodes_.push_back({gb, level_begin + ge, false});
                gb = level_begin + ge;
            }
            boxes_.resize(nodes_.size() * 2 * d_);
            for (std::size_t i = level_end; i < nodes_.size(); ++i) fit_inner_box(i);
            level_begin = level_end;
            level_end = nodes_.size();
            ++height_;
        }
    }

    std::size_t root() const noexcept { return nodes_.size() - 1; }
    std::size_t height() const noexcept { return height_; }
    std::size_t dim() const noexcept { return d_; }
    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const double* lo(std::size_t node) const noexcept { return boxes_.data() + node * 2 * d_; }
    const double* hi(std::size_t node) const noexcept { return boxes_.data() + node * 2 * d_ + d_; }
    const Dataset& dataset() const noexcept { return *ds_; }
    std::vector<PointId>& ids() noexcept { return ids_; }
    std::vector<double>& points() noexcept { return points_; }
    std::span<const PointId> ids() const noexcept { return ids_; }
    std::span<const double> points() const noexcept { return points_; }

    std::size_t leaf_count() const noexcept
    {
        return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.leaf; }));
    }

    bool intersects(std::size_t node, const RangeBox& box) const noexcept
    {
        const double* l = lo(node);
        const double* h = hi(node);
        for (std::size_t j = 0; j < d_; ++j)
            if (h[j] < box.lo[j] || l[j] > box.hi[j]) return false;
        return true;
    }

    /// Squared distance from q to the node box.
    double min_dist_sq(std::size_t node, const double* q) const noexcept
    {
        const double* l = lo(node);
        const double* h = hi(node);
        double s = 0.0;
        for (std::size_t j = 0; j < d_; ++j) {
            const double diff = q[j] < l[j] ? l[j] - q[j] : (q[j] > h[j] ? q[j] - h[j] : 0.0);
            s += diff * diff;
        }
        return s;
    }

    /// Calls `leaf(node)` for every leaf whose box meets `box`.
    template <typename LeafVisit>
    void visit_leaves(const RangeBox& box, LeafVisit&& leaf) const
    {
        std::vector<std::size_t> stack{root()};
        if (!intersects(root(), box)) return;
        while (!stack.empty()) {
            const std::size_t cur = stack.back();
            stack.pop_back();
            const Node& node = nodes_[cur];
            if (node.leaf) {
                leaf(cur);
                continue;
            }
            for (std::size_t c = node.begin; c < node.end; ++c)
                if (intersects(c, box)) stack.push_back(c);
        }
    }

    std::size_t structure_bytes() const noexcept
    {
        return nodes_.size() * (kTreeNodeHeaderBytes + 2 * d_ * sizeof(double));
    }

private:
    void fit_leaf_box(std::size_t i)
    {
        double* l = boxes_.data() + i * 2 * d_;
        double* h = l + d_;
        std::fill(l, l + d_, std::numeric_limits<double>::infinity());
        std::fill(h, h + d_, -std::numeric_limits<double>::infinity());
        for (std::size_t pos = nodes_[i].begin; pos < nodes_[i].end; ++pos) {
            const double* p = points_.data() + pos * d_;
            for (std::size_t j = 0; j < d_; ++j) {
                l[j] = std::min(l[j], p[j]);
                h[j] = std::max(h[j], p[j]);
            }
        }
    }

    void fit_inner_box(std::size_t i)
    {
        double* l = boxes_.data() + i * 2 * d_;
        double* h = l + d_;
        std::fill(l, l + d_, std::numeric_limits<double>::infinity());
        std::fill(h, h + d_, -std::numeric_limits<double>::infinity());
        for (std::size_t c = nodes_[i].begin; c < nodes_[i].end; ++c) {
            for (std::size_t j = 0; j < d_; ++j) {
                l[j] = std::min(l[j], lo(c)[j]);
                h[j] = std::max(h[j], hi(c)[j]);
            }
        }
    }

    void permute_level(std::size_t level_begin, const std::vector<std::uint64_t>& local)
    {
        std::vector<Node> nodes(local.size());
        std::vector<double> boxes(local.size() * 2 * d_);
        for (std::size_t i = 0; i < local.size(); ++i) {
            nodes[i] = nodes_[level_begin + local[i]];
            std::copy_n(boxes_.data() + (level_begin + local[i]) * 2 * d_, 2 * d_, boxes.data() + i * 2 * d_);
        }
        std::copy(nodes.begin(), nodes.end(), nodes_.begin() + static_cast<std::ptrdiff_t>(level_begin));
        std::copy(boxes.begin(), boxes.end(), boxes_.begin() + static_cast<std::ptrdiff_t>(level_begin * 2 * d_));
    }

    const Dataset* ds_ = nullptr;
    std::size_t d_ = 0;
    std::size_t height_ = 0;
    std::vector<Node> nodes_;
    std::vector<double> boxes_;
    std::vector<PointId> ids_;
    std::vector<double> points_;
};

}  // namespace detail

/// R-tree bulk loaded with sort-tile-recursive packing.
class StrTree {
public:
    static constexpr std::size_t kDefaultFanout = 128;

    static StrTree build(const Dataset& ds, std::size_t fanout = kDefaultFanout)
    {
        StrTree t;
        t.tree_ = detail::PackedRTree(ds, fanout, fanout);
        return t;
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
            detail::append_in_box(box.lo.data(), box.hi.data(), points.data(), ids.data(), node.begin, node.end, d, out);
        });
        return out;
    }

    /// Best-first branch and bound on box distance.
    ResultSet knn(const KnnQuery& query) const
    {
        const std::size_t d = tree_.dim();
        require(query.q.size() == d, "query and index dimensions differ");
        require(query.k >= 1 && query.k <= dataset().size(), "knn needs 1 <= k <= N");
        const double* q = query.q.data();
        const auto points = tree_.points();
        const auto ids = tree_.ids();

        using Entry = std::pair<double, std::size_t>;
        std::priority_queue<Entry, std::vector<Entry>, std::greater<>> frontier;
        std::priority_queue<Neighbor> best;  // max-heap on (squared distance, id)
        frontier.push({tree_.min_dist_sq(tree_.root(), q), tree_.root()});
        while (!frontier.empty()) {
            const auto [dist, cur] = frontier.top();
            frontier.pop();
            if (best.size() == query.k && dist > best.top().dist) break;
            const auto& node = tree_.nodes()[cur];
            if (node.leaf) {
                for (std::size_t pos = node.begin; pos < node.end; ++pos) {
                    const Neighbor cand{detail::squared_l2(points.data() + pos * d, q, d), ids[pos]};
                    if (best.size() < query.k) {
                        best.push(cand);
                    } else if (cand < best.top()) {
                        best.pop();
                        best.push(cand);
                    }
                }
                continue;
            }
            for (std::size_t c = node.begin; c < node.end; ++c) {
                const double md = tree_.min_dist_sq(c, q);
                if (best.size() < query.k || md <= best.top().dist) frontier.push({md, c});
            }
        }
        ResultSet out(best.size());
        for (std::size_t i = out.size(); i > 0; --i) {
            out[i - 1] = best.top().id;
            best.pop();
        }
        return out;
    }

    const Dataset& dataset() const noexcept { return tree_.dataset(); }
    const detail::PackedRTree& tree() const noexcept { return tree_; }
    std::size_t height() const noexcept { return tree_.height(); }

    /// Node headers and boxes, plus the box of every leaf entry (a point's
    /// coordinates); entry pointers are not charged.
    std::size_t metadata_bytes() const noexcept
    {
        return kIndexHeaderBytes + tree_.structure_bytes() + tree_.points().size() * sizeof(double);
    }

private:
    detail::PackedRTree tree_;
};

}  // namespace mdli
