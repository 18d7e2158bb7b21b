#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <queue>
#include <span>
#include <vector>

#include "mdli/core.hpp"
#include "mdli/knn.hpp"
#include "mdli/str_tree.hpp"

namespace mdli {

/// Median-split kd-tree with round-robin split dimensions.
class KdTree {
public:
    static constexpr std::size_t kDefaultLeafSize = 16;

    struct Node {
        std::size_t begin;  ///< entry range covered by the subtree
        std::size_t end;
        std::uint32_t left;
        std::uint32_t right;
        std::uint32_t split_dim;
        double split;
        bool leaf() const noexcept { return left == kNone; }
    };
    static constexpr std::uint32_t kNone = ~std::uint32_t{0};

    static KdTree build(const Dataset& ds, std::size_t leaf_size = kDefaultLeafSize)
    {
        require(leaf_size >= 1, "leaf size must be positive");
        KdTree t;
        t.ds_ = &ds;
        t.leaf_size_ = leaf_size;
        t.ids_.resize(ds.size());
        std::iota(t.ids_.begin(), t.ids_.end(), 0);
        t.nodes_.reserve(2 * ds.size() / leaf_size + 1);
        t.build_node(0, ds.size(), 0);
        t.points_ = gather_points(ds, t.ids_);
        return t;
    }

    ResultSet range(const RangeBox& box) const
    {
        const std::size_t d = ds_->dim();
        require(box.dim() == d, "box and index dimensions differ");
        ResultSet out;
        std::vector<std::uint32_t> stack{0};
        while (!stack.empty()) {
            const Node& node = nodes_[stack.back()];
            stack.pop_back();
            if (node.leaf()) {
                detail::append_in_box(box.lo.data(), box.hi.data(), points_.data(), ids_.data(), node.begin, node.end, d,
                                      out);
                continue;
            }
            if (box.hi[node.split_dim] >= node.split) stack.push_back(node.right);
            if (box.lo[node.split_dim] <= node.split) stack.push_back(node.left);
        }
        return out;
    }

    ResultSet knn(const KnnQuery& query) const
    {
        const std::size_t d = ds_->dim();
        require(query.q.size() == d, "query and index dimensions differ");
        require(query.k >= 1 && query.k <= ds_->size(), "knn needs 1 <= k <= N");
        std::priority_queue<Neighbor> best;
        search(0, query.q.data(), query.k, best);
        ResultSet out(best.size());
        for (std::size_t i = out.size(); i > 0; --i) {
            out[i - 1] = best.top().id;
            best.pop();
        }
        return out;
    }

    const Dataset& dataset() const noexcept { return *ds_; }
    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    std::span<const PointId> ids() const noexcept { return ids_; }
    std::span<const double> points() const noexcept { return points_; }
    std::size_t leaf_size() const noexcept { return leaf_size_; }

    /// Node headers with their split planes; entry indices are not charged.
    std::size_t metadata_bytes() const noexcept
    {
        return kIndexHeaderBytes + nodes_.size() * (kTreeNodeHeaderBytes + 2 * sizeof(double));
    }

private:
    std::uint32_t build_node(std::size_t begin, std::size_t end, std::size_t depth)
    {
        const auto index = static_cast<std::uint32_t>(nodes_.size());
        nodes_.push_back({begin, end, kNone, kNone, 0, 0.0});
        if (end - begin <= leaf_size_) return index;

        const std::size_t d = ds_->dim();
        const auto dim = static_cast<std::uint32_t>(depth % d);
        const double* data = ds_->data();
        // Lower median goes left with everything not greater than it.
        const std::size_t mid = begin + (end - begin - 1) / 2;
        auto first = ids_.begin() + static_cast<std::ptrdiff_t>(begin);
        std::nth_element(first, ids_.begin() + static_cast<std::ptrdiff_t>(mid), ids_.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](PointId a, PointId b) {
                             const double va = data[a * d + dim];
                             const double vb = data[b * d + dim];
                             return va < vb || (va == vb && a < b);
                         });
        const double split = data[ids_[mid] * d + dim];
        const std::uint32_t left = build_node(begin, mid + 1, depth + 1);
        const std::uint32_t right = build_node(mid + 1, end, depth + 1);
        Node& node = nodes_[index];
        node.left = left;
        node.right = right;
        node.split_dim = dim;
        node.split = split;
        return index;
    }

    void search(std::uint32_t index, const double* q, std::size_t k, std::priority_queue<Neighbor>& best) const
    {
        const Node& node = nodes_[index];
        const std::size_t d = ds_->dim();
        if (node.leaf()) {
            for (std::size_t pos = node.begin; pos < node.end; ++pos) {
                const Neighbor cand{detail::squared_l2(points_.data() + pos * d, q, d), ids_[pos]};
                if (best.size() < k) {
                    best.push(cand);
                } else if (cand < best.top()) {
                    best.pop();
                    best.push(cand);
                }
            }
            return;
        }
        const double diff = q[node.split_dim] - node.split;
        const std::uint32_t near = diff <= 0 ? node.left : node.right;
        const std::uint32_t far = diff <= 0 ? node.right : node.left;
        search(near, q, k, best);
        if (best.size() < k || diff * diff <= best.top().dist) search(far, q, k, best);
    }

    const Dataset* ds_ = nullptr;
    std::size_t leaf_size_ = kDefaultLeafSize;
    std::vector<Node> nodes_;
    std::vector<PointId> ids_;
    std::vector<double> points_;
};

}  // namespace mdli
