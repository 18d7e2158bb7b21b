#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mdli/core.hpp"
#include "mdli/kmeans.hpp"
#include "mdli/pla.hpp"

namespace mdli {

/// Distance-to-reference-point projection. A point nearest to reference i
/// maps to offset_i + dist(p, ref_i), where offset_i accumulates the radii of
/// the preceding partitions so partition key ranges never overlap.
class MliIndex {
public:
    static constexpr std::size_t kAutoPartitions = 0;
    static constexpr std::uint64_t kDefaultSeed = 42;

    /// 20 partitions below 20M points, 40 otherwise.
    static std::size_t auto_partitions(std::size_t n) { return n < 20'000'000 ? 20 : 40; }

    static MliIndex build(const Dataset& ds, std::size_t epsilon, std::size_t partitions = kAutoPartitions,
                          std::uint64_t seed = kDefaultSeed)
    {
        const std::size_t p = partitions == kAutoPartitions ? std::min(auto_partitions(ds.size()), ds.size()) : partitions;
        require(p >= 1 && ds.size() >= p, "ML-Index needs at least as many points as partitions");
        return build_with_references(ds, epsilon, kmeans(ds, p, seed).centers);
    }

    /// Builds with caller-supplied reference points (row-major, P x d).
    static MliIndex build_with_references(const Dataset& ds, std::size_t epsilon, std::vector<double> references)
    {
        const std::size_t d = ds.dim();
        require(!references.empty() && references.size() % d == 0, "reference points do not match the dimension");
        MliIndex idx;
        idx.ds_ = &ds;
        idx.refs_ = std::move(references);
        const std::size_t p = idx.refs_.size() / d;

        std::vector<std::size_t> part(ds.size());
        std::vector<double> dist(ds.size());
        idx.radius_.assign(p, 0.0);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const double* pt = ds.data() + i * d;
            part[i] = idx.nearest_reference(pt);
            dist[i] = std::sqrt(detail::squared_l2(pt, idx.refs_.data() + part[i] * d, d));
            idx.radius_[part[i]] = std::max(idx.radius_[part[i]], dist[i]);
        }
        idx.offset_.assign(p, 0.0);
        for (std::size_t r = 1; r < p; ++r) idx.offset_[r] = idx.offset_[r - 1] + idx.radius_[r - 1];

        struct Entry {
            double key;
            std::size_t part;
            PointId id;
        };
        std::vector<Entry> entries(ds.size());
        for (std::size_t i = 0; i < ds.size(); ++i) entries[i] = {idx.offset_[part[i]] + dist[i], part[i], i};
        std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
            if (a.key != b.key) return a.key < b.key;
            if (a.part != b.part) return a.part < b.part;
            return a.id < b.id;
        });
        idx.keys_.resize(entries.size());
        idx.ids_.resize(entries.size());
        idx.parts_.resize(entries.size());
        for (std::size_t i = 0; i < entries.size(); ++i) {
            idx.keys_[i] = entries[i].key;
            idx.ids_[i] = entries[i].id;
            idx.parts_[i] = static_cast<std::uint32_t>(entries[i].part);
        }
        idx.points_ = gather_points(ds, idx.ids_);
        idx.pla_ = PlaModel<double>::build(idx.keys_, epsilon);
        return idx;
    }

    /// Nearest reference point; ties go to the lowest index.
    std::size_t nearest_reference(const double* p) const noexcept
    {
        const std::size_t d = ds_->dim();
        std::size_t best = 0;
        double best_sq = detail::squared_l2(p, refs_.data(), d);
        for (std::size_t r = 1; r < partitions(); ++r) {
            const double s = detail::squared_l2(p, refs_.data() + r * d, d);
            if (s < best_sq) {
                best_sq = s;
                best = r;
            }
        }
        return best;
    }

    double project(std::span<const double> p) const
    {
        require(p.size() == ds_->dim(), "point and index dimensions differ");
        const std::size_t r = nearest_reference(p.data());
        return offset_[r] + std::sqrt(detail::squared_l2(p.data(), refs_.data() + r * ds_->dim(), ds_->dim()));
    }

    ResultSet range(const RangeBox& box) const
    {
        require(box.dim() == ds_->dim(), "box and index dimensions differ");
        const std::size_t d = ds_->dim();
        ResultSet out;
        for (std::size_t r = 0; r < partitions(); ++r) {
            const double* ref = refs_.data() + r * d;
            // Per-coordinate nearest and farthest box offsets from the reference point.
            double near_sq = 0.0;
            double far_sq = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double c = std::clamp(ref[j], box.lo[j], box.hi[j]);
                const double dn = ref[j] - c;
                near_sq += dn * dn;
                const double f = std::abs(ref[j] - box.lo[j]) >= std::abs(ref[j] - box.hi[j]) ? box.lo[j] : box.hi[j];
                const double df = ref[j] - f;
                far_sq += df * df;
            }
            const double near = std::sqrt(near_sq);
            if (near > radius_[r]) continue;
            const double far = std::min(std::sqrt(far_sq), radius_[r]);
            const double first = offset_[r] + near;
            const double last = offset_[r] + far;
            std::size_t pos = pla_.search(keys_, first);
            for (; pos < keys_.size() && keys_[pos] <= last; ++pos) {
                // Adjacent partitions share one boundary key value.
                if (parts_[pos] != r) continue;
                if (detail::contains_raw(box.lo.data(), box.hi.data(), points_.data() + pos * d, d))
                    out.push_back(ids_[pos]);
            }
        }
        return out;
    }

    const Dataset& dataset() const noexcept { return *ds_; }
    std::size_t partitions() const noexcept { return radius_.size(); }
    std::span<const double> references() const noexcept { return refs_; }
    std::span<const double> offsets() const noexcept { return offset_; }
    std::span<const double> radii() const noexcept { return radius_; }
    std::span<const double> keys() const noexcept { return keys_; }
    std::span<const PointId> ids() const noexcept { return ids_; }
    std::span<const std::uint32_t> partition_of_entry() const noexcept { return parts_; }
    const PlaModel<double>& model() const noexcept { return pla_; }

    std::size_t metadata_bytes() const noexcept
    {
        // Reference coordinates plus offset and radius per partition.
        return kIndexHeaderBytes + refs_.size() * sizeof(double) + 2 * partitions() * sizeof(double) +
               pla_.metadata_bytes();
    }

private:
    const Dataset* ds_ = nullptr;
    std::vector<double> refs_;
    std::vector<double> offset_;
    std::vector<double> radius_;
    std::vector<double> keys_;
    std::vector<PointId> ids_;
    std::vector<std::uint32_t> parts_;
    std::vector<double> points_;
    PlaModel<double> pla_;
};

}  // namespace mdli
