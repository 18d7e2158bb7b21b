#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mdli {

using PointId = std::uint64_t;
using Point = std::vector<double>;
using ResultSet = std::vector<PointId>;

/// Raised when a caller violates a documented precondition.
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline void require(bool condition, const char* what)
{
    if (!condition) throw ContractError(what);
}

/// Immutable, id-indexed collection of d-dimensional points stored row-major.
class Dataset {
public:
    Dataset() = default;

    Dataset(std::size_t dim, std::vector<double> coords)
        : dim_(dim), coords_(std::move(coords))
    {
        require(dim_ >= 1, "dataset dimension must be positive");
        require(!coords_.empty(), "dataset must hold at least one point");
        require(coords_.size() % dim_ == 0, "coordinate count is not a multiple of the dimension");
        for (double c : coords_) require(std::isfinite(c), "dataset coordinates must be finite");
    }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }

    std::span<const double> point(PointId id) const noexcept
    {
        return {coords_.data() + id * dim_, dim_};
    }
    const double* data() const noexcept { return coords_.data(); }
    std::span<const double> coords() const noexcept { return coords_; }

    /// Per-dimension minimum and maximum.
    std::pair<Point, Point> bounds() const
    {
        Point lo(point(0).begin(), point(0).end());
        Point hi = lo;
        for (std::size_t i = 1; i < size(); ++i) {
            const double* p = data() + i * dim_;
            for (std::size_t j = 0; j < dim_; ++j) {
                lo[j] = std::min(lo[j], p[j]);
                hi[j] = std::max(hi[j], p[j]);
            }
        }
        return {std::move(lo), std::move(hi)};
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    std::size_t dim_ = 0;
    std::vector<double> coords_;
};

/// Closed hyper-rectangle [lo, hi].
struct RangeBox {
    Point lo;
    Point hi;

    RangeBox() = default;
    RangeBox(Point lower, Point upper) : lo(std::move(lower)), hi(std::move(upper))
    {
        require(lo.size() == hi.size() && !lo.empty(), "box corners must share a positive dimension");
        for (std::size_t j = 0; j < lo.size(); ++j)
            require(lo[j] <= hi[j], "box lower corner exceeds upper corner");
    }

    std::size_t dim() const noexcept { return lo.size(); }
    friend bool operator==(const RangeBox&, const RangeBox&) = default;
};

struct KnnQuery {
    Point q;
    std::size_t k = 1;

    KnnQuery() = default;
    KnnQuery(Point point, std::size_t count) : q(std::move(point)), k(count)
    {
        require(k >= 1, "knn query needs k >= 1");
    }
    friend bool operator==(const KnnQuery&, const KnnQuery&) = default;
};

namespace detail {

inline bool contains_raw(const double* lo, const double* hi, const double* p, std::size_t d) noexcept
{
    for (std::size_t j = 0; j < d; ++j)
        if (p[j] < lo[j] || p[j] > hi[j]) return false;
    return true;
}

/// Appends ids[pos] for every pos in [begin, end) whose point lies in the box.
/// Branch-free on the containment test; filters are close to 50/50 at box edges.
inline void append_in_box(const double* lo, const double* hi, const double* points, const PointId* ids,
                          std::size_t begin, std::size_t end, std::size_t d, ResultSet& out)
{
    constexpr std::size_t kChunk = 256;
    PointId buf[kChunk];
    for (std::size_t chunk = begin; chunk < end; chunk += kChunk) {
        const std::size_t stop = std::min(end, chunk + kChunk);
        std::size_t n = 0;
        if (d == 2) {
            for (std::size_t pos = chunk; pos < stop; ++pos) {
                const double* p = points + pos * 2;
                buf[n] = ids[pos];
                n += (p[0] >= lo[0]) & (p[0] <= hi[0]) & (p[1] >= lo[1]) & (p[1] <= hi[1]);
            }
        } else {
            for (std::size_t pos = chunk; pos < stop; ++pos) {
                const double* p = points + pos * d;
                bool in = true;
                for (std::size_t j = 0; j < d; ++j) in &= (p[j] >= lo[j]) & (p[j] <= hi[j]);
                buf[n] = ids[pos];
                n += in;
            }
        }
        out.insert(out.end(), buf, buf + n);
    }
}

/// Smallest double above x; probes for the end of a run of keys <= x.
inline double next_up(double x) noexcept { return std::nextafter(x, std::numeric_limits<double>::infinity()); }

inline double squared_l2(const double* a, const double* b, std::size_t d) noexcept
{
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double diff = a[j] - b[j];
        s += diff * diff;
    }
    return s;
}

}  // namespace detail

inline bool contains(const RangeBox& box, std::span<const double> p)
{
    require(box.dim() == p.size(), "box and point dimensions differ");
    return detail::contains_raw(box.lo.data(), box.hi.data(), p.data(), p.size());
}

inline double dist_l2(std::span<const double> a, std::span<const double> b)
{
    require(a.size() == b.size(), "points have different dimensions");
    return std::sqrt(detail::squared_l2(a.data(), b.data(), a.size()));
}

/// Fraction of the dataset's points that lie in the box.
inline double selectivity(const Dataset& ds, const RangeBox& box)
{
    require(ds.dim() == box.dim(), "box and dataset dimensions differ");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        hits += detail::contains_raw(box.lo.data(), box.hi.data(), ds.data() + i * ds.dim(), ds.dim());
    return static_cast<double>(hits) / static_cast<double>(ds.size());
}

/// Clamps a box to the given bounds. Returns false when they do not intersect.
inline bool clip_box(const RangeBox& box, std::span<const double> lo, std::span<const double> hi,
                     Point& out_lo, Point& out_hi)
{
    const std::size_t d = box.dim();
    out_lo.resize(d);
    out_hi.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        if (box.hi[j] < lo[j] || box.lo[j] > hi[j]) return false;
        out_lo[j] = std::max(box.lo[j], lo[j]);
        out_hi[j] = std::min(box.hi[j], hi[j]);
    }
    return true;
}

/// Copies the dataset's coordinates in the order given by `order`.
inline std::vector<double> gather_points(const Dataset& ds, std::span<const PointId> order)
{
    const std::size_t d = ds.dim();
    std::vector<double> out(order.size() * d);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const double* p = ds.data() + order[i] * d;
        std::copy(p, p + d, out.data() + i * d);
    }
    return out;
}

/// Bytes charged to every index for its fixed fields (dimension, counts, bounds pointer).
inline constexpr std::size_t kIndexHeaderBytes = 64;

}  // namespace mdli
