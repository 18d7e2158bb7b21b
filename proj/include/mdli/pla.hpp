#pragma once

// Error-bounded piecewise linear approximation of the rank function of a
// sorted key array. Segments are fitted in one streaming pass with the
// optimal convex-hull construction, so the segment count is the minimum any
// epsilon-bounded PLA can achieve on the input.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <type_traits>
#include <vector>

#include "mdli/core.hpp"

namespace mdli {

namespace detail {

class OptimalPlaFitter {
public:
    struct Fit {
        double slope;
        double intercept;
    };

    explicit OptimalPlaFitter(long double epsilon) : epsilon_(epsilon) {}

    void reset() { points_in_hull_ = 0; }
    std::size_t points() const { return points_in_hull_; }

    /// Tries to extend the current segment with (x, y). x must increase strictly.
    bool add_point(long double x, long double y)
    {
        const Pt p1{x, y + epsilon_};
        const Pt p2{x, y - epsilon_};

        if (points_in_hull_ == 0) {
            rect_[0] = p1;
            rect_[1] = p2;
            upper_.clear();
            lower_.clear();
            upper_.push_back(p1);
            lower_.push_back(p2);
            upper_start_ = lower_start_ = 0;
            ++points_in_hull_;
            return true;
        }
        if (points_in_hull_ == 1) {
            rect_[2] = p2;
            rect_[3] = p1;
            upper_.push_back(p1);
            lower_.push_back(p2);
            ++points_in_hull_;
            return true;
        }

        const Slope slope1 = rect_[2] - rect_[0];
        const Slope slope2 = rect_[3] - rect_[1];
        const bool outside_line1 = (p1 - rect_[2]) < slope1;
        const bool outside_line2 = (p2 - rect_[3]) > slope2;
        if (outside_line1 || outside_line2) {
            points_in_hull_ = 0;
            return false;
        }

        if ((p1 - rect_[1]) < slope2) {
            Slope min = lower_[lower_start_] - p1;
            std::size_t min_i = lower_start_;
            for (std::size_t i = lower_start_ + 1; i < lower_.size(); ++i) {
                const Slope val = lower_[i] - p1;
                if (val > min) break;
                min = val;
                min_i = i;
            }
            rect_[1] = lower_[min_i];
            rect_[3] = p1;
            lower_start_ = min_i;

            std::size_t end = upper_.size();
            while (end >= upper_start_ + 2 && cross(upper_[end - 2], upper_[end - 1], p1) <= 0) --end;
            upper_.resize(end);
            upper_.push_back(p1);
        }

        if ((p2 - rect_[0]) > slope1) {
            Slope max = upper_[upper_start_] - p2;
            std::size_t max_i = upper_start_;
            for (std::size_t i = upper_start_ + 1; i < upper_.size(); ++i) {
                const Slope val = upper_[i] - p2;
                if (val < max) break;
                max = val;
                max_i = i;
            }
            rect_[0] = upper_[max_i];
            rect_[2] = p2;
            upper_start_ = max_i;

            std::size_t end = lower_.size();
            while (end >= lower_start_ + 2 && cross(lower_[end - 2], lower_[end - 1], p2) >= 0) --end;
            lower_.resize(end);
            lower_.push_back(p2);
        }

        ++points_in_hull_;
        return true;
    }

    /// Line through the current hull, expressed relative to x = 0, with slope >= 0.
    Fit fit() const
    {
        if (points_in_hull_ == 1) {
            return {0.0, static_cast<double>((rect_[0].y + rect_[1].y) / 2)};
        }
        const Slope min_slope = rect_[2] - rect_[0];
        const Slope max_slope = rect_[3] - rect_[1];
        const long double lo = min_slope.dy / min_slope.dx;
        const long double hi = max_slope.dy / max_slope.dx;

        const long double a = min_slope.dx * max_slope.dy - min_slope.dy * max_slope.dx;
        long double ix;
        long double iy;
        if (a == 0) {
            ix = rect_[0].x;
            iy = (rect_[0].y + rect_[1].y) / 2;
        } else {
            const long double b = ((rect_[1].x - rect_[0].x) * (rect_[3].y - rect_[1].y) -
                                   (rect_[1].y - rect_[0].y) * (rect_[3].x - rect_[1].x)) /
                                  a;
            ix = rect_[0].x + b * min_slope.dx;
            iy = rect_[0].y + b * min_slope.dy;
        }
        long double slope = (lo + hi) / 2;
        // A nondecreasing line always exists because the ranks increase.
        if (slope < 0) slope = std::min<long double>(0, hi);
        const long double intercept = iy - ix * slope;
        return {static_cast<double>(slope), static_cast<double>(intercept)};
    }

private:
    struct Slope {
        long double dx;
        long double dy;
        bool operator<(const Slope& o) const { return dy * o.dx < o.dy * dx; }
        bool operator>(const Slope& o) const { return dy * o.dx > o.dy * dx; }
    };
    struct Pt {
        long double x;
        long double y;
        Slope operator-(const Pt& o) const { return {x - o.x, y - o.y}; }
    };

    static long double cross(const Pt& o, const Pt& a, const Pt& b)
    {
        return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    }

    long double epsilon_;
    std::size_t points_in_hull_ = 0;
    Pt rect_[4]{};
    std::vector<Pt> upper_;
    std::vector<Pt> lower_;
    std::size_t upper_start_ = 0;
    std::size_t lower_start_ = 0;
};

}  // namespace detail

inline constexpr std::size_t kPlaSegmentBytes = 24;
inline constexpr std::size_t kPlaHeaderBytes = 16;

/// Epsilon-bounded piecewise linear CDF over a sorted key array.
///
/// For every key stored at build time, `predict` is within `epsilon` of the
/// rank of the key's first occurrence, and `predict` is nondecreasing.
template <typename Key>
class PlaModel {
    static_assert(std::is_arithmetic_v<Key>);

public:
    struct Segment {
        Key first_key;
        double slope;
        double intercept;
    };

    PlaModel() = default;

    static PlaModel build(std::span<const Key> keys, std::size_t epsilon)
    {
        require(!keys.empty(), "PLA needs at least one key");
        require(epsilon >= 1, "PLA epsilon must be at least 1");
        for (std::size_t i = 1; i < keys.size(); ++i)
            require(!(keys[i] < keys[i - 1]), "PLA keys must be sorted");

        PlaModel model;
        model.n_ = keys.size();
        model.epsilon_ = epsilon;
        model.min_key_ = keys.front();
        model.max_key_ = keys.back();

        // The margin absorbs double rounding when the long double fit is stored.
        detail::OptimalPlaFitter fitter(static_cast<long double>(epsilon) - 1e-6L);
        Key first = keys.front();
        auto flush = [&] {
            const auto fit = fitter.fit();
            model.segments_.push_back({first, fit.slope, fit.intercept});
        };
        for (std::size_t i = 0; i < keys.size(); ++i) {
            if (i > 0 && keys[i] == keys[i - 1]) continue;
            if (fitter.points() == 0) first = keys[i];
            const long double x = offset(keys[i], first);
            const long double y = static_cast<long double>(i);
            if (!fitter.add_point(x, y)) {
                flush();
                first = keys[i];
                fitter.add_point(0, y);
            }
        }
        flush();

        model.caps_.resize(model.segments_.size());
        for (std::size_t s = 0; s + 1 < model.segments_.size(); ++s)
            model.caps_[s] = model.segments_[s + 1].intercept;
        model.caps_.back() = std::numeric_limits<double>::infinity();
        return model;
    }

    /// Approximate rank of `key`, clamped to [0, n-1].
    double predict(Key key) const noexcept
    {
        if (key < min_key_) return 0.0;
        if (key > max_key_) return static_cast<double>(n_ - 1);
        const std::size_t s = segment_for(key);
        const Segment& seg = segments_[s];
        double pos = seg.slope * delta(key, seg.first_key) + seg.intercept;
        pos = std::min(pos, caps_[s]);
        return std::clamp(pos, 0.0, static_cast<double>(n_ - 1));
    }

    /// First position i with keys[i] >= key; `keys` must be the build input.
    std::size_t search(std::span<const Key> keys, Key key) const noexcept
    {
        if (key <= min_key_) return 0;
        if (key > max_key_) return n_;
        const double pos = predict(key);
        const double eps = static_cast<double>(epsilon_);
        std::size_t lo = static_cast<std::size_t>(std::max(0.0, std::floor(pos - eps)));
        std::size_t hi = static_cast<std::size_t>(std::min(static_cast<double>(n_), std::ceil(pos + eps) + 1));
        auto first = keys.begin();
        std::size_t found =
            static_cast<std::size_t>(std::lower_bound(first + lo, first + hi, key) - first);
        // Probes between indexed keys with heavy duplicates can land outside the window.
        if (found == lo && lo > 0 && !(keys[lo - 1] < key)) {
            found = static_cast<std::size_t>(std::lower_bound(first, first + lo, key) - first);
        } else if (found == hi && hi < n_) {
            found = static_cast<std::size_t>(std::lower_bound(first + hi, keys.end(), key) - first);
        }
        return found;
    }

    std::size_t size() const noexcept { return n_; }
    std::size_t epsilon() const noexcept { return epsilon_; }
    std::size_t segment_count() const noexcept { return segments_.size(); }
    const std::vector<Segment>& segments() const noexcept { return segments_; }
    std::size_t metadata_bytes() const noexcept
    {
        return kPlaHeaderBytes + kPlaSegmentBytes * segments_.size();
    }

private:
    static auto offset(Key key, Key base) noexcept
    {
        if constexpr (std::is_integral_v<Key>) {
            return static_cast<long double>(key - base);
        } else {
            return static_cast<long double>(key) - static_cast<long double>(base);
        }
    }

    static double delta(Key key, Key base) noexcept
    {
        if constexpr (std::is_integral_v<Key>) {
            return static_cast<double>(key - base);
        } else {
            return static_cast<double>(key) - static_cast<double>(base);
        }
    }

    std::size_t segment_for(Key key) const noexcept
    {
        auto it = std::upper_bound(segments_.begin(), segments_.end(), key,
                                   [](Key k, const Segment& s) { return k < s.first_key; });
        return it == segments_.begin() ? 0 : static_cast<std::size_t>(it - segments_.begin()) - 1;
    }

    std::vector<Segment> segments_;
    std::vector<double> caps_;
    std::size_t n_ = 0;
    std::size_t epsilon_ = 0;
    Key min_key_{};
    Key max_key_{};
};

}  // namespace mdli
