#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "mdli/core.hpp"

namespace mdli {

struct KMeansOptions {
    std::size_t max_iterations = 100;
    double tolerance = 1e-5;  ///< stop when the relative inertia change falls below this
};

struct KMeansResult {
    std::vector<double> centers;  ///< row-major, P x d
    double inertia = 0.0;
    std::size_t iterations = 0;
};

namespace detail {

inline std::size_t nearest_center(const double* p, const std::vector<double>& centers, std::size_t count,
                                  std::size_t d, double* best_sq = nullptr)
{
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < count; ++c) {
        const double s = squared_l2(p, centers.data() + c * d, d);
        if (s < best_d) {
            best_d = s;
            best = c;
        }
    }
    if (best_sq) *best_sq = best_d;
    return best;
}

}  // namespace detail

/// Lloyd's algorithm seeded with k-means++. Deterministic for a fixed seed.
inline KMeansResult kmeans(const Dataset& ds, std::size_t clusters, std::uint64_t seed, KMeansOptions opts = {})
{
    const std::size_t n = ds.size();
    const std::size_t d = ds.dim();
    require(clusters >= 1, "k-means needs at least one cluster");
    require(clusters <= n, "k-means needs at least as many points as clusters");

    std::mt19937_64 rng(seed);
    KMeansResult res;
    res.centers.reserve(clusters * d);

    std::vector<double> weight(n, std::numeric_limits<double>::infinity());
    std::vector<char> chosen(n, 0);
    auto add_center = [&](std::size_t id) {
        chosen[id] = 1;
        const double* p = ds.data() + id * d;
        res.centers.insert(res.centers.end(), p, p + d);
        for (std::size_t i = 0; i < n; ++i)
            weight[i] = std::min(weight[i], detail::squared_l2(ds.data() + i * d, p, d));
    };

    add_center(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
    while (res.centers.size() < clusters * d) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += weight[i];
        std::size_t pick = n;
        if (total > 0) {
            double target = std::uniform_real_distribution<double>(0.0, total)(rng);
            for (std::size_t i = 0; i < n; ++i) {
                if (weight[i] <= 0) continue;
                pick = i;
                target -= weight[i];
                if (target < 0) break;
            }
        }
        if (pick == n) {
            // Every remaining point coincides with a center; take the next unchosen one.
            pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), 0) - chosen.begin());
        }
        add_center(pick);
    }

    std::vector<double> sums(clusters * d);
    std::vector<std::size_t> counts(clusters);
    double previous = std::numeric_limits<double>::infinity();
    for (res.iterations = 0; res.iterations < opts.max_iterations;) {
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double* p = ds.data() + i * d;
            double sq = 0.0;
            const std::size_t c = detail::nearest_center(p, res.centers, clusters, d, &sq);
            inertia += sq;
            ++counts[c];
            for (std::size_t j = 0; j < d; ++j) sums[c * d + j] += p[j];
        }
        res.inertia = inertia;
        ++res.iterations;
        for (std::size_t c = 0; c < clusters; ++c) {
            if (counts[c] == 0) continue;  // empty clusters keep their previous center
            for (std::size_t j = 0; j < d; ++j)
                res.centers[c * d + j] = sums[c * d + j] / static_cast<double>(counts[c]);
        }
        const bool converged = previous < std::numeric_limits<double>::infinity() &&
                               std::abs(previous - inertia) <= opts.tolerance * std::max(previous, 1e-300);
        previous = inertia;
        if (converged || inertia == 0.0) break;
    }

    // Inertia of the returned centers.
    double final_inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double sq = 0.0;
        detail::nearest_center(ds.data() + i * d, res.centers, clusters, d, &sq);
        final_inertia += sq;
    }
    res.inertia = final_inertia;
    return res;
}

}  // namespace mdli
