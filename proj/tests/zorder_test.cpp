#include <gtest/gtest.h>

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "mdli/zorder.hpp"

using namespace mdli::zorder;

namespace {

/// Reference encoder walking output bits instead of input bits.
ZValue slow_encode(const CellCoord& c, unsigned bits)
{
    const std::size_t d = c.size();
    ZValue z = 0;
    for (unsigned out = 0; out < d * bits; ++out) {
        const std::size_t m = out % d;
        const unsigned j = out / static_cast<unsigned>(d);
        if ((c[m] >> j) & 1u) z |= ZValue{1} << out;
    }
    return z;
}

bool cell_in_box(const CellCoord& c, const CellCoord& lo, const CellCoord& hi)
{
    for (std::size_t m = 0; m < c.size(); ++m)
        if (c[m] < lo[m] || c[m] > hi[m]) return false;
    return true;
}

/// Every box [lo, hi] of a grid with `side` cells per dimension.
template <typename Visit>
void for_each_box(std::size_t d, std::uint32_t side, Visit&& visit)
{
    CellCoord lo(d, 0), hi(d, 0);
    std::function<void(std::size_t)> rec = [&](std::size_t m) {
        if (m == d) {
            visit(lo, hi);
            return;
        }
        for (lo[m] = 0; lo[m] < side; ++lo[m])
            for (hi[m] = lo[m]; hi[m] < side; ++hi[m]) rec(m + 1);
    };
    rec(0);
}

void check_grid(std::size_t d, unsigned bits)
{
    const std::uint32_t side = 1u << bits;
    const ZValue total = ZValue{1} << (d * bits);
    std::size_t boxes = 0;
    for_each_box(d, side, [&](const CellCoord& lo, const CellCoord& hi) {
        ++boxes;
        std::vector<bool> inside(total);
        for (ZValue z = 0; z < total; ++z) inside[z] = cell_in_box(z_decode(z, d, bits), lo, hi);
        const ZValue z_lo = z_encode(lo, bits);
        const ZValue z_hi = z_encode(hi, bits);

        // bigmin from every start position against the brute-force minimum.
        std::optional<ZValue> expected;
        for (ZValue start = total; start-- > 0;) {
            if (inside[start]) expected = start;
            ASSERT_EQ(bigmin(start, z_lo, z_hi, d, bits), expected) << "start " << start;
        }
        ASSERT_EQ(bigmin(total, z_lo, z_hi, d, bits), std::nullopt);

        // Decomposition: maximal runs of the in-box set.
        std::vector<ZInterval> want;
        for (ZValue z = 0; z < total; ++z) {
            if (!inside[z]) continue;
            if (!want.empty() && want.back().last + 1 == z)
                want.back().last = z;
            else
                want.push_back({z, z});
        }
        ASSERT_EQ(decompose_box(lo, hi, bits), want);
    });
    EXPECT_GT(boxes, 0u);
}

}  // namespace

TEST(ZEncode, ZeroCell) { EXPECT_EQ(z_encode(CellCoord{0, 0}, 3), 0u); }

TEST(ZEncode, DimensionZeroIsLowestBit)
{
    EXPECT_EQ(z_encode(CellCoord{1, 0}, 1), 1u);
    EXPECT_EQ(z_encode(CellCoord{0, 1}, 1), 2u);
    EXPECT_EQ(z_encode(CellCoord{1, 1}, 1), 3u);
}

TEST(ZEncode, MatchesOutputBitOracle)
{
    std::mt19937_64 rng(1);
    for (std::size_t d = 1; d <= 8; ++d) {
        const unsigned bits = static_cast<unsigned>(std::min<std::size_t>(32, 64 / d));
        for (int t = 0; t < 500; ++t) {
            CellCoord c(d);
            for (auto& x : c) x = static_cast<std::uint32_t>(rng() & ((std::uint64_t{1} << bits) - 1));
            const ZValue z = z_encode(c, bits);
            ASSERT_EQ(z, slow_encode(c, bits));
            ASSERT_EQ(z_decode(z, d, bits), c);
        }
    }
}

TEST(ZEncode, RejectsOverflow)
{
    EXPECT_THROW(z_encode(CellCoord{4, 0}, 2), mdli::ContractError);
    EXPECT_THROW(z_encode(CellCoord(3, 0), 22), mdli::ContractError);
}

TEST(ZDecode, ZeroAndAllOnes)
{
    EXPECT_EQ(z_decode(0, 3, 4), (CellCoord{0, 0, 0}));
    EXPECT_EQ(z_decode(3, 2, 1), (CellCoord{1, 1}));
}

TEST(ZDecode, RoundTripsEveryCellOf16x16)
{
    for (ZValue z = 0; z < 256; ++z) ASSERT_EQ(z_encode(z_decode(z, 2, 4), 4), z);
    for (std::uint32_t x = 0; x < 16; ++x)
        for (std::uint32_t y = 0; y < 16; ++y) ASSERT_EQ(z_decode(z_encode(CellCoord{x, y}, 4), 2, 4), (CellCoord{x, y}));
}

TEST(ZDecode, RejectsStrayHighBits) { EXPECT_THROW(z_decode(16, 2, 2), mdli::ContractError); }

TEST(ZEncode, MonotoneUnderDominance)
{
    std::mt19937_64 rng(2);
    for (int t = 0; t < 20000; ++t) {
        CellCoord a{static_cast<std::uint32_t>(rng() % 1024), static_cast<std::uint32_t>(rng() % 1024),
                    static_cast<std::uint32_t>(rng() % 1024)};
        CellCoord b = a;
        for (auto& x : b) x = std::min<std::uint32_t>(1023, x + static_cast<std::uint32_t>(rng() % 50));
        ASSERT_GE(z_encode(b, 10), z_encode(a, 10));
    }
}

TEST(BigMin, StartBelowRangeGivesLowCorner)
{
    const ZValue z_lo = z_encode(CellCoord{2, 3}, 3);
    const ZValue z_hi = z_encode(CellCoord{5, 6}, 3);
    EXPECT_EQ(bigmin(0, z_lo, z_hi, 2, 3), z_lo);
    EXPECT_EQ(bigmin(z_lo, z_lo, z_hi, 2, 3), z_lo);
}

TEST(BigMin, StartPastRangeGivesNothing)
{
    const ZValue z_lo = z_encode(CellCoord{2, 3}, 3);
    const ZValue z_hi = z_encode(CellCoord{5, 6}, 3);
    EXPECT_EQ(bigmin(z_hi + 1, z_lo, z_hi, 2, 3), std::nullopt);
}

TEST(Decompose, SingleCell)
{
    const CellCoord c{5, 2};
    const ZValue z = z_encode(c, 3);
    EXPECT_EQ(decompose_box(c, c, 3), (std::vector<ZInterval>{{z, z}}));
}

TEST(Decompose, WholeGrid)
{
    EXPECT_EQ(decompose_box(CellCoord{0, 0, 0}, CellCoord{15, 15, 15}, 4), (std::vector<ZInterval>{{0, 4095}}));
}

TEST(Decompose, FullSixtyFourBitLayout)
{
    const CellCoord lo{0, 0}, hi{0xffffffffu, 0xffffffffu};
    EXPECT_EQ(decompose_box(lo, hi, 32), (std::vector<ZInterval>{{0, ~ZValue{0}}}));
}

TEST(Decompose, IntervalsCoverTheBoxVolume)
{
    std::mt19937_64 rng(3);
    for (int t = 0; t < 300; ++t) {
        CellCoord lo(3), hi(3);
        std::uint64_t volume = 1;
        for (std::size_t m = 0; m < 3; ++m) {
            lo[m] = static_cast<std::uint32_t>(rng() % 1024);
            hi[m] = lo[m] + static_cast<std::uint32_t>(rng() % std::min<std::uint64_t>(20, 1024 - lo[m]));
            volume *= hi[m] - lo[m] + 1;
        }
        const auto ivs = decompose_box(lo, hi, 10);
        std::uint64_t covered = 0;
        for (std::size_t i = 0; i < ivs.size(); ++i) {
            ASSERT_LE(ivs[i].first, ivs[i].last);
            if (i > 0) {
                ASSERT_GT(ivs[i].first, ivs[i - 1].last + 1);
            }
            covered += ivs[i].last - ivs[i].first + 1;
            ASSERT_TRUE(cell_in_box(z_decode(ivs[i].first, 3, 10), lo, hi));
            ASSERT_TRUE(cell_in_box(z_decode(ivs[i].last, 3, 10), lo, hi));
        }
        EXPECT_EQ(covered, volume);
    }
}

TEST(BigMin, Exhaustive8x8) { check_grid(2, 3); }

TEST(BigMin, Exhaustive4x4x4) { check_grid(3, 2); }
