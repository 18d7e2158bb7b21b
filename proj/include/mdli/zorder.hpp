#pragma once

// Morton (Z-order) codes over integer grid cells. Bit j of dimension m lands
// on output bit j*d + m, so dimension 0 is the least significant bit of every
// interleaved group.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mdli/core.hpp"

namespace mdli::zorder {

using ZValue = std::uint64_t;
using CellCoord = std::vector<std::uint32_t>;

struct ZInterval {
    ZValue first;
    ZValue last;
    friend bool operator==(const ZInterval&, const ZInterval&) = default;
};

inline void check_layout(std::size_t d, unsigned bits)
{
    require(d >= 1, "z-order needs at least one dimension");
    require(bits >= 1 && bits <= 32, "bits per dimension must be in [1, 32]");
    require(d * bits <= 64, "z-order layout exceeds 64 bits");
}

inline ZValue low_mask(unsigned n)
{
    return n >= 64 ? ~ZValue{0} : (ZValue{1} << n) - 1;
}

inline ZValue all_ones(std::size_t d, unsigned bits)
{
    return low_mask(static_cast<unsigned>(d) * bits);
}

inline ZValue z_encode(std::span<const std::uint32_t> cell, unsigned bits)
{
    const std::size_t d = cell.size();
    check_layout(d, bits);
    ZValue z = 0;
    for (std::size_t m = 0; m < d; ++m) {
        require(bits == 32 || cell[m] < (std::uint64_t{1} << bits), "cell coordinate overflows bits per dimension");
        for (unsigned j = 0; j < bits; ++j)
            z |= static_cast<ZValue>((cell[m] >> j) & 1u) << (j * d + m);
    }
    return z;
}

inline CellCoord z_decode(ZValue z, std::size_t d, unsigned bits)
{
    check_layout(d, bits);
    require((z & ~all_ones(d, bits)) == 0, "z-value has bits above the layout");
    CellCoord cell(d, 0);
    for (std::size_t m = 0; m < d; ++m)
        for (unsigned j = 0; j < bits; ++j)
            cell[m] |= static_cast<std::uint32_t>((z >> (j * d + m)) & 1u) << j;
    return cell;
}

namespace detail {

/// Mask of all bits at positions below `pos` that belong to the same dimension as `pos`.
inline ZValue lower_dim_mask(unsigned pos, std::size_t d)
{
    ZValue mask = 0;
    for (long p = static_cast<long>(pos) - static_cast<long>(d); p >= 0; p -= static_cast<long>(d))
        mask |= ZValue{1} << p;
    return mask;
}

/// Set bit `pos`, clear the lower bits of its dimension ("1000...").
inline ZValue load_ones_then_zeros(ZValue v, unsigned pos, std::size_t d)
{
    return (v | (ZValue{1} << pos)) & ~lower_dim_mask(pos, d);
}

/// Clear bit `pos`, set the lower bits of its dimension ("0111...").
inline ZValue load_zero_then_ones(ZValue v, unsigned pos, std::size_t d)
{
    return (v & ~(ZValue{1} << pos)) | lower_dim_mask(pos, d);
}

inline bool in_box(ZValue z, ZValue z_lo, ZValue z_hi, std::size_t d, unsigned bits)
{
    for (std::size_t m = 0; m < d; ++m) {
        std::uint32_t c = 0, lo = 0, hi = 0;
        for (unsigned j = 0; j < bits; ++j) {
            const unsigned p = static_cast<unsigned>(j * d + m);
            c |= static_cast<std::uint32_t>((z >> p) & 1u) << j;
            lo |= static_cast<std::uint32_t>((z_lo >> p) & 1u) << j;
            hi |= static_cast<std::uint32_t>((z_hi >> p) & 1u) << j;
        }
        if (c < lo || c > hi) return false;
    }
    return true;
}

}  // namespace detail

/// Smallest z >= z_current whose cell lies in the box spanned by the cells of
/// z_lo and z_hi, or nothing when the box has no such cell.
inline std::optional<ZValue> bigmin(ZValue z_current, ZValue z_lo, ZValue z_hi, std::size_t d, unsigned bits)
{
    check_layout(d, bits);
    if (z_current > z_hi) return std::nullopt;
    if (z_current <= z_lo) return z_lo;

    std::optional<ZValue> best;
    ZValue min_z = z_lo;
    ZValue max_z = z_hi;
    for (int pos = static_cast<int>(d * bits) - 1; pos >= 0; --pos) {
        const auto p = static_cast<unsigned>(pos);
        const unsigned cur_bit = (z_current >> p) & 1u;
        const unsigned min_bit = (min_z >> p) & 1u;
        const unsigned max_bit = (max_z >> p) & 1u;
        switch ((cur_bit << 2) | (min_bit << 1) | max_bit) {
        case 0b000:
        case 0b111:
            break;
        case 0b001:
            best = detail::load_ones_then_zeros(min_z, p, d);
            max_z = detail::load_zero_then_ones(max_z, p, d);
            break;
        case 0b011:
            return min_z;
        case 0b100:
            return best;
        case 0b101:
            min_z = detail::load_ones_then_zeros(min_z, p, d);
            break;
        default:
            // 010 and 110 need min > max in this dimension.
            return best;
        }
    }
    return z_current;
}

/// Maximal sorted runs of Z-values whose cells lie inside [lo_cell, hi_cell].
inline std::vector<ZInterval> decompose_box(std::span<const std::uint32_t> lo_cell,
                                            std::span<const std::uint32_t> hi_cell, unsigned bits)
{
    const std::size_t d = lo_cell.size();
    require(hi_cell.size() == d, "box corners differ in dimension");
    for (std::size_t m = 0; m < d; ++m) require(lo_cell[m] <= hi_cell[m], "box lower cell exceeds upper cell");
    const ZValue z_lo = z_encode(lo_cell, bits);
    const ZValue z_hi = z_encode(hi_cell, bits);
    const unsigned total = static_cast<unsigned>(d) * bits;

    std::vector<ZInterval> out;
    std::optional<ZValue> next = z_lo;
    while (next) {
        ZValue z = *next;
        const ZValue run_start = z;
        ZValue run_end = z;
        // Consume aligned blocks that lie fully inside the box.
        while (true) {
            unsigned level = 0;
            while (level < total && ((z >> level) & 1u) == 0) {
                const ZValue block_last = z | low_mask(level + 1);
                if (!detail::in_box(block_last, z_lo, z_hi, d, bits)) break;
                ++level;
            }
            run_end = z | low_mask(level);
            if (run_end >= z_hi || run_end == ~ZValue{0}) break;
            z = run_end + 1;
            if (!detail::in_box(z, z_lo, z_hi, d, bits)) break;
        }
        out.push_back({run_start, run_end});
        if (run_end >= z_hi) break;
        next = bigmin(run_end + 1, z_lo, z_hi, d, bits);
    }
    return out;
}

}  // namespace mdli::zorder
