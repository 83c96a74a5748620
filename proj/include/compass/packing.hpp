#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace compass {

// First-fit-decreasing over a size histogram: counts[s] items of size s,
// bins of `capacity`, at most `bins` bins. Identical items are
// interchangeable, so this decides exactly what item-wise FFD decides.
bool ffd_fits(std::span<const uint32_t> counts, uint32_t bins, uint32_t capacity);

struct PackItem {
    uint32_t size = 0;
    uint64_t key = 0;  // tie-break among equal sizes, ascending
};

struct PackResult {
    bool ok = false;
    std::vector<uint32_t> bin_of;     // per input item
    std::vector<uint32_t> offset_of;  // slot offset inside the bin
    std::vector<uint32_t> bin_load;
};

// Item-wise first-fit-decreasing (sorted by size desc, then key asc).
PackResult ffd_pack(std::span<const PackItem> items, uint32_t bins, uint32_t capacity);

}  // namespace compass
