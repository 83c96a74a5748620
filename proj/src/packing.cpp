#include "compass/packing.hpp"

#include <algorithm>
#include <numeric>

namespace compass {

bool ffd_fits(std::span<const uint32_t> counts, uint32_t bins, uint32_t capacity) {
    std::vector<uint32_t> residual;
    residual.reserve(bins);
    if (counts.empty()) return true;
    const uint32_t largest = static_cast<uint32_t>(counts.size()) - 1;
    for (uint32_t size = largest; size >= 1; --size) {
        uint64_t left = counts[size];
        if (left == 0) continue;
        if (size > capacity) return false;
        for (auto& r : residual) {
            if (left == 0) break;
            if (r < size) continue;
            const uint64_t take = std::min<uint64_t>(left, r / size);
            r -= static_cast<uint32_t>(take * size);
            left -= take;
        }
        const uint32_t per_bin = capacity / size;
        while (left > 0) {
            if (residual.size() == bins) return false;
            const uint64_t take = std::min<uint64_t>(left, per_bin);
            residual.push_back(capacity - static_cast<uint32_t>(take * size));
            left -= take;
        }
    }
    return true;
}

PackResult ffd_pack(std::span<const PackItem> items, uint32_t bins, uint32_t capacity) {
    std::vector<size_t> order(items.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (items[a].size != items[b].size) return items[a].size > items[b].size;
        return items[a].key < items[b].key;
    });

    PackResult out;
    out.bin_of.assign(items.size(), 0);
    out.offset_of.assign(items.size(), 0);
    for (size_t i : order) {
        const uint32_t size = items[i].size;
        if (size > capacity) return out;
        size_t b = 0;
        while (b < out.bin_load.size() && out.bin_load[b] + size > capacity) ++b;
        if (b == out.bin_load.size()) {
            if (out.bin_load.size() == bins) return out;
            out.bin_load.push_back(0);
        }
        out.bin_of[i] = static_cast<uint32_t>(b);
        out.offset_of[i] = out.bin_load[b];
        out.bin_load[b] += size;
    }
    out.ok = true;
    return out;
}

}  // namespace compass
