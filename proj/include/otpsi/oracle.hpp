#pragma once

#include <algorithm>
#include <span>
#include <unordered_map>
#include <vector>

#include "otpsi/element.hpp"

namespace otpsi {

/// Ground truth for the whole test suite: the plaintext over-threshold
/// computation. elements holds every item occurring in >= t of the
/// sets, sorted; bitsets marks which sets hold it (set i at bit i).
struct OverThresholdResult {
    std::vector<Element> elements;
    std::vector<std::vector<uint8_t>> bitsets;  // parallel to elements

    std::vector<Element> intersect_with(std::span<const Element> set) const {
        std::vector<Element> out;
        for (const auto& e : elements)
            if (std::find(set.begin(), set.end(), e) != set.end()) out.push_back(e);
        return out;
    }
};

inline OverThresholdResult oracle_over_threshold(std::span<const std::vector<Element>> sets,
                                                 uint32_t threshold) {
    size_t mask_bytes = (sets.size() + 7) / 8;
    std::unordered_map<Element, std::vector<uint8_t>, ElementHash> membership;
    for (size_t i = 0; i < sets.size(); i++) {
        for (const Element& e : sets[i]) {
            auto [it, fresh] = membership.try_emplace(e);
            if (fresh) it->second.assign(mask_bytes, 0);
            it->second[i / 8] |= uint8_t(1u << (i % 8));
        }
    }
    OverThresholdResult out;
    for (auto& [elem, mask] : membership) {
        uint32_t count = 0;
        for (uint8_t b : mask) count += uint32_t(__builtin_popcount(b));
        if (count >= threshold) out.elements.push_back(elem);
    }
    std::sort(out.elements.begin(), out.elements.end());
    out.bitsets.reserve(out.elements.size());
    for (const auto& e : out.elements) out.bitsets.push_back(membership.at(e));
    return out;
}

}  // namespace otpsi
