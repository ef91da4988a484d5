#pragma once

#include <string>
#include <unordered_map>

#include "fmx/dataset.hpp"

namespace fmx {

/**
 * @brief Maps an ordered nominal domain onto [0, 1].
 *
 * The k-th token (rank r = k + 1) of a domain with M states maps to
 * (r - 1) / (M - 1), so the first token is 0 and the last is 1. The domain
 * order is taken as the rank order.
 */
inline std::unordered_map<std::string, double> ordinal_to_rank_scale(const AttributeMeta& attr) {
    if (attr.kind != AttributeKind::nominal)
        throw DomainError("attribute '" + attr.name + "' is not nominal and has no rank order");
    const auto states = attr.domain.size();
    if (states < 2)
        throw DomainError("attribute '" + attr.name + "' needs at least 2 ordered states");
    std::unordered_map<std::string, double> scale;
    for (std::size_t k = 0; k < states; ++k)
        scale.emplace(attr.domain[k], static_cast<double>(k) / static_cast<double>(states - 1));
    return scale;
}

}  // namespace fmx
