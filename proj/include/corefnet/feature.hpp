#pragma once

#include <compare>
#include <string>

#include "corefnet/forensic_path.hpp"

namespace corefnet {

// One extracted email occurrence. `address` is lowercased for node
// identity; `context` keeps the surrounding media bytes verbatim (up to
// 16 before and 16 after the match, match included).
struct FeatureRecord {
    ForensicPath path;
    std::string address;
    std::string context;  // raw bytes, may contain NULs

    friend bool operator==(const FeatureRecord&, const FeatureRecord&) = default;

    friend std::strong_ordering operator<=>(const FeatureRecord& a,
                                            const FeatureRecord& b) {
        if (auto c = a.path <=> b.path; c != 0) return c;
        if (auto c = a.address <=> b.address; c != 0) return c;
        return a.context <=> b.context;
    }
};

}  // namespace corefnet
