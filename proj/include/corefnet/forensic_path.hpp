#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace corefnet {

// Location of a feature on media, in bulk_extractor style: an opaque
// transform prefix ("base") plus a byte offset within that space.
// "6653952" has an empty base; "1048576-GZIP-512" has base "1048576-GZIP"
// and offset 512.
struct ForensicPath {
    std::string base;
    std::uint64_t offset = 0;

    std::string raw() const {
        return base.empty() ? std::to_string(offset)
                            : base + "-" + std::to_string(offset);
    }

    friend bool operator==(const ForensicPath&, const ForensicPath&) = default;

    // Orders by base (lexicographic), then offset (numeric).
    friend std::strong_ordering operator<=>(const ForensicPath& a,
                                            const ForensicPath& b) {
        if (auto c = a.base <=> b.base; c != 0) return c;
        return a.offset <=> b.offset;
    }
};

class MalformedPathError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Splits `raw` at the last hyphen. The final token must be a canonical
// base-10 integer (no sign, no leading zeros, fits in 64 bits); everything
// before the joining hyphen becomes the base. A bare integer has base "".
// Throws MalformedPathError otherwise.
ForensicPath parse_forensic_path(std::string_view raw);

// Non-throwing variant; nullopt on malformed input.
std::optional<ForensicPath> try_parse_forensic_path(std::string_view raw) noexcept;

// |a.offset - b.offset| when the bases are byte-identical; nullopt
// (infinite) otherwise. Features under different bases are never close.
std::optional<std::uint64_t> path_distance(const ForensicPath& a,
                                           const ForensicPath& b) noexcept;

}  // namespace corefnet
