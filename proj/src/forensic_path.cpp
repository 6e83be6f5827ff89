#include "corefnet/forensic_path.hpp"

#include <charconv>

namespace corefnet {

namespace {

// Canonical decimal: digits only, no leading zeros unless the value is "0".
std::optional<std::uint64_t> parse_canonical_u64(std::string_view tok) {
    if (tok.empty()) return std::nullopt;
    if (tok.size() > 1 && tok.front() == '0') return std::nullopt;
    for (char c : tok) {
        if (c < '0' || c > '9') return std::nullopt;
    }
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) return std::nullopt;
    return value;
}

}  // namespace

std::optional<ForensicPath> try_parse_forensic_path(std::string_view raw) noexcept {
    if (raw.empty()) return std::nullopt;
    const auto hyphen = raw.rfind('-');
    std::string_view base = (hyphen == std::string_view::npos)
                                ? std::string_view{}
                                : raw.substr(0, hyphen);
    std::string_view tok = (hyphen == std::string_view::npos)
                               ? raw
                               : raw.substr(hyphen + 1);
    const auto offset = parse_canonical_u64(tok);
    if (!offset) return std::nullopt;
    // A hyphen with nothing before it ("-5") reconstructs to "5" != raw.
    if (hyphen != std::string_view::npos && base.empty()) return std::nullopt;
    return ForensicPath{std::string(base), *offset};
}

ForensicPath parse_forensic_path(std::string_view raw) {
    auto parsed = try_parse_forensic_path(raw);
    if (!parsed) {
        throw MalformedPathError("malformed forensic path: '" + std::string(raw) + "'");
    }
    return *parsed;
}

std::optional<std::uint64_t> path_distance(const ForensicPath& a,
                                           const ForensicPath& b) noexcept {
    if (a.base != b.base) return std::nullopt;
    return a.offset >= b.offset ? a.offset - b.offset : b.offset - a.offset;
}

}  // namespace corefnet
