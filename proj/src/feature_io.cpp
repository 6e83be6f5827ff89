#include "corefnet/feature_io.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace corefnet {

namespace {

constexpr char kBanner[] = "# corefnet 0.1.0 email features, grammar email-v1";

constexpr char kHexDigits[] = "0123456789ABCDEF";

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

bool record_order_le(const FeatureRecord& a, const FeatureRecord& b) {
    return (a <=> b) <= 0;
}

}  // namespace

std::string escape_context(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        const auto u = static_cast<unsigned char>(c);
        if (u >= 0x20 && u <= 0x7E && c != '\\') {
            out.push_back(c);
        } else {
            out.push_back('\\');
            out.push_back('x');
            out.push_back(kHexDigits[u >> 4]);
            out.push_back(kHexDigits[u & 0xF]);
        }
    }
    return out;
}

std::string unescape_context(std::string_view escaped) {
    std::string out;
    out.reserve(escaped.size());
    for (std::size_t i = 0; i < escaped.size(); ++i) {
        if (escaped[i] == '\\' && i + 3 < escaped.size() &&
            (escaped[i + 1] == 'x' || escaped[i + 1] == 'X')) {
            const int hi = hex_value(escaped[i + 2]);
            const int lo = hex_value(escaped[i + 3]);
            if (hi >= 0 && lo >= 0) {
                out.push_back(static_cast<char>((hi << 4) | lo));
                i += 3;
                continue;
            }
        }
        out.push_back(escaped[i]);
    }
    return out;
}

FeatureReadResult read_feature_file(std::istream& in) {
    FeatureReadResult result;
    std::string line;
    std::size_t line_number = 0;
    std::size_t attempted = 0;

    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            result.file.header_comments.push_back(line);
            continue;
        }
        ++attempted;

        std::vector<std::string> fields;
        std::size_t field_start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == '\t') {
                fields.emplace_back(line.substr(field_start, i - field_start));
                field_start = i + 1;
            }
        }
        if (fields.size() < 2 || fields.size() > 3) {
            result.issues.push_back(
                {line_number, "expected 2 or 3 tab-separated fields, got " +
                                  std::to_string(fields.size()),
                 line});
            continue;
        }
        const auto path = try_parse_forensic_path(fields[0]);
        if (!path) {
            result.issues.push_back({line_number, "malformed forensic path", line});
            continue;
        }
        if (fields[1].empty()) {
            result.issues.push_back({line_number, "empty feature field", line});
            continue;
        }
        result.file.records.push_back(FeatureRecord{
            *path, fields[1], fields.size() == 3 ? unescape_context(fields[2]) : ""});
    }

    if (attempted > 0 && result.file.records.empty()) {
        throw FeatureFileError("no parsable records: all " + std::to_string(attempted) +
                               " record lines failed");
    }
    std::sort(result.file.records.begin(), result.file.records.end());
    return result;
}

FeatureReadResult read_feature_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FeatureFileError("cannot open feature file '" + path.string() + "'");
    }
    return read_feature_file(in);
}

void write_feature_file(const std::vector<FeatureRecord>& records, std::ostream& out) {
    if (!std::is_sorted(records.begin(), records.end(), record_order_le)) {
        throw std::invalid_argument("feature records must be sorted before writing");
    }
    out << kBanner << '\n';
    for (const FeatureRecord& r : records) {
        out << r.path.raw() << '\t' << r.address;
        if (!r.context.empty()) out << '\t' << escape_context(r.context);
        out << '\n';
    }
    if (!out) throw FeatureFileError("write error on feature file stream");
}

void write_feature_file(const std::vector<FeatureRecord>& records,
                        const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FeatureFileError("cannot create feature file '" + path.string() + "'");
    }
    write_feature_file(records, out);
}

}  // namespace corefnet
