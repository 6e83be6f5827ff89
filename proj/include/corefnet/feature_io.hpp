#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "corefnet/feature.hpp"

namespace corefnet {

// bulk_extractor-style feature file: "#" comment lines plus TSV records
// `<forensic-path>\t<address>[\t<context>]`, UTF-8, LF-terminated.
struct FeatureFile {
    std::vector<std::string> header_comments;  // verbatim, including '#'
    std::vector<FeatureRecord> records;        // sorted by (base, offset)
};

struct ParseIssue {
    std::size_t line_number = 0;  // 1-based
    std::string message;
    std::string line;
};

struct FeatureReadResult {
    FeatureFile file;
    std::vector<ParseIssue> issues;  // skipped lines; empty on clean parse
};

class FeatureFileError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Parses a feature file. Comment lines are preserved verbatim; records are
// sorted by (base, offset) even when the file is unsorted. Bad lines are
// collected as issues and skipped; when every record line fails,
// FeatureFileError is thrown.
FeatureReadResult read_feature_file(std::istream& in);
FeatureReadResult read_feature_file(const std::filesystem::path& path);

// Emits one banner comment naming the tool and grammar version, then one
// TSV line per record. `records` must already be sorted. Context bytes are
// printable-escaped (\xNN) so the file stays line-oriented; re-reading
// yields the identical records.
void write_feature_file(const std::vector<FeatureRecord>& records, std::ostream& out);
void write_feature_file(const std::vector<FeatureRecord>& records,
                        const std::filesystem::path& path);

// Escape non-printable bytes (and backslash) as \xNN.
std::string escape_context(std::string_view raw);
std::string unescape_context(std::string_view escaped);

}  // namespace corefnet
