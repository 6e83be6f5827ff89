#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "corefnet/feature.hpp"

namespace corefnet {

// Longest address we will report. Also bounds the chunk overlap margin.
inline constexpr std::size_t kMaxAddressLength = 254;

struct ScanConfig {
    std::size_t chunk_size = std::size_t{16} << 20;  // bytes per streaming read
    std::size_t overlap = 1024;                      // margin re-scanned across chunks
    int max_recursion_depth = 5;                     // nested gzip limit
    bool scan_utf16 = true;                          // also detect UTF-16LE text
    unsigned threads = 1;                            // chunk scan workers

    // Throws std::invalid_argument when overlap < 2 * kMaxAddressLength,
    // chunk_size <= overlap, or threads == 0.
    void validate() const;
};

struct EmailMatch {
    std::size_t start = 0;   // byte position of the first character
    std::string address;     // as matched, original case
};

// All non-overlapping grammar matches in `window`, left to right.
//
// Grammar: local part [A-Za-z0-9._%+-]+, "@", two or more domain labels
// [A-Za-z0-9-]+ joined by ".", final label alphabetic of length 2-63,
// whole address at most 254 bytes. The character before the local part
// and after the domain must not itself be legal there (maximal munch);
// a trailing "." is not consumed. Labels are consumed greedily, then
// trailing labels are dropped until the final one is valid.
std::vector<EmailMatch> match_email(std::string_view window);

class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Random-access byte source for a raw image. No file-system interpretation.
class ImageReader {
  public:
    virtual ~ImageReader() = default;
    virtual std::uint64_t size() const = 0;
    // Reads up to n bytes at `offset`; returns bytes read (short only at
    // end of image). Throws IoError on failure.
    virtual std::size_t read_at(std::uint64_t offset, char* buf, std::size_t n) const = 0;
};

class MemoryImage final : public ImageReader {
  public:
    explicit MemoryImage(std::string data) : data_(std::move(data)) {}
    std::uint64_t size() const override { return data_.size(); }
    std::size_t read_at(std::uint64_t offset, char* buf, std::size_t n) const override;
    std::string_view view() const { return data_; }

  private:
    std::string data_;
};

class FileImage final : public ImageReader {
  public:
    explicit FileImage(const std::filesystem::path& path);
    ~FileImage() override;
    FileImage(const FileImage&) = delete;
    FileImage& operator=(const FileImage&) = delete;
    std::uint64_t size() const override { return size_; }
    std::size_t read_at(std::uint64_t offset, char* buf, std::size_t n) const override;

  private:
    int fd_ = -1;
    std::uint64_t size_ = 0;
    std::filesystem::path path_;
};

// Linear scan of the whole image: ASCII matches, UTF-16LE matches when
// configured, and recursive descent into gzip streams. Output is sorted
// by (base, offset) and deduplicated across chunk overlap margins; the
// result does not depend on chunk_size or thread count.
std::vector<FeatureRecord> scan_image(const ImageReader& image,
                                      const ScanConfig& config = {});

// Convenience wrappers.
std::vector<FeatureRecord> scan_image(std::string_view data,
                                      const ScanConfig& config = {});
std::vector<FeatureRecord> scan_image_file(const std::filesystem::path& path,
                                           const ScanConfig& config = {});

// Decompresses a gzip stream found at `parent` (region must start with the
// gzip magic) and scans the plaintext; emitted paths use the base
// parent.raw() + "-GZIP" with offsets in decompressed bytes. Corrupt
// streams yield whatever plaintext decompressed before the error. `depth`
// counts decompressions already applied; at config.max_recursion_depth the
// region is skipped silently.
std::vector<FeatureRecord> scan_compressed(std::string_view region,
                                           const ForensicPath& parent,
                                           int depth,
                                           const ScanConfig& config = {});

namespace detail {

// Gzip member headers begin 0x1F 0x8B 0x08 (deflate).
std::vector<std::size_t> find_gzip_candidates(std::string_view buf);

struct InflateResult {
    std::string plaintext;      // possibly partial
    std::size_t consumed = 0;   // compressed bytes consumed
    bool clean_end = false;     // reached the end of the member
};

// Inflates one gzip member from `data`, stopping at stream end, error,
// end of input, or the output cap.
InflateResult inflate_gzip(std::string_view data, std::size_t max_output);

// Same, pulling compressed bytes from an image starting at `start`.
InflateResult inflate_gzip_at(const ImageReader& image, std::uint64_t start,
                              std::size_t max_output);

struct Utf16Match {
    std::size_t start = 0;       // byte offset of the first code unit
    std::size_t byte_length = 0; // extent on media (first to last char byte)
    std::string address;         // decoded ASCII
};

// UTF-16LE pass: grammar matches over the low bytes of both alignments,
// accepted only when every interleaving high byte in the span is 0x00.
std::vector<Utf16Match> find_utf16_matches(std::string_view buf);

}  // namespace detail

}  // namespace corefnet
