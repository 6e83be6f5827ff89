#include "corefnet/extractor.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <functional>
#include <future>
#include <stdexcept>

namespace corefnet {

namespace {

constexpr bool is_alpha(unsigned char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z');
}

constexpr bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

constexpr bool is_local_char(unsigned char c) {
    return is_alpha(c) || is_digit(c) || c == '.' || c == '_' || c == '%' ||
           c == '+' || c == '-';
}

constexpr bool is_label_char(unsigned char c) {
    return is_alpha(c) || is_digit(c) || c == '-';
}

bool valid_final_label(std::string_view label) {
    if (label.size() < 2 || label.size() > 63) return false;
    return std::all_of(label.begin(), label.end(),
                       [](char c) { return is_alpha(static_cast<unsigned char>(c)); });
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

// Per-stream plaintext cap; carved streams larger than this are scanned
// only up to the cap.
constexpr std::size_t kMaxPlaintextBytes = std::size_t{256} << 20;

constexpr std::size_t kContextMargin = 16;

}  // namespace

void ScanConfig::validate() const {
    if (overlap < 2 * kMaxAddressLength) {
        throw std::invalid_argument("scan overlap must be at least " +
                                    std::to_string(2 * kMaxAddressLength) + " bytes");
    }
    if (chunk_size <= overlap) {
        throw std::invalid_argument("scan chunk_size must exceed overlap");
    }
    if (max_recursion_depth < 0) {
        throw std::invalid_argument("max_recursion_depth must be non-negative");
    }
    if (threads == 0) {
        throw std::invalid_argument("threads must be positive");
    }
}

std::vector<EmailMatch> match_email(std::string_view window) {
    std::vector<EmailMatch> out;
    const char* data = window.data();
    const std::size_t n = window.size();
    std::size_t search = 0;
    std::size_t last_end = 0;  // matches never overlap

    while (search < n) {
        const void* hit = std::memchr(data + search, '@', n - search);
        if (hit == nullptr) break;
        const std::size_t at = static_cast<std::size_t>(static_cast<const char*>(hit) - data);
        search = at + 1;

        // Local part: maximal backward scan, stopping at the previous
        // match end. A local part at the address cap cannot match anyway.
        const std::size_t floor_pos =
            std::max(last_end, at > kMaxAddressLength ? at - kMaxAddressLength : 0);
        std::size_t start = at;
        while (start > floor_pos && is_local_char(static_cast<unsigned char>(data[start - 1]))) {
            --start;
        }
        if (start == at) continue;  // no local part
        if (start > last_end && start > 0 &&
            is_local_char(static_cast<unsigned char>(data[start - 1]))) {
            continue;  // stopped by the cap: local part alone exceeds it
        }

        // Domain: consume labels greedily; a '.' is consumed only when a
        // label character follows it. Candidates whose greedy extent passes
        // the cap are abandoned outright.
        const std::size_t hard_end = start + kMaxAddressLength + 1;
        std::vector<std::pair<std::size_t, std::size_t>> labels;
        std::size_t pos = at + 1;
        bool over_cap = false;
        while (pos < n && is_label_char(static_cast<unsigned char>(data[pos]))) {
            std::size_t label_end = pos;
            while (label_end < n && is_label_char(static_cast<unsigned char>(data[label_end]))) {
                ++label_end;
                if (label_end > hard_end) { over_cap = true; break; }
            }
            if (over_cap) break;
            labels.emplace_back(pos, label_end);
            if (label_end < n && data[label_end] == '.' && label_end + 1 < n &&
                is_label_char(static_cast<unsigned char>(data[label_end + 1]))) {
                pos = label_end + 1;
                if (pos > hard_end) { over_cap = true; break; }
            } else {
                break;
            }
        }
        if (over_cap) continue;

        // Drop trailing labels until the final one is purely alphabetic.
        while (!labels.empty() &&
               !valid_final_label(std::string_view(data + labels.back().first,
                                                   labels.back().second - labels.back().first))) {
            labels.pop_back();
        }
        if (labels.size() < 2) continue;

        const std::size_t end = labels.back().second;
        if (end - start > kMaxAddressLength) continue;

        out.push_back(EmailMatch{start, std::string(data + start, end - start)});
        last_end = end;
        search = end;
    }
    return out;
}

std::size_t MemoryImage::read_at(std::uint64_t offset, char* buf, std::size_t n) const {
    if (offset >= data_.size()) return 0;
    const std::size_t avail = data_.size() - static_cast<std::size_t>(offset);
    const std::size_t take = std::min(n, avail);
    std::memcpy(buf, data_.data() + offset, take);
    return take;
}

FileImage::FileImage(const std::filesystem::path& path) : path_(path) {
    fd_ = ::open(path.c_str(), O_RDONLY);
    if (fd_ < 0) {
        throw IoError("cannot open image '" + path.string() + "': " + std::strerror(errno));
    }
    const off_t end = ::lseek(fd_, 0, SEEK_END);
    if (end < 0) {
        ::close(fd_);
        fd_ = -1;
        throw IoError("cannot size image '" + path.string() + "': " + std::strerror(errno));
    }
    size_ = static_cast<std::uint64_t>(end);
}

FileImage::~FileImage() {
    if (fd_ >= 0) ::close(fd_);
}

std::size_t FileImage::read_at(std::uint64_t offset, char* buf, std::size_t n) const {
    std::size_t done = 0;
    while (done < n) {
        const ssize_t got = ::pread(fd_, buf + done, n - done,
                                    static_cast<off_t>(offset + done));
        if (got < 0) {
            if (errno == EINTR) continue;
            throw IoError("read error in '" + path_.string() + "' at byte " +
                          std::to_string(offset + done) + ": " + std::strerror(errno));
        }
        if (got == 0) break;  // end of image
        done += static_cast<std::size_t>(got);
    }
    return done;
}

namespace detail {

std::vector<std::size_t> find_gzip_candidates(std::string_view buf) {
    std::vector<std::size_t> out;
    const char* data = buf.data();
    std::size_t pos = 0;
    while (pos + 3 <= buf.size()) {
        const void* hit = std::memchr(data + pos, 0x1F, buf.size() - pos);
        if (hit == nullptr) break;
        const std::size_t p = static_cast<std::size_t>(static_cast<const char*>(hit) - data);
        if (p + 3 <= buf.size() &&
            static_cast<unsigned char>(data[p + 1]) == 0x8B &&
            static_cast<unsigned char>(data[p + 2]) == 0x08) {
            out.push_back(p);
        }
        pos = p + 1;
    }
    return out;
}

namespace {

// Inflates one gzip member, pulling compressed bytes on demand. Stops at
// member end, decode error (output so far is kept), input exhaustion, or
// the output cap.
InflateResult inflate_gzip_pull(const std::function<std::size_t(char*, std::size_t)>& pull,
                                std::size_t max_output) {
    InflateResult result;
    z_stream zs{};
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) return result;

    std::vector<char> in_buf(std::size_t{1} << 20);
    std::vector<char> out_buf(std::size_t{256} << 10);
    bool input_done = false;

    while (true) {
        if (zs.avail_in == 0 && !input_done) {
            const std::size_t got = pull(in_buf.data(), in_buf.size());
            if (got == 0) {
                input_done = true;
            } else {
                zs.next_in = reinterpret_cast<Bytef*>(in_buf.data());
                zs.avail_in = static_cast<uInt>(got);
            }
        }
        zs.next_out = reinterpret_cast<Bytef*>(out_buf.data());
        zs.avail_out = static_cast<uInt>(out_buf.size());
        const int rc = inflate(&zs, Z_NO_FLUSH);
        const std::size_t produced = out_buf.size() - zs.avail_out;
        if (produced > 0 && result.plaintext.size() < max_output) {
            const std::size_t room = max_output - result.plaintext.size();
            result.plaintext.append(out_buf.data(), std::min(produced, room));
        }
        if (rc == Z_STREAM_END) {
            result.clean_end = true;
            break;
        }
        if (rc != Z_OK && rc != Z_BUF_ERROR) break;        // corrupt: keep partial
        if (result.plaintext.size() >= max_output) break;  // cap reached
        if (zs.avail_in == 0 && input_done) break;         // out of input
    }
    result.consumed = static_cast<std::size_t>(zs.total_in);
    inflateEnd(&zs);
    return result;
}

}  // namespace

InflateResult inflate_gzip(std::string_view data, std::size_t max_output) {
    std::size_t cursor = 0;
    return inflate_gzip_pull(
        [&](char* buf, std::size_t n) {
            const std::size_t take = std::min(n, data.size() - cursor);
            std::memcpy(buf, data.data() + cursor, take);
            cursor += take;
            return take;
        },
        max_output);
}

InflateResult inflate_gzip_at(const ImageReader& image, std::uint64_t start,
                              std::size_t max_output) {
    std::uint64_t cursor = start;
    return inflate_gzip_pull(
        [&](char* buf, std::size_t n) {
            const std::size_t got = image.read_at(cursor, buf, n);
            cursor += got;
            return got;
        },
        max_output);
}

std::vector<Utf16Match> find_utf16_matches(std::string_view buf) {
    std::vector<Utf16Match> out;
    const std::size_t n = buf.size();
    std::string compact;
    for (std::size_t parity = 0; parity < 2 && parity < n; ++parity) {
        compact.clear();
        compact.reserve((n - parity + 1) / 2);
        for (std::size_t i = parity; i < n; i += 2) compact.push_back(buf[i]);
        for (const EmailMatch& m : match_email(compact)) {
            const std::size_t chars = m.address.size();
            const std::size_t byte_start = parity + 2 * m.start;
            // High byte of every code unit must be present and zero; a
            // code unit truncated by the buffer end drops the match.
            bool utf16 = true;
            for (std::size_t j = 0; j < chars; ++j) {
                const std::size_t hi = byte_start + 2 * j + 1;
                if (hi >= n || buf[hi] != '\0') {
                    utf16 = false;
                    break;
                }
            }
            if (utf16) {
                out.push_back(Utf16Match{byte_start, 2 * chars - 1, m.address});
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const Utf16Match& a, const Utf16Match& b) {
        return a.start != b.start ? a.start < b.start : a.address < b.address;
    });
    return out;
}

}  // namespace detail

namespace {

std::string child_base(const std::string& space_base, std::uint64_t stream_offset) {
    return ForensicPath{space_base, stream_offset}.raw() + "-GZIP";
}

std::string slice_context(std::string_view space, std::size_t start, std::size_t extent) {
    const std::size_t lo = start > kContextMargin ? start - kContextMargin : 0;
    const std::size_t hi = std::min(space.size(), start + extent + kContextMargin);
    return std::string(space.substr(lo, hi - lo));
}

// Scans one fully materialized address space (a decompressed stream):
// ASCII matches, UTF-16LE matches, and recursion into nested gzip members.
// `depth` counts decompressions applied to reach this space.
void scan_space(std::string_view space, const std::string& base, int depth,
                const ScanConfig& config, std::vector<FeatureRecord>& out) {
    for (const EmailMatch& m : match_email(space)) {
        out.push_back(FeatureRecord{ForensicPath{base, m.start},
                                    to_lower(m.address),
                                    slice_context(space, m.start, m.address.size())});
    }
    if (config.scan_utf16) {
        for (const detail::Utf16Match& m : detail::find_utf16_matches(space)) {
            out.push_back(FeatureRecord{ForensicPath{base, m.start},
                                        to_lower(m.address),
                                        slice_context(space, m.start, m.byte_length)});
        }
    }
    if (depth >= config.max_recursion_depth) return;
    std::size_t next_allowed = 0;
    for (const std::size_t pos : detail::find_gzip_candidates(space)) {
        if (pos < next_allowed) continue;
        const auto inflated = detail::inflate_gzip(space.substr(pos), kMaxPlaintextBytes);
        if (!inflated.plaintext.empty()) {
            scan_space(inflated.plaintext, child_base(base, pos), depth + 1, config, out);
        }
        if (inflated.clean_end) next_allowed = pos + std::max<std::size_t>(inflated.consumed, 1);
    }
}

struct ChunkFindings {
    std::vector<FeatureRecord> records;          // base "" only
    std::vector<std::uint64_t> gzip_candidates;  // global positions
};

// Scans one chunk buffer. `buf` covers [buf_start, buf_start+len) of the
// image; only findings starting inside [owned_begin, owned_end) are kept,
// so chunk boundaries neither drop nor duplicate matches.
ChunkFindings scan_chunk(std::string_view buf, std::uint64_t buf_start,
                         std::uint64_t owned_begin, std::uint64_t owned_end,
                         const ScanConfig& config) {
    ChunkFindings findings;
    const auto owned = [&](std::uint64_t global) {
        return global >= owned_begin && global < owned_end;
    };
    for (const EmailMatch& m : match_email(buf)) {
        const std::uint64_t global = buf_start + m.start;
        if (!owned(global)) continue;
        findings.records.push_back(
            FeatureRecord{ForensicPath{"", global},
                          to_lower(m.address),
                          slice_context(buf, m.start, m.address.size())});
    }
    if (config.scan_utf16) {
        for (const detail::Utf16Match& m : detail::find_utf16_matches(buf)) {
            const std::uint64_t global = buf_start + m.start;
            if (!owned(global)) continue;
            findings.records.push_back(
                FeatureRecord{ForensicPath{"", global},
                              to_lower(m.address),
                              slice_context(buf, m.start, m.byte_length)});
        }
    }
    if (config.max_recursion_depth > 0) {
        for (const std::size_t pos : detail::find_gzip_candidates(buf)) {
            const std::uint64_t global = buf_start + pos;
            if (owned(global)) findings.gzip_candidates.push_back(global);
        }
    }
    return findings;
}

void sort_and_dedupe(std::vector<FeatureRecord>& records) {
    std::sort(records.begin(), records.end());
    records.erase(std::unique(records.begin(), records.end()), records.end());
}

}  // namespace

std::vector<FeatureRecord> scan_image(const ImageReader& image, const ScanConfig& config) {
    config.validate();
    const std::uint64_t size = image.size();
    std::vector<FeatureRecord> records;
    std::vector<std::uint64_t> candidates;

    struct ChunkJob {
        std::string buffer;
        std::uint64_t buf_start = 0;
        std::uint64_t owned_begin = 0;
        std::uint64_t owned_end = 0;
    };

    std::uint64_t chunk_begin = 0;
    while (chunk_begin < size) {
        // One batch of chunks: sequential reads, parallel scans.
        std::vector<ChunkJob> jobs;
        for (unsigned i = 0; i < config.threads && chunk_begin < size; ++i) {
            ChunkJob job;
            const std::uint64_t lead = std::min<std::uint64_t>(config.overlap, chunk_begin);
            job.buf_start = chunk_begin - lead;
            job.owned_begin = chunk_begin;
            job.owned_end = std::min<std::uint64_t>(size, chunk_begin + config.chunk_size);
            const std::uint64_t buf_end =
                std::min<std::uint64_t>(size, job.owned_end + config.overlap);
            job.buffer.resize(static_cast<std::size_t>(buf_end - job.buf_start));
            const std::size_t got =
                image.read_at(job.buf_start, job.buffer.data(), job.buffer.size());
            job.buffer.resize(got);
            chunk_begin = job.owned_end;
            jobs.push_back(std::move(job));
        }

        const auto collect = [&](ChunkFindings f) {
            records.insert(records.end(), std::make_move_iterator(f.records.begin()),
                           std::make_move_iterator(f.records.end()));
            candidates.insert(candidates.end(), f.gzip_candidates.begin(),
                              f.gzip_candidates.end());
        };

        if (config.threads == 1 || jobs.size() == 1) {
            for (const ChunkJob& job : jobs) {
                collect(scan_chunk(job.buffer, job.buf_start, job.owned_begin,
                                   job.owned_end, config));
            }
        } else {
            std::vector<std::future<ChunkFindings>> futures;
            futures.reserve(jobs.size());
            for (const ChunkJob& job : jobs) {
                futures.push_back(std::async(std::launch::async, [&job, &config] {
                    return scan_chunk(job.buffer, job.buf_start, job.owned_begin,
                                      job.owned_end, config);
                }));
            }
            for (auto& fut : futures) collect(fut.get());
        }
    }

    // Decompression pass, in image order. A cleanly decoded member's
    // compressed extent is not searched again for nested magics.
    std::sort(candidates.begin(), candidates.end());
    std::uint64_t next_allowed = 0;
    for (const std::uint64_t pos : candidates) {
        if (pos < next_allowed) continue;
        const auto inflated = detail::inflate_gzip_at(image, pos, kMaxPlaintextBytes);
        if (!inflated.plaintext.empty()) {
            scan_space(inflated.plaintext, std::to_string(pos) + "-GZIP", 1, config, records);
        }
        if (inflated.clean_end) {
            next_allowed = pos + std::max<std::size_t>(inflated.consumed, 1);
        }
    }

    sort_and_dedupe(records);
    return records;
}

std::vector<FeatureRecord> scan_image(std::string_view data, const ScanConfig& config) {
    MemoryImage image{std::string(data)};
    return scan_image(image, config);
}

std::vector<FeatureRecord> scan_image_file(const std::filesystem::path& path,
                                           const ScanConfig& config) {
    FileImage image{path};
    return scan_image(image, config);
}

std::vector<FeatureRecord> scan_compressed(std::string_view region,
                                           const ForensicPath& parent,
                                           int depth,
                                           const ScanConfig& config) {
    std::vector<FeatureRecord> out;
    if (depth >= config.max_recursion_depth) return out;
    const auto inflated = detail::inflate_gzip(region, kMaxPlaintextBytes);
    if (!inflated.plaintext.empty()) {
        scan_space(inflated.plaintext, parent.raw() + "-GZIP", depth + 1, config, out);
    }
    sort_and_dedupe(out);
    return out;
}

}  // namespace corefnet
