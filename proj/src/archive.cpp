#include "vsfleet/archive.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <memory>

#include <openssl/evp.h>
#include <zlib.h>

#include "vsfleet/error.hpp"

namespace vsfleet {

namespace {

constexpr std::size_t kBlock = 512;
constexpr std::string_view kLongLinkName = "././@LongLink";

void put_octal(char* field, std::size_t width, std::uint64_t value) {
    // width-1 digits followed by NUL.
    std::string digits(width - 1, '0');
    for (std::size_t i = width - 1; i-- > 0 && value;) {
        digits[i] = static_cast<char>('0' + (value & 7));
        value >>= 3;
    }
    std::memcpy(field, digits.data(), width - 1);
    field[width - 1] = '\0';
}

std::uint64_t get_octal(const char* field, std::size_t width) {
    std::uint64_t v = 0;
    std::size_t i = 0;
    while (i < width && field[i] == ' ') ++i;
    for (; i < width && field[i] >= '0' && field[i] <= '7'; ++i) v = (v << 3) | static_cast<std::uint64_t>(field[i] - '0');
    return v;
}

unsigned header_checksum(const char* header) {
    unsigned sum = 0;
    for (std::size_t i = 0; i < kBlock; ++i)
        sum += (i >= 148 && i < 156) ? ' ' : static_cast<unsigned char>(header[i]);
    return sum;
}

void append_header(std::string& out, std::string_view name, std::uint64_t size, char type) {
    std::array<char, kBlock> h{};
    std::memcpy(h.data(), name.data(), std::min<std::size_t>(name.size(), 100));
    put_octal(h.data() + 100, 8, 0644);
    put_octal(h.data() + 108, 8, 0);
    put_octal(h.data() + 116, 8, 0);
    put_octal(h.data() + 124, 12, size);
    put_octal(h.data() + 136, 12, 0);
    h[156] = type;
    std::memcpy(h.data() + 257, "ustar", 6);
    std::memcpy(h.data() + 263, "00", 2);
    put_octal(h.data() + 148, 7, header_checksum(h.data()));
    h[155] = ' ';
    out.append(h.data(), h.size());
}

void append_padded(std::string& out, std::string_view data) {
    out.append(data);
    if (auto rem = data.size() % kBlock) out.append(kBlock - rem, '\0');
}

std::size_t padded(std::uint64_t size) { return static_cast<std::size_t>((size + kBlock - 1) / kBlock * kBlock); }

}  // namespace

std::string tar_pack(std::vector<ArchiveEntry> entries) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    std::size_t total = 2 * kBlock;
    for (const auto& e : entries) total += 3 * kBlock + padded(e.content.size()) + padded(e.name.size() + 1);
    std::string out;
    out.reserve(total);
    for (const auto& e : entries) {
        if (e.name.size() > 100) {
            append_header(out, kLongLinkName, e.name.size() + 1, 'L');
            std::string long_name = e.name;
            long_name.push_back('\0');
            append_padded(out, long_name);
        }
        append_header(out, e.name, e.content.size(), '0');
        append_padded(out, e.content);
    }
    out.append(2 * kBlock, '\0');
    return out;
}

std::vector<ArchiveEntry> tar_unpack(std::string_view tar) {
    std::vector<ArchiveEntry> out;
    std::string pending_name;
    std::size_t pos = 0;
    while (true) {
        if (pos + kBlock > tar.size()) throw Error(ErrorCode::archive_corrupt, "truncated tar stream");
        const char* h = tar.data() + pos;
        if (std::all_of(h, h + kBlock, [](char c) { return c == '\0'; })) break;
        if (get_octal(h + 148, 8) != header_checksum(h)) throw Error(ErrorCode::archive_corrupt, "bad tar header checksum");

        const std::uint64_t size = get_octal(h + 124, 12);
        const char type = h[156];
        pos += kBlock;
        if (size > tar.size() - pos) throw Error(ErrorCode::archive_corrupt, "tar entry overruns stream");
        std::string_view body = tar.substr(pos, static_cast<std::size_t>(size));
        pos += padded(size);

        if (type == 'L') {
            pending_name = std::string(body.substr(0, body.find('\0')));
            continue;
        }
        std::string name;
        if (!pending_name.empty()) {
            name = std::move(pending_name);
            pending_name.clear();
        } else {
            name.assign(h, strnlen(h, 100));
            if (std::memcmp(h + 257, "ustar", 5) == 0 && h[345] != '\0')
                name = std::string(h + 345, strnlen(h + 345, 155)) + "/" + name;
        }
        if (type == '5') continue;
        if (type != '0' && type != '\0') throw Error(ErrorCode::archive_corrupt, "unsupported tar entry type");
        out.push_back({std::move(name), std::string(body)});
    }
    return out;
}

std::string gzip_compress(std::string_view data, int level) {
    z_stream zs{};
    if (deflateInit2(&zs, level, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK)
        throw Error(ErrorCode::io_error, "deflateInit2 failed");
    std::string out(deflateBound(&zs, static_cast<uLong>(data.size())), '\0');
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    zs.avail_in = static_cast<uInt>(data.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = deflate(&zs, Z_FINISH);
    out.resize(zs.total_out);
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) throw Error(ErrorCode::io_error, "deflate did not finish");
    return out;
}

std::string gzip_decompress(std::string_view data) {
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 32) != Z_OK) throw Error(ErrorCode::io_error, "inflateInit2 failed");
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    zs.avail_in = static_cast<uInt>(data.size());
    std::string out;
    std::array<char, 1 << 16> chunk{};
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = reinterpret_cast<Bytef*>(chunk.data());
        zs.avail_out = static_cast<uInt>(chunk.size());
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw Error(ErrorCode::archive_corrupt, "gzip stream is damaged");
        }
        out.append(chunk.data(), chunk.size() - zs.avail_out);
        if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
            inflateEnd(&zs);
            throw Error(ErrorCode::archive_corrupt, "gzip stream is truncated");
        }
    }
    inflateEnd(&zs);
    return out;
}

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned len = 0;
    if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorCode::io_error, "sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

Archive compress(std::span<const VirtualSensorDescriptor> files) {
    if (files.empty()) throw Error(ErrorCode::empty_file_list, "nothing to archive");
    std::vector<ArchiveEntry> entries;
    entries.reserve(files.size());
    for (const auto& f : files) entries.push_back({f.file_name, f.content});
    Archive a;
    a.bytes = gzip_compress(tar_pack(std::move(entries)));
    a.digest = sha256_hex(a.bytes);
    return a;
}

std::vector<ArchiveEntry> extract(std::string_view archive_bytes) {
    return tar_unpack(gzip_decompress(archive_bytes));
}

}  // namespace vsfleet
