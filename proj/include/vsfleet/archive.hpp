#pragma once

// Deterministic tar.gz archives of descriptor files.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vsfleet/marshal.hpp"

namespace vsfleet {

struct ArchiveEntry {
    std::string name;
    std::string content;

    bool operator==(const ArchiveEntry&) const = default;
};

/// POSIX ustar stream: entries sorted by name, mode 0644, uid/gid 0, mtime 0.
/// Names longer than 100 bytes use a GNU long-name record.
std::string tar_pack(std::vector<ArchiveEntry> entries);

/// Regular-file entries in stream order. Throws Error(archive_corrupt).
std::vector<ArchiveEntry> tar_unpack(std::string_view tar);

/// gzip member with zeroed header timestamp.
std::string gzip_compress(std::string_view data, int level = 6);
/// Throws Error(archive_corrupt).
std::string gzip_decompress(std::string_view data);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);

struct Archive {
    std::string bytes;
    std::string digest;  // sha256_hex(bytes)
};

/// Packs descriptors as `<file_name>` entries; identical input gives identical
/// bytes. Throws Error(empty_file_list).
Archive compress(std::span<const VirtualSensorDescriptor> files);

/// gunzip + untar.
std::vector<ArchiveEntry> extract(std::string_view archive_bytes);

}  // namespace vsfleet
