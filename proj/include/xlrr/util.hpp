#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace xlrr {

std::string read_text_file(const std::filesystem::path& path);

// Writes to a temp file in the same directory, then renames over the target.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex(std::string_view data);

// Advisory lock on a directory; held for the lifetime of the object.
// A second lock attempt on the same directory fails immediately.
class DirLock {
public:
    explicit DirLock(const std::filesystem::path& dir);
    ~DirLock();

    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    int fd_ = -1;
    std::filesystem::path lock_path_;
};

} // namespace xlrr
