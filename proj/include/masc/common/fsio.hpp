// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace masc {

std::string read_file(const std::filesystem::path& path);

// write-temp-then-rename so readers never observe a partial file
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

std::vector<std::string> read_lines(const std::filesystem::path& path);

// Advisory exclusive lock on <path>; blocks until acquired, released on scope
// exit. Used to serialize cache writes across processes.
class ScopedFileLock {
public:
    explicit ScopedFileLock(const std::filesystem::path& path);
    ~ScopedFileLock();
    ScopedFileLock(const ScopedFileLock&) = delete;
    ScopedFileLock& operator=(const ScopedFileLock&) = delete;

    bool held() const { return fd_ >= 0; }

private:
    int fd_ = -1;
};

}  // namespace masc
