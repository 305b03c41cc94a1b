#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#ifndef XLRR_FIXTURE_DIR
#define XLRR_FIXTURE_DIR "fixtures"
#endif

namespace helpers {

inline std::string fixture_path(const std::string& name) {
    return std::string(XLRR_FIXTURE_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

// Strips one trailing newline; golden template files end with exactly one.
inline std::string read_template(const std::string& path) {
    std::string text = read_file(path);
    if (!text.empty() && text.back() == '\n') text.pop_back();
    return text;
}

struct CommandResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr interleaved
};

// Runs a shell command, capturing combined stdout/stderr and the exit code.
inline CommandResult run_command(const std::string& command) {
    CommandResult result;
    std::string wrapped = command + " 2>&1";
    FILE* pipe = popen(wrapped.c_str(), "r");
    if (!pipe) throw std::runtime_error("popen failed for: " + command);
    char buf[4096];
    std::size_t got = 0;
    while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) {
        result.output.append(buf, got);
    }
    int status = pclose(pipe);
    if (status >= 0 && WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    }
    return result;
}

inline std::string temp_dir(const std::string& label) {
    auto base = std::filesystem::temp_directory_path() / ("xlrr-test-" + label);
    std::filesystem::remove_all(base);
    std::filesystem::create_directories(base);
    return base.string();
}

}  // namespace helpers
