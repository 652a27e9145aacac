#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

namespace spillover {

// Writes via a sibling temp file followed by rename, so readers never see
// a partially written artifact.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for write: " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Calls fn(line) for each line of a plain or gzip-compressed text file.
// Lines are delivered without the trailing newline.
inline void for_each_line(const std::filesystem::path& path,
                          const std::function<void(std::string_view)>& fn) {
    gzFile gz = gzopen(path.string().c_str(), "rb");  // reads plain files too
    if (!gz) throw std::runtime_error("cannot open: " + path.string());
    gzbuffer(gz, 1 << 20);
    std::string carry;
    std::vector<char> buf(1 << 20);
    for (;;) {
        int n = gzread(gz, buf.data(), static_cast<unsigned>(buf.size()));
        if (n < 0) {
            gzclose(gz);
            throw std::runtime_error("read error: " + path.string());
        }
        if (n == 0) break;
        std::string_view chunk(buf.data(), static_cast<std::size_t>(n));
        std::size_t start = 0;
        for (;;) {
            std::size_t nl = chunk.find('\n', start);
            if (nl == std::string_view::npos) {
                carry.append(chunk.substr(start));
                break;
            }
            if (carry.empty()) {
                fn(chunk.substr(start, nl - start));
            } else {
                carry.append(chunk.substr(start, nl - start));
                fn(carry);
                carry.clear();
            }
            start = nl + 1;
        }
    }
    gzclose(gz);
    if (!carry.empty()) fn(carry);
}

inline std::vector<std::string> read_word_list(const std::filesystem::path& path) {
    std::vector<std::string> words;
    for_each_line(path, [&](std::string_view line) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
        while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
        if (!line.empty()) words.emplace_back(line);
    });
    return words;
}

// Fixed-format float for report files; deterministic across platforms.
inline std::string fmt_g(double v, int prec = 12) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    return buf;
}

}  // namespace spillover
