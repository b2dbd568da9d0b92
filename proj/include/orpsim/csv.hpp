#ifndef ORPSIM_CSV_HPP
#define ORPSIM_CSV_HPP

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "orpsim/common.hpp"

namespace orpsim::csv {

inline std::vector<std::string> split(const std::string& line, char delim = ',') {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, delim)) {
        out.push_back(field);
    }
    if (!line.empty() && line.back() == delim) {
        out.emplace_back();
    }
    return out;
}

inline std::string strip(std::string s) {
    auto issp = [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && issp(s.back())) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && issp(s[i])) ++i;
    return s.substr(i);
}

// Rows of a delimited text file, header included, blank lines skipped.
inline std::vector<std::vector<std::string>> read_file(const std::filesystem::path& path,
                                                       char delim = ',') {
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot open file: " + path.string());
    }
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (strip(line).empty()) continue;
        rows.push_back(split(line, delim));
    }
    return rows;
}

// Write-then-rename so readers never observe a partially written file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw io_error("cannot write file: " + path.string());
        }
        out << content;
        if (!out) {
            throw io_error("write failed: " + path.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        throw io_error("rename failed for " + path.string() + ": " + ec.message());
    }
}

} // namespace orpsim::csv

#endif
