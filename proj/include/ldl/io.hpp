#pragma once
// CSV formatting and atomic file output.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ldl::io {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Writes to a sibling temporary and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string());
        out << text;
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

class Csv {
public:
    explicit Csv(std::vector<std::string> header) : cols_(header.size()) {
        row_strings(header);
    }

    void comment(const std::string& line) { preface_ += "# " + line + "\n"; }

    void row(const std::vector<double>& vals) {
        std::vector<std::string> s;
        s.reserve(vals.size());
        for (double v : vals) s.push_back(num(v));
        row_strings(s);
    }

    void row_strings(const std::vector<std::string>& cells) {
        if (cells.size() != cols_) throw std::logic_error("csv row width mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) body_ += ',';
            body_ += cells[i];
        }
        body_ += '\n';
    }

    std::string str() const { return preface_ + body_; }
    void save(const std::filesystem::path& p) const { write_atomic(p, str()); }

private:
    std::size_t cols_;
    std::string preface_;
    std::string body_;
};

}  // namespace ldl::io
