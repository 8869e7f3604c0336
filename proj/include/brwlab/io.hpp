#pragma once

// Output plumbing: canonical 17-significant-digit reals, FNV-1a config
// hashing, and a tiny CSV writer. All files are UTF-8 with LF line endings;
// identical configs must produce byte-identical files.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace brwlab {

inline std::string format_real(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hash_hex(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : path_(path) {}

    // '#'-prefixed header lines: the statement the file verifies and the
    // config hash.
    void comment(const std::string& line) { buffer_ += "# " + line + "\n"; }
    void header(const std::string& columns) { buffer_ += columns + "\n"; }

    template <typename... Cells>
    void row(const Cells&... cells) {
        bool first = true;
        ((buffer_ += (first ? "" : ",") + cell(cells), first = false), ...);
        buffer_ += "\n";
    }

    const std::string& content() const { return buffer_; }

    void write() const {
        std::ofstream os(path_, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open output file: " + path_);
        os << buffer_;
    }

private:
    static std::string cell(double x) { return format_real(x); }
    static std::string cell(int x) { return std::to_string(x); }
    static std::string cell(long x) { return std::to_string(x); }
    static std::string cell(std::size_t x) { return std::to_string(x); }
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }

    std::string path_;
    std::string buffer_;
};

}  // namespace brwlab
