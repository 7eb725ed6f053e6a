#pragma once

/// @file csv.hpp
/// @brief Minimal CSV row writer. Doubles are written with 17 significant
/// digits so files round-trip exactly and are byte-stable across runs.

#include <charconv>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>

namespace feel {

/// Collects fields and emits them comma-separated, newline-terminated, on destruction.
class CsvRow {
public:
    explicit CsvRow(std::ostream& out) : out_(out) {}
    CsvRow(const CsvRow&) = delete;
    CsvRow& operator=(const CsvRow&) = delete;
    ~CsvRow() { out_ << line_ << '\n'; }

    CsvRow& operator<<(std::string_view s) {
        sep();
        line_ += s;
        return *this;
    }
    CsvRow& operator<<(const std::string& s) { return *this << std::string_view(s); }
    CsvRow& operator<<(const char* s) { return *this << std::string_view(s); }

    CsvRow& operator<<(double v) {
        sep();
        char buf[32];
        auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
        line_.append(buf, res.ptr);
        return *this;
    }

    CsvRow& operator<<(std::int64_t v) {
        sep();
        line_ += std::to_string(v);
        return *this;
    }
    CsvRow& operator<<(int v) { return *this << static_cast<std::int64_t>(v); }
    CsvRow& operator<<(std::size_t v) { return *this << static_cast<std::int64_t>(v); }

private:
    void sep() {
        if (!first_) {
            line_ += ',';
        }
        first_ = false;
    }

    std::ostream& out_;
    std::string line_;
    bool first_ = true;
};

}  // namespace feel
