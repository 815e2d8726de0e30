#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace linbolt {

// 17 significant digits: enough to round-trip any double exactly.
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// Minimal JSON emitter with caller-controlled field order.  nlohmann/json
// is used for *parsing* configs; dumps go through this writer so grid and
// scattering documents have a canonical byte layout.
class JsonWriter {
  public:
    std::string str() const { return out_; }

    void begin_object() { punct(); out_ += '{'; fresh_ = true; }
    void end_object() { out_ += '}'; fresh_ = false; }
    void begin_array() { punct(); out_ += '['; fresh_ = true; }
    void end_array() { out_ += ']'; fresh_ = false; }

    void key(const std::string& k) {
        punct();
        out_ += '"';
        out_ += k;
        out_ += "\":";
        fresh_ = true;
    }
    void value(double x) { punct(); out_ += format_double(x); }
    void value(int x) { punct(); out_ += std::to_string(x); }
    void value(std::uint64_t x) { punct(); out_ += std::to_string(x); }
    void value(const std::string& s) {
        punct();
        out_ += '"';
        for (char c : s) {
            if (c == '"' || c == '\\') out_ += '\\';
            out_ += c;
        }
        out_ += '"';
    }
    void value(const std::vector<double>& v) {
        begin_array();
        for (double x : v) value(x);
        end_array();
    }

  private:
    void punct() {
        if (!fresh_ && !out_.empty()) {
            const char c = out_.back();
            if (c != '{' && c != '[' && c != ':') out_ += ',';
        }
        fresh_ = false;
    }
    std::string out_;
    bool fresh_ = true;
};

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

// CSV with UTF-8 / LF / header row; all doubles at full precision.
class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header)
        : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path);
        ncols_ = header.size();
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) out_ << ',';
            out_ << header[i];
        }
        out_ << '\n';
    }

    using Cell = std::variant<std::int64_t, double, std::string>;

    void row(const std::vector<Cell>& cells) {
        if (cells.size() != ncols_)
            throw std::invalid_argument("CsvWriter: column count mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            if (std::holds_alternative<std::int64_t>(cells[i]))
                out_ << std::get<std::int64_t>(cells[i]);
            else if (std::holds_alternative<double>(cells[i]))
                out_ << format_double(std::get<double>(cells[i]));
            else
                out_ << std::get<std::string>(cells[i]);
        }
        out_ << '\n';
    }

  private:
    std::ofstream out_;
    std::size_t ncols_ = 0;
};

inline void write_text_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << body;
}

} // namespace linbolt
