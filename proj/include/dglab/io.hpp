#pragma once

// CSV and hashing helpers shared by the command-line front end and the tests.
// Numbers are written in shortest round-trip form so equal runs give equal bytes.

#include "dglab/series.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace dglab::io {

inline std::string format_double(double x)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

/// %.17g, used for the coefficient table.
inline std::string format_g17(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline double parse_double(const std::string& s)
{
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    while (first < last && *first == ' ') {
        ++first;
    }
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) {
        if (s == "nan" || s == "-nan") {
            return std::numeric_limits<double>::quiet_NaN();
        }
        throw std::invalid_argument("not a number: '" + s + "'");
    }
    return v;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                return i;
            }
        }
        throw std::out_of_range("no column '" + name + "'");
    }

    std::vector<double> numbers(const std::string& name) const
    {
        const std::size_t c = column(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) {
            out.push_back(parse_double(r.at(c)));
        }
        return out;
    }
};

inline std::vector<std::string> split_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

inline Table read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    Table t;
    std::string line;
    if (std::getline(in, line)) {
        t.header = split_line(line);
    }
    while (std::getline(in, line)) {
        if (!line.empty()) {
            t.rows.push_back(split_line(line));
        }
    }
    return t;
}

/// Builds CSV text row by row.
class CsvWriter {
public:
    explicit CsvWriter(const std::vector<std::string>& header)
    {
        for (std::size_t i = 0; i < header.size(); ++i) {
            text_ += (i ? "," : "") + header[i];
        }
        text_ += '\n';
    }

    CsvWriter& row(const std::vector<double>& values)
    {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) {
                text_ += ',';
            }
            text_ += format_double(values[i]);
        }
        text_ += '\n';
        return *this;
    }

    CsvWriter& raw_row(const std::vector<std::string>& cells)
    {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            text_ += (i ? "," : "") + cells[i];
        }
        text_ += '\n';
        return *this;
    }

    const std::string& str() const { return text_; }

private:
    std::string text_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << text;
}

inline std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string sha256_hex(const std::string& data)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    std::ostringstream ss;
    for (unsigned int i = 0; i < len; ++i) {
        ss << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return ss.str();
}

// ---------------------------------------------------------------------------
// Series files: basis,index,coefficient and theta,value

inline std::string series_csv(const TildeSeries& s)
{
    CsvWriter w({"basis", "index", "coefficient"});
    for (std::size_t k = 1; k <= s.size(); ++k) {
        w.raw_row({"tilde", std::to_string(k), format_double(s.coeffs[k - 1])});
    }
    return w.str();
}

inline std::string series_csv(const SineSeries& s)
{
    CsvWriter w({"basis", "index", "coefficient"});
    for (std::size_t j = 1; j <= s.size(); ++j) {
        w.raw_row({"sine", std::to_string(j), format_double(s.coeffs[j - 1])});
    }
    return w.str();
}

/// Cosine rows carry index 0 for the mean.
inline std::string series_csv(const FourierField& f)
{
    CsvWriter w({"basis", "index", "coefficient"});
    w.raw_row({"cos", "0", format_double(f.mean)});
    for (std::size_t j = 1; j <= f.modes(); ++j) {
        w.raw_row({"cos", std::to_string(j), format_double(f.cos[j - 1])});
    }
    for (std::size_t j = 1; j <= f.modes(); ++j) {
        w.raw_row({"sine", std::to_string(j), format_double(f.sin[j - 1])});
    }
    return w.str();
}

struct SeriesFile {
    std::map<long, double> tilde;
    std::map<long, double> sine;
    std::map<long, double> cos;
};

inline SeriesFile parse_series_csv(const Table& t)
{
    if (t.header != std::vector<std::string>{"basis", "index", "coefficient"}) {
        throw std::invalid_argument("series csv: header must be basis,index,coefficient");
    }
    SeriesFile f;
    for (const auto& r : t.rows) {
        if (r.size() != 3) {
            throw std::invalid_argument("series csv: each row needs three cells");
        }
        const long idx = std::stol(r[1]);
        const double v = parse_double(r[2]);
        if (r[0] == "tilde") {
            f.tilde[idx] = v;
        } else if (r[0] == "sine") {
            f.sine[idx] = v;
        } else if (r[0] == "cos") {
            f.cos[idx] = v;
        } else {
            throw std::invalid_argument("series csv: unknown basis '" + r[0] + "'");
        }
    }
    return f;
}

inline TildeSeries tilde_from(const SeriesFile& f)
{
    long top = 0;
    for (const auto& [k, v] : f.tilde) {
        if (k < 1) {
            throw std::invalid_argument("series csv: tilde index must be >= 1");
        }
        top = std::max(top, k);
    }
    TildeSeries s(static_cast<std::size_t>(top));
    for (const auto& [k, v] : f.tilde) {
        s.at(k) = v;
    }
    return s;
}

inline std::string grid_csv(const GridField& g)
{
    CsvWriter w({"theta", "value"});
    for (std::size_t m = 0; m < g.size(); ++m) {
        w.row({grid_theta(m, g.size()), g.values[m]});
    }
    return w.str();
}

inline GridField parse_grid_csv(const Table& t)
{
    GridField g;
    for (double v : t.numbers("value")) {
        g.values.push_back(v);
    }
    return g;
}

} // namespace dglab::io
