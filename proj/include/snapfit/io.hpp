#pragma once
// Result export. Every number is printed with std::to_chars so the shortest
// representation that round-trips bit-exactly is written; re-reading a CSV
// produced here reproduces the original doubles. Keeping the formatting in
// one place is what makes "same seed, same bytes" a testable promise.

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace snapfit {

inline std::string format_number(double v) {
    std::array<char, 40> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

inline double parse_number(std::string_view s) {
    // leading/trailing blanks are tolerated; anything else must parse fully
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::runtime_error("malformed number field: '" + std::string(s) + "'");
    return v;
}

// Rectangular numeric table with named columns. Header row is mandatory:
// files must describe themselves without outside context.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void require_width(std::size_t expect) const {
        if (columns.size() != expect)
            throw std::runtime_error("csv column count mismatch");
    }
};

inline std::string to_csv(const CsvTable& t) {
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        if (i) out += ',';
        out += t.columns[i];
    }
    out += '\n';
    for (const auto& row : t.rows) {
        if (row.size() != t.columns.size())
            throw std::runtime_error("csv row width mismatch");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_number(row[i]);
        }
        out += '\n';
    }
    return out;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline CsvTable parse_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty csv");
    for (auto& f : split_csv_line(line)) t.columns.push_back(f);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != t.columns.size())
            throw std::runtime_error("csv row width mismatch");
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) row.push_back(parse_number(f));
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write: " + path);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_csv(const std::string& path, const CsvTable& t) {
    write_file(path, to_csv(t));
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return parse_csv(in);
}

// Plain-text PGM (P2). values are clamped to [0, 1] and quantized to maxval
// grey levels; any text editor can inspect the result.
inline std::string to_pgm(std::size_t width, std::size_t height,
                          const std::vector<double>& values, int maxval = 255) {
    if (values.size() != width * height)
        throw std::runtime_error("pgm size mismatch");
    if (maxval < 1 || maxval > 65535) throw std::runtime_error("pgm maxval out of range");
    std::string out = "P2\n";
    out += std::to_string(width) + " " + std::to_string(height) + "\n";
    out += std::to_string(maxval) + "\n";
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            const double v = values[r * width + c];
            const double clamped = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
            const int level = static_cast<int>(std::lround(clamped * maxval));
            if (c) out += ' ';
            out += std::to_string(level);
        }
        out += '\n';
    }
    return out;
}

inline void write_pgm(const std::string& path, std::size_t width, std::size_t height,
                      const std::vector<double>& values, int maxval = 255) {
    write_file(path, to_pgm(width, height, values, maxval));
}

inline std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf, 16);
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point tp =
                                     std::chrono::system_clock::now()) {
    const std::time_t t = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return std::string(buf);
}

// Provenance record written next to every artifact-producing command. A
// result file without its manifest is not reproducible, so the two travel
// together.
struct RunManifest {
    std::string command;
    std::string scenario_path;
    std::uint64_t scenario_hash = 0;
    std::uint64_t seed = 0;
    int workers = 1;
    bool deterministic = false;
    std::string started_at;
    std::string finished_at;
    std::vector<std::string> outputs;
};

inline std::string to_json(const RunManifest& m) {
    nlohmann::json j;
    j["command"] = m.command;
    j["scenario"] = m.scenario_path;
    j["scenario_hash"] = hash_hex(m.scenario_hash);
    j["seed"] = m.seed;
    j["workers"] = m.workers;
    j["deterministic"] = m.deterministic;
    j["started_at"] = m.started_at;
    j["finished_at"] = m.finished_at;
    j["outputs"] = m.outputs;
    return j.dump(2) + "\n";
}

inline void write_manifest(const std::string& path, const RunManifest& m) {
    write_file(path, to_json(m));
}

} // namespace snapfit
