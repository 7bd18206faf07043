#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "meponmf/common.hpp"
#include "meponmf/data_matrix.hpp"

namespace meponmf {

namespace detail {

inline double parse_field(std::string_view s, const std::string& where) {
    // trim blanks; '.' decimal separator, locale-independent
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ParseError("CSV: bad numeric field '" + std::string(s) + "' in " + where);
    return v;
}

inline std::vector<std::vector<double>> read_csv_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t start = 0;
        const std::string where = path + ":" + std::to_string(lineno);
        for (;;) {
            std::size_t comma = line.find(',', start);
            std::string_view field(line.data() + start,
                                   (comma == std::string::npos ? line.size() : comma) - start);
            row.push_back(parse_field(field, where));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError("CSV: ragged row at " + where);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("CSV: no data in " + path);
    return rows;
}

}  // namespace detail

/// Read a headerless numeric CSV as a dense matrix (rows x fields).
inline Matrix read_csv_matrix(const std::string& path) {
    auto rows = detail::read_csv_rows(path);
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c)
            m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    return m;
}

/// Write a headerless numeric CSV, row-major, 17 significant digits.
inline void write_csv_matrix(const std::string& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open file for writing: " + path);
    char buf[64];
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
            if (c) out << ',';
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw ParseError("write failed: " + path);
}

/// Load a data matrix from CSV, with optional single-line weights CSV.
/// Weights default to uniform 1/n. Domain violations (negative, NaN, zero
/// column) raise DomainError; ill-formed weights raise WeightError.
inline DataMatrix load_matrix(const std::string& path,
                              const std::optional<std::string>& weights_path = std::nullopt) {
    Matrix values = read_csv_matrix(path);
    if (!weights_path) return DataMatrix::from_values(std::move(values));
    Matrix w = read_csv_matrix(*weights_path);
    if (w.rows() != 1) throw ParseError("weights file must be a single CSV line: " + *weights_path);
    if (w.cols() != values.cols())
        throw ParseError("weights count does not match matrix columns: " + *weights_path);
    return DataMatrix::from_values(std::move(values), w.row(0).transpose());
}

}  // namespace meponmf
