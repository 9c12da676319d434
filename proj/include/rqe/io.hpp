#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rqe/core.hpp"

namespace rqe {

/// A parsed point file: the points plus the original color labels, indexed by
/// color id in order of first appearance.
struct dataset {
    colored_point_set points;
    std::vector<std::string> color_names;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t p = line.find(sep, start);
        std::string_view f = line.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start);
        while (!f.empty() && (f.front() == ' ' || f.front() == '\t' || f.front() == '"')) f.remove_prefix(1);
        while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '"' || f.back() == '\r')) f.remove_suffix(1);
        out.push_back(f);
        if (p == std::string_view::npos) break;
        start = p + 1;
    }
    return out;
}

inline std::string at_line(std::size_t line, const std::string& msg) {
    return "line " + std::to_string(line) + ": " + msg;
}

inline double parse_number(std::string_view f, std::size_t line, const char* what) {
    double v = 0;
    if (f.empty()) throw error(error::data_error, at_line(line, std::string("empty ") + what));
    const char* b = f.data();
    if (*b == '+') ++b;
    const auto [p, ec] = std::from_chars(b, f.data() + f.size(), v);
    if (ec != std::errc() || p != f.data() + f.size())
        throw error(error::data_error, at_line(line, std::string("cannot parse ") + what + " '" + std::string(f) + "'"));
    return v;
}

}  // namespace detail

/// Reads CSV or TSV point data. The header names the columns x1..xd, color and
/// optionally weight, in any order; the separator is a tab when the header has
/// one, a comma otherwise.
inline dataset read_points(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    do {
        if (!std::getline(in, line)) throw error(error::data_error, "missing header row");
        ++lineno;
        if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    } while (line.find_first_not_of(" \t\r") == std::string::npos);

    const char sep = line.find('\t') != std::string::npos ? '\t' : ',';
    const auto header = detail::split_fields(line, sep);
    std::vector<long> axis_col;
    long color_col = -1, weight_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string_view h = header[i];
        if (h == "color") {
            color_col = long(i);
        } else if (h == "weight") {
            weight_col = long(i);
        } else if (h.size() >= 2 && h[0] == 'x') {
            std::size_t k = 0;
            const auto [p, ec] = std::from_chars(h.data() + 1, h.data() + h.size(), k);
            if (ec != std::errc() || p != h.data() + h.size() || k == 0)
                throw error(error::data_error, detail::at_line(lineno, "unknown column '" + std::string(h) + "'"));
            if (axis_col.size() < k) axis_col.resize(k, -1);
            axis_col[k - 1] = long(i);
        } else {
            throw error(error::data_error, detail::at_line(lineno, "unknown column '" + std::string(h) + "'"));
        }
    }
    if (color_col < 0) throw error(error::data_error, detail::at_line(lineno, "header has no color column"));
    if (axis_col.empty()) throw error(error::data_error, detail::at_line(lineno, "header has no x1 column"));
    for (std::size_t k = 0; k < axis_col.size(); ++k)
        if (axis_col[k] < 0)
            throw error(error::dimension_mismatch, detail::at_line(lineno, "missing column x" + std::to_string(k + 1)));
    const std::size_t d = axis_col.size();

    dataset out;
    std::unordered_map<std::string, color_id> ids;
    std::vector<double> coords, weights;
    std::vector<color_id> colors;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto f = detail::split_fields(line, sep);
        if (f.size() != header.size())
            throw error(error::dimension_mismatch, detail::at_line(lineno, "expected " + std::to_string(header.size()) +
                                                                         " fields, found " + std::to_string(f.size())));
        for (std::size_t k = 0; k < d; ++k) {
            const double v = detail::parse_number(f[std::size_t(axis_col[k])], lineno, "coordinate");
            if (!std::isfinite(v)) throw error(error::data_error, detail::at_line(lineno, "non-finite coordinate"));
            coords.push_back(v);
        }
        double w = 1.0;
        if (weight_col >= 0) {
            w = detail::parse_number(f[std::size_t(weight_col)], lineno, "weight");
            if (!(w >= 0) || !std::isfinite(w))
                throw error(error::invalid_weight, detail::at_line(lineno, "weight must be finite and nonnegative"));
        }
        weights.push_back(w);
        const std::string label(f[std::size_t(color_col)]);
        if (label.empty()) throw error(error::data_error, detail::at_line(lineno, "empty color"));
        auto [it, fresh] = ids.emplace(label, color_id(out.color_names.size()));
        if (fresh) out.color_names.push_back(label);
        colors.push_back(it->second);
    }
    out.points = colored_point_set(d, std::move(coords), std::move(colors), std::move(weights));
    return out;
}

inline dataset read_points_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error(error::data_error, "cannot open " + path);
    return read_points(in);
}

/// Writes points in the format read_points accepts.
inline void write_points(std::ostream& out, const colored_point_set& pts, const std::vector<std::string>& names = {}) {
    for (std::size_t k = 0; k < pts.dim(); ++k) out << 'x' << (k + 1) << ',';
    out << "color";
    const bool weighted = !pts.unit_weights();
    if (weighted) out << ",weight";
    out << '\n';
    out.precision(17);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t k = 0; k < pts.dim(); ++k) out << pts.coord(i, k) << ',';
        if (pts.color(i) < names.size()) out << names[pts.color(i)];
        else out << 'c' << pts.color(i);
        if (weighted) out << ',' << pts.weight(i);
        out << '\n';
    }
}

}  // namespace rqe
