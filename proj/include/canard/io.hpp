#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <locale>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace canard {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> r) { rows.push_back(std::move(r)); }
    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw std::out_of_range("csv: no column '" + name + "'");
    }
    double number(std::size_t row, const std::string& name) const;
};

inline std::string csv_num(double v) {
    std::ostringstream o;
    o.imbue(std::locale::classic());
    o.precision(17);
    o << v;
    return o.str();
}

inline double parse_num(const std::string& cell) {
    if (cell == "nan" || cell == "-nan") return std::nan("");
    std::istringstream in(cell);
    in.imbue(std::locale::classic());
    double v;
    if (!(in >> v) || !in.eof()) throw std::runtime_error("csv: bad number '" + cell + "'");
    return v;
}

inline double CsvTable::number(std::size_t row, const std::string& name) const {
    return parse_num(rows.at(row).at(column(name)));
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.imbue(std::locale::classic());
    return out;
}

inline void write_csv(const std::filesystem::path& path, const CsvTable& t) {
    if (t.header.empty()) throw std::invalid_argument("csv: header row is mandatory");
    auto out = open_out(path);
    for (std::size_t i = 0; i < t.header.size(); ++i) out << (i ? "," : "") << t.header[i];
    out << '\n';
    for (auto& r : t.rows) {
        if (r.size() != t.header.size()) throw std::invalid_argument("csv: row width differs from header");
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
        out << '\n';
    }
}

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    auto split = [](const std::string& line) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        return cells;
    };
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("csv: missing header in " + path.string());
    t.header = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto row = split(line);
        if (row.size() != t.header.size()) throw std::runtime_error("csv: row width differs from header");
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return nlohmann::json::parse(in);
}

namespace detail {

struct Frame {
    double x0, x1, y0, y1;
    static constexpr double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
    double px(double x) const { return L + (x - x0) / (x1 - x0) * (W - L - R); }
    double py(double y) const { return H - B - (y - y0) / (y1 - y0) * (H - T - B); }
};

inline Frame make_frame(double x0, double x1, double y0, double y1) {
    if (!(x1 > x0)) x1 = x0 + 1;
    if (!(y1 > y0)) {
        const double pad = std::max(1e-12, std::abs(y0) * 0.1);
        y0 -= pad;
        y1 += pad;
    }
    return {x0, x1, y0, y1};
}

inline void axes(std::ostream& o, const Frame& f, const std::string& title, const std::string& xl,
                 const std::string& yl) {
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Frame::W << "\" height=\"" << Frame::H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << Frame::W / 2 << "\" y=\"22\" text-anchor=\"middle\">" << title << "</text>\n";
    const double xa = f.py(f.y0), ya = f.px(f.x0);
    o << "<line x1=\"" << Frame::L << "\" y1=\"" << xa << "\" x2=\"" << Frame::W - Frame::R << "\" y2=\"" << xa
      << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << ya << "\" y1=\"" << Frame::T << "\" x2=\"" << ya << "\" y2=\"" << Frame::H - Frame::B
      << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = f.x0 + (f.x1 - f.x0) * k / 4, yv = f.y0 + (f.y1 - f.y0) * k / 4;
        o << "<text x=\"" << f.px(xv) << "\" y=\"" << xa + 16 << "\" text-anchor=\"middle\">" << xv << "</text>\n";
        o << "<text x=\"" << ya - 6 << "\" y=\"" << f.py(yv) + 4 << "\" text-anchor=\"end\">" << yv << "</text>\n";
    }
    o << "<text x=\"" << Frame::W / 2 << "\" y=\"" << Frame::H - 10 << "\" text-anchor=\"middle\">" << xl
      << "</text>\n";
    o << "<text x=\"16\" y=\"" << Frame::H / 2 << "\" transform=\"rotate(-90 16 " << Frame::H / 2
      << ")\" text-anchor=\"middle\">" << yl << "</text>\n";
}

}  // namespace detail

struct PolylineSeries {
    std::string label;
    std::vector<double> x, y;
};

inline void write_svg_polylines(const std::filesystem::path& path, const std::vector<PolylineSeries>& series,
                                const std::string& title, const std::string& xlabel, const std::string& ylabel) {
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (!std::isfinite(x0)) throw std::invalid_argument("svg: no finite points");
    auto f = detail::make_frame(x0, x1, y0, y1);
    auto out = open_out(path);
    out.precision(6);
    detail::axes(out, f, title, xlabel, ylabel);
    static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
    for (std::size_t k = 0; k < series.size(); ++k) {
        out << "<polyline fill=\"none\" stroke=\"" << colours[k % 5] << "\" stroke-width=\"1.2\" points=\"";
        for (std::size_t i = 0; i < series[k].x.size(); ++i)
            if (std::isfinite(series[k].x[i]) && std::isfinite(series[k].y[i]))
                out << f.px(series[k].x[i]) << ',' << f.py(series[k].y[i]) << ' ';
        out << "\"/>\n";
        out << "<text x=\"" << detail::Frame::W - 30 << "\" y=\"" << 50 + 16 * k << "\" text-anchor=\"end\" fill=\""
            << colours[k % 5] << "\">" << series[k].label << "</text>\n";
    }
    out << "</svg>\n";
}

// Cells coloured by the sign of value: red positive, blue negative, grey zero/NaN.
inline void write_svg_sign_heatmap(const std::filesystem::path& path, const std::vector<double>& xs,
                                   const std::vector<double>& ys, const std::vector<std::vector<double>>& value,
                                   const std::string& title, const std::string& xlabel, const std::string& ylabel) {
    if (xs.empty() || ys.empty()) throw std::invalid_argument("svg: empty grid");
    auto f = detail::make_frame(xs.front(), xs.back(), ys.front(), ys.back());
    auto out = open_out(path);
    out.precision(6);
    detail::axes(out, f, title, xlabel, ylabel);
    const double dx = xs.size() > 1 ? (xs.back() - xs.front()) / (xs.size() - 1) : 1;
    const double dy = ys.size() > 1 ? (ys.back() - ys.front()) / (ys.size() - 1) : 1;
    for (std::size_t j = 0; j < ys.size(); ++j)
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double v = value[j][i];
            const char* c = v > 0 ? "#d62728" : v < 0 ? "#1f77b4" : "#999999";
            const double x = f.px(xs[i] - dx / 2), y = f.py(ys[j] + dy / 2);
            const double w = f.px(xs[i] + dx / 2) - x, h = f.py(ys[j] - dy / 2) - y;
            out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << h << "\" fill=\""
                << c << "\" fill-opacity=\"0.7\"/>\n";
        }
    out << "</svg>\n";
}

}  // namespace canard
