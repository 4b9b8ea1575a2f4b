#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "freqx/linalg.hpp"

namespace freqx {

// CSV with fixed %.17g formatting so re-runs are byte-identical.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<Vec> rows;

    void add_row(const Vec& row) {
        if (row.size() != header.size()) throw std::invalid_argument("csv: row width != header width");
        rows.push_back(row);
    }
};

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_csv(const CsvTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report file: " + path);
    for (std::size_t j = 0; j < table.header.size(); ++j) out << table.header[j] << (j + 1 < table.header.size() ? "," : "");
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) out << format_double(row[j]) << (j + 1 < row.size() ? "," : "");
        out << '\n';
    }
}

// Minimal SVG line plot: one polyline per named series over a shared x vector.
inline void write_svg_lines(const std::string& path, const Vec& x, const std::vector<std::pair<std::string, Vec>>& series,
                            const std::string& title = "") {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write plot file: " + path);
    const double w = 640, h = 420, ml = 60, mr = 20, mt = 40, mb = 40;
    double xmin = x.empty() ? 0 : x.front(), xmax = x.empty() ? 1 : x.front();
    double ymin = 0, ymax = 1e-12;
    for (double v : x) {
        xmin = std::min(xmin, v);
        xmax = std::max(xmax, v);
    }
    for (const auto& [name, ys] : series)
        for (double v : ys) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymax = ymin + 1.0;
    auto px = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * (w - ml - mr); };
    auto py = [&](double v) { return h - mb - (v - ymin) / (ymax - ymin) * (h - mt - mb); };
    static const char* colors[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
    out << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
    if (!title.empty())
        out << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\"" << h - mb
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
    std::size_t ci = 0;
    double legend_y = mt;
    for (const auto& [name, ys] : series) {
        const char* color = colors[ci % 6];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < std::min(x.size(), ys.size()); ++i)
            out << px(x[i]) << ',' << py(ys[i]) << ' ';
        out << "\"/>\n";
        out << "<text x=\"" << w - mr - 150 << "\" y=\"" << legend_y << "\" font-size=\"12\" fill=\"" << color << "\">"
            << name << "</text>\n";
        legend_y += 16;
        ++ci;
    }
    out << "</svg>\n";
}

// Config echo + seed + model hash; enough to reproduce a run bit-for-bit.
inline void write_manifest(const std::string& path, const nlohmann::json& manifest) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    out << manifest.dump(2) << '\n';
}

inline void ensure_output_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
}

}  // namespace freqx
