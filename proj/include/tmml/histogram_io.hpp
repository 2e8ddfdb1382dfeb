#pragma once

// Histogram matrix CSV: header `item_id,<category>,<category>,...`, then one
// row of non-negative counts per item.

#include <tmml/error.hpp>
#include <tmml/mixture.hpp>
#include <tmml/traffic.hpp>

#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace tmml {

struct HistogramMatrix {
    std::vector<std::string> ids;
    std::vector<std::string> categories;
    std::vector<Histogram> rows;
};

inline HistogramMatrix read_histogram_csv(std::istream& in, const std::string& source = "input")
{
    HistogramMatrix m;
    std::string line;
    int lineno = 0;
    const auto fail = [&](const std::string& why) {
        throw ValidationError(source + ":" + std::to_string(lineno) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        auto cols = detail::split_csv_line(line);
        if (m.categories.empty()) {
            if (cols.size() < 2 || cols.front() != "item_id") {
                fail("expected header item_id,<category>,...");
            }
            m.categories.assign(cols.begin() + 1, cols.end());
            continue;
        }
        if (cols.size() != m.categories.size() + 1) {
            fail("expected " + std::to_string(m.categories.size() + 1) + " fields, got " + std::to_string(cols.size()));
        }
        Histogram h;
        for (std::size_t i = 1; i < cols.size(); ++i) {
            double v = 0.0;
            if (!detail::parse_number(cols[i], v) || !std::isfinite(v) || v < 0.0) {
                fail("count must be a non-negative number: '" + cols[i] + "'");
            }
            h.push_back(v);
        }
        m.ids.push_back(cols.front());
        m.rows.push_back(std::move(h));
    }
    if (m.categories.empty()) {
        throw ValidationError(source + ": empty file");
    }
    if (m.rows.empty()) {
        throw ValidationError(source + ": no data rows");
    }
    return m;
}

inline HistogramMatrix read_histogram_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open histogram file '" + path + "'");
    }
    return read_histogram_csv(in, path);
}

inline void write_histogram_csv(std::ostream& os, const HistogramMatrix& m)
{
    os << "item_id";
    for (const auto& c : m.categories) {
        os << ',' << c;
    }
    os << '\n';
    const auto old_precision = os.precision(17);
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
        os << m.ids[i];
        for (double v : m.rows[i]) {
            os << ',' << v;
        }
        os << '\n';
    }
    os.precision(old_precision);
}

} // namespace tmml
