#include "nsx/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nsx/error.hpp"

namespace nsx {

int Dataset::column_index(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == name) return int(i);
    return -1;
}

void Dataset::validate() const {
    for (size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != columns.size())
            throw FileFormatError("row " + std::to_string(r) + " has arity " +
                                  std::to_string(rows[r].size()) + ", expected " +
                                  std::to_string(columns.size()));
        for (double v : rows[r])
            if (!std::isfinite(v))
                throw FileFormatError("non-finite value in row " + std::to_string(r));
    }
}

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileFormatError("cannot open dataset file '" + path + "'");
    Dataset d;
    std::string line;
    if (!std::getline(in, line)) throw FileFormatError("empty dataset file '" + path + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    {
        std::stringstream header(line);
        std::string cell;
        while (std::getline(header, cell, ',')) {
            const auto colon = cell.find(':');
            if (colon == std::string::npos)
                throw FileFormatError("header cell '" + cell + "' is not name:kind");
            Dataset::Column c;
            c.name = cell.substr(0, colon);
            const std::string kind = cell.substr(colon + 1);
            if (kind == "int")
                c.kind = Kind::Int;
            else if (kind == "real")
                c.kind = Kind::Real;
            else
                throw FileFormatError("unknown column kind '" + kind + "'");
            d.columns.push_back(std::move(c));
        }
    }
    if (d.columns.empty()) throw FileFormatError("dataset has no columns");
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        row.reserve(d.columns.size());
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (;;) {
            double v = 0.0;
            auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc())
                throw FileFormatError(path + ":" + std::to_string(lineno) + ": bad number");
            row.push_back(v);
            p = next;
            if (p == end) break;
            if (*p != ',')
                throw FileFormatError(path + ":" + std::to_string(lineno) + ": ',' expected");
            ++p;
        }
        if (row.size() != d.columns.size())
            throw FileFormatError(path + ":" + std::to_string(lineno) + ": arity mismatch");
        d.rows.push_back(std::move(row));
    }
    d.validate();
    return d;
}

void save_csv(const Dataset& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FileFormatError("cannot write dataset file '" + path + "'");
    for (size_t i = 0; i < d.columns.size(); ++i) {
        if (i) out << ',';
        out << d.columns[i].name << ':' << (d.columns[i].kind == Kind::Int ? "int" : "real");
    }
    out << '\n';
    char buf[64];
    for (const auto& row : d.rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            if (d.columns[i].kind == Kind::Int && row[i] == std::floor(row[i]) &&
                std::fabs(row[i]) <= 9.0e15) {
                out << (long long)row[i];
            } else {
                auto [p, ec] = std::to_chars(buf, buf + sizeof buf, row[i]);
                (void)ec;
                out.write(buf, p - buf);
            }
        }
        out << '\n';
    }
}

} // namespace nsx
