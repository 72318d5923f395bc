#include "snecl/io.hpp"

#include "snecl/config.hpp"
#include "snecl/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace snecl {

namespace {

double parse_cell(const std::string& cell, std::size_t line) {
    double v = 0.0;
    const char* end = cell.data() + cell.size();
    const auto res = std::from_chars(cell.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end || cell.empty()) {
        throw FormatError("CSV line " + std::to_string(line) + ": '" + cell + "' is not a number");
    }
    return v;
}

} // namespace

void write_dataset_csv(std::ostream& os, const LabeledDataset& data) {
    data.validate();
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) os << 'x' << j << ',';
    os << "label\n";
    for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
        for (Eigen::Index j = 0; j < data.x.cols(); ++j) os << format_double(data.x(i, j)) << ',';
        os << data.labels[static_cast<std::size_t>(i)] << '\n';
    }
}

LabeledDataset read_dataset_csv(std::istream& is) {
    const CsvTable t = read_csv_table(is);
    if (t.header.empty() || t.header.back() != "label") {
        throw FormatError("dataset CSV must end with a 'label' column");
    }
    const std::size_t d = t.header.size() - 1;
    if (d == 0) throw FormatError("dataset CSV has no feature columns");
    for (std::size_t j = 0; j < d; ++j) {
        if (t.header[j] != "x" + std::to_string(j)) {
            throw FormatError("dataset CSV column " + std::to_string(j) + " must be named x" +
                              std::to_string(j) + ", found '" + t.header[j] + "'");
        }
    }
    if (t.rows.empty()) throw FormatError("dataset CSV has no rows");
    LabeledDataset data;
    data.x.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.rows[i][j];
        const double y = t.rows[i][d];
        if (y != std::floor(y) || y < 0.0) {
            throw FormatError("dataset CSV row " + std::to_string(i + 1) + ": label must be a non-negative integer");
        }
        data.labels.push_back(static_cast<int>(y));
    }
    require_finite(data.x, "dataset");
    return data;
}

void write_embedding_csv(std::ostream& os, const Matrix& z, std::span<const int> labels) {
    detail::require(labels.empty() || labels.size() == static_cast<std::size_t>(z.rows()),
                    "embedding CSV: label count differs from row count");
    for (Eigen::Index j = 0; j < z.cols(); ++j) os << (j ? "," : "") << 'z' << j;
    if (!labels.empty()) os << ",label";
    os << '\n';
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        for (Eigen::Index j = 0; j < z.cols(); ++j) os << (j ? "," : "") << format_double(z(i, j));
        if (!labels.empty()) os << ',' << labels[static_cast<std::size_t>(i)];
        os << '\n';
    }
}

bool CsvTable::has_column(const std::string& name) const {
    for (const auto& h : header) {
        if (h == name) return true;
    }
    return false;
}

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == name) return j;
    }
    throw FormatError("CSV has no column '" + name + "'");
}

CsvTable read_csv_table(std::istream& is) {
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto cells = split_trimmed(line, ',');
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw FormatError("CSV line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                              " cells, header has " + std::to_string(t.header.size()));
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(parse_cell(c, lineno));
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw FormatError("CSV is empty");
    return t;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write '" + path + "'");
    out << content;
    if (!out) throw FormatError("failed while writing '" + path + "'");
}

} // namespace snecl
