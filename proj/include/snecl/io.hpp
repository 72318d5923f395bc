#pragma once

#include "snecl/matrix.hpp"
#include "snecl/simdata.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace snecl {

/// Dataset CSV: header `x0,...,x{d-1},label`, one row per point.
void write_dataset_csv(std::ostream& os, const LabeledDataset& data);
LabeledDataset read_dataset_csv(std::istream& is);

/// Embedding CSV: header `z0,...,z{d_z-1}` plus `,label` when labels are given.
void write_embedding_csv(std::ostream& os, const Matrix& z, std::span<const int> labels = {});

/// A numeric CSV table with a header row.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    /// Index of a named column; throws FormatError when absent.
    std::size_t column(const std::string& name) const;
    bool has_column(const std::string& name) const;
};

/// Throws FormatError on ragged rows or non-numeric cells.
CsvTable read_csv_table(std::istream& is);

/// File helpers; both throw FormatError when the file cannot be opened.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

} // namespace snecl
