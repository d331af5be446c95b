#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "rba/record.hpp"

namespace rba {

// Canonical column order of the login CSV schema.
extern const std::vector<std::string> kCsvColumns;

// The exact header line written by write_dataset.
std::string csv_header();

struct RowError {
    std::size_t line = 0; // 1-based, header is line 1
    std::string message;
};

struct ParseOptions {
    bool strict = true;
    // Accepted alternate spellings per canonical column name. Merged on top of
    // a small built-in alias set ("OS Name + Version" etc).
    std::map<std::string, std::vector<std::string>> header_aliases;
    std::size_t max_reported_errors = 100;
};

struct ParseReport {
    std::size_t rows_parsed = 0;
    std::size_t rows_skipped = 0;
    std::vector<RowError> errors; // capped at max_reported_errors
};

// Parses the login CSV schema above. In strict mode the first invalid row
// throws Error(kRow); in lenient mode invalid rows are counted and skipped.
// A missing or unknown column always throws Error(kSchema).
LoginDataset parse_dataset(std::istream& in, const ParseOptions& options = {},
                           ParseReport* report = nullptr);

LoginDataset parse_dataset_file(const std::string& path, const ParseOptions& options = {},
                                ParseReport* report = nullptr);

// Writes the dataset so that parse(write(d)) == d field for field. Absent RTT
// becomes an empty cell; booleans are lowercase true/false.
void write_dataset(const LoginDataset& dataset, std::ostream& out);

void write_dataset_file(const LoginDataset& dataset, const std::string& path);

// Number of bytes write_dataset would emit, without materializing the output.
std::size_t csv_byte_size(const LoginDataset& dataset);

// Splits CSV text into rows of fields (RFC 4180 quoting). For auxiliary CSV
// inputs such as value catalogs; blank rows are dropped.
std::vector<std::vector<std::string>> read_csv_rows(std::istream& in);

} // namespace rba
