#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace stoq::io {

// Shortest form with 9 significant digits, '.' decimal point, locale-free.
std::string format_number(double v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const;  // -1 if absent
    std::vector<double> column_values(int index) const;
};

// Numeric CSV with an optional header line. Malformed rows throw with the
// 1-based line number.
CsvTable read_csv(std::istream& is);
CsvTable read_csv_file(const std::string& path);

void write_columns(std::ostream& os, const std::vector<std::string>& header,
                   const std::vector<const std::vector<double>*>& columns);

// Runs body(i) for i in [0, n) on up to `threads` workers. Exceptions from
// workers are rethrown on the caller after all workers finish.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace stoq::io
