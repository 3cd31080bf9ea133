#ifndef VBINV_CSV_HPP
#define VBINV_CSV_HPP

// Small CSV helpers. All numbers are written with 17 significant digits so
// files round-trip to the exact double values.

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

namespace vbinv::csv {

// "%.17g" rendering of a double.
std::string format_full(double v);

// Header-less matrix, one row per line, comma separated.
void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(const std::filesystem::path& path);

// Table with a header line; rows must all have header.size() entries.
void write_table(const std::filesystem::path& path,
    const std::vector<std::string>& header,
    const std::vector<std::vector<double>>& rows);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};
Table read_table(const std::filesystem::path& path);

} // namespace vbinv::csv

#endif
