#include "vbinv/csv.hpp"
#include "vbinv/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace vbinv::csv {

std::string format_full(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot open for writing: " + path.string());
    return out;
}

std::vector<double> parse_row(const std::string& line)
{
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
        row.push_back(std::stod(cell));
    return row;
}

} // namespace

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m)
{
    auto out = open_out(path);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j)
                out << ',';
            out << format_full(m(i, j));
        }
        out << '\n';
    }
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open for reading: " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        rows.push_back(parse_row(line));
    }
    if (rows.empty())
        return Eigen::MatrixXd(0, 0);
    Eigen::MatrixXd m(rows.size(), rows.front().size());
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != static_cast<size_t>(m.cols()))
            throw ConfigError("ragged CSV matrix in " + path.string());
        for (size_t j = 0; j < rows[i].size(); ++j)
            m(i, j) = rows[i][j];
    }
    return m;
}

void write_table(const std::filesystem::path& path,
    const std::vector<std::string>& header,
    const std::vector<std::vector<double>>& rows)
{
    auto out = open_out(path);
    for (size_t j = 0; j < header.size(); ++j) {
        if (j)
            out << ',';
        out << header[j];
    }
    out << '\n';
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw ConfigError("row width does not match header in " + path.string());
        for (size_t j = 0; j < row.size(); ++j) {
            if (j)
                out << ',';
            out << format_full(row[j]);
        }
        out << '\n';
    }
}

Table read_table(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open for reading: " + path.string());
    Table t;
    std::string line;
    if (!std::getline(in, line))
        throw ConfigError("empty CSV table: " + path.string());
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
        t.header.push_back(cell);
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        t.rows.push_back(parse_row(line));
    }
    return t;
}

} // namespace vbinv::csv
