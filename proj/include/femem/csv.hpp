#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "femem/extraction.hpp"

namespace femem {

/// Shortest round-trip decimal, locale independent.
std::string format_number(double v);

class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header);

    CsvWriter& cell(double v);
    CsvWriter& cell(long long v);
    CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
    CsvWriter& cell(std::string_view v);
    void end_row();

  private:
    std::ofstream out_;
    std::size_t columns_;
    std::size_t filled_ = 0;
};

/// Long format with header t_kelvin,v_volts,j_a_per_m2; rows grouped by
/// temperature and sorted by voltage on load.
SweepSet read_sweeps_csv(const std::filesystem::path& path);
void write_sweeps_csv(const std::filesystem::path& path, const SweepSet& data);

/// Plain numeric matrix, one row per line, no header.
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);

}  // namespace femem
