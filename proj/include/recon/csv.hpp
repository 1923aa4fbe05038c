#pragma once

// CSV serialization of fields, series and controls. Numbers are written with
// 17 significant digits so that a write/read cycle reproduces every double.

#include <filesystem>
#include <string>
#include <vector>

#include "recon/spaces.hpp"

namespace recon::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

std::string format_double(double v);

void write_table(const std::filesystem::path& path, const Table& table);
Table read_table(const std::filesystem::path& path);

/// 1-D: `x,value`; 2-D: `x,y,value`.
void write_field(const std::filesystem::path& path, const Field& f);
Field read_field(const std::filesystem::path& path, const Grid& grid);

/// `t,ch0,ch1,...` at the time nodes.
void write_series(const std::filesystem::path& path, const MeasurementSeries& s);
MeasurementSeries read_series(const std::filesystem::path& path, const TimeGrid& time);

/// `t,ch0,ch1,...` at the interval midpoints.
void write_control(const std::filesystem::path& path, const ControlSignal& u);
ControlSignal read_control(const std::filesystem::path& path, const TimeGrid& time);

}  // namespace recon::csv
