#include "recon/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "recon/errors.hpp"

namespace recon::csv {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && *b == ' ') ++b;
  const auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || (ptr != e && *ptr != '\r')) {
    throw std::runtime_error(path.string() + ": cannot parse number '" + s + "'");
  }
  return v;
}

std::vector<std::string> time_header(int channels) {
  std::vector<std::string> h{"t"};
  for (int c = 0; c < channels; ++c) h.push_back("ch" + std::to_string(c));
  return h;
}

template <Placement P>
Table samples_table(const TimeSamples<P>& s) {
  Table t{time_header(s.channels()), {}};
  for (int k = 0; k < s.samples(); ++k) {
    std::vector<double> row{P == Placement::nodes ? s.time().node(k) : s.time().mid(k)};
    for (double v : s.sample(k)) row.push_back(v);
    t.rows.push_back(std::move(row));
  }
  return t;
}

template <Placement P>
TimeSamples<P> samples_from(const Table& t, const TimeGrid& time, const std::filesystem::path& path) {
  const int expected = time.n_t + (P == Placement::nodes ? 1 : 0);
  if (static_cast<int>(t.rows.size()) != expected)
    throw DimensionError(path.string() + ": expected " + std::to_string(expected) + " time samples, found " +
                         std::to_string(t.rows.size()));
  if (t.header.empty() || t.header.front() != "t") throw DimensionError(path.string() + ": missing 't' column");
  const int channels = static_cast<int>(t.header.size()) - 1;
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(expected) * channels);
  for (int k = 0; k < expected; ++k) {
    const double tk = P == Placement::nodes ? time.node(k) : time.mid(k);
    if (std::abs(t.rows[k][0] - tk) > 1e-9 * std::max(1.0, time.t_f))
      throw DimensionError(path.string() + ": time column does not match the time grid");
    values.insert(values.end(), t.rows[k].begin() + 1, t.rows[k].end());
  }
  return TimeSamples<P>(time, channels, std::move(values));
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

void write_table(const std::filesystem::path& path, const Table& table) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < table.header.size(); ++i) os << (i ? "," : "") << table.header[i];
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
    os << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

Table read_table(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  Table t;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = split(line);
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size())
      throw std::runtime_error(path.string() + ": row width does not match header");
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_double(c, path));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_field(const std::filesystem::path& path, const Field& f) {
  const Grid& g = f.grid();
  Table t;
  t.header = g.dims() == 1 ? std::vector<std::string>{"x", "value"} : std::vector<std::string>{"x", "y", "value"};
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const double v = f[g.index(i, j)];
      t.rows.push_back(g.dims() == 1 ? std::vector<double>{g.x(i), v} : std::vector<double>{g.x(i), g.y(j), v});
    }
  write_table(path, t);
}

Field read_field(const std::filesystem::path& path, const Grid& grid) {
  const Table t = read_table(path);
  const std::size_t width = grid.dims() == 1 ? 2 : 3;
  if (t.header.size() != width || t.rows.size() != grid.size())
    throw DimensionError(path.string() + ": field shape does not match the grid");
  std::vector<double> values;
  values.reserve(grid.size());
  for (const auto& row : t.rows) values.push_back(row.back());
  return Field(grid, std::move(values));
}

void write_series(const std::filesystem::path& path, const MeasurementSeries& s) {
  write_table(path, samples_table(s));
}

MeasurementSeries read_series(const std::filesystem::path& path, const TimeGrid& time) {
  return samples_from<Placement::nodes>(read_table(path), time, path);
}

void write_control(const std::filesystem::path& path, const ControlSignal& u) { write_table(path, samples_table(u)); }

ControlSignal read_control(const std::filesystem::path& path, const TimeGrid& time) {
  return samples_from<Placement::midpoints>(read_table(path), time, path);
}

}  // namespace recon::csv
