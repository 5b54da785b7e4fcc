#include "cli/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cli/config.hpp"

namespace wspec::cli {

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r\"");
    const auto e = cell.find_last_not_of(" \t\r\"");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_cell(const std::string& s, double& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

ChannelTable read_channels(const std::filesystem::path& path, double sampling_rate) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read input file " + path.string());
  ChannelTable table;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto cells = split_row(line);
    std::vector<double> row(cells.size());
    bool numeric = true;
    for (std::size_t i = 0; i < cells.size(); ++i) numeric = numeric && parse_cell(cells[i], row[i]);
    if (width == 0) {
      width = cells.size();
      table.channels.assign(width, TimeSeries{});
      for (auto& ch : table.channels) ch.sampling_rate_hz = sampling_rate;
      if (!numeric) {
        table.names = cells;
        continue;
      }
      for (std::size_t i = 0; i < width; ++i) table.names.push_back("ch" + std::to_string(i));
    }
    if (cells.size() != width) {
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(width) + " columns");
    }
    if (!numeric) throw UsageError(path.string() + ":" + std::to_string(lineno) + ": non-numeric value");
    for (std::size_t i = 0; i < width; ++i) {
      if (!std::isfinite(row[i])) {
        throw UsageError(path.string() + ":" + std::to_string(lineno) + ": non-finite value");
      }
      table.channels[i].values.push_back(row[i]);
    }
  }
  if (width == 0 || table.channels.front().values.empty()) {
    throw UsageError("input file " + path.string() + " holds no data");
  }
  return table;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string csv_text(const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += row[i];
    }
    out += '\n';
  }
  return out;
}

}  // namespace wspec::cli
