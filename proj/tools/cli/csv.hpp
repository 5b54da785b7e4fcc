#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <wspec/periodogram.hpp>

namespace wspec::cli {

/// Channels of a numeric CSV file: one column per channel, one row per sample.
/// A first row that does not parse as numbers is taken as a header.
struct ChannelTable {
  std::vector<std::string> names;
  std::vector<TimeSeries> channels;
};

ChannelTable read_channels(const std::filesystem::path& path, double sampling_rate = 1.0);

/// Round-trip formatting for doubles.
std::string format_double(double x);

/// Writes rows of already formatted cells.
std::string csv_text(const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows);

}  // namespace wspec::cli
