#pragma once

#include <filesystem>
#include <string>

#include "rshe/harness/run.hpp"

namespace rshe::harness {

// 17 significant digits: doubles round-trip exactly through the CSV files.
std::string format_double(double value);
std::string csv_escape(const std::string& field);

void write_table_csv(const Table& table, const std::filesystem::path& path);
Table read_table_csv(const std::filesystem::path& path);

}  // namespace rshe::harness
