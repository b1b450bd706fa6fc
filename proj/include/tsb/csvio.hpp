#pragma once

#include <string>
#include <vector>

#include "tsb/common.hpp"

namespace tsb {

// round-trip decimal formatting shared by every emitted file
std::string format_g17(double v);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

// writes the table with the config hash on a comment line above the header
void write_csv(const std::string& path, const CsvTable& table,
               const std::string& config_hash);

// companion gnuplot script next to the csv; kind is bands, errors or slopes
void write_plot_script(const std::string& csv_path, const std::string& kind,
                       const std::string& config_hash);

}  // namespace tsb
