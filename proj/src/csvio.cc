#include "tsb/csvio.hpp"

#include <cstdio>
#include <fstream>

namespace tsb {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const CsvTable& table,
               const std::string& config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open for writing: " + path);
  out << "# config " << config_hash << "\n";
  for (size_t c = 0; c < table.columns.size(); ++c) {
    out << (c ? "," : "") << table.columns[c];
  }
  out << "\n";
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) {
      throw InvalidInput("csv row width does not match the header");
    }
    for (size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << "\n";
  }
  if (!out.good()) throw InvalidInput("write failed: " + path);
}

void write_plot_script(const std::string& csv_path, const std::string& kind,
                       const std::string& config_hash) {
  std::ofstream out(csv_path + ".gp", std::ios::binary);
  if (!out) throw InvalidInput("cannot open for writing: " + csv_path + ".gp");
  const size_t slash = csv_path.find_last_of('/');
  const std::string base =
      (slash == std::string::npos) ? csv_path : csv_path.substr(slash + 1);
  out << "# config " << config_hash << "\n";
  out << "set datafile separator ','\n";
  out << "set key outside\n";
  if (kind == "bands") {
    out << "set xlabel 'arclength'\n";
    out << "set ylabel 'energy'\n";
    out << "plot '" << base << "' every ::1 using 2:7 with points pt 7 ps 0.3 "
        << "title 'bands'\n";
  } else if (kind == "errors") {
    out << "set logscale xy\n";
    out << "set xlabel 'parameter'\n";
    out << "set ylabel 'distance'\n";
    out << "plot '" << base << "' every ::1 using 3:4 with linespoints "
        << "title 'distance'\n";
  } else if (kind == "slopes") {
    out << "set style data histogram\n";
    out << "set ylabel 'fitted slope'\n";
    out << "plot '" << base << "' every ::1 using 5:xtic(2) title 'slope'\n";
  } else {
    throw InvalidParameter("unknown plot kind: " + kind);
  }
  if (!out.good()) throw InvalidInput("write failed: " + csv_path + ".gp");
}

}  // namespace tsb
