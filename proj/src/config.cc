#include "tsb/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tsb/csvio.hpp"

namespace tsb {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& v, int line) {
  size_t pos = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": expected a number, got '" + v + "'");
  }
  if (pos != v.size()) {
    throw ConfigError("line " + std::to_string(line) + ": trailing characters in '" + v + "'");
  }
  return d;
}

int parse_int(const std::string& v, int line) {
  size_t pos = 0;
  long d = 0;
  try {
    d = std::stol(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": expected an integer, got '" + v + "'");
  }
  if (pos != v.size()) {
    throw ConfigError("line " + std::to_string(line) + ": trailing characters in '" + v + "'");
  }
  return int(d);
}

std::string macro_kind_tag(MacroKind k) {
  switch (k) {
    case MacroKind::honeycomb: return "honeycomb";
    case MacroKind::ng: return "ng";
    case MacroKind::none: return "none";
  }
  return "none";
}

}  // namespace

FamilySpec parse_family_tag(const std::string& tag) {
  if (tag == "F0") return {FamilyKind::F0, 0};
  if (tag == "F1k") return {FamilyKind::F1k, 0};
  if (tag == "F1") return {FamilyKind::F1, 0};
  if (tag == "F2k") return {FamilyKind::F2k, 0};
  if (tag == "F2") return {FamilyKind::F2, 0};
  if (tag.size() > 1 && tag[0] == 'F') {
    bool digits = true;
    for (size_t i = 1; i < tag.size(); ++i) {
      digits = digits && std::isdigit(static_cast<unsigned char>(tag[i])) != 0;
    }
    if (digits) {
      const int n = std::stoi(tag.substr(1));
      if (n >= 2) return {FamilyKind::Fn, n};
    }
  }
  throw ConfigError("unknown family tag '" + tag + "'");
}

std::string family_tag(const FamilySpec& f) {
  if (f.kind == FamilyKind::Fn) return "F" + std::to_string(f.n);
  switch (f.kind) {
    case FamilyKind::F0: return "F0";
    case FamilyKind::F1k: return "F1k";
    case FamilyKind::F1: return "F1";
    case FamilyKind::F2k: return "F2k";
    case FamilyKind::F2: return "F2";
    default: return "F?";
  }
}

RunConfig::RunConfig() {
  families = {{FamilyKind::F0, 0}, {FamilyKind::F1, 0}};
  // nine-point geometric default over the asymptotic window
  for (int i = 0; i <= 8; ++i) {
    mu_grid.push_back(1e-2 * std::pow(10.0, double(i) / 8.0));
  }
  lambda_grid = {0.001, 0.002, 0.005, 4.0, 8.0};
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  os << "cutoffs.fine=" << fine_cutoff << "\n";
  os << "cutoffs.micro=" << micro_cutoff << "\n";
  os << "cutoffs.nu=" << nu << "\n";
  os << "epsilon.inverse=";
  for (size_t i = 0; i < inv_epsilon.size(); ++i) os << (i ? "," : "") << inv_epsilon[i];
  os << "\n";
  os << "families=";
  for (size_t i = 0; i < families.size(); ++i) os << (i ? "," : "") << family_tag(families[i]);
  os << "\n";
  os << "lattice.a0=" << format_g17(a0) << "\n";
  os << "path.samples=" << path_samples << "\n";
  os << "potential.macro.kind=" << macro_kind_tag(macro_kind) << "\n";
  os << "potential.macro.lambda=" << format_g17(macro_lambda) << "\n";
  os << "potential.micro.amplitude=" << format_g17(micro_amplitude) << "\n";
  os << "seed=" << seed << "\n";
  os << "sweeps.lambda=";
  for (size_t i = 0; i < lambda_grid.size(); ++i) os << (i ? "," : "") << format_g17(lambda_grid[i]);
  os << "\n";
  os << "sweeps.mu=";
  for (size_t i = 0; i < mu_grid.size(); ++i) os << (i ? "," : "") << format_g17(mu_grid[i]);
  os << "\n";
  os << "output.dir=" << output_dir << "\n";
  os << "tolerances.degeneracy=" << format_g17(tol_degeneracy) << "\n";
  os << "tolerances.oracle=" << format_g17(tol_oracle) << "\n";
  os << "tolerances.structure=" << format_g17(tol_structure) << "\n";
  return os.str();
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string RunConfig::hash() const {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(canonical())));
  return buf;
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::stringstream ss(text);
  std::string raw;
  int line = 0;
  while (std::getline(ss, raw)) {
    ++line;
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#') continue;
    const size_t eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line) + ": expected key=value");
    }
    const std::string key = trim(s.substr(0, eq));
    const std::string val = trim(s.substr(eq + 1));
    try {
      if (key == "lattice.a0") {
        cfg.a0 = parse_double(val, line);
      } else if (key == "potential.micro.amplitude") {
        cfg.micro_amplitude = parse_double(val, line);
      } else if (key == "potential.macro.kind") {
        if (val == "honeycomb") cfg.macro_kind = MacroKind::honeycomb;
        else if (val == "ng") cfg.macro_kind = MacroKind::ng;
        else if (val == "none") cfg.macro_kind = MacroKind::none;
        else throw ConfigError("line " + std::to_string(line) + ": unknown macro kind '" + val + "'");
      } else if (key == "potential.macro.lambda") {
        cfg.macro_lambda = parse_double(val, line);
      } else if (key == "epsilon.inverse") {
        cfg.inv_epsilon.clear();
        for (const std::string& v : split_list(val)) cfg.inv_epsilon.push_back(parse_int(v, line));
      } else if (key == "cutoffs.micro") {
        cfg.micro_cutoff = parse_int(val, line);
      } else if (key == "cutoffs.fine") {
        cfg.fine_cutoff = parse_int(val, line);
      } else if (key == "cutoffs.nu") {
        cfg.nu = parse_int(val, line);
      } else if (key == "families") {
        cfg.families.clear();
        for (const std::string& v : split_list(val)) cfg.families.push_back(parse_family_tag(v));
      } else if (key == "path.samples") {
        cfg.path_samples = parse_int(val, line);
      } else if (key == "sweeps.mu") {
        cfg.mu_grid.clear();
        for (const std::string& v : split_list(val)) cfg.mu_grid.push_back(parse_double(v, line));
      } else if (key == "sweeps.lambda") {
        cfg.lambda_grid.clear();
        for (const std::string& v : split_list(val)) cfg.lambda_grid.push_back(parse_double(v, line));
      } else if (key == "output.dir") {
        cfg.output_dir = val;
      } else if (key == "tolerances.degeneracy") {
        cfg.tol_degeneracy = parse_double(val, line);
      } else if (key == "tolerances.structure") {
        cfg.tol_structure = parse_double(val, line);
      } else if (key == "tolerances.oracle") {
        cfg.tol_oracle = parse_double(val, line);
      } else if (key == "seed") {
        cfg.seed = std::uint64_t(std::stoull(val));
      } else {
        throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("line " + std::to_string(line) + ": " + e.what());
    }
  }

  if (cfg.a0 <= 0.0) throw ConfigError("lattice.a0 must be positive");
  if (cfg.micro_cutoff < 1 || cfg.fine_cutoff < 1 || cfg.nu < 1) {
    throw ConfigError("all cutoffs must be at least 1");
  }
  if (cfg.inv_epsilon.empty()) throw ConfigError("epsilon.inverse must not be empty");
  for (int e : cfg.inv_epsilon) {
    if (e < 1) throw ConfigError("epsilon.inverse entries must be at least 1");
  }
  if (cfg.path_samples < 1) throw ConfigError("path.samples must be at least 1");
  for (const auto* grid : {&cfg.mu_grid, &cfg.lambda_grid}) {
    for (size_t i = 1; i < grid->size(); ++i) {
      if ((*grid)[i] <= (*grid)[i - 1]) {
        throw ConfigError("sweep grids must be strictly increasing");
      }
    }
  }
  if (cfg.tol_degeneracy <= 0.0 || cfg.tol_structure <= 0.0 || cfg.tol_oracle <= 0.0) {
    throw ConfigError("tolerances must be positive");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace tsb
