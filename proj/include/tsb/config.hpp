#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsb/perturbation.hpp"

namespace tsb {

enum class MacroKind { honeycomb, ng, none };

struct FamilySpec {
  FamilyKind kind = FamilyKind::F0;
  int n = 0;  // order for the eigenvector-count family
};

FamilySpec parse_family_tag(const std::string& tag);
std::string family_tag(const FamilySpec& f);

// flat typed key=value run configuration; unknown keys are rejected so that
// reproduction scripts fail loudly instead of silently drifting
struct RunConfig {
  double a0 = 5.0;                      // lattice.a0
  double micro_amplitude = 10.0;        // potential.micro.amplitude
  MacroKind macro_kind = MacroKind::honeycomb;  // potential.macro.kind
  double macro_lambda = 1.0;            // potential.macro.lambda
  std::vector<int> inv_epsilon{7};      // epsilon.inverse
  int micro_cutoff = 12;                // cutoffs.micro
  int fine_cutoff = 30;                 // cutoffs.fine
  int nu = 2;                           // cutoffs.nu
  std::vector<FamilySpec> families;     // families
  int path_samples = 20;                // path.samples
  std::vector<double> mu_grid;          // sweeps.mu
  std::vector<double> lambda_grid;      // sweeps.lambda
  std::string output_dir = "out";       // output.dir
  double tol_degeneracy = 1e-8;         // tolerances.degeneracy
  double tol_structure = 1e-8;          // tolerances.structure
  double tol_oracle = 1e-6;             // tolerances.oracle
  std::uint64_t seed = 1;               // seed

  RunConfig();

  // sorted key=value serialization; the hash of this string keys caches and
  // stamps every emitted file
  std::string canonical() const;
  std::string hash() const;
};

std::uint64_t fnv1a(const std::string& s);

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace tsb
