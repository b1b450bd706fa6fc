#pragma once

#include <optional>
#include <string>
#include <utility>

#include "tsb/config.hpp"
#include "tsb/effective.hpp"

namespace tsb {

// hash over the configuration subset that determines the micro stage; the
// macro potential strength deliberately stays out of this key
std::string micro_cache_key(const RunConfig& c);

void save_micro_cache(const std::string& dir, const RunConfig& c,
                      const DiracData& d, const ClosedFormConstants& cc);

// empty when the file is absent or the key or version tag mismatches
std::optional<std::pair<DiracData, ClosedFormConstants>> load_micro_cache(
    const std::string& dir, const RunConfig& c);

}  // namespace tsb
