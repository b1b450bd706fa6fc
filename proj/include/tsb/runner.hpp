#pragma once

#include <functional>
#include <ostream>

#include "tsb/analysis.hpp"
#include "tsb/cache.hpp"
#include "tsb/config.hpp"
#include "tsb/csvio.hpp"

namespace tsb {

// runs tasks 0..n-1 on a fixed worker count; results must go into
// index-addressed slots owned by the caller, which makes the output
// independent of the worker count
void run_indexed(int n_tasks, int threads, const std::function<void(int)>& task);

FourierField micro_field(const RunConfig& cfg, const Lattice& lat);
FourierField macro_field(const RunConfig& cfg, const Lattice& lat);

// cached micro stage; recomputes with a notice when the cache is stale
std::pair<DiracData, ClosedFormConstants> micro_stage(const RunConfig& cfg,
                                                      std::ostream& log);

// exit codes: 0 pass, 1 tolerance failure, 2 configuration error, 3 numerical
int run_command(const std::string& command, const RunConfig& cfg, int threads,
                std::ostream& log);

}  // namespace tsb
