#pragma once

#include <string>
#include <vector>

#include "phdiff/config.hpp"
#include "phdiff/energy.hpp"
#include "phdiff/report.hpp"
#include "phdiff/structure.hpp"

namespace phdiff {

struct CheckContext {
  const ExperimentConfig& config;
  const EnergyModel& model;
  const StructureMatrices& structure;
  unsigned threads = 0;
};

// Executes one named verification check (see known_checks()). Checks that do
// not apply to the configured system return a single skipped, ungated record.
std::vector<CheckRecord> run_check(const std::string& name, const CheckContext& ctx);

// Every check listed in ctx.config.checks, in order.
VerificationReport verify_experiment(const CheckContext& ctx);

}  // namespace phdiff
