#ifndef MOUSTACHE_REPORTS_HPP
#define MOUSTACHE_REPORTS_HPP

// Experiment drivers shared by the C API and the command line: each takes
// an ExperimentConfig and produces a data object or its serialized report.

#include <string>

#include <json.hpp>

#include "io.hpp"

namespace moustache {

CyclePool pool_from(const ExperimentConfig& cfg);

/// n_renewal cycles, bootstrapped from `pool` when given, otherwise drawn
/// by live cycle simulation.
RenewalSequence renewal_from(const ExperimentConfig& cfg, const CyclePool* pool);

TrajectoryGrid trajectory_from(const ExperimentConfig& cfg);

nlohmann::json tail_report(const ExperimentConfig& cfg, const CyclePool& pool);
nlohmann::json rde_report(const ExperimentConfig& cfg, const RenewalSequence& seq);
nlohmann::json envelope_report(const ExperimentConfig& cfg, const RenewalSequence& seq);
nlohmann::json limit_report(const ExperimentConfig& cfg);

/// Closed-form law: n_cycles samples, or a density table with cfg.table.
std::string laws_dump(const ExperimentConfig& cfg);

}  // namespace moustache

#endif
