#pragma once

#include <json.hpp>
#include <string>

#include "dendi/csv.hpp"
#include "dendi/engine.hpp"
#include "dendi/run_config.hpp"
#include "dendi/simlab.hpp"

namespace dendi {

DendiConfig engine_config(const RunConfig& config);

nlohmann::json config_to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& j);

// Structured report mirroring DendiReport; numbers survive a round trip.
nlohmann::json report_to_json(const DendiReport& report, const Dataset& data,
                              const RunConfig& config, double wall_seconds,
                              int n_dropped);

std::string curves_tsv(const DendiReport& report, const Dataset& data);
std::string summary_text(const DendiReport& report, const Dataset& data);

std::string detection_tsv(const DetectionTable& table);
std::string labels_tsv(const DetectionTable& table);
std::string splits_tsv(const DetectionTable& table);

// CLI entry points; return a process exit status. Status 0 means the
// report file was fully written.
int cmd_analyze(const RunConfig& config);
int cmd_simulate(const RunConfig& config);

}  // namespace dendi
