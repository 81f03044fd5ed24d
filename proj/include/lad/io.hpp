#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "lad/assign.hpp"
#include "lad/config.hpp"
#include "lad/eval.hpp"
#include "lad/sim/model.hpp"
#include "lad/sim/train.hpp"
#include "lad/sim/world.hpp"

namespace lad::io {

inline constexpr int kFormatVersion = 1;

// Configuration / input problems that map to CLI exit code 2. `field`
// names the offending config or file entry.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error("config error at '" + field + "': " + message),
          field(std::move(field)) {}

    std::string field;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);
std::string dump_config(const ExperimentConfig& config);

// FNV-1a over the canonical config dump; stored in checkpoints so stale
// checkpoint/config pairings are detectable.
std::string config_hash(const ExperimentConfig& config);

// Dataset: JSON Lines, one scene per line:
//   {"id":int,"objects":[{"class":int,"box":[x1,y1,x2,y2]}],"seed":int}
std::string dataset_to_jsonl(const std::vector<sim::Scene>& scenes);
std::vector<sim::Scene> load_dataset(const std::string& path, const sim::WorldConfig& world);

void save_checkpoint(const std::string& path, const sim::ModelParams& params,
                     const std::string& hash);
struct Checkpoint {
    sim::ModelParams params;
    std::string config_hash;
};
Checkpoint load_checkpoint(const std::string& path);

std::string history_to_jsonl(const std::vector<sim::HistoryRecord>& history);

std::string metrics_to_json(const MetricsReport& report);

// Appends `run_id,strategy,seed,AP50,mAP,tp,fp,fn,loc_err`, writing the
// header first when the file does not exist yet.
void append_metrics_csv(const std::string& path, const std::string& run_id,
                        const std::string& strategy, std::uint64_t seed,
                        const MetricsReport& report);

// Inspection dump for one scene's assignment stage (costs, fits, labels).
std::string assign_dump_to_json(const AssignResult& result, const sim::Scene& scene);

// Fitted mixture parameters for the gmm-fit subcommand.
std::string fit_report_to_json(const FitReport& report);

std::string strategy_name(StrategyKind kind);

// Write-to-temp-then-rename so readers never observe partial files.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace lad::io
