#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gasfl/datagen.hpp"
#include "gasfl/domain.hpp"
#include "gasfl/forecaster.hpp"
#include "gasfl/incentive.hpp"
#include "gasfl/json_io.hpp"
#include "gasfl/simnet.hpp"

namespace gasfl {

// Where a participant's data comes from: generated from a GenSpec or read from
// a CSV file (relative paths resolve against the config file's directory).
struct DataSource {
    std::optional<nlohmann::json> generate;  // GenSpec overrides
    std::optional<std::string> csv;
};

struct StationConfig {
    std::string id;
    DataSource data;
};

struct CompanyConfig {
    std::string id;
    DataSource data;
    std::vector<StationConfig> stations;
};

struct EvalWindow {
    std::optional<int> days;
    std::optional<double> fraction;

    // Number of held-out rows for a dataset of `rows` rows.
    std::size_t rows_for(std::size_t rows) const;
};

/// Declarative description of a hierarchical run. Parsed from one JSON
/// document; `to_json` emits the fully resolved form, which parses back to an
/// identical configuration.
struct ScenarioConfig {
    std::string scenario = "scenario";
    std::uint64_t seed = 0;
    TrainConfig train;
    int hfl_rounds = 50;
    int vfl_rounds = 50;
    bool run_hfl = true;
    bool run_vfl = true;
    EvalWindow eval_window{std::nullopt, 0.2};
    RewardPools hfl_pools{100.0, 100.0};
    RewardPools vfl_pools{100.0, 100.0};
    std::vector<CompanyConfig> companies;
    std::map<std::string, ScoreOverride> hfl_overrides;
    std::map<std::string, std::map<std::string, ScoreOverride>> vfl_overrides;  // company -> participant
    std::optional<std::string> output_dir;  // default for --out
    std::filesystem::path base_dir;  // not serialized

    static ScenarioConfig from_json(const nlohmann::json& j, std::filesystem::path base_dir = {});
    ojson to_json() const;
    HierarchyConfig hierarchy() const;
    // Structural validation plus every referenced file and GenSpec.
    void validate() const;
};

ScenarioConfig load_scenario(const std::filesystem::path& path);

GenSpec company_gen_spec(const ScenarioConfig& config, const CompanyConfig& company);
GenSpec station_gen_spec(const ScenarioConfig& config, const CompanyConfig& company, const StationConfig& station);

struct CompanyData {
    std::string id;
    TimeSeriesDataset dataset;                        // temperature, wind, usage
    std::map<std::string, TimeSeriesDataset> stations;  // reported `strategy` column
};

// Builds (generates or loads) every participant's raw data.
std::vector<CompanyData> build_data(const ScenarioConfig& config);

struct GenDataResult {
    std::vector<std::filesystem::path> files;
    std::filesystem::path manifest;
};

// Writes one CSV per participant plus manifest.json. Validates everything
// before touching the output directory.
GenDataResult gen_data(const ScenarioConfig& config, const std::filesystem::path& out_dir);

struct SimulationOutcome {
    std::vector<ScoreCard> hfl_cards;
    std::map<std::string, std::vector<ScoreCard>> vfl_cards;
    ojson report;
    std::string scorecards_csv;
    std::string metrics_csv;
    std::string hfl_rounds_jsonl;
    Transcript transcript;
    PrivacyReport privacy;
    std::set<std::uint64_t> fingerprints;
    std::vector<std::string> failed_checks;
    std::vector<std::string> warnings;

    bool ok() const noexcept { return failed_checks.empty(); }
};

SimulationOutcome simulate(const ScenarioConfig& config, bool full_transcript = false);
// Writes report.json, scorecards.csv, transcript.jsonl, metrics.csv and hfl_rounds.jsonl.
void write_outcome(const SimulationOutcome& outcome, const std::filesystem::path& out_dir);

// Parses the `id,quality,contribution` score table.
std::vector<ExternalScore> parse_scores_csv(std::string_view text);
ojson evaluation_report(const std::vector<ScoreCard>& cards, const RewardPools& pools,
                        const std::vector<std::string>& warnings);

// Human-readable rendering of a report.json document.
std::string render_report(const nlohmann::json& report);

}  // namespace gasfl
