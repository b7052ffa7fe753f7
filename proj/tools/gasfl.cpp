// gasfl: generate data, run hierarchical scenarios, allocate rewards, print reports.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gasfl/error.hpp"
#include "gasfl/scenario.hpp"

namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw gasfl::IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

gasfl::ScenarioConfig load(const std::string& path, const std::optional<std::uint64_t>& seed) {
    auto config = gasfl::load_scenario(path);
    if (seed) config.seed = *seed;
    return config;
}

fs::path output_dir(const std::string& flag, const gasfl::ScenarioConfig* config, const char* fallback) {
    if (!flag.empty()) return flag;
    if (config != nullptr && config->output_dir) return config->base_dir / *config->output_dir;
    return fallback;
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical federated gas-usage forecasting with incentive allocation"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool full_transcript = false;

    auto* gen = app.add_subcommand("gen-data", "Write one CSV per participant plus manifest.json");
    gen->add_option("--config", config_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
    gen->add_option("--out", out, "Output directory");
    gen->add_option("--seed", seed, "Override the scenario seed");

    auto* sim = app.add_subcommand("simulate", "Run both tiers and write report files");
    sim->add_option("--config", config_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
    sim->add_option("--out", out, "Output directory");
    sim->add_option("--seed", seed, "Override the scenario seed");
    sim->add_flag("--full-transcript", full_transcript, "Record message payloads in transcript.jsonl");

    std::string scores_path;
    gasfl::RewardPools pools{100.0, 100.0};
    auto* eval = app.add_subcommand("evaluate", "Normalize and allocate precomputed scores");
    eval->add_option("--scores", scores_path, "CSV with header id,quality,contribution")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--r-data", pools.r_data, "Data-quality reward pool")->capture_default_str();
    eval->add_option("--r-model", pools.r_model, "Model-contribution reward pool")->capture_default_str();
    eval->add_option("--out", out, "Output directory for report.json and scorecards.csv");

    std::string report_path;
    auto* rep = app.add_subcommand("report", "Pretty-print an existing report.json");
    rep->add_option("report", report_path, "Path to report.json")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const auto config = load(config_path, seed);
            const auto dir = output_dir(out, &config, "data");
            const auto result = gasfl::gen_data(config, dir);
            std::cout << "wrote " << result.files.size() << " CSV files and " << result.manifest.string() << '\n';
            return 0;
        }
        if (*sim) {
            const auto config = load(config_path, seed);
            const auto dir = output_dir(out, &config, "out");
            gasfl::SimulationOutcome outcome;
            try {
                outcome = gasfl::simulate(config, full_transcript);
            } catch (const gasfl::Error& e) {
                throw gasfl::Error("scenario '" + config.scenario + "': " + e.what());
            }
            gasfl::write_outcome(outcome, dir);
            print_warnings(outcome.warnings);
            std::cout << gasfl::render_report(outcome.report);
            for (const auto& f : outcome.failed_checks) std::cerr << "check failed: " << f << '\n';
            return outcome.ok() ? 0 : 3;
        }
        if (*eval) {
            const auto scores = gasfl::parse_scores_csv(read_text(scores_path));
            gasfl::Diagnostics diag;
            const auto cards = gasfl::allocate_from_scores(scores, pools, &diag);
            const auto report = gasfl::evaluation_report(cards, pools, diag.warnings);
            print_warnings(diag.warnings);
            if (!out.empty()) {
                fs::create_directories(out);
                std::ofstream(fs::path(out) / "report.json") << report.dump(2) << '\n';
                std::ofstream csv(fs::path(out) / "scorecards.csv");
                for (std::size_t i = 0; i < gasfl::scorecard_columns().size(); ++i) {
                    csv << (i ? "," : "") << gasfl::scorecard_columns()[i];
                }
                csv << '\n';
                for (const auto& c : cards) csv << gasfl::scorecard_csv_row(c) << '\n';
                if (!csv) throw gasfl::IoError("cannot write " + out);
            }
            std::cout << gasfl::render_report(report);
            return 0;
        }
        if (*rep) {
            nlohmann::json report;
            try {
                report = nlohmann::json::parse(read_text(report_path));
            } catch (const nlohmann::json::parse_error& e) {
                throw gasfl::ConfigError(std::string("cannot parse report: ") + e.what());
            }
            std::cout << gasfl::render_report(report);
            return 0;
        }
    } catch (const gasfl::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const gasfl::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
