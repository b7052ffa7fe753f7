#include "gasfl/json_io.hpp"

#include "gasfl/error.hpp"

namespace gasfl {

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

ojson optional_number(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

ojson params_to_json(const ForecasterParams& params) {
    ojson j;
    j["feature_names"] = params.feature_names;
    j["weights"] = to_std(params.weights);
    j["bias"] = params.bias;
    if (params.standardization) {
        j["standardization"] = {{"mean", to_std(params.standardization->mean)},
                                {"scale", to_std(params.standardization->scale)}};
    } else {
        j["standardization"] = nullptr;
    }
    return j;
}

ForecasterParams params_from_json(const nlohmann::json& j) {
    try {
        ForecasterParams p;
        p.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        p.weights = to_eigen(j.at("weights").get<std::vector<double>>());
        p.bias = j.at("bias").get<double>();
        if (p.weights.size() != static_cast<Eigen::Index>(p.feature_names.size())) {
            throw ShapeError("weights length does not match feature_names");
        }
        if (j.contains("standardization") && !j.at("standardization").is_null()) {
            Standardization s;
            s.mean = to_eigen(j.at("standardization").at("mean").get<std::vector<double>>());
            s.scale = to_eigen(j.at("standardization").at("scale").get<std::vector<double>>());
            p.standardization = std::move(s);
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed parameter document: ") + e.what());
    }
}

ojson scorecard_to_json(const ScoreCard& c) {
    ojson j;
    j["participant"] = c.participant;
    j["corr_score"] = optional_number(c.corr_score);
    j["quant_score"] = optional_number(c.quant_score);
    j["quality"] = c.quality;
    j["smape_new_local"] = optional_number(c.smape_new_local);
    j["smape_new_global"] = optional_number(c.smape_new_global);
    j["acc_local"] = optional_number(c.acc_local);
    j["acc_global"] = optional_number(c.acc_global);
    j["increment"] = optional_number(c.increment);
    j["contribution"] = c.contribution;
    j["quality_norm"] = c.quality_norm;
    j["contribution_norm"] = c.contribution_norm;
    j["r_quality"] = c.r_quality;
    j["r_contribution"] = c.r_contribution;
    return j;
}

ojson scorecards_to_json(const std::vector<ScoreCard>& cards) {
    ojson arr = ojson::array();
    for (const auto& c : cards) arr.push_back(scorecard_to_json(c));
    return arr;
}

const std::vector<std::string>& scorecard_columns() {
    static const std::vector<std::string> columns{
        "participant",      "corr_score", "quant_score", "quality",      "smape_new_local",   "smape_new_global",
        "acc_local",        "acc_global", "increment",   "contribution", "quality_norm",      "contribution_norm",
        "r_quality",        "r_contribution"};
    return columns;
}

std::string scorecard_csv_row(const ScoreCard& c) {
    std::string row = c.participant;
    for (const auto& cell : {optional_cell(c.corr_score), optional_cell(c.quant_score), format_double(c.quality),
                             optional_cell(c.smape_new_local), optional_cell(c.smape_new_global),
                             optional_cell(c.acc_local), optional_cell(c.acc_global), optional_cell(c.increment),
                             format_double(c.contribution), format_double(c.quality_norm),
                             format_double(c.contribution_norm), format_double(c.r_quality),
                             format_double(c.r_contribution)}) {
        row += ',';
        row += cell;
    }
    return row;
}

std::string hfl_logs_to_jsonl(const std::vector<HflRoundLog>& logs) {
    std::string out;
    for (const auto& log : logs) {
        ojson j;
        j["round"] = log.round;
        ojson locals = ojson::object();
        for (const auto& [id, p] : log.local_params) locals[id] = params_to_json(p);
        j["local_params"] = std::move(locals);
        j["global"] = params_to_json(log.global);
        ojson losses = ojson::object();
        for (const auto& [id, l] : log.local_loss) losses[id] = l;
        j["local_loss"] = std::move(losses);
        out += j.dump();
        out += '\n';
    }
    return out;
}

}  // namespace gasfl
