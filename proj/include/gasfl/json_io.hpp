#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "gasfl/forecaster.hpp"
#include "gasfl/hfl.hpp"
#include "gasfl/incentive.hpp"

namespace gasfl {

using ojson = nlohmann::ordered_json;

// {feature_names, weights, bias, standardization: {mean, scale} | null}
ojson params_to_json(const ForecasterParams& params);
ForecasterParams params_from_json(const nlohmann::json& j);

ojson scorecard_to_json(const ScoreCard& card);
ojson scorecards_to_json(const std::vector<ScoreCard>& cards);

// Column names of the flat scorecard CSV, in field order.
const std::vector<std::string>& scorecard_columns();
// One CSV row (no newline); empty cells for fields a pipeline did not compute.
std::string scorecard_csv_row(const ScoreCard& card);

// One JSON object per round.
std::string hfl_logs_to_jsonl(const std::vector<HflRoundLog>& logs);

}  // namespace gasfl
