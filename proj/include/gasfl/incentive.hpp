#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gasfl/diagnostics.hpp"
#include "gasfl/domain.hpp"

namespace gasfl {

// ---------------------------------------------------------------------------
// Data quality

/// Correlation between committed features and actual usage.
///
/// A single column gives the signed Pearson coefficient. With several columns
/// the score is the mean of the absolute per-column coefficients, so that
/// opposite-signed drivers do not cancel. Zero-variance columns contribute 0;
/// a constant target yields 0 and a warning.
double corr_score(const Matrix& features, const Vector& target, Diagnostics* diag = nullptr);
double corr_score(const Vector& feature, const Vector& target, Diagnostics* diag = nullptr);

double quant_score(std::size_t samples, std::size_t total_samples);

// Horizontal tier: correlation times quantity share. May be negative.
double quality_hfl(double corr, double quant);
// Vertical tier: correlation only.
double quality_vfl(double corr);

// ---------------------------------------------------------------------------
// Model contribution

// Symmetric MAPE in [0, 2]; a 0/0 term counts as 0.
double smape(const Vector& forecast, const Vector& actual);
// Variant divided by |F| + |A| instead of their mean, in [0, 1].
double smape_new(const Vector& forecast, const Vector& actual);
double accuracy(double smape_new_value);
double increment(double acc_global, double acc_local);
// Mean of every other participant's increment: sum_{i != j} inc_i / (n - 1).
double contribution(const std::map<std::string, double>& increments, const std::string& participant);

// ---------------------------------------------------------------------------
// Allocation

// Clamps negatives to 0 and divides by the sum. A cohort with no positive
// value splits equally and records a warning.
std::map<std::string, double> normalize(const std::map<std::string, double>& values, Diagnostics* diag = nullptr);

struct RewardShare {
    double r_quality = 0.0;
    double r_contribution = 0.0;
};

std::map<std::string, RewardShare> allocate_rewards(const RewardPools& pools,
                                                    const std::map<std::string, double>& quality_norms,
                                                    const std::map<std::string, double>& contribution_norms);

// ---------------------------------------------------------------------------
// End-to-end scoring

enum class CohortKind { hfl, vfl };

/// Every intermediate value of the reward computation for one participant.
/// Fields that a given pipeline does not compute stay empty.
struct ScoreCard {
    std::string participant;
    std::optional<double> corr_score;
    std::optional<double> quant_score;
    double quality = 0.0;
    std::optional<double> smape_new_local;
    std::optional<double> smape_new_global;
    std::optional<double> acc_local;
    std::optional<double> acc_global;
    std::optional<double> increment;
    double contribution = 0.0;
    double quality_norm = 0.0;
    double contribution_norm = 0.0;
    double r_quality = 0.0;
    double r_contribution = 0.0;
};

struct CohortMember {
    std::string id;
    Matrix quality_features;  // committed features X_i over the quality window
    Vector quality_target;    // matching actual usage Y_i
    std::size_t sample_count = 0;
    Vector local_forecast;    // local model over the evaluation window
    Vector global_forecast;   // federated model over the same window
    Vector actual;
};

// Externally supplied values that replace the computed ones before
// normalization (audits and table reproduction).
struct ScoreOverride {
    std::optional<double> quality;
    std::optional<double> contribution;
};

std::vector<ScoreCard> evaluate_cohort(std::span<const CohortMember> members, CohortKind kind,
                                       const RewardPools& pools, Diagnostics* diag = nullptr,
                                       const std::map<std::string, ScoreOverride>* overrides = nullptr);

struct ExternalScore {
    std::string id;
    double quality = 0.0;
    double contribution = 0.0;
};

// Normalization and allocation only, for precomputed quality/contribution values.
std::vector<ScoreCard> allocate_from_scores(std::span<const ExternalScore> scores, const RewardPools& pools,
                                            Diagnostics* diag = nullptr);

}  // namespace gasfl
