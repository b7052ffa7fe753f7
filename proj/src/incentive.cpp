#include "gasfl/incentive.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gasfl/error.hpp"

namespace gasfl {

namespace {

bool is_constant(const Vector& v, double mean) {
    const double spread = (v.array() - mean).abs().maxCoeff();
    return spread <= 1e-12 * std::max(1.0, std::abs(mean));
}

// Signed Pearson coefficient; 0 when the feature is constant. The caller
// handles a constant target.
double pearson(const Vector& x, const Vector& y, double y_mean, double y_ss) {
    const double x_mean = x.mean();
    if (is_constant(x, x_mean)) return 0.0;
    const Vector dx = x.array() - x_mean;
    const Vector dy = y.array() - y_mean;
    const double r = dx.dot(dy) / std::sqrt(dx.squaredNorm() * y_ss);
    return std::clamp(r, -1.0, 1.0);
}

void check_series(const Vector& forecast, const Vector& actual) {
    if (forecast.size() != actual.size()) {
        throw ShapeError("forecast length " + std::to_string(forecast.size()) + " does not match actual length " +
                         std::to_string(actual.size()));
    }
    if (forecast.size() == 0) throw ShapeError("SMAPE needs at least one period");
}

}  // namespace

double corr_score(const Matrix& features, const Vector& target, Diagnostics* diag) {
    if (features.rows() != target.size()) throw ShapeError("feature rows do not match target length");
    if (target.size() < 2) throw InsufficientDataError("correlation needs at least 2 periods");
    if (features.cols() == 0) throw ShapeError("correlation needs at least one feature column");
    const double y_mean = target.mean();
    if (is_constant(target, y_mean)) {
        warn(diag, "target has zero variance; correlation score defined as 0");
        return 0.0;
    }
    const double y_ss = (target.array() - y_mean).square().sum();
    if (features.cols() == 1) return pearson(features.col(0), target, y_mean, y_ss);
    double total = 0.0;
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
        total += std::abs(pearson(features.col(c), target, y_mean, y_ss));
    }
    return total / static_cast<double>(features.cols());
}

double corr_score(const Vector& feature, const Vector& target, Diagnostics* diag) {
    return corr_score(Matrix(feature), target, diag);
}

double quant_score(std::size_t samples, std::size_t total_samples) {
    if (total_samples == 0) throw ConfigError("total sample count must be positive");
    if (samples > total_samples) throw ConfigError("participant sample count exceeds the total");
    return static_cast<double>(samples) / static_cast<double>(total_samples);
}

double quality_hfl(double corr, double quant) { return corr * quant; }

double quality_vfl(double corr) { return corr; }

double smape(const Vector& forecast, const Vector& actual) {
    check_series(forecast, actual);
    double total = 0.0;
    for (Eigen::Index t = 0; t < forecast.size(); ++t) {
        const double denom = (std::abs(forecast(t)) + std::abs(actual(t))) / 2.0;
        if (denom > 0.0) total += std::abs(forecast(t) - actual(t)) / denom;
    }
    return total / static_cast<double>(forecast.size());
}

double smape_new(const Vector& forecast, const Vector& actual) {
    check_series(forecast, actual);
    double total = 0.0;
    for (Eigen::Index t = 0; t < forecast.size(); ++t) {
        const double denom = std::abs(forecast(t)) + std::abs(actual(t));
        if (denom > 0.0) total += std::abs(forecast(t) - actual(t)) / denom;
    }
    return total / static_cast<double>(forecast.size());
}

double accuracy(double smape_new_value) { return 1.0 - smape_new_value; }

double increment(double acc_global, double acc_local) { return acc_global - acc_local; }

double contribution(const std::map<std::string, double>& increments, const std::string& participant) {
    if (increments.size() < 2) throw ConfigError("contribution needs at least 2 participants");
    if (increments.count(participant) == 0) throw ConfigError("unknown participant '" + participant + "'");
    double sum = 0.0;
    for (const auto& [id, inc] : increments) {
        if (id != participant) sum += inc;
    }
    return sum / static_cast<double>(increments.size() - 1);
}

std::map<std::string, double> normalize(const std::map<std::string, double>& values, Diagnostics* diag) {
    if (values.empty()) throw ConfigError("cannot normalize an empty cohort");
    std::map<std::string, double> clamped;
    double sum = 0.0;
    for (const auto& [id, v] : values) {
        if (!std::isfinite(v)) throw ConfigError("non-finite score for '" + id + "'");
        if (v < 0.0) warn(diag, "negative value for '" + id + "' clamped to 0 before normalization");
        clamped[id] = std::max(0.0, v);
        sum += clamped[id];
    }
    if (!(sum > 0.0)) {
        warn(diag, "no positive values in cohort; splitting equally");
        const double share = 1.0 / static_cast<double>(values.size());
        for (auto& [id, v] : clamped) v = share;
        return clamped;
    }
    for (auto& [id, v] : clamped) v /= sum;
    return clamped;
}

std::map<std::string, RewardShare> allocate_rewards(const RewardPools& pools,
                                                    const std::map<std::string, double>& quality_norms,
                                                    const std::map<std::string, double>& contribution_norms) {
    if (pools.r_data < 0.0 || pools.r_model < 0.0) throw ConfigError("reward pools must be non-negative");
    auto check = [](const std::map<std::string, double>& norms, const char* what) {
        double s = 0.0;
        for (const auto& [id, v] : norms) s += v;
        if (std::abs(s - 1.0) > 1e-9) throw ConfigError(std::string(what) + " norms do not sum to 1");
    };
    check(quality_norms, "quality");
    check(contribution_norms, "contribution");
    std::map<std::string, RewardShare> out;
    for (const auto& [id, q] : quality_norms) out[id].r_quality = pools.r_data * q;
    for (const auto& [id, c] : contribution_norms) out[id].r_contribution = pools.r_model * c;
    return out;
}

std::vector<ScoreCard> evaluate_cohort(std::span<const CohortMember> members, CohortKind kind,
                                       const RewardPools& pools, Diagnostics* diag,
                                       const std::map<std::string, ScoreOverride>* overrides) {
    if (members.size() < 2) throw ConfigError("a scoring cohort needs at least 2 participants");
    std::set<std::string> ids;
    std::size_t total_samples = 0;
    for (const auto& m : members) {
        if (!ids.insert(m.id).second) throw ConfigError("duplicate participant id '" + m.id + "'");
        total_samples += m.sample_count;
    }

    std::map<std::string, ScoreCard> cards;
    std::map<std::string, double> increments;
    for (const auto& m : members) {
        ScoreCard card;
        card.participant = m.id;
        card.corr_score = corr_score(m.quality_features, m.quality_target, diag);
        if (kind == CohortKind::hfl) {
            card.quant_score = quant_score(m.sample_count, total_samples);
            card.quality = quality_hfl(*card.corr_score, *card.quant_score);
        } else {
            card.quality = quality_vfl(*card.corr_score);
        }
        card.smape_new_local = smape_new(m.local_forecast, m.actual);
        card.smape_new_global = smape_new(m.global_forecast, m.actual);
        card.acc_local = accuracy(*card.smape_new_local);
        card.acc_global = accuracy(*card.smape_new_global);
        card.increment = increment(*card.acc_global, *card.acc_local);
        increments[m.id] = *card.increment;
        cards.emplace(m.id, std::move(card));
    }
    for (auto& [id, card] : cards) card.contribution = contribution(increments, id);

    if (overrides != nullptr) {
        for (const auto& [id, o] : *overrides) {
            const auto it = cards.find(id);
            if (it == cards.end()) throw ConfigError("score override for unknown participant '" + id + "'");
            if (o.quality) it->second.quality = *o.quality;
            if (o.contribution) it->second.contribution = *o.contribution;
        }
    }

    std::map<std::string, double> quality, contrib;
    for (const auto& [id, card] : cards) {
        quality[id] = card.quality;
        contrib[id] = card.contribution;
    }
    const auto quality_norm = normalize(quality, diag);
    const auto contribution_norm = normalize(contrib, diag);
    const auto rewards = allocate_rewards(pools, quality_norm, contribution_norm);

    std::vector<ScoreCard> out;
    for (auto& [id, card] : cards) {
        card.quality_norm = quality_norm.at(id);
        card.contribution_norm = contribution_norm.at(id);
        card.r_quality = rewards.at(id).r_quality;
        card.r_contribution = rewards.at(id).r_contribution;
        out.push_back(std::move(card));
    }
    return out;
}

std::vector<ScoreCard> allocate_from_scores(std::span<const ExternalScore> scores, const RewardPools& pools,
                                            Diagnostics* diag) {
    if (scores.empty()) throw ConfigError("at least one score row is required");
    std::map<std::string, double> quality, contrib;
    for (const auto& s : scores) {
        if (quality.count(s.id) != 0) throw ConfigError("duplicate participant id '" + s.id + "'");
        quality[s.id] = s.quality;
        contrib[s.id] = s.contribution;
    }
    const auto quality_norm = normalize(quality, diag);
    const auto contribution_norm = normalize(contrib, diag);
    const auto rewards = allocate_rewards(pools, quality_norm, contribution_norm);
    std::vector<ScoreCard> out;
    for (const auto& [id, q] : quality) {
        ScoreCard card;
        card.participant = id;
        card.quality = q;
        card.contribution = contrib.at(id);
        card.quality_norm = quality_norm.at(id);
        card.contribution_norm = contribution_norm.at(id);
        card.r_quality = rewards.at(id).r_quality;
        card.r_contribution = rewards.at(id).r_contribution;
        out.push_back(std::move(card));
    }
    return out;
}

}  // namespace gasfl
