#include "gasfl/forecaster.hpp"

#include <cmath>

#include "gasfl/error.hpp"

namespace gasfl {

namespace {

void check_width(const Vector& weights, const Matrix& features) {
    if (features.cols() != weights.size()) {
        throw ShapeError("feature width " + std::to_string(features.cols()) + " does not match " +
                         std::to_string(weights.size()) + " weights");
    }
}

void check_rows(const Matrix& features, const Vector& target) {
    if (features.rows() != target.size()) {
        throw ShapeError("feature rows " + std::to_string(features.rows()) + " do not match target length " +
                         std::to_string(target.size()));
    }
}

}  // namespace

ColumnMoments ColumnMoments::of(const Matrix& features) {
    ColumnMoments m;
    m.count = static_cast<double>(features.rows());
    if (features.rows() == 0) {
        m.mean = Vector::Zero(features.cols());
        m.m2 = Vector::Zero(features.cols());
        return m;
    }
    m.mean = features.colwise().sum().transpose() / m.count;
    m.m2 = (features.rowwise() - m.mean.transpose()).array().square().colwise().sum().transpose();
    return m;
}

ColumnMoments ColumnMoments::merge(std::span<const ColumnMoments> parts) {
    if (parts.empty()) throw ConfigError("cannot merge zero moment sets");
    ColumnMoments acc = parts.front();
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const auto& p = parts[i];
        if (p.mean.size() != acc.mean.size()) throw ShapeError("moment widths differ");
        const double n = acc.count + p.count;
        if (n == 0.0) continue;
        const Vector delta = p.mean - acc.mean;
        acc.m2 = acc.m2 + p.m2 + delta.cwiseProduct(delta) * (acc.count * p.count / n);
        acc.mean = acc.mean + delta * (p.count / n);
        acc.count = n;
    }
    return acc;
}

Standardization Standardization::fit(const Matrix& features) { return from_moments(ColumnMoments::of(features)); }

Standardization Standardization::from_moments(const ColumnMoments& moments) {
    Standardization s;
    s.mean = moments.mean;
    s.scale = Vector::Zero(moments.mean.size());
    if (moments.count <= 0.0) return s;
    for (Eigen::Index j = 0; j < s.scale.size(); ++j) {
        const double sd = std::sqrt(moments.m2(j) / moments.count);
        // Relative threshold: a column is degenerate when its spread is at rounding level.
        s.scale(j) = sd > 1e-12 * std::max(1.0, std::abs(s.mean(j))) ? sd : 0.0;
    }
    return s;
}

Matrix Standardization::apply(const Matrix& features) const {
    if (features.cols() != mean.size()) throw ShapeError("standardization width mismatch");
    Matrix out(features.rows(), features.cols());
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
        if (scale(j) > 0.0) {
            out.col(j) = (features.col(j).array() - mean(j)) / scale(j);
        } else {
            out.col(j).setZero();
        }
    }
    return out;
}

std::vector<std::size_t> Standardization::degenerate_columns() const {
    std::vector<std::size_t> out;
    for (Eigen::Index j = 0; j < scale.size(); ++j) {
        if (scale(j) == 0.0) out.push_back(static_cast<std::size_t>(j));
    }
    return out;
}

ForecasterParams ForecasterParams::zeros(std::vector<std::string> feature_names) {
    ForecasterParams p;
    p.weights = Vector::Zero(static_cast<Eigen::Index>(feature_names.size()));
    p.feature_names = std::move(feature_names);
    return p;
}

bool same_values(const ForecasterParams& a, const ForecasterParams& b) {
    return a.feature_names == b.feature_names && a.weights.size() == b.weights.size() &&
           a.weights == b.weights && a.bias == b.bias;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be > 0");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(l2 >= 0.0) || !std::isfinite(l2)) throw ConfigError("l2 must be >= 0");
}

double objective(const Vector& weights, double bias, const Matrix& features, const Vector& target, double l2) {
    const Vector residual = (features * weights).array() + bias - target.array();
    return 0.5 * residual.squaredNorm() / static_cast<double>(target.size()) + 0.5 * l2 * weights.squaredNorm();
}

void descend(Vector& weights, double& bias, const Matrix& features, const Vector& target,
             const TrainConfig& config, int steps, LossTrace* trace) {
    check_width(weights, features);
    check_rows(features, target);
    const double n = static_cast<double>(target.size());
    for (int step = 0; step < steps; ++step) {
        const Vector residual = (features * weights).array() + bias - target.array();
        if (trace != nullptr) {
            trace->push_back(0.5 * residual.squaredNorm() / n + 0.5 * config.l2 * weights.squaredNorm());
        }
        const Vector grad_w = features.transpose() * residual / n + config.l2 * weights;
        const double grad_b = residual.sum() / n;
        weights -= config.learning_rate * grad_w;
        bias -= config.learning_rate * grad_b;
    }
}

ForecasterParams fold_standardization(const Vector& weights, double bias, std::vector<std::string> feature_names,
                                      const std::optional<Standardization>& standardization) {
    ForecasterParams p;
    p.feature_names = std::move(feature_names);
    if (!standardization) {
        p.weights = weights;
        p.bias = bias;
        return p;
    }
    const auto& s = *standardization;
    p.weights = Vector::Zero(weights.size());
    p.bias = bias;
    for (Eigen::Index j = 0; j < weights.size(); ++j) {
        if (s.scale(j) > 0.0) {
            p.weights(j) = weights(j) / s.scale(j);
            p.bias -= p.weights(j) * s.mean(j);
        }
    }
    p.standardization = s;
    return p;
}

std::pair<Vector, double> unfold_standardization(const ForecasterParams& params, const Standardization& s) {
    Vector w = Vector::Zero(params.weights.size());
    double b = params.bias;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
        if (s.scale(j) > 0.0) {
            w(j) = params.weights(j) * s.scale(j);
            b += params.weights(j) * s.mean(j);
        }
    }
    return {w, b};
}

ForecasterParams train(const TimeSeriesDataset& dataset, const TrainConfig& config, Diagnostics* diag,
                       LossTrace* trace) {
    config.validate();
    if (!dataset.has_target()) throw TrainingError("training requires a target series");
    if (dataset.rows() < 2) throw TrainingError("training requires at least 2 rows");

    std::optional<Standardization> standardization;
    Matrix working;
    if (config.standardize) {
        standardization = Standardization::fit(dataset.features());
        for (const auto j : standardization->degenerate_columns()) {
            warn(diag, "feature '" + dataset.feature_names()[j] + "' has zero variance; weight fixed at 0");
        }
        working = standardization->apply(dataset.features());
    } else {
        working = dataset.features();
    }
    Vector weights = Vector::Zero(working.cols());
    double bias = 0.0;
    descend(weights, bias, working, dataset.target(), config, config.epochs, trace);
    return fold_standardization(weights, bias, dataset.feature_names(), standardization);
}

Vector predict_unclamped(const ForecasterParams& params, const Matrix& features) {
    check_width(params.weights, features);
    if (features.rows() == 0) return Vector(0);
    return (features * params.weights).array() + params.bias;
}

Vector predict(const ForecasterParams& params, const Matrix& features) {
    return predict_unclamped(params, features).cwiseMax(0.0);
}

ParamGradient mse_gradient(const ForecasterParams& params, const Matrix& features, const Vector& target, double l2) {
    check_width(params.weights, features);
    check_rows(features, target);
    if (target.size() == 0) throw ShapeError("gradient needs at least one row");
    const double n = static_cast<double>(target.size());
    const Vector residual = predict_unclamped(params, features) - target;
    return {features.transpose() * residual / n + l2 * params.weights, residual.sum() / n};
}

double mse_objective(const ForecasterParams& params, const Matrix& features, const Vector& target, double l2) {
    check_width(params.weights, features);
    check_rows(features, target);
    return objective(params.weights, params.bias, features, target, l2);
}

}  // namespace gasfl
