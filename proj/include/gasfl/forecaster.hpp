#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gasfl/diagnostics.hpp"
#include "gasfl/domain.hpp"

namespace gasfl {

/// Per-column sufficient statistics (count, mean, sum of squared deviations).
/// Mergeable, so a federation can agree on standardization constants without
/// pooling rows.
struct ColumnMoments {
    double count = 0.0;
    Vector mean;
    Vector m2;

    static ColumnMoments of(const Matrix& features);
    // Chan et al. pairwise combination in the given order. A single element is
    // returned unchanged.
    static ColumnMoments merge(std::span<const ColumnMoments> parts);
};

struct Standardization {
    Vector mean;
    Vector scale;  // population standard deviation; 0 marks a degenerate column

    static Standardization fit(const Matrix& features);
    static Standardization from_moments(const ColumnMoments& moments);
    Matrix apply(const Matrix& features) const;
    std::vector<std::size_t> degenerate_columns() const;
};

/// Linear gas-usage forecaster parameters in raw feature units.
struct ForecasterParams {
    std::vector<std::string> feature_names;
    Vector weights;
    double bias = 0.0;
    // Constants that were folded into weights/bias when training standardized.
    std::optional<Standardization> standardization;

    std::size_t size() const noexcept { return static_cast<std::size_t>(weights.size()); }
    static ForecasterParams zeros(std::vector<std::string> feature_names);
};

bool same_values(const ForecasterParams& a, const ForecasterParams& b);

struct ParamGradient {
    Vector weights;
    double bias = 0.0;
};

struct TrainConfig {
    double learning_rate = 0.1;
    int epochs = 200;
    double l2 = 0.0;
    std::uint64_t seed = 0;  // recorded for provenance; initialization is all-zero
    bool standardize = true;

    void validate() const;  // throws ConfigError
};

// Loss history of a training run, one entry per epoch, measured before the step.
using LossTrace = std::vector<double>;

/// Full-batch gradient descent on 1/2 * MSE + l2/2 * |w|^2.
///
/// With `standardize`, descent runs on standardized columns and the constants
/// are folded back into the returned parameters, so `predict` takes raw
/// features. Zero-variance columns keep weight 0 and raise a warning.
ForecasterParams train(const TimeSeriesDataset& dataset, const TrainConfig& config,
                       Diagnostics* diag = nullptr, LossTrace* trace = nullptr);

// Runs `steps` descent steps in place on working-coordinate parameters. This is
// the shared inner loop of centralized and horizontally federated training.
void descend(Vector& weights, double& bias, const Matrix& features, const Vector& target,
             const TrainConfig& config, int steps, LossTrace* trace = nullptr);

// Half mean squared error plus the L2 term, on working coordinates.
double objective(const Vector& weights, double bias, const Matrix& features, const Vector& target,
                 double l2);

// Maps working-coordinate parameters back to raw feature units.
ForecasterParams fold_standardization(const Vector& weights, double bias,
                                      std::vector<std::string> feature_names,
                                      const std::optional<Standardization>& standardization);
// Inverse of fold_standardization (degenerate columns map to 0).
std::pair<Vector, double> unfold_standardization(const ForecasterParams& params,
                                                 const Standardization& standardization);

Vector predict_unclamped(const ForecasterParams& params, const Matrix& features);
// Rowwise dot product plus bias, clamped at 0 from below.
Vector predict(const ForecasterParams& params, const Matrix& features);

ParamGradient mse_gradient(const ForecasterParams& params, const Matrix& features, const Vector& target,
                           double l2 = 0.0);
double mse_objective(const ForecasterParams& params, const Matrix& features, const Vector& target,
                     double l2 = 0.0);

}  // namespace gasfl
