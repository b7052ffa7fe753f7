#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "gasfl/domain.hpp"
#include "gasfl/forecaster.hpp"
#include "gasfl/simnet.hpp"

namespace gasfl {

/// One company (active, holds labels) and its heating stations (passive,
/// feature blocks only) over date-aligned samples.
class VflGroup {
public:
    VflGroup(Participant active, std::vector<Participant> passives);

    const Participant& active() const noexcept { return active_; }
    const std::vector<Participant>& passives() const noexcept { return passives_; }
    std::size_t rows() const noexcept { return active_.sample_count(); }
    // Active first, then passives in ascending id order.
    std::vector<const Participant*> members() const;
    VflGroup slice_rows(std::size_t begin, std::size_t count) const;

private:
    Participant active_;
    std::vector<Participant> passives_;
};

// Rowwise dot product of one participant's block weights with its features.
// The block's bias is not applied.
Vector forward_partial(const ForecasterParams& block, const Matrix& features);

struct CombinedScores {
    Vector prediction;  // clamped at 0
    Vector residual;    // pre-clamp prediction minus target
};

CombinedScores combine_and_residual(std::span<const Vector> partials, double bias, const Vector& target);

// Gradient of the shared objective restricted to one block's weights. Only
// the residual series crosses the participant boundary.
Vector backward_partial(const Vector& residuals, const Matrix& features, double l2, const ForecasterParams& block);

struct VflRoundLog {
    int round = 0;
    double loss = 0.0;  // half MSE at the start of the round, measured by the active party
};

struct VflResult {
    std::map<std::string, ForecasterParams> blocks;  // raw units; only the active block has a bias
    std::map<std::string, ForecasterParams> restricted_locals;
    std::vector<VflRoundLog> logs;
    std::vector<std::string> member_order;  // active first
    int first_network_round = 0;
    int last_network_round = 0;

    // The column-concatenated model in member order.
    ForecasterParams combined() const;
};

/// Split-linear training. Every round runs `config.epochs` full-batch steps,
/// each one a PartialScore / ResidualShare exchange. Each member standardizes
/// its own columns when `config.standardize` is set. Restricted local models
/// are trained on each member's block alone against the labels, under the
/// active party's evaluation protocol.
VflResult run_vfl(const VflGroup& group, int rounds, const TrainConfig& config, Network& network,
                  Diagnostics* diag = nullptr);
VflResult run_vfl(const VflGroup& group, int rounds, const TrainConfig& config);

struct VflForecasts {
    Vector actual;
    Vector global;                          // federated model, clamped
    std::map<std::string, Vector> local;    // restricted local models, clamped
};

// Evaluation exchange on held-out rows: passives send partial scores of the
// federated blocks and forecasts of their restricted local models to the
// active party, which assembles the series.
VflForecasts forecast_vfl(const VflGroup& eval_group, const VflResult& trained, Network& network, int round);

}  // namespace gasfl
