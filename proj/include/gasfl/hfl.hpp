#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "gasfl/domain.hpp"
#include "gasfl/forecaster.hpp"
#include "gasfl/simnet.hpp"

namespace gasfl {

inline constexpr const char* hfl_server_id = "hfl-server";

struct HflRoundLog {
    int round = 0;  // 1-based, consecutive
    std::map<std::string, ForecasterParams> local_params;
    ForecasterParams global;
    std::map<std::string, double> local_loss;
};

struct HflResult {
    ForecasterParams global;
    std::map<std::string, ForecasterParams> locals;  // standalone models, own data only
    std::vector<HflRoundLog> logs;
    int first_network_round = 0;  // network round of training round 1
    int last_network_round = 0;
};

// Elementwise mean of weights and bias, client i weighted by n_i / sum(n).
ForecasterParams aggregate_weighted(std::span<const ForecasterParams> client_params,
                                    std::span<const std::size_t> sample_counts);

/// FedAvg over company-tier participants.
///
/// When `config.standardize` is set the clients first exchange column moments
/// so that every local update runs in one shared standardized coordinate
/// system. Each round, every client runs `config.epochs` descent steps from
/// the current global parameters; the server aggregates in ascending id order
/// and broadcasts. Standalone local models get the same total epoch budget.
HflResult run_hfl(std::span<const Participant> participants, int rounds, const TrainConfig& config,
                  Network& network, Diagnostics* diag = nullptr);
HflResult run_hfl(std::span<const Participant> participants, int rounds, const TrainConfig& config);

struct HflReplay {
    bool consistent = true;                 // every recomputed broadcast matched its recorded digest
    std::vector<Payload> aggregates;        // one per replayed round
    std::vector<int> mismatched_rounds;
};

// Recomputes the server side of every round in [first_round, last_round] from
// a full-payload transcript.
HflReplay replay_hfl_aggregation(const Transcript& transcript, const std::map<std::string, std::size_t>& sample_counts,
                                 int first_round, int last_round, const std::string& server_id = hfl_server_id);

}  // namespace gasfl
