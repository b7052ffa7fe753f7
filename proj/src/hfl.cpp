#include "gasfl/hfl.hpp"

#include <algorithm>
#include <set>

#include "gasfl/error.hpp"

namespace gasfl {

namespace {

Payload encode_params(const Vector& weights, double bias) {
    Payload p(weights.data(), weights.data() + weights.size());
    p.push_back(bias);
    return p;
}

std::pair<Vector, double> decode_params(const Payload& p, std::size_t width) {
    if (p.size() != width + 1) throw ShapeError("parameter payload has unexpected length");
    Vector w(static_cast<Eigen::Index>(width));
    for (std::size_t j = 0; j < width; ++j) w(static_cast<Eigen::Index>(j)) = p[j];
    return {w, p.back()};
}

Payload encode_moments(const ColumnMoments& m) {
    Payload p{m.count};
    p.insert(p.end(), m.mean.data(), m.mean.data() + m.mean.size());
    p.insert(p.end(), m.m2.data(), m.m2.data() + m.m2.size());
    return p;
}

ColumnMoments decode_moments(const Payload& p, std::size_t width) {
    if (p.size() != 1 + 2 * width) throw ShapeError("moment payload has unexpected length");
    ColumnMoments m;
    m.count = p[0];
    m.mean = Eigen::Map<const Vector>(p.data() + 1, static_cast<Eigen::Index>(width));
    m.m2 = Eigen::Map<const Vector>(p.data() + 1 + width, static_cast<Eigen::Index>(width));
    return m;
}

Payload encode_standardization(const Standardization& s) {
    Payload p(s.mean.data(), s.mean.data() + s.mean.size());
    p.insert(p.end(), s.scale.data(), s.scale.data() + s.scale.size());
    return p;
}

Standardization decode_standardization(const Payload& p, std::size_t width) {
    if (p.size() != 2 * width) throw ShapeError("standardization payload has unexpected length");
    Standardization s;
    s.mean = Eigen::Map<const Vector>(p.data(), static_cast<Eigen::Index>(width));
    s.scale = Eigen::Map<const Vector>(p.data() + width, static_cast<Eigen::Index>(width));
    return s;
}

}  // namespace

ForecasterParams aggregate_weighted(std::span<const ForecasterParams> client_params,
                                    std::span<const std::size_t> sample_counts) {
    if (client_params.empty()) throw ConfigError("aggregation needs at least one client");
    if (client_params.size() != sample_counts.size()) throw ShapeError("params and sample counts differ in length");
    const auto width = client_params.front().weights.size();
    std::size_t total = 0;
    for (std::size_t i = 0; i < client_params.size(); ++i) {
        if (client_params[i].weights.size() != width) throw ShapeError("client parameter shapes differ");
        total += sample_counts[i];
    }
    if (total == 0) throw ConfigError("total sample count must be positive");

    ForecasterParams out;
    out.feature_names = client_params.front().feature_names;
    out.weights = Vector::Zero(width);
    out.bias = 0.0;
    for (std::size_t i = 0; i < client_params.size(); ++i) {
        const double share = static_cast<double>(sample_counts[i]) / static_cast<double>(total);
        out.weights += share * client_params[i].weights;
        out.bias += share * client_params[i].bias;
    }
    return out;
}

HflResult run_hfl(std::span<const Participant> participants, int rounds, const TrainConfig& config) {
    Network network("hfl", config.seed);
    return run_hfl(participants, rounds, config, network);
}

HflResult run_hfl(std::span<const Participant> participants, int rounds, const TrainConfig& config,
                  Network& network, Diagnostics* diag) {
    config.validate();
    if (participants.empty()) throw ConfigError("HFL needs at least one participant");
    if (rounds < 1) throw ConfigError("HFL needs at least one round");

    std::vector<const Participant*> clients;
    std::set<std::string> ids;
    for (const auto& p : participants) {
        if (!ids.insert(p.id()).second) throw ConfigError("duplicate participant id '" + p.id() + "'");
        if (!p.dataset().has_target()) throw ConfigError("HFL client '" + p.id() + "' has no target");
        if (p.sample_count() == 0) throw ConfigError("HFL client '" + p.id() + "' has zero samples");
        if (p.dataset().feature_names() != participants.front().dataset().feature_names()) {
            throw ConfigError("HFL client '" + p.id() + "' has a different feature schema");
        }
        clients.push_back(&p);
    }
    std::sort(clients.begin(), clients.end(), [](const auto* a, const auto* b) { return a->id() < b->id(); });

    const auto& names = clients.front()->dataset().feature_names();
    const auto width = names.size();
    network.register_endpoint(hfl_server_id);
    for (const auto* c : clients) network.register_endpoint(c->id());

    HflResult result;
    int net_round = network.current_round() + 1;

    std::optional<Standardization> standardization;
    if (config.standardize) {
        for (const auto* c : clients) {
            network.send(c->id(), hfl_server_id, net_round, MessageKind::parameter_update,
                         encode_moments(ColumnMoments::of(c->dataset().features())));
        }
        std::vector<ColumnMoments> moments;
        for (const auto* c : clients) {
            moments.push_back(
                decode_moments(network.receive_one(hfl_server_id, c->id(), MessageKind::parameter_update), width));
        }
        const auto merged = Standardization::from_moments(ColumnMoments::merge(moments));
        for (const auto j : merged.degenerate_columns()) {
            warn(diag, "feature '" + names[j] + "' has zero variance across the federation; weight fixed at 0");
        }
        for (const auto* c : clients) {
            network.send(hfl_server_id, c->id(), net_round, MessageKind::global_broadcast,
                         encode_standardization(merged));
        }
        for (const auto* c : clients) {
            standardization =
                decode_standardization(network.receive_one(c->id(), hfl_server_id, MessageKind::global_broadcast), width);
        }
        ++net_round;
    }

    std::vector<Matrix> working;
    std::vector<std::size_t> counts;
    for (const auto* c : clients) {
        working.push_back(standardization ? standardization->apply(c->dataset().features()) : c->dataset().features());
        counts.push_back(c->sample_count());
    }

    // Standalone local models: own data only, same total epoch budget.
    TrainConfig local_config = config;
    local_config.epochs = config.epochs * rounds;
    for (const auto* c : clients) result.locals.emplace(c->id(), train(c->dataset(), local_config));

    Vector global_w = Vector::Zero(static_cast<Eigen::Index>(width));
    double global_b = 0.0;
    result.first_network_round = net_round;
    for (int r = 1; r <= rounds; ++r, ++net_round) {
        HflRoundLog log;
        log.round = r;
        for (std::size_t i = 0; i < clients.size(); ++i) {
            Vector w = global_w;
            double b = global_b;
            descend(w, b, working[i], clients[i]->dataset().target(), config, config.epochs);
            log.local_loss[clients[i]->id()] = objective(w, b, working[i], clients[i]->dataset().target(), config.l2);
            log.local_params[clients[i]->id()] = fold_standardization(w, b, names, standardization);
            network.send(clients[i]->id(), hfl_server_id, net_round, MessageKind::parameter_update,
                         encode_params(w, b));
        }

        std::vector<ForecasterParams> updates;
        for (const auto* c : clients) {
            auto [w, b] = decode_params(network.receive_one(hfl_server_id, c->id(), MessageKind::parameter_update), width);
            ForecasterParams p;
            p.feature_names = names;
            p.weights = std::move(w);
            p.bias = b;
            updates.push_back(std::move(p));
        }
        const auto aggregate = aggregate_weighted(updates, counts);
        for (const auto* c : clients) {
            network.send(hfl_server_id, c->id(), net_round, MessageKind::global_broadcast,
                         encode_params(aggregate.weights, aggregate.bias));
        }
        for (const auto* c : clients) {
            std::tie(global_w, global_b) =
                decode_params(network.receive_one(c->id(), hfl_server_id, MessageKind::global_broadcast), width);
        }
        log.global = fold_standardization(global_w, global_b, names, standardization);
        result.logs.push_back(std::move(log));
    }
    result.last_network_round = net_round - 1;
    result.global = fold_standardization(global_w, global_b, names, standardization);
    return result;
}

HflReplay replay_hfl_aggregation(const Transcript& transcript, const std::map<std::string, std::size_t>& sample_counts,
                                 int first_round, int last_round, const std::string& server_id) {
    HflReplay replay;
    for (int round = first_round; round <= last_round; ++round) {
        std::map<std::string, const Message*> updates;
        std::vector<const Message*> broadcasts;
        for (const auto& m : transcript.messages) {
            if (m.round != round) continue;
            if (m.kind == MessageKind::parameter_update && m.receiver == server_id) {
                if (!m.payload) throw ConfigError("replay requires a full-payload transcript");
                updates[m.sender] = &m;
            } else if (m.kind == MessageKind::global_broadcast && m.sender == server_id) {
                broadcasts.push_back(&m);
            }
        }
        if (updates.empty()) throw ConfigError("no parameter updates recorded for round " + std::to_string(round));
        std::vector<ForecasterParams> params;
        std::vector<std::size_t> counts;
        for (const auto& [sender, m] : updates) {
            const auto it = sample_counts.find(sender);
            if (it == sample_counts.end()) throw ConfigError("no sample count for '" + sender + "'");
            auto [w, b] = decode_params(*m->payload, m->payload->size() - 1);
            ForecasterParams p;
            p.weights = std::move(w);
            p.bias = b;
            params.push_back(std::move(p));
            counts.push_back(it->second);
        }
        const auto agg = aggregate_weighted(params, counts);
        auto payload = encode_params(agg.weights, agg.bias);
        const auto digest = payload_digest(payload);
        bool ok = !broadcasts.empty();
        for (const auto* b : broadcasts) ok = ok && b->digest == digest;
        if (!ok) {
            replay.consistent = false;
            replay.mismatched_rounds.push_back(round);
        }
        replay.aggregates.push_back(std::move(payload));
    }
    return replay;
}

}  // namespace gasfl
