#include "gasfl/vfl.hpp"

#include <algorithm>
#include <set>

#include "gasfl/error.hpp"

namespace gasfl {

namespace {

Payload to_payload(const Vector& v) { return Payload(v.data(), v.data() + v.size()); }

Vector from_payload(const Payload& p, Eigen::Index expected) {
    if (static_cast<Eigen::Index>(p.size()) != expected) throw ShapeError("series payload has unexpected length");
    return Eigen::Map<const Vector>(p.data(), expected);
}

// Working state of one member during split training.
struct Member {
    const Participant* participant;
    std::optional<Standardization> standardization;
    Matrix working;
    Vector weights;
};

}  // namespace

VflGroup::VflGroup(Participant active, std::vector<Participant> passives)
    : active_(std::move(active)), passives_(std::move(passives)) {
    if (active_.role() != Role::active) throw ConfigError("VFL group leader '" + active_.id() + "' must be active");
    std::set<std::string> ids{active_.id()};
    std::set<std::string> columns(active_.dataset().feature_names().begin(), active_.dataset().feature_names().end());
    for (const auto& p : passives_) {
        if (p.role() != Role::passive) throw ConfigError("VFL member '" + p.id() + "' must be passive");
        if (!ids.insert(p.id()).second) throw ConfigError("duplicate VFL member id '" + p.id() + "'");
        if (p.dataset().dates() != active_.dataset().dates()) {
            throw ConfigError("VFL member '" + p.id() + "' is not date-aligned with '" + active_.id() + "'");
        }
        for (const auto& name : p.dataset().feature_names()) {
            if (!columns.insert(name).second) {
                throw ConfigError("feature '" + name + "' is held by more than one VFL member");
            }
        }
    }
    std::sort(passives_.begin(), passives_.end(), [](const auto& a, const auto& b) { return a.id() < b.id(); });
}

std::vector<const Participant*> VflGroup::members() const {
    std::vector<const Participant*> out{&active_};
    for (const auto& p : passives_) out.push_back(&p);
    return out;
}

VflGroup VflGroup::slice_rows(std::size_t begin, std::size_t count) const {
    std::vector<Participant> passives;
    for (const auto& p : passives_) {
        passives.emplace_back(p.id(), p.tier(), p.role(), p.dataset().slice_rows(begin, count));
    }
    return {Participant(active_.id(), active_.tier(), active_.role(), active_.dataset().slice_rows(begin, count)),
            std::move(passives)};
}

Vector forward_partial(const ForecasterParams& block, const Matrix& features) {
    if (features.cols() != block.weights.size()) throw ShapeError("block width does not match features");
    return features * block.weights;
}

CombinedScores combine_and_residual(std::span<const Vector> partials, double bias, const Vector& target) {
    if (partials.empty()) throw ShapeError("no partial scores to combine");
    for (const auto& p : partials) {
        if (p.size() != target.size()) throw ShapeError("partial score length does not match target");
    }
    // Partials first, then bias: the same order as one dot product plus bias.
    Vector acc = partials.front();
    for (std::size_t i = 1; i < partials.size(); ++i) acc += partials[i];
    const Vector pre_clamp = acc.array() + bias;
    return {pre_clamp.cwiseMax(0.0), pre_clamp - target};
}

Vector backward_partial(const Vector& residuals, const Matrix& features, double l2, const ForecasterParams& block) {
    if (features.rows() != residuals.size()) throw ShapeError("residual length does not match feature rows");
    if (features.cols() != block.weights.size()) throw ShapeError("block width does not match features");
    if (residuals.size() == 0) throw ShapeError("gradient needs at least one row");
    return features.transpose() * residuals / static_cast<double>(residuals.size()) + l2 * block.weights;
}

ForecasterParams VflResult::combined() const {
    ForecasterParams out;
    Eigen::Index width = 0;
    for (const auto& id : member_order) width += blocks.at(id).weights.size();
    out.weights = Vector(width);
    Eigen::Index at = 0;
    for (const auto& id : member_order) {
        const auto& b = blocks.at(id);
        out.weights.segment(at, b.weights.size()) = b.weights;
        out.feature_names.insert(out.feature_names.end(), b.feature_names.begin(), b.feature_names.end());
        at += b.weights.size();
    }
    out.bias = blocks.at(member_order.front()).bias;
    return out;
}

VflResult run_vfl(const VflGroup& group, int rounds, const TrainConfig& config) {
    Network network("vfl", config.seed);
    return run_vfl(group, rounds, config, network);
}

VflResult run_vfl(const VflGroup& group, int rounds, const TrainConfig& config, Network& network, Diagnostics* diag) {
    config.validate();
    if (rounds < 1) throw ConfigError("VFL needs at least one round");
    if (group.rows() < 2) throw TrainingError("VFL training requires at least 2 aligned rows");

    const auto members_view = group.members();
    const auto& active_id = group.active().id();
    const Vector& target = group.active().dataset().target();
    const double n = static_cast<double>(target.size());

    std::vector<Member> members;
    for (const auto* p : members_view) {
        network.register_endpoint(p->id());
        Member m{p, std::nullopt, p->dataset().features(), Vector::Zero(static_cast<Eigen::Index>(p->dataset().cols()))};
        if (config.standardize) {
            m.standardization = Standardization::fit(p->dataset().features());
            for (const auto j : m.standardization->degenerate_columns()) {
                warn(diag, "feature '" + p->dataset().feature_names()[j] + "' of '" + p->id() +
                               "' has zero variance; weight fixed at 0");
            }
            m.working = m.standardization->apply(p->dataset().features());
        }
        members.push_back(std::move(m));
    }

    VflResult result;
    for (const auto* p : members_view) result.member_order.push_back(p->id());
    double bias = 0.0;
    int net_round = network.current_round() + 1;
    result.first_network_round = net_round;

    for (int r = 1; r <= rounds; ++r, ++net_round) {
        for (int step = 0; step < config.epochs; ++step) {
            // Passives compute and ship partial scores; the active computes its own locally.
            for (std::size_t i = 1; i < members.size(); ++i) {
                network.send(members[i].participant->id(), active_id, net_round, MessageKind::partial_score,
                             to_payload(members[i].working * members[i].weights));
            }
            std::vector<Vector> partials{members[0].working * members[0].weights};
            for (std::size_t i = 1; i < members.size(); ++i) {
                partials.push_back(from_payload(
                    network.receive_one(active_id, members[i].participant->id(), MessageKind::partial_score),
                    target.size()));
            }
            const auto combined = combine_and_residual(partials, bias, target);
            if (step == 0) result.logs.push_back({r, 0.5 * combined.residual.squaredNorm() / n});

            for (std::size_t i = 1; i < members.size(); ++i) {
                network.send(active_id, members[i].participant->id(), net_round, MessageKind::residual_share,
                             to_payload(combined.residual));
            }
            for (std::size_t i = 0; i < members.size(); ++i) {
                Vector residual = i == 0 ? combined.residual
                                         : from_payload(network.receive_one(members[i].participant->id(), active_id,
                                                                            MessageKind::residual_share),
                                                        target.size());
                ForecasterParams block;
                block.weights = members[i].weights;
                const Vector grad = backward_partial(residual, members[i].working, config.l2, block);
                members[i].weights -= config.learning_rate * grad;
                if (i == 0) bias -= config.learning_rate * (residual.sum() / n);
            }
        }
    }
    result.last_network_round = net_round - 1;

    // Fold standardization. Each passive's constant offset becomes part of the
    // active party's intercept; it is a single scalar per passive.
    double raw_bias = 0.0;
    for (std::size_t i = 0; i < members.size(); ++i) {
        const auto& p = *members[i].participant;
        auto folded = fold_standardization(members[i].weights, i == 0 ? bias : 0.0, p.dataset().feature_names(),
                                           members[i].standardization);
        if (i == 0) {
            raw_bias += folded.bias;
        } else if (config.standardize) {
            network.send(p.id(), active_id, result.last_network_round, MessageKind::parameter_update,
                         Payload{folded.bias});
            raw_bias += network.receive_one(active_id, p.id(), MessageKind::parameter_update).front();
            folded.bias = 0.0;
        }
        result.blocks.emplace(p.id(), std::move(folded));
    }
    result.blocks.at(active_id).bias = raw_bias;

    // Restricted local baselines: one block against the labels.
    TrainConfig local_config = config;
    local_config.epochs = config.epochs * rounds;
    for (const auto* p : members_view) {
        const auto labelled = p->role() == Role::active ? p->dataset() : p->dataset().with_target(target);
        result.restricted_locals.emplace(p->id(), train(labelled, local_config, diag));
    }
    return result;
}

VflForecasts forecast_vfl(const VflGroup& eval_group, const VflResult& trained, Network& network, int round) {
    const auto members = eval_group.members();
    const auto& active_id = eval_group.active().id();
    const auto rows = static_cast<Eigen::Index>(eval_group.rows());
    VflForecasts out;
    out.actual = eval_group.active().dataset().target();

    for (std::size_t i = 1; i < members.size(); ++i) {
        const auto& p = *members[i];
        network.send(p.id(), active_id, round, MessageKind::partial_score,
                     to_payload(forward_partial(trained.blocks.at(p.id()), p.dataset().features())));
        network.send(p.id(), active_id, round, MessageKind::partial_score,
                     to_payload(predict(trained.restricted_locals.at(p.id()), p.dataset().features())));
    }
    std::vector<Vector> partials{forward_partial(trained.blocks.at(active_id), eval_group.active().dataset().features())};
    out.local[active_id] = predict(trained.restricted_locals.at(active_id), eval_group.active().dataset().features());
    for (std::size_t i = 1; i < members.size(); ++i) {
        const auto& id = members[i]->id();
        partials.push_back(from_payload(network.receive_one(active_id, id, MessageKind::partial_score), rows));
        out.local[id] = from_payload(network.receive_one(active_id, id, MessageKind::partial_score), rows);
    }
    out.global = combine_and_residual(partials, trained.blocks.at(active_id).bias, out.actual).prediction;
    return out;
}

}  // namespace gasfl
