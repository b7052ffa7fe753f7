#include "gasfl/simnet.hpp"

#include <bit>
#include <cstring>

#include <json.hpp>

#include "gasfl/error.hpp"

namespace gasfl {

namespace {

constexpr std::uint64_t fnv_offset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t fnv_prime = 0x100000001b3ULL;

}  // namespace

std::string to_string(MessageKind kind) {
    switch (kind) {
        case MessageKind::parameter_update: return "ParameterUpdate";
        case MessageKind::global_broadcast: return "GlobalBroadcast";
        case MessageKind::partial_score: return "PartialScore";
        case MessageKind::residual_share: return "ResidualShare";
        case MessageKind::score_report: return "ScoreReport";
    }
    return "Unknown";
}

MessageKind message_kind_from_string(std::string_view text) {
    for (const auto k : {MessageKind::parameter_update, MessageKind::global_broadcast, MessageKind::partial_score,
                         MessageKind::residual_share, MessageKind::score_report}) {
        if (to_string(k) == text) return k;
    }
    throw ParseError("unknown message kind '" + std::string(text) + "'", 0);
}

std::uint64_t payload_digest(std::span<const double> values) {
    std::uint64_t h = fnv_offset;
    for (const double v : values) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        for (int b = 0; b < 8; ++b) {
            h ^= bits & 0xffU;
            h *= fnv_prime;
            bits >>= 8;
        }
    }
    return h;
}

std::uint64_t payload_digest(const Vector& values) {
    return payload_digest(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
}

std::string digest_hex(std::uint64_t digest) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
    return buf;
}

std::string Transcript::to_jsonl() const {
    std::string out;
    for (const auto& m : messages) {
        nlohmann::ordered_json j;
        j["seq"] = m.seq;
        j["round"] = m.round;
        j["sender"] = m.sender;
        j["receiver"] = m.receiver;
        j["kind"] = to_string(m.kind);
        j["digest"] = digest_hex(m.digest);
        j["size"] = m.size;
        if (m.payload) j["payload"] = *m.payload;
        out += j.dump();
        out += '\n';
    }
    return out;
}

Transcript Transcript::from_jsonl(std::string_view text, std::string scenario_id, std::uint64_t seed) {
    Transcript t{std::move(scenario_id), seed, {}};
    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start < text.size()) {
        auto pos = text.find('\n', start);
        if (pos == std::string_view::npos) pos = text.size();
        const auto line = text.substr(start, pos - start);
        start = pos + 1;
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            Message m;
            m.seq = j.at("seq").get<std::uint64_t>();
            m.round = j.at("round").get<int>();
            m.sender = j.at("sender").get<std::string>();
            m.receiver = j.at("receiver").get<std::string>();
            m.kind = message_kind_from_string(j.at("kind").get<std::string>());
            m.digest = std::stoull(j.at("digest").get<std::string>(), nullptr, 16);
            m.size = j.at("size").get<std::size_t>();
            if (j.contains("payload")) m.payload = j.at("payload").get<Payload>();
            t.messages.push_back(std::move(m));
        } catch (const ParseError&) {
            throw ParseError("unknown message kind", line_no);
        } catch (const std::exception& e) {
            throw ParseError(std::string("malformed transcript record: ") + e.what(), line_no);
        }
    }
    return t;
}

Network::Network(std::string scenario_id, std::uint64_t seed, bool full_payloads)
    : transcript_{std::move(scenario_id), seed, {}}, full_payloads_(full_payloads) {}

void Network::register_endpoint(const std::string& id) {
    std::lock_guard lock(mutex_);
    endpoints_.insert(id);
}

bool Network::has_endpoint(const std::string& id) const {
    std::lock_guard lock(mutex_);
    return endpoints_.count(id) != 0;
}

std::uint64_t Network::send(const std::string& from, const std::string& to, int round, MessageKind kind,
                            Payload payload) {
    std::lock_guard lock(mutex_);
    if (endpoints_.count(from) == 0) throw RoutingError("unregistered sender '" + from + "'");
    if (endpoints_.count(to) == 0) throw RoutingError("unregistered receiver '" + to + "'");
    if (round < round_) {
        throw RoutingError("round barrier violated: round " + std::to_string(round) + " after round " +
                           std::to_string(round_));
    }
    round_ = round;

    Message m;
    m.seq = transcript_.messages.size() + 1;
    m.round = round;
    m.sender = from;
    m.receiver = to;
    m.kind = kind;
    m.digest = payload_digest(payload);
    m.size = payload.size() * sizeof(double);
    if (full_payloads_) m.payload = payload;
    transcript_.messages.push_back(m);

    m.payload.reset();
    const auto seq = m.seq;
    inboxes_[to].push_back(Delivery{std::move(m), std::move(payload)});
    return seq;
}

std::vector<Delivery> Network::receive(const std::string& receiver) {
    std::lock_guard lock(mutex_);
    if (endpoints_.count(receiver) == 0) throw RoutingError("unregistered receiver '" + receiver + "'");
    auto& inbox = inboxes_[receiver];
    std::vector<Delivery> out(std::make_move_iterator(inbox.begin()), std::make_move_iterator(inbox.end()));
    inbox.clear();
    return out;
}

Payload Network::receive_one(const std::string& receiver, const std::string& sender, MessageKind kind) {
    std::lock_guard lock(mutex_);
    auto& inbox = inboxes_[receiver];
    for (auto it = inbox.begin(); it != inbox.end(); ++it) {
        if (it->header.sender == sender && it->header.kind == kind) {
            Payload p = std::move(it->payload);
            inbox.erase(it);
            return p;
        }
    }
    throw RoutingError("no " + to_string(kind) + " from '" + sender + "' pending for '" + receiver + "'");
}

int Network::current_round() const {
    std::lock_guard lock(mutex_);
    return round_;
}

PrivacyReport assert_privacy(const Transcript& transcript, const std::set<std::uint64_t>& forbidden) {
    PrivacyReport report;
    for (const auto& m : transcript.messages) {
        if (forbidden.count(m.digest) != 0) {
            report.passed = false;
            report.offending_seqs.push_back(m.seq);
        }
    }
    return report;
}

std::set<std::uint64_t> raw_fingerprints(const TimeSeriesDataset& dataset) {
    std::set<std::uint64_t> out;
    for (Eigen::Index c = 0; c < dataset.features().cols(); ++c) {
        out.insert(payload_digest(Vector(dataset.features().col(c))));
    }
    if (dataset.has_target()) out.insert(payload_digest(dataset.target()));
    return out;
}

}  // namespace gasfl
