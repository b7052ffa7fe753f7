#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "gasfl/domain.hpp"

namespace gasfl {

enum class MessageKind { parameter_update, global_broadcast, partial_score, residual_share, score_report };

std::string to_string(MessageKind kind);
MessageKind message_kind_from_string(std::string_view text);

// Every simulated payload is a flat vector of doubles.
using Payload = std::vector<double>;

// FNV-1a 64 over the little-endian IEEE-754 bytes of the values.
std::uint64_t payload_digest(std::span<const double> values);
std::uint64_t payload_digest(const Vector& values);
std::string digest_hex(std::uint64_t digest);

struct Message {
    std::uint64_t seq = 0;
    int round = 0;
    std::string sender;
    std::string receiver;
    MessageKind kind = MessageKind::parameter_update;
    std::uint64_t digest = 0;
    std::size_t size = 0;            // payload bytes
    std::optional<Payload> payload;  // only kept in full-transcript mode
};

struct Transcript {
    std::string scenario_id;
    std::uint64_t seed = 0;
    std::vector<Message> messages;

    std::string to_jsonl() const;
    static Transcript from_jsonl(std::string_view text, std::string scenario_id = {}, std::uint64_t seed = 0);
};

struct Delivery {
    Message header;
    Payload payload;
};

/// In-memory synchronous message bus with per-round barriers.
///
/// Sequence numbers start at 1 and are assigned under a lock. Round numbers
/// may never go backwards: a send for a round earlier than the latest one is a
/// barrier violation. Each receiver sees its messages in enqueue order.
class Network {
public:
    Network(std::string scenario_id, std::uint64_t seed, bool full_payloads = false);

    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;

    void register_endpoint(const std::string& id);
    bool has_endpoint(const std::string& id) const;

    std::uint64_t send(const std::string& from, const std::string& to, int round, MessageKind kind,
                       Payload payload);
    // Drains every pending message addressed to `receiver`.
    std::vector<Delivery> receive(const std::string& receiver);
    // Receives exactly one message of `kind` from `sender`; throws RoutingError otherwise.
    Payload receive_one(const std::string& receiver, const std::string& sender, MessageKind kind);

    int current_round() const;
    const Transcript& transcript() const noexcept { return transcript_; }
    bool full_payloads() const noexcept { return full_payloads_; }

private:
    mutable std::mutex mutex_;
    Transcript transcript_;
    bool full_payloads_;
    int round_ = 0;
    std::set<std::string> endpoints_;
    std::map<std::string, std::deque<Delivery>> inboxes_;
};

struct PrivacyReport {
    bool passed = true;
    std::vector<std::uint64_t> offending_seqs;
};

// Fails iff a payload digest equals one of the forbidden raw-data fingerprints.
PrivacyReport assert_privacy(const Transcript& transcript, const std::set<std::uint64_t>& forbidden);

// Digests of every raw feature column and the target series of `dataset`.
std::set<std::uint64_t> raw_fingerprints(const TimeSeriesDataset& dataset);

}  // namespace gasfl
