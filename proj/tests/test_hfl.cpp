#include <doctest.h>

#include <algorithm>

#include "gasfl/error.hpp"
#include "gasfl/hfl.hpp"
#include "support.hpp"

using namespace gasfl;
using gasfl::testing::Draws;

namespace {

ForecasterParams params(std::vector<double> w, double b) {
    ForecasterParams p;
    for (std::size_t j = 0; j < w.size(); ++j) p.feature_names.push_back("f" + std::to_string(j));
    p.weights = Eigen::Map<Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
    p.bias = b;
    return p;
}

Participant company(const std::string& id, const TimeSeriesDataset& ds) {
    return {id, Tier::company, Role::active, ds};
}

}  // namespace

TEST_CASE("aggregate_weighted") {
    SUBCASE("weighted mean") {
        const std::vector<ForecasterParams> ps{params({1, 3}, 2), params({3, 5}, 4)};
        const std::vector<std::size_t> counts{10, 30};
        const auto agg = aggregate_weighted(ps, counts);
        CHECK(agg.weights(0) == doctest::Approx(2.5));
        CHECK(agg.weights(1) == doctest::Approx(4.5));
        CHECK(agg.bias == doctest::Approx(3.5));
    }
    SUBCASE("single client is the identity") {
        const std::vector<ForecasterParams> ps{params({0.1, -7.25}, 1e-3)};
        const std::vector<std::size_t> counts{17};
        CHECK(same_values(aggregate_weighted(ps, counts), ps.front()));
    }
    SUBCASE("opposite params with equal counts cancel") {
        const std::vector<ForecasterParams> ps{params({1.5, -2}, 3), params({-1.5, 2}, -3)};
        const std::vector<std::size_t> counts{5, 5};
        const auto agg = aggregate_weighted(ps, counts);
        CHECK(agg.weights.isZero(0));
        CHECK(agg.bias == 0.0);
    }
    SUBCASE("errors") {
        const std::vector<ForecasterParams> ps{params({1}, 0), params({1, 2}, 0)};
        CHECK_THROWS_AS(aggregate_weighted(ps, std::vector<std::size_t>{1, 1}), ShapeError);
        const std::vector<ForecasterParams> ok{params({1}, 0), params({2}, 0)};
        CHECK_THROWS_AS(aggregate_weighted(ok, std::vector<std::size_t>{0, 0}), ConfigError);
        CHECK_THROWS_AS(aggregate_weighted(ok, std::vector<std::size_t>{1}), ShapeError);
    }
    SUBCASE("permutation invariance and unit weight sum") {
        Draws draws(6);
        for (int trial = 0; trial < 100; ++trial) {
            const auto n = static_cast<std::size_t>(draws.integer(2, 6));
            std::vector<ForecasterParams> ps;
            std::vector<std::size_t> counts;
            for (std::size_t i = 0; i < n; ++i) {
                ps.push_back(params({draws.uniform(-5, 5), draws.uniform(-5, 5)}, draws.uniform(-5, 5)));
                counts.push_back(static_cast<std::size_t>(draws.integer(1, 1000)));
            }
            const auto agg = aggregate_weighted(ps, counts);
            std::vector<std::size_t> order(n);
            for (std::size_t i = 0; i < n; ++i) order[i] = n - 1 - i;
            std::vector<ForecasterParams> ps2;
            std::vector<std::size_t> counts2;
            for (const auto i : order) {
                ps2.push_back(ps[i]);
                counts2.push_back(counts[i]);
            }
            const auto agg2 = aggregate_weighted(ps2, counts2);
            CHECK((agg.weights - agg2.weights).cwiseAbs().maxCoeff() <= 1e-12);
            CHECK(std::abs(agg.bias - agg2.bias) <= 1e-12);

            // Aggregating identical constants returns the constant: the shares sum to 1.
            std::vector<ForecasterParams> ones(n, params({1.0, 1.0}, 1.0));
            CHECK(std::abs(aggregate_weighted(ones, counts).bias - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("single-client HFL equals centralized training bit for bit") {
    Draws draws(14);
    const auto ds = gasfl::testing::random_dataset(draws, 60, 3);
    for (const bool standardize : {true, false}) {
        TrainConfig config;
        config.epochs = 5;
        config.learning_rate = standardize ? 0.1 : 0.02;
        config.standardize = standardize;
        config.l2 = 0.01;
        const std::vector<Participant> one{company("A", ds)};
        for (const int rounds : {1, 7, 40}) {
            const auto result = run_hfl(one, rounds, config);
            TrainConfig central = config;
            central.epochs = config.epochs * rounds;
            const auto expected = train(ds, central);
            CHECK(result.global.weights == expected.weights);
            CHECK(result.global.bias == expected.bias);
            CHECK(same_values(result.locals.at("A"), expected));
        }
    }
}

TEST_CASE("identical replicas aggregate to each client's update") {
    Draws draws(15);
    const auto ds = gasfl::testing::random_dataset(draws, 40, 2);
    const std::vector<Participant> replicas{company("A", ds), company("B", ds), company("C", ds)};
    TrainConfig config;
    config.epochs = 3;
    const auto result = run_hfl(replicas, 10, config);
    for (const auto& log : result.logs) {
        for (const auto& [id, local] : log.local_params) {
            CHECK((local.weights - log.global.weights).cwiseAbs().maxCoeff() <= 1e-12);
            CHECK(std::abs(local.bias - log.global.bias) <= 1e-12);
        }
    }
}

TEST_CASE("two halves of a noiseless line converge to the union's optimum") {
    const auto ds = gasfl::testing::line_dataset(100);
    const std::vector<double> shares{0.5, 0.5};
    const auto halves = partition_horizontal(ds, shares);
    const std::vector<Participant> clients{company("A", halves[0]), company("B", halves[1])};
    TrainConfig config;
    config.epochs = 5;
    config.learning_rate = 0.2;
    const auto result = run_hfl(clients, 400, config);
    CHECK(std::abs(result.global.weights(0) - 2.0) < 1e-2);
    CHECK(std::abs(result.global.bias - 1.0) < 1e-2);
}

TEST_CASE("HFL logs, transcript and determinism") {
    Draws draws(16);
    const auto a = gasfl::testing::random_dataset(draws, 30, 2);
    const auto b = gasfl::testing::random_dataset(draws, 50, 2);
    const std::vector<Participant> clients{company("B", b), company("A", a)};
    TrainConfig config;
    config.epochs = 2;

    Network net1("hfl", 1, true);
    const auto r1 = run_hfl(clients, 6, config, net1);
    Network net2("hfl", 1, true);
    const auto r2 = run_hfl(clients, 6, config, net2);
    CHECK(net1.transcript().to_jsonl() == net2.transcript().to_jsonl());
    CHECK(same_values(r1.global, r2.global));

    REQUIRE(r1.logs.size() == 6);
    for (std::size_t i = 0; i < r1.logs.size(); ++i) CHECK(r1.logs[i].round == static_cast<int>(i) + 1);

    // Round numbers never decrease and updates reach the server in ascending id order.
    const auto& msgs = net1.transcript().messages;
    for (std::size_t i = 1; i < msgs.size(); ++i) CHECK(msgs[i].round >= msgs[i - 1].round);
    const auto first_update = std::find_if(msgs.begin(), msgs.end(), [&](const Message& m) {
        return m.round == r1.first_network_round && m.kind == MessageKind::parameter_update;
    });
    REQUIRE(first_update != msgs.end());
    CHECK(first_update->sender == "A");

    const std::map<std::string, std::size_t> counts{{"A", 30}, {"B", 50}};
    const auto replay = replay_hfl_aggregation(net1.transcript(), counts, r1.first_network_round, r1.last_network_round);
    CHECK(replay.consistent);
    CHECK(replay.aggregates.size() == 6);

    std::set<std::uint64_t> forbidden = raw_fingerprints(a);
    forbidden.merge(raw_fingerprints(b));
    CHECK(assert_privacy(net1.transcript(), forbidden).passed);
}

TEST_CASE("replay detects a tampered broadcast") {
    Draws draws(17);
    const std::vector<Participant> clients{company("A", gasfl::testing::random_dataset(draws, 20, 1)),
                                           company("B", gasfl::testing::random_dataset(draws, 20, 1))};
    TrainConfig config;
    config.epochs = 1;
    Network net("hfl", 1, true);
    const auto result = run_hfl(clients, 3, config, net);
    Transcript tampered = net.transcript();
    for (auto& m : tampered.messages) {
        if (m.kind == MessageKind::global_broadcast && m.round == result.last_network_round) m.digest ^= 1;
    }
    const std::map<std::string, std::size_t> counts{{"A", 20}, {"B", 20}};
    const auto replay = replay_hfl_aggregation(tampered, counts, result.first_network_round, result.last_network_round);
    CHECK_FALSE(replay.consistent);
    CHECK(replay.mismatched_rounds == std::vector<int>{result.last_network_round});

    Network digest_only("hfl", 1, false);
    run_hfl(clients, 1, config, digest_only);
    CHECK_THROWS_AS(replay_hfl_aggregation(digest_only.transcript(), counts, 2, 2), ConfigError);
}

TEST_CASE("HFL configuration errors") {
    Draws draws(18);
    const auto two = gasfl::testing::random_dataset(draws, 20, 2);
    const auto three = gasfl::testing::random_dataset(draws, 20, 3);
    TrainConfig config;
    CHECK_THROWS_AS(run_hfl(std::vector<Participant>{company("A", two), company("B", three)}, 2, config), ConfigError);
    CHECK_THROWS_AS(run_hfl(std::vector<Participant>{company("A", two), company("A", two)}, 2, config), ConfigError);
    CHECK_THROWS_AS(run_hfl(std::vector<Participant>{}, 2, config), ConfigError);
    CHECK_THROWS_AS(run_hfl(std::vector<Participant>{company("A", two)}, 0, config), ConfigError);
}
