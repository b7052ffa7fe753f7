// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "gasfl/datagen.hpp"
#include "gasfl/hfl.hpp"
#include "gasfl/incentive.hpp"
#include "gasfl/scenario.hpp"
#include "gasfl/vfl.hpp"

using namespace gasfl;
namespace fs = std::filesystem;

namespace {

const fs::path scenario_dir = GASFL_SCENARIO_DIR;

struct Outcome {
    bool passed;
    std::string detail;
};

// Uniform and normal draws for random instances.
class Draws {
public:
    explicit Draws(std::uint64_t seed) : rng_(seed, 99) {}
    double uniform(double lo, double hi) { return lo + (hi - lo) * rng_.uniform(next_++); }
    int integer(int lo, int hi) { return lo + static_cast<int>(rng_.bits(next_++) % static_cast<std::uint64_t>(hi - lo + 1)); }
    Vector vector(Eigen::Index n, double lo, double hi) {
        Vector v(n);
        for (auto& x : v) x = uniform(lo, hi);
        return v;
    }
    Matrix matrix(Eigen::Index r, Eigen::Index c, double lo, double hi) {
        Matrix m(r, c);
        for (Eigen::Index j = 0; j < c; ++j)
            for (Eigen::Index i = 0; i < r; ++i) m(i, j) = uniform(lo, hi);
        return m;
    }

private:
    CounterRng rng_;
    std::uint64_t next_ = 0;
};

std::vector<Date> dates(int n) {
    std::vector<Date> out;
    for (int i = 0; i < n; ++i) out.push_back(Date{std::chrono::year{2023} / 1 / 1} + std::chrono::days{i});
    return out;
}

std::vector<std::string> names(int n, const std::string& prefix) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Raw-sum Pearson coefficient, independent of the library's centered computation.
// Accumulates in extended precision so the raw sums do not lose digits to cancellation.
double pearson_sums(const Vector& x, const Vector& y) {
    const long double n = static_cast<long double>(x.size());
    long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const long double a = x(i), b = y(i);
        sx += a;
        sy += b;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    return static_cast<double>((n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy)));
}

const ScoreCard& card(const std::vector<ScoreCard>& cards, const std::string& id) {
    for (const auto& c : cards)
        if (c.participant == id) return c;
    throw std::runtime_error("no scorecard for " + id);
}

Outcome table2() {
    const auto n = normalize({{"A", 0.0459}, {"B", 0.8443}});
    const bool ok = std::abs(n.at("A") - 0.0516) <= 5e-3 && std::abs(n.at("B") - 0.9484) <= 5e-3;
    return {ok, fmt("A=%.4f B=%.4f", n.at("A"), n.at("B"))};
}

Outcome table3() {
    const auto n = normalize({{"A", 0.0251}, {"B", 0.1112}});
    const bool ok = std::abs(n.at("A") - 0.1844) <= 5e-3 && std::abs(n.at("B") - 0.8156) <= 5e-3;
    return {ok, fmt("A=%.4f B=%.4f", n.at("A"), n.at("B"))};
}

Outcome equation_oracles() {
    Draws draws(3);
    const int instances = 1000;
    int failures = 0;
    double w1 = 0, w2 = 0, w3 = 0;
    for (int k = 0; k < instances; ++k) {
        const int t = draws.integer(2, 30);
        const Vector f = draws.vector(t, 0, 300), a = draws.vector(t, 0, 300);
        const double sn = smape_new(f, a);
        const double d1 = std::abs(smape(f, a) - 2 * sn);
        const bool bounded = sn >= 0 && sn <= 1 && smape_new(a, f) == sn;

        const Vector x = draws.vector(t, -20, 20), y = draws.vector(t, -20, 20);
        const double d2 = std::abs(corr_score(x, y) - pearson_sums(x, y));

        std::map<std::string, double> inc;
        const int n = draws.integer(2, 8);
        for (int i = 0; i < n; ++i) inc["p" + std::to_string(i)] = draws.uniform(-1, 1);
        double d3 = 0;
        for (const auto& [j, _] : inc) {
            double direct = 0;
            for (const auto& [i, v] : inc) direct += i == j ? 0.0 : v;
            direct /= static_cast<double>(n - 1);
            d3 = std::max(d3, std::abs(contribution(inc, j) - direct));
        }
        w1 = std::max(w1, d1);
        w2 = std::max(w2, d2);
        w3 = std::max(w3, d3);
        failures += !(d1 <= 1e-12 && bounded && d2 <= 1e-12 && d3 <= 1e-12);
    }
    return {failures == 0, fmt("1000 instances, %.0f failures; max deviation smape %.1e, corr %.1e", failures, w1, w2) +
                               fmt(", contribution %.1e", w3)};
}

Outcome gradient_checks() {
    Draws draws(4);
    const double h = 1e-5;
    double worst = 0;
    for (int k = 0; k < 100; ++k) {
        const int rows = draws.integer(3, 30), cols = draws.integer(2, 6);
        const Matrix x = draws.matrix(rows, cols, -2, 2);
        const Vector y = draws.vector(rows, -5, 5);
        const double l2 = draws.uniform(0, 0.5);
        ForecasterParams p = ForecasterParams::zeros(names(cols, "f"));
        p.weights = draws.vector(cols, -2, 2);
        p.bias = draws.uniform(-2, 2);
        auto fd = [&](int j) {
            auto plus = p, minus = p;
            if (j < cols) {
                plus.weights(j) += h;
                minus.weights(j) -= h;
            } else {
                plus.bias += h;
                minus.bias -= h;
            }
            return (mse_objective(plus, x, y, l2) - mse_objective(minus, x, y, l2)) / (2 * h);
        };
        auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); };
        const auto g = mse_gradient(p, x, y, l2);
        const Vector residual = predict_unclamped(p, x) - y;
        const int split = draws.integer(1, cols - 1);
        ForecasterParams left = ForecasterParams::zeros(names(split, "l")), right = ForecasterParams::zeros(names(cols - split, "r"));
        left.weights = p.weights.head(split);
        right.weights = p.weights.tail(cols - split);
        Vector blocks(cols);
        blocks << backward_partial(residual, x.leftCols(split), l2, left),
            backward_partial(residual, x.rightCols(cols - split), l2, right);
        for (int j = 0; j < cols; ++j) {
            const double numeric = fd(j);
            worst = std::max({worst, rel(g.weights(j), numeric), rel(blocks(j), numeric)});
        }
        worst = std::max(worst, rel(g.bias, fd(cols)));
    }
    return {worst <= 1e-6, fmt("100 instances, max relative error %.2e", worst)};
}

Outcome split_training() {
    Draws draws(5);
    const int rows = 200;
    const Matrix x = draws.matrix(rows, 6, -3, 3);
    Vector y = draws.vector(rows, -1, 1);
    for (int c = 0; c < 6; ++c) y += (c - 2.5) * x.col(c);
    const TimeSeriesDataset full(dates(rows), x, names(6, "x"), y);
    const auto parts = partition_vertical(full, std::vector<std::vector<std::string>>{{"x0", "x1"}, {"x2", "x3"}, {"x4", "x5"}});
    const VflGroup group(Participant("company", Tier::company, Role::active, parts[0]),
                         {Participant("s1", Tier::station, Role::passive, parts[1]),
                          Participant("s2", Tier::station, Role::passive, parts[2])});
    TrainConfig config;
    config.epochs = 5;
    config.l2 = 0.01;
    const auto result = run_vfl(group, 50, config);
    TrainConfig central = config;
    central.epochs = 5 * 50;
    const auto expected = train(full, central);
    const auto combined = result.combined();
    const double dev = std::max((combined.weights - expected.weights).cwiseAbs().maxCoeff(),
                                std::abs(combined.bias - expected.bias));
    return {dev <= 1e-9, fmt("3 blocks, 50 rounds, max elementwise deviation %.2e", dev)};
}

Outcome hfl_degeneracies() {
    Draws draws(6);
    const int rows = 80;
    const Matrix x = draws.matrix(rows, 3, -2, 2);
    const Vector y = (x * Vector{{1.5, -0.5, 2.0}}).array() + 10.0 + draws.vector(rows, -1, 1).array();
    const TimeSeriesDataset ds(dates(rows), x, names(3, "x"), y);
    TrainConfig config;
    config.epochs = 5;

    const std::vector<Participant> one{Participant("A", Tier::company, Role::active, ds)};
    const auto single = run_hfl(one, 30, config);
    TrainConfig central = config;
    central.epochs = 150;
    const auto expected = train(ds, central);
    const bool bit_equal = single.global.weights == expected.weights && single.global.bias == expected.bias;

    const std::vector<Participant> replicas{Participant("A", Tier::company, Role::active, ds),
                                            Participant("B", Tier::company, Role::active, ds),
                                            Participant("C", Tier::company, Role::active, ds)};
    const auto rep = run_hfl(replicas, 30, config);
    double dev = 0;
    for (const auto& log : rep.logs) {
        for (const auto& [id, local] : log.local_params) {
            dev = std::max({dev, (local.weights - log.global.weights).cwiseAbs().maxCoeff(),
                            std::abs(local.bias - log.global.bias)});
        }
    }
    return {bit_equal && dev <= 1e-12,
            std::string("single client ") + (bit_equal ? "bit-identical" : "DIFFERS") + fmt(", replica deviation %.2e", dev)};
}

Outcome truthful_vs_random() {
    auto config = load_scenario(scenario_dir / "truthful_vs_random.json");
    int dqv_wins = 0, mcv_wins = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        config.seed = seed;
        const auto outcome = simulate(config);
        const auto& cards = outcome.vfl_cards.begin()->second;
        const auto& t = card(cards, "truthful");
        const auto& r = card(cards, "random");
        dqv_wins += t.quality > r.quality;
        mcv_wins += t.contribution > r.contribution;
    }
    return {dqv_wins >= 19 && mcv_wins >= 18, fmt("truthful DQV higher in %.0f/20 seeds, contribution higher in %.0f/20", dqv_wins, mcv_wins)};
}

Outcome degrade_monotonicity() {
    int lowered = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        GenSpec spec;
        spec.seed = seed;
        const auto weather = generate_weather(spec);
        const auto strategy = generate_strategy(spec, weather);
        const auto usage = generate_usage(spec, weather, strategy);
        const auto data = concat_columns(std::vector<TimeSeriesDataset>{weather, strategy}).with_target(usage);
        const double clean = corr_score(data.features(), usage);
        const double dirty = corr_score(degrade_quality(data, 0.5, seed).features(), usage);
        lowered += dirty < clean;
    }
    return {lowered >= 19, fmt("corruption 0.5 lowered corr_score in %.0f/20 seeds", lowered)};
}

std::vector<std::pair<std::string, ScenarioConfig>> bundled() {
    std::vector<std::pair<std::string, ScenarioConfig>> out;
    for (const char* name : {"default", "truthful_vs_random", "paper_tables"}) {
        out.emplace_back(name, load_scenario(scenario_dir / (std::string(name) + ".json")));
    }
    return out;
}

Outcome conservation() {
    double worst = 0;
    int runs = 0;
    auto check = [&](const std::vector<ScoreCard>& cards, const RewardPools& pools) {
        double q = 0, c = 0;
        for (const auto& card : cards) {
            q += card.r_quality;
            c += card.r_contribution;
        }
        worst = std::max({worst, std::abs(q - pools.r_data) / std::max(1.0, pools.r_data),
                          std::abs(c - pools.r_model) / std::max(1.0, pools.r_model)});
    };
    for (auto [name, config] : bundled()) {
        for (std::uint64_t seed : {config.seed, std::uint64_t{101}, std::uint64_t{202}}) {
            config.seed = seed;
            const auto outcome = simulate(config);
            ++runs;
            if (!outcome.hfl_cards.empty()) check(outcome.hfl_cards, config.hfl_pools);
            for (const auto& [id, cards] : outcome.vfl_cards) check(cards, config.vfl_pools);
        }
    }
    return {worst <= 1e-9, fmt("%.0f simulations, max relative pool deviation %.2e", runs, worst)};
}

Outcome determinism() {
    const auto config = load_scenario(scenario_dir / "default.json");
    const auto base = fs::temp_directory_path() / "gasfl_acceptance_determinism";
    fs::remove_all(base);
    write_outcome(simulate(config), base / "first");
    write_outcome(simulate(config), base / "second");
    const bool report = slurp(base / "first" / "report.json") == slurp(base / "second" / "report.json");
    const bool transcript = slurp(base / "first" / "transcript.jsonl") == slurp(base / "second" / "transcript.jsonl");
    const auto bytes = static_cast<double>(fs::file_size(base / "first" / "transcript.jsonl"));
    fs::remove_all(base);
    return {report && transcript, std::string("report.json ") + (report ? "identical" : "DIFFERS") +
                                      ", transcript.jsonl " + (transcript ? "identical" : "DIFFERS") +
                                      fmt(" (%.0f bytes)", bytes)};
}

Outcome privacy() {
    int passed = 0, total = 0;
    for (const auto& [name, config] : bundled()) {
        const auto outcome = simulate(config);
        ++total;
        passed += assert_privacy(outcome.transcript, outcome.fingerprints).passed;
    }
    // Fault injection: a passive ships the raw label series.
    const auto config = load_scenario(scenario_dir / "default.json");
    const auto outcome = simulate(config);
    const auto data = build_data(config);
    Network network("fault", 0);
    network.register_endpoint("A");
    network.register_endpoint("A1");
    network.send("A1", "A", 1, MessageKind::partial_score, {0.5, 0.25});
    const Vector& labels = data.front().dataset.target();
    const auto seq = network.send("A", "A1", 1, MessageKind::residual_share, Payload(labels.data(), labels.data() + labels.size()));
    const auto report = assert_privacy(network.transcript(), outcome.fingerprints);
    const bool caught = !report.passed && report.offending_seqs == std::vector<std::uint64_t>{seq};
    return {passed == total && caught, fmt("%.0f/%.0f bundled scenarios clean; injected label leak ", passed, total) +
                                           (caught ? "detected at its seq" : "NOT detected")};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"normalized data-quality ratios (A 0.0516, B 0.9484)", table2},
        {"normalized contribution ratios (A 0.1844, B 0.8156)", table3},
        {"equation oracles on random instances", equation_oracles},
        {"forecaster and VFL block gradients vs finite differences", gradient_checks},
        {"split training equals centralized descent", split_training},
        {"HFL single-client and replica degeneracies", hfl_degeneracies},
        {"truthful station outscores random station", truthful_vs_random},
        {"corruption lowers data quality", degrade_monotonicity},
        {"reward pools are conserved", conservation},
        {"simulate is byte-deterministic", determinism},
        {"privacy assertion", privacy},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome{false, ""};
        try {
            outcome = criteria[i].second();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] %2zu %s: %s (%.2fs)\n", outcome.passed ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    outcome.detail.c_str(), secs);
        failed += !outcome.passed;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
