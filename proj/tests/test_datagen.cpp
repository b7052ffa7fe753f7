#include <doctest.h>

#include <cmath>
#include <set>

#include "gasfl/datagen.hpp"
#include "gasfl/error.hpp"
#include "gasfl/incentive.hpp"
#include "support.hpp"

using namespace gasfl;

namespace {

GenSpec spec_with(std::uint64_t seed, int days = 365, StrategyMode mode = StrategyMode::truthful) {
    GenSpec s;
    s.seed = seed;
    s.days = days;
    s.strategy_mode = mode;
    return s;
}

// Plain two-pass Pearson, kept separate from the library implementation.
double pearson(const Vector& x, const Vector& y) {
    const double mx = x.mean(), my = y.mean();
    double sxy = 0, sxx = 0, syy = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        sxy += (x(i) - mx) * (y(i) - my);
        sxx += (x(i) - mx) * (x(i) - mx);
        syy += (y(i) - my) * (y(i) - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_CASE("counter rng is a pure function of seed, stream and index") {
    const CounterRng a(1, 2), b(1, 2), c(1, 3), d(2, 2);
    CHECK(a.bits(17) == b.bits(17));
    CHECK(a.bits(17) != c.bits(17));
    CHECK(a.bits(17) != d.bits(17));
    double sum = 0, sq = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double u = a.uniform(static_cast<std::uint64_t>(i));
        CHECK((u >= 0.0 && u < 1.0));
        const double z = a.normal(static_cast<std::uint64_t>(i));
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.05);
    CHECK(std::abs(sq / n - 1.0) < 0.05);
    CHECK(derive_seed(7, "station:A1") != derive_seed(7, "station:A2"));
    CHECK(derive_seed(7, "station:A1") == derive_seed(7, "station:A1"));
}

TEST_CASE("GenSpec validation") {
    CHECK_THROWS_AS(spec_with(1, 1).validate(), ConfigError);
    auto s = spec_with(1);
    s.noise_std = -1;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    CHECK(strategy_mode_from_string("random") == StrategyMode::random);
    CHECK_THROWS_AS(strategy_mode_from_string("honest"), ConfigError);
}

TEST_CASE("generate_weather") {
    const auto w = generate_weather(spec_with(1));
    CHECK(w.rows() == 365);
    CHECK(w.feature_names() == std::vector<std::string>{"temperature", "wind"});
    CHECK_FALSE(w.has_target());
    CHECK(generate_weather(spec_with(1)) == w);
    CHECK(generate_weather(spec_with(1, 2)).rows() == 2);
    CHECK(generate_weather(spec_with(2)).column("temperature") != w.column("temperature"));
    CHECK(w.column("wind").minCoeff() >= 0.0);
    // January is colder than July.
    CHECK(w.column("temperature").head(31).mean() < w.column("temperature").segment(181, 31).mean());
}

TEST_CASE("generate_strategy") {
    const auto spec = spec_with(4);
    const auto weather = generate_weather(spec);
    const auto truthful = generate_strategy(spec, weather);
    CHECK(truthful.feature_names() == std::vector<std::string>{"strategy"});
    CHECK_FALSE(truthful.has_target());
    CHECK(generate_strategy(spec, weather) == truthful);

    const auto usage = generate_usage(spec, weather, truthful);
    CHECK(pearson(truthful.column("strategy"), usage) > 0.5);
    CHECK(corr_score(truthful.features(), usage) > 0.5);

    const auto random = generate_strategy(spec_with(4, 365, StrategyMode::random), weather);
    CHECK(std::abs(corr_score(random.features(), usage)) < 0.3);

    const auto weather_only = weather.column("temperature");
    CHECK(pearson(truthful.column("strategy"), weather_only) < -0.5);
    CHECK(std::abs(pearson(random.column("strategy"), weather_only)) < 0.3);

    CHECK_THROWS_AS(generate_strategy(spec, truthful), SchemaError);
}

TEST_CASE("generate_usage follows the heating-degree formula") {
    auto spec = spec_with(9, 5);
    spec.noise_std = 0.0;
    Matrix temps(5, 2);
    temps << 18, 0, 18, 0, 18, 0, 10, 0, 5, 0;
    const TimeSeriesDataset weather(gasfl::testing::days(5), temps, {"temperature", "wind"});
    const TimeSeriesDataset no_plan(weather.dates(), Matrix::Zero(5, 1), {"strategy"});

    const auto usage = generate_usage(spec, weather, no_plan);
    CHECK(usage(0) == doctest::Approx(spec.base_usage));
    CHECK(usage(1) == usage(0));
    CHECK(usage(3) > usage(0));
    CHECK(usage(4) > usage(3));
    CHECK(usage(4) == doctest::Approx(spec.base_usage + spec.temp_sensitivity * 13.0));
    CHECK(generate_usage(spec, weather, no_plan) == usage);

    const TimeSeriesDataset plan(weather.dates(), Matrix::Constant(5, 1, 2.0), {"strategy"});
    CHECK(generate_usage(spec, weather, plan)(0) == doctest::Approx(spec.base_usage + 2.0 * spec.strategy_coupling));

    spec.base_usage = -500;
    CHECK(generate_usage(spec, weather, no_plan).minCoeff() == 0.0);

    const TimeSeriesDataset shifted(gasfl::testing::days(5, 1), Matrix::Zero(5, 1), {"strategy"});
    CHECK_THROWS_AS(generate_usage(spec, weather, shifted), AlignmentError);
}

TEST_CASE("degrade_quality") {
    const auto spec = spec_with(12);
    const auto weather = generate_weather(spec);
    const auto strategy = generate_strategy(spec, weather);
    const auto data = strategy.with_target(generate_usage(spec, weather, strategy));

    CHECK(degrade_quality(data, 0.0, 3) == data);
    const auto half = degrade_quality(data, 0.5, 3);
    CHECK(half == degrade_quality(data, 0.5, 3));
    CHECK(half.dates() == data.dates());
    CHECK(half.target() == data.target());
    std::size_t changed = 0;
    for (Eigen::Index r = 0; r < half.features().rows(); ++r) changed += half.features()(r, 0) != data.features()(r, 0);
    CHECK(changed == static_cast<std::size_t>(std::llround(0.5 * 365)));

    const double clean = corr_score(data.features(), data.target());
    CHECK(corr_score(degrade_quality(data, 1.0, 3).features(), data.target()) < clean);
    CHECK_THROWS_AS(degrade_quality(data, 1.5, 3), ConfigError);
}

TEST_CASE("more corruption lowers correlation on average") {
    double low = 0, high = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto spec = spec_with(100 + seed);
        const auto weather = generate_weather(spec);
        const auto strategy = generate_strategy(spec, weather);
        const auto usage = generate_usage(spec, weather, strategy);
        const auto data = strategy.with_target(usage);
        low += corr_score(degrade_quality(data, 0.2, seed).features(), usage);
        high += corr_score(degrade_quality(data, 0.6, seed).features(), usage);
    }
    CHECK(high / 20 < low / 20);
}
