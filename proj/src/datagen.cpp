#include "gasfl/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "gasfl/error.hpp"

namespace gasfl {

namespace {

enum Stream : std::uint64_t {
    temperature_stream = 1,
    wind_stream = 2,
    plan_stream = 3,
    random_strategy_stream = 4,
    usage_stream = 5,
    corruption_pick_stream = 6,
    corruption_value_stream = 7,
};

int day_of_year(Date date) {
    const std::chrono::year_month_day ymd{date};
    const Date jan1{ymd.year() / 1 / 1};
    return static_cast<int>((date - jan1).count());
}

std::vector<Date> consecutive_dates(Date start, int days) {
    std::vector<Date> dates;
    dates.reserve(static_cast<std::size_t>(days));
    for (int d = 0; d < days; ++d) dates.push_back(start + std::chrono::days{d});
    return dates;
}

}  // namespace

std::string to_string(StrategyMode mode) { return mode == StrategyMode::truthful ? "truthful" : "random"; }

StrategyMode strategy_mode_from_string(std::string_view text) {
    if (text == "truthful") return StrategyMode::truthful;
    if (text == "random") return StrategyMode::random;
    throw ConfigError("unknown strategy_mode '" + std::string(text) + "'");
}

void GenSpec::validate() const {
    if (days < 2) throw ConfigError("GenSpec.days must be >= 2 (got " + std::to_string(days) + ")");
    if (!(noise_std >= 0.0)) throw ConfigError("GenSpec.noise_std must be >= 0");
    if (!(strategy_noise >= 0.0) || !(temperature_noise >= 0.0)) {
        throw ConfigError("GenSpec noise levels must be >= 0");
    }
    for (const double v : {base_usage, temp_sensitivity, heating_threshold, mean_temperature,
                           temperature_amplitude, strategy_coupling}) {
        if (!std::isfinite(v)) throw ConfigError("GenSpec values must be finite");
    }
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept {
    // FNV-1a over the label, then mixed with the parent seed.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return splitmix64(seed ^ splitmix64(h));
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_(splitmix64(splitmix64(seed) ^ (stream * 0xd1342543de82ef95ULL))) {}

std::uint64_t CounterRng::bits(std::uint64_t index) const noexcept {
    return splitmix64(key_ ^ splitmix64(index));
}

double CounterRng::uniform(std::uint64_t index) const noexcept {
    return static_cast<double>(bits(index) >> 11) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t index) const noexcept {
    // Box-Muller on two independent counters; u1 is kept away from 0.
    const double u1 = (static_cast<double>(bits(2 * index) >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform(2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

TimeSeriesDataset generate_weather(const GenSpec& spec) {
    spec.validate();
    const CounterRng temp_rng(spec.seed, temperature_stream);
    const CounterRng wind_rng(spec.seed, wind_stream);
    auto dates = consecutive_dates(spec.start_date, spec.days);
    Matrix features(spec.days, 2);
    for (int t = 0; t < spec.days; ++t) {
        const auto i = static_cast<std::uint64_t>(t);
        // Coldest around mid-January.
        const double phase = 2.0 * std::numbers::pi * (day_of_year(dates[i]) - 15) / 365.25;
        features(t, 0) = spec.mean_temperature - spec.temperature_amplitude * std::cos(phase) +
                         spec.temperature_noise * temp_rng.normal(i);
        features(t, 1) = std::max(0.0, 4.0 + 2.0 * wind_rng.normal(i));
    }
    return {std::move(dates), std::move(features), {"temperature", "wind"}};
}

TimeSeriesDataset generate_strategy(const GenSpec& spec, const TimeSeriesDataset& weather) {
    spec.validate();
    const auto temp_idx = weather.column_index("temperature");
    if (!temp_idx) throw SchemaError("weather dataset has no 'temperature' column", "temperature");
    const auto n = static_cast<Eigen::Index>(weather.rows());
    Matrix strategy(n, 1);
    if (spec.strategy_mode == StrategyMode::truthful) {
        const CounterRng rng(spec.seed, plan_stream);
        for (Eigen::Index t = 0; t < n; ++t) {
            const double demand = std::max(0.0, spec.heating_threshold - weather.features()(t, *temp_idx));
            strategy(t, 0) = demand + spec.strategy_noise * rng.normal(static_cast<std::uint64_t>(t));
        }
    } else {
        // Experience-based guess around the typical demand, independent of the day's weather.
        const CounterRng rng(spec.seed, random_strategy_stream);
        const double typical = std::max(0.0, spec.heating_threshold - spec.mean_temperature);
        const double spread = 0.7 * spec.temperature_amplitude + spec.strategy_noise;
        for (Eigen::Index t = 0; t < n; ++t) {
            strategy(t, 0) = typical + spread * rng.normal(static_cast<std::uint64_t>(t));
        }
    }
    return {weather.dates(), std::move(strategy), {"strategy"}};
}

Vector generate_usage(const GenSpec& spec, const TimeSeriesDataset& weather,
                      const TimeSeriesDataset& strategy) {
    spec.validate();
    if (weather.dates() != strategy.dates()) throw AlignmentError("weather and strategy dates differ");
    const auto temp_idx = weather.column_index("temperature");
    if (!temp_idx) throw SchemaError("weather dataset has no 'temperature' column", "temperature");
    const CounterRng rng(spec.seed, usage_stream);
    const auto n = static_cast<Eigen::Index>(weather.rows());
    Vector usage(n);
    for (Eigen::Index t = 0; t < n; ++t) {
        const double demand = std::max(0.0, spec.heating_threshold - weather.features()(t, *temp_idx));
        double value = spec.base_usage + spec.temp_sensitivity * demand;
        for (Eigen::Index c = 0; c < strategy.features().cols(); ++c) {
            value += spec.strategy_coupling * strategy.features()(t, c);
        }
        if (spec.noise_std > 0.0) value += spec.noise_std * rng.normal(static_cast<std::uint64_t>(t));
        usage(t) = std::max(0.0, value);
    }
    return usage;
}

TimeSeriesDataset degrade_quality(const TimeSeriesDataset& dataset, double corruption, std::uint64_t seed) {
    if (!(corruption >= 0.0 && corruption <= 1.0)) throw ConfigError("corruption must lie in [0, 1]");
    const auto rows = dataset.features().rows();
    const auto cols = dataset.features().cols();
    const auto cells = static_cast<std::size_t>(rows * cols);
    const auto k = static_cast<std::size_t>(std::llround(corruption * static_cast<double>(cells)));
    if (k == 0) return dataset;

    const CounterRng pick(seed, corruption_pick_stream);
    const CounterRng value(seed, corruption_value_stream);
    std::vector<std::size_t> order(cells);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto ka = pick.bits(a);
        const auto kb = pick.bits(b);
        return ka != kb ? ka < kb : a < b;
    });

    Matrix features = dataset.features();
    Vector mean = features.colwise().mean();
    Vector sd(cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        const double var = rows > 1 ? (features.col(c).array() - mean(c)).square().sum() / (rows - 1) : 0.0;
        sd(c) = std::sqrt(var);
    }
    for (std::size_t j = 0; j < k; ++j) {
        const auto cell = order[j];
        const auto r = static_cast<Eigen::Index>(cell) / cols;
        const auto c = static_cast<Eigen::Index>(cell) % cols;
        features(r, c) = mean(c) + sd(c) * value.normal(cell);
    }
    return {dataset.dates(), std::move(features), dataset.feature_names(), dataset.maybe_target(),
            dataset.target_name()};
}

}  // namespace gasfl
