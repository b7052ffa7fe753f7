#pragma once

#include <cstdint>
#include <string>

#include "gasfl/domain.hpp"

namespace gasfl {

enum class StrategyMode { truthful, random };

std::string to_string(StrategyMode mode);
StrategyMode strategy_mode_from_string(std::string_view text);

/// Parameters of the synthetic weather / heating-strategy / usage generator.
struct GenSpec {
    std::uint64_t seed = 0;
    int days = 365;
    double base_usage = 120.0;        // m3/day
    double temp_sensitivity = 9.0;    // m3 per degree C below the heating threshold
    StrategyMode strategy_mode = StrategyMode::truthful;
    double noise_std = 10.0;          // usage noise, m3
    // Model constants below have defaults and rarely need changing.
    Date start_date = Date{std::chrono::year{2022} / 1 / 1};
    double heating_threshold = 18.0;  // degree C
    double mean_temperature = 8.0;
    double temperature_amplitude = 12.0;
    double temperature_noise = 3.0;
    double strategy_noise = 2.0;      // day-to-day plan variation of the heating strategist
    double strategy_coupling = 6.0;   // m3 of usage per unit of executed strategy

    void validate() const;  // throws ConfigError
};

/// Deterministic counter-based generator: each draw is a pure function of
/// (seed, stream, index), so streams never interfere with each other.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;

    std::uint64_t bits(std::uint64_t index) const noexcept;
    double uniform(std::uint64_t index) const noexcept;  // [0, 1)
    double normal(std::uint64_t index) const noexcept;   // standard normal

private:
    std::uint64_t key_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;
// Seed for a named sub-component of a seeded run.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept;

// Features `temperature` (annual sinusoid plus noise) and `wind` (>= 0).
TimeSeriesDataset generate_weather(const GenSpec& spec);

// One `strategy` column. Truthful: grows with heating demand (colder means a
// larger value) plus plan variation. Random: drawn independently of weather.
TimeSeriesDataset generate_strategy(const GenSpec& spec, const TimeSeriesDataset& weather);

// Heating-degree usage model. Every column of `strategy` is treated as an
// executed heating plan and adds strategy_coupling * value to the usage.
Vector generate_usage(const GenSpec& spec, const TimeSeriesDataset& weather,
                      const TimeSeriesDataset& strategy);

// Replaces a seeded `corruption` fraction of feature cells by independent
// Gaussian noise with the column's mean and standard deviation.
TimeSeriesDataset degrade_quality(const TimeSeriesDataset& dataset, double corruption, std::uint64_t seed);

}  // namespace gasfl
