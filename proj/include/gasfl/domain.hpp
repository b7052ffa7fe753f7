#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gasfl {

using Date = std::chrono::sys_days;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Parses YYYY-MM-DD. Returns nullopt on malformed or impossible dates.
std::optional<Date> parse_iso_date(std::string_view text);
std::string format_iso_date(Date date);

/// Date-indexed feature matrix with an optional target (gas usage) series.
///
/// Construction validates every invariant: equal row counts, strictly
/// increasing dates, unique feature names and finite values. Instances are
/// immutable afterwards.
class TimeSeriesDataset {
public:
    TimeSeriesDataset(std::vector<Date> dates, Matrix features,
                      std::vector<std::string> feature_names,
                      std::optional<Vector> target = std::nullopt,
                      std::string target_name = "usage");

    std::size_t rows() const noexcept { return dates_.size(); }
    std::size_t cols() const noexcept { return feature_names_.size(); }

    const std::vector<Date>& dates() const noexcept { return dates_; }
    const Matrix& features() const noexcept { return features_; }
    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
    bool has_target() const noexcept { return target_.has_value(); }
    const Vector& target() const;  // throws ConfigError when absent
    const std::optional<Vector>& maybe_target() const noexcept { return target_; }
    const std::string& target_name() const noexcept { return target_name_; }

    // Index of a feature by name, or nullopt.
    std::optional<std::size_t> column_index(std::string_view name) const;
    Vector column(std::string_view name) const;

    // Contiguous row range [begin, begin + count).
    TimeSeriesDataset slice_rows(std::size_t begin, std::size_t count) const;
    TimeSeriesDataset select_columns(std::span<const std::string> names, bool keep_target) const;
    TimeSeriesDataset without_target() const;
    TimeSeriesDataset with_target(Vector target, std::string target_name = "usage") const;

    friend bool operator==(const TimeSeriesDataset& a, const TimeSeriesDataset& b);

private:
    std::vector<Date> dates_;
    Matrix features_;
    std::vector<std::string> feature_names_;
    std::optional<Vector> target_;
    std::string target_name_;
};

// Stacks datasets with identical schemas in the given order. Dates must remain
// strictly increasing across the result.
TimeSeriesDataset concat_rows(std::span<const TimeSeriesDataset> parts);
// Joins date-identical datasets column-wise; the target of the first dataset
// carrying one is kept.
TimeSeriesDataset concat_columns(std::span<const TimeSeriesDataset> parts);

enum class Tier { company, station };
enum class Role { active, passive };

/// A federation member and the data it owns. Companies act as the active
/// party of their VFL group (they hold labels); stations are passive.
class Participant {
public:
    Participant(std::string id, Tier tier, Role role, TimeSeriesDataset dataset);

    const std::string& id() const noexcept { return id_; }
    Tier tier() const noexcept { return tier_; }
    Role role() const noexcept { return role_; }
    const TimeSeriesDataset& dataset() const noexcept { return dataset_; }
    std::size_t sample_count() const noexcept { return dataset_.rows(); }

private:
    std::string id_;
    Tier tier_;
    Role role_;
    TimeSeriesDataset dataset_;
};

struct RewardPools {
    double r_data = 0.0;
    double r_model = 0.0;
};

struct HierarchyConfig {
    std::vector<std::string> companies;
    std::map<std::string, std::vector<std::string>> stations_by_company;
    RewardPools pools;

    // Throws ConfigError when the topology cannot support the requested tiers.
    void validate(bool for_hfl, bool for_vfl) const;
};

struct CsvSchema {
    std::vector<std::string> feature_names;
    std::string target_name = "usage";
    bool target_optional = false;
};

// Reads the CSV dataset format: header `date,<features...>[,<target>]`.
// Rows are returned sorted by date.
TimeSeriesDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);
TimeSeriesDataset parse_csv(std::string_view text, const CsvSchema& schema);
void write_csv(const TimeSeriesDataset& dataset, const std::filesystem::path& path);
std::string to_csv(const TimeSeriesDataset& dataset);

// Shortest round-trip decimal representation.
std::string format_double(double value);

std::vector<TimeSeriesDataset> align_by_date(std::span<const TimeSeriesDataset> datasets);
std::vector<TimeSeriesDataset> partition_horizontal(const TimeSeriesDataset& dataset,
                                                    std::span<const double> shares);
std::vector<TimeSeriesDataset> partition_vertical(
    const TimeSeriesDataset& dataset, std::span<const std::vector<std::string>> column_groups);

// Largest-remainder apportionment of `total` items; ties favor lower indices.
std::vector<std::size_t> largest_remainder_counts(std::size_t total, std::span<const double> shares);

}  // namespace gasfl
