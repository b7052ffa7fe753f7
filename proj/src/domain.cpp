#include "gasfl/domain.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "gasfl/error.hpp"

namespace gasfl {

namespace {

bool parse_int(std::string_view text, int& out) {
    if (text.empty()) return false;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

std::optional<double> parse_number(std::string_view text) {
    if (text.empty()) return std::nullopt;
    double value = 0.0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

std::vector<std::string_view> split_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return cells;
}

}  // namespace

std::optional<Date> parse_iso_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    int y = 0, m = 0, d = 0;
    if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), m) ||
        !parse_int(text.substr(8, 2), d)) {
        return std::nullopt;
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y},
                                          std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return Date{ymd};
}

std::string format_iso_date(Date date) {
    const std::chrono::year_month_day ymd{date};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

TimeSeriesDataset::TimeSeriesDataset(std::vector<Date> dates, Matrix features,
                                     std::vector<std::string> feature_names,
                                     std::optional<Vector> target, std::string target_name)
    : dates_(std::move(dates)),
      features_(std::move(features)),
      feature_names_(std::move(feature_names)),
      target_(std::move(target)),
      target_name_(std::move(target_name)) {
    const auto n = static_cast<Eigen::Index>(dates_.size());
    if (features_.rows() != n) {
        throw ValidationError("feature matrix has " + std::to_string(features_.rows()) +
                              " rows but there are " + std::to_string(n) + " dates");
    }
    if (features_.cols() != static_cast<Eigen::Index>(feature_names_.size())) {
        throw ValidationError("feature matrix width does not match feature_names");
    }
    if (target_ && target_->size() != n) {
        throw ValidationError("target length does not match date count");
    }
    std::set<std::string> seen;
    for (const auto& name : feature_names_) {
        if (name.empty() || name == "date") throw ValidationError("invalid feature name '" + name + "'");
        if (!seen.insert(name).second) throw ValidationError("duplicate feature name '" + name + "'");
    }
    if (target_ && seen.count(target_name_) != 0) {
        throw ValidationError("target name collides with feature '" + target_name_ + "'");
    }
    for (Eigen::Index r = 0; r < n; ++r) {
        if (r > 0 && dates_[r] <= dates_[r - 1]) {
            throw ValidationError("dates must be strictly increasing", static_cast<std::size_t>(r) + 1);
        }
        for (Eigen::Index c = 0; c < features_.cols(); ++c) {
            if (!std::isfinite(features_(r, c))) {
                throw ValidationError("non-finite value in column '" + feature_names_[c] + "'",
                                      static_cast<std::size_t>(r) + 1);
            }
        }
        if (target_ && !std::isfinite((*target_)(r))) {
            throw ValidationError("non-finite target value", static_cast<std::size_t>(r) + 1);
        }
    }
}

const Vector& TimeSeriesDataset::target() const {
    if (!target_) throw ConfigError("dataset has no target series");
    return *target_;
}

std::optional<std::size_t> TimeSeriesDataset::column_index(std::string_view name) const {
    const auto it = std::find(feature_names_.begin(), feature_names_.end(), name);
    if (it == feature_names_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - feature_names_.begin());
}

Vector TimeSeriesDataset::column(std::string_view name) const {
    const auto idx = column_index(name);
    if (!idx) throw SchemaError("unknown column '" + std::string(name) + "'", std::string(name));
    return features_.col(static_cast<Eigen::Index>(*idx));
}

TimeSeriesDataset TimeSeriesDataset::slice_rows(std::size_t begin, std::size_t count) const {
    if (begin + count > rows()) throw ShapeError("row slice out of range");
    const auto b = static_cast<Eigen::Index>(begin);
    const auto c = static_cast<Eigen::Index>(count);
    std::vector<Date> dates(dates_.begin() + b, dates_.begin() + b + c);
    std::optional<Vector> target;
    if (target_) target = target_->segment(b, c);
    return {std::move(dates), features_.middleRows(b, c), feature_names_, std::move(target), target_name_};
}

TimeSeriesDataset TimeSeriesDataset::select_columns(std::span<const std::string> names,
                                                    bool keep_target) const {
    Matrix out(features_.rows(), static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) {
        const auto idx = column_index(names[j]);
        if (!idx) throw ConfigError("unknown column '" + names[j] + "'");
        out.col(static_cast<Eigen::Index>(j)) = features_.col(static_cast<Eigen::Index>(*idx));
    }
    return {dates_, std::move(out), std::vector<std::string>(names.begin(), names.end()),
            keep_target ? target_ : std::nullopt, target_name_};
}

TimeSeriesDataset TimeSeriesDataset::without_target() const {
    return {dates_, features_, feature_names_, std::nullopt, target_name_};
}

TimeSeriesDataset TimeSeriesDataset::with_target(Vector target, std::string target_name) const {
    return {dates_, features_, feature_names_, std::move(target), std::move(target_name)};
}

bool operator==(const TimeSeriesDataset& a, const TimeSeriesDataset& b) {
    if (a.dates_ != b.dates_ || a.feature_names_ != b.feature_names_) return false;
    if (a.features_.rows() != b.features_.rows() || a.features_.cols() != b.features_.cols()) return false;
    if (a.features_ != b.features_) return false;
    if (a.target_.has_value() != b.target_.has_value()) return false;
    if (a.target_ && (*a.target_ != *b.target_ || a.target_name_ != b.target_name_)) return false;
    return true;
}

TimeSeriesDataset concat_rows(std::span<const TimeSeriesDataset> parts) {
    if (parts.empty()) throw ConfigError("concat_rows needs at least one dataset");
    const auto& first = parts.front();
    Eigen::Index total = 0;
    for (const auto& p : parts) {
        if (p.feature_names() != first.feature_names() || p.has_target() != first.has_target()) {
            throw ConfigError("concat_rows requires identical schemas");
        }
        total += static_cast<Eigen::Index>(p.rows());
    }
    std::vector<Date> dates;
    dates.reserve(static_cast<std::size_t>(total));
    Matrix features(total, static_cast<Eigen::Index>(first.cols()));
    std::optional<Vector> target;
    if (first.has_target()) target = Vector(total);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        const auto n = static_cast<Eigen::Index>(p.rows());
        dates.insert(dates.end(), p.dates().begin(), p.dates().end());
        features.middleRows(at, n) = p.features();
        if (target) target->segment(at, n) = p.target();
        at += n;
    }
    return {std::move(dates), std::move(features), first.feature_names(), std::move(target),
            first.target_name()};
}

TimeSeriesDataset concat_columns(std::span<const TimeSeriesDataset> parts) {
    if (parts.empty()) throw ConfigError("concat_columns needs at least one dataset");
    const auto& first = parts.front();
    Eigen::Index width = 0;
    std::vector<std::string> names;
    const TimeSeriesDataset* labelled = nullptr;
    for (const auto& p : parts) {
        if (p.dates() != first.dates()) throw AlignmentError("concat_columns requires identical dates");
        width += static_cast<Eigen::Index>(p.cols());
        names.insert(names.end(), p.feature_names().begin(), p.feature_names().end());
        if (labelled == nullptr && p.has_target()) labelled = &p;
    }
    Matrix features(static_cast<Eigen::Index>(first.rows()), width);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        const auto w = static_cast<Eigen::Index>(p.cols());
        features.middleCols(at, w) = p.features();
        at += w;
    }
    if (labelled != nullptr) {
        return {first.dates(), std::move(features), std::move(names), labelled->target(),
                labelled->target_name()};
    }
    return {first.dates(), std::move(features), std::move(names)};
}

Participant::Participant(std::string id, Tier tier, Role role, TimeSeriesDataset dataset)
    : id_(std::move(id)), tier_(tier), role_(role), dataset_(std::move(dataset)) {
    if (id_.empty()) throw ConfigError("participant id must not be empty");
    if (role_ == Role::active && !dataset_.has_target()) {
        throw ConfigError("active participant '" + id_ + "' must hold the target series");
    }
    if (role_ == Role::passive && dataset_.has_target()) {
        throw ConfigError("passive participant '" + id_ + "' must not hold the target series");
    }
}

void HierarchyConfig::validate(bool for_hfl, bool for_vfl) const {
    if (pools.r_data < 0.0 || pools.r_model < 0.0) throw ConfigError("reward pools must be non-negative");
    std::set<std::string> ids;
    for (const auto& c : companies) {
        if (!ids.insert(c).second) throw ConfigError("duplicate participant id '" + c + "'");
    }
    if (for_hfl && companies.size() < 2) throw ConfigError("an HFL run needs at least 2 companies");
    for (const auto& [company, stations] : stations_by_company) {
        if (std::find(companies.begin(), companies.end(), company) == companies.end()) {
            throw ConfigError("stations listed for unknown company '" + company + "'");
        }
        for (const auto& s : stations) {
            if (!ids.insert(s).second) {
                throw ConfigError("station '" + s + "' is listed more than once or clashes with another id");
            }
        }
    }
    if (for_vfl) {
        for (const auto& c : companies) {
            const auto it = stations_by_company.find(c);
            if (it == stations_by_company.end() || it->second.empty()) {
                throw ConfigError("company '" + c + "' needs at least one station for a VFL run");
            }
        }
    }
}

TimeSeriesDataset parse_csv(std::string_view text, const CsvSchema& schema) {
    std::vector<std::string_view> lines;
    {
        std::size_t start = 0;
        while (start < text.size()) {
            auto pos = text.find('\n', start);
            if (pos == std::string_view::npos) pos = text.size();
            auto line = text.substr(start, pos - start);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            lines.push_back(line);
            start = pos + 1;
        }
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw SchemaError("empty CSV: missing header row", "date");

    const auto header = split_line(lines.front());
    auto find_col = [&](std::string_view name) -> std::optional<std::size_t> {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) return std::nullopt;
        return static_cast<std::size_t>(it - header.begin());
    };
    const auto date_col = find_col("date");
    if (!date_col) throw SchemaError("missing column 'date'", "date");
    std::vector<std::size_t> feature_cols;
    for (const auto& name : schema.feature_names) {
        const auto c = find_col(name);
        if (!c) throw SchemaError("missing column '" + name + "'", name);
        feature_cols.push_back(*c);
    }
    const auto target_col = find_col(schema.target_name);
    if (!target_col && !schema.target_optional) {
        throw SchemaError("missing column '" + schema.target_name + "'", schema.target_name);
    }
    const std::size_t expected = 1 + feature_cols.size() + (target_col ? 1 : 0);
    if (header.size() != expected) {
        for (const auto& h : header) {
            const bool known = h == "date" || h == schema.target_name ||
                               std::find(schema.feature_names.begin(), schema.feature_names.end(), h) !=
                                   schema.feature_names.end();
            if (!known) throw SchemaError("unexpected column '" + std::string(h) + "'", std::string(h));
        }
        throw SchemaError("duplicate columns in header", "");
    }

    struct Row {
        Date date;
        std::vector<double> values;
        double target;
    };
    std::vector<Row> rows;
    std::set<Date> seen;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::size_t row_no = i;
        const auto cells = split_line(lines[i]);
        if (cells.size() != header.size()) {
            throw ValidationError("expected " + std::to_string(header.size()) + " cells, found " +
                                      std::to_string(cells.size()),
                                  row_no);
        }
        const auto date = parse_iso_date(cells[*date_col]);
        if (!date) throw ValidationError("unparseable date '" + std::string(cells[*date_col]) + "'", row_no);
        if (!seen.insert(*date).second) {
            throw ValidationError("duplicate date " + std::string(cells[*date_col]), row_no);
        }
        Row row{*date, {}, 0.0};
        auto read = [&](std::size_t col) {
            const auto v = parse_number(cells[col]);
            if (!v || !std::isfinite(*v)) {
                throw ValidationError("invalid value '" + std::string(cells[col]) + "' in column '" +
                                          std::string(header[col]) + "'",
                                      row_no);
            }
            return *v;
        };
        for (const auto col : feature_cols) row.values.push_back(read(col));
        if (target_col) row.target = read(*target_col);
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.date < b.date; });

    const auto n = static_cast<Eigen::Index>(rows.size());
    std::vector<Date> dates;
    dates.reserve(rows.size());
    Matrix features(n, static_cast<Eigen::Index>(feature_cols.size()));
    Vector target(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        dates.push_back(rows[r].date);
        for (std::size_t c = 0; c < feature_cols.size(); ++c) {
            features(r, static_cast<Eigen::Index>(c)) = rows[r].values[c];
        }
        target(r) = rows[r].target;
    }
    std::optional<Vector> maybe_target;
    if (target_col) maybe_target = std::move(target);
    return {std::move(dates), std::move(features), schema.feature_names, std::move(maybe_target),
            schema.target_name};
}

TimeSeriesDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), schema);
}

std::string to_csv(const TimeSeriesDataset& dataset) {
    std::string out = "date";
    for (const auto& name : dataset.feature_names()) out += "," + name;
    if (dataset.has_target()) out += "," + dataset.target_name();
    out += '\n';
    for (std::size_t r = 0; r < dataset.rows(); ++r) {
        const auto ri = static_cast<Eigen::Index>(r);
        out += format_iso_date(dataset.dates()[r]);
        for (Eigen::Index c = 0; c < dataset.features().cols(); ++c) {
            out += ',';
            out += format_double(dataset.features()(ri, c));
        }
        if (dataset.has_target()) {
            out += ',';
            out += format_double(dataset.target()(ri));
        }
        out += '\n';
    }
    return out;
}

void write_csv(const TimeSeriesDataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << to_csv(dataset);
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<TimeSeriesDataset> align_by_date(std::span<const TimeSeriesDataset> datasets) {
    if (datasets.empty()) throw AlignmentError("align_by_date needs at least one dataset");
    std::vector<Date> common = datasets.front().dates();
    for (std::size_t i = 1; i < datasets.size(); ++i) {
        std::vector<Date> next;
        std::set_intersection(common.begin(), common.end(), datasets[i].dates().begin(),
                              datasets[i].dates().end(), std::back_inserter(next));
        common = std::move(next);
    }
    if (common.empty()) throw AlignmentError("datasets share no common dates");

    std::vector<TimeSeriesDataset> out;
    out.reserve(datasets.size());
    for (const auto& ds : datasets) {
        if (ds.dates() == common) {
            out.push_back(ds);
            continue;
        }
        const auto n = static_cast<Eigen::Index>(common.size());
        Matrix features(n, static_cast<Eigen::Index>(ds.cols()));
        std::optional<Vector> target;
        if (ds.has_target()) target = Vector(n);
        Eigen::Index src = 0;
        for (Eigen::Index r = 0; r < n; ++r) {
            while (ds.dates()[static_cast<std::size_t>(src)] != common[static_cast<std::size_t>(r)]) ++src;
            features.row(r) = ds.features().row(src);
            if (target) (*target)(r) = ds.target()(src);
        }
        out.emplace_back(common, std::move(features), ds.feature_names(), std::move(target), ds.target_name());
    }
    return out;
}

std::vector<std::size_t> largest_remainder_counts(std::size_t total, std::span<const double> shares) {
    std::vector<std::size_t> counts(shares.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < shares.size(); ++i) {
        const double exact = shares[i] * static_cast<double>(total);
        const double whole = std::floor(exact);
        counts[i] = static_cast<std::size_t>(whole);
        assigned += counts[i];
        remainders.emplace_back(exact - whole, i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < total && k < remainders.size(); ++k, ++assigned) {
        ++counts[remainders[k].second];
    }
    return counts;
}

std::vector<TimeSeriesDataset> partition_horizontal(const TimeSeriesDataset& dataset,
                                                    std::span<const double> shares) {
    if (shares.empty()) throw ConfigError("at least one share is required");
    double sum = 0.0;
    for (const double s : shares) {
        if (!(s > 0.0)) throw ConfigError("every share must be positive");
        sum += s;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("shares must sum to 1");

    const auto counts = largest_remainder_counts(dataset.rows(), shares);
    std::vector<TimeSeriesDataset> parts;
    std::size_t at = 0;
    for (const auto c : counts) {
        parts.push_back(dataset.slice_rows(at, c));
        at += c;
    }
    return parts;
}

std::vector<TimeSeriesDataset> partition_vertical(
    const TimeSeriesDataset& dataset, std::span<const std::vector<std::string>> column_groups) {
    if (column_groups.empty()) throw ConfigError("at least one column group is required");
    std::set<std::string> used;
    for (const auto& group : column_groups) {
        if (group.empty()) throw ConfigError("column groups must not be empty");
        for (const auto& name : group) {
            if (!dataset.column_index(name)) throw ConfigError("unknown column '" + name + "'");
            if (!used.insert(name).second) throw ConfigError("column '" + name + "' appears in two groups");
        }
    }
    for (const auto& name : dataset.feature_names()) {
        if (used.count(name) == 0) throw ConfigError("column '" + name + "' is not assigned to any group");
    }
    std::vector<TimeSeriesDataset> parts;
    for (std::size_t g = 0; g < column_groups.size(); ++g) {
        parts.push_back(dataset.select_columns(column_groups[g], g == 0));
    }
    return parts;
}

}  // namespace gasfl
