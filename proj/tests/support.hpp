// Shared fixtures for the unit tests.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gasfl/datagen.hpp"
#include "gasfl/domain.hpp"

namespace gasfl::testing {

inline Date day(int offset) { return Date{std::chrono::year{2023} / 1 / 1} + std::chrono::days{offset}; }

inline std::vector<Date> days(int count, int first = 0) {
    std::vector<Date> out;
    for (int i = 0; i < count; ++i) out.push_back(day(first + i));
    return out;
}

// Uniform draws in [lo, hi) from a fixed counter-based stream.
class Draws {
public:
    explicit Draws(std::uint64_t seed, std::uint64_t stream = 0) : rng_(seed, stream) {}
    double uniform(double lo, double hi) { return lo + (hi - lo) * rng_.uniform(next_++); }
    double normal() { return rng_.normal(next_++); }
    int integer(int lo, int hi) { return lo + static_cast<int>(rng_.bits(next_++) % static_cast<std::uint64_t>(hi - lo + 1)); }
    Vector vector(Eigen::Index n, double lo, double hi) {
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(lo, hi);
        return v;
    }
    Matrix matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
        Matrix m(rows, cols);
        for (Eigen::Index c = 0; c < cols; ++c)
            for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = uniform(lo, hi);
        return m;
    }

private:
    CounterRng rng_;
    std::uint64_t next_ = 0;
};

// y = 2x + 1 on x = 0, 0.1, ..., noiseless.
inline TimeSeriesDataset line_dataset(int rows, int first = 0) {
    Matrix x(rows, 1);
    Vector y(rows);
    for (int i = 0; i < rows; ++i) {
        x(i, 0) = 0.1 * (first + i);
        y(i) = 2.0 * x(i, 0) + 1.0;
    }
    return {days(rows, first), x, {"x"}, y};
}

inline TimeSeriesDataset random_dataset(Draws& draws, int rows, int cols, const std::string& prefix = "f") {
    std::vector<std::string> names;
    for (int c = 0; c < cols; ++c) names.push_back(prefix + std::to_string(c));
    Matrix x = draws.matrix(rows, cols, -3.0, 3.0);
    Vector y(rows);
    for (int r = 0; r < rows; ++r) {
        y(r) = 5.0 + draws.normal();
        for (int c = 0; c < cols; ++c) y(r) += (c + 1) * 0.7 * x(r, c);
    }
    return {days(rows), x, names, y};
}

}  // namespace gasfl::testing
