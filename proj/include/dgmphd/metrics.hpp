#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "dgmphd/assignment.hpp"
#include "dgmphd/linalg.hpp"

namespace dgmphd {

struct OspaConfig {
    double order = 1.0;
    double cutoff = 100.0;
    /// Compare only the first two state entries (planar position).
    bool positions_only = true;
};

struct OspaResult {
    double distance = 0.0;
    double localization = 0.0;
    double cardinality = 0.0;
};

/// Position part of each state when the config asks for it, the states otherwise.
inline std::vector<Vector> ospa_points(std::span<const Vector> states, const OspaConfig& config) {
    std::vector<Vector> out;
    out.reserve(states.size());
    for (const auto& s : states) {
        if (config.positions_only) {
            detail::require(s.size() >= 2, "positions-only OSPA needs states with at least two entries");
            out.emplace_back(s.head(2));
        } else {
            out.push_back(s);
        }
    }
    return out;
}

/// Optimal sub-pattern assignment distance with Euclidean base distance.
/// Both sets empty gives 0.
inline OspaResult ospa(std::span<const Vector> x, std::span<const Vector> y, const OspaConfig& config) {
    detail::require(config.order >= 1.0, "OSPA order must be at least 1");
    detail::require(config.cutoff > 0.0, "OSPA cutoff must be positive");
    if (x.size() > y.size()) std::swap(x, y);
    const std::size_t m = x.size();
    const std::size_t n = y.size();
    if (n == 0) return {};
    for (const auto& a : x) detail::require(a.size() == y.front().size(), "OSPA points differ in dimension");
    for (const auto& b : y) detail::require(b.size() == y.front().size(), "OSPA points differ in dimension");

    const double p = config.order;
    const double c = config.cutoff;
    std::vector<std::vector<double>> cost(m, std::vector<double>(n));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) cost[i][j] = std::pow(std::min(c, (x[i] - y[j]).norm()), p);
    }
    std::vector<double> terms;
    terms.reserve(m);
    if (m > 0) {
        const auto assignment = solve_assignment(cost);
        for (std::size_t i = 0; i < m; ++i) terms.push_back(cost[i][assignment.row_to_col[i]]);
    }
    const double localization_sum = detail::sorted_sum(terms);
    const double cardinality_sum = std::pow(c, p) * static_cast<double>(n - m);
    const double nn = static_cast<double>(n);

    OspaResult result;
    result.distance = std::pow((localization_sum + cardinality_sum) / nn, 1.0 / p);
    result.localization = std::pow(localization_sum / nn, 1.0 / p);
    result.cardinality = std::pow(cardinality_sum / nn, 1.0 / p);
    return result;
}

/// Mean OSPA over sensors at one timestep.
inline double network_ospa(std::span<const std::vector<Vector>> per_sensor, std::span<const Vector> truth,
                           const OspaConfig& config) {
    detail::require(!per_sensor.empty(), "network OSPA needs at least one sensor");
    const auto truth_points = ospa_points(truth, config);
    double sum = 0.0;
    for (const auto& estimates : per_sensor) {
        sum += ospa(ospa_points(estimates, config), truth_points, config).distance;
    }
    return sum / static_cast<double>(per_sensor.size());
}

inline double time_averaged_network_ospa(std::span<const double> per_timestep) {
    detail::require(!per_timestep.empty(), "time average needs at least one timestep");
    return std::accumulate(per_timestep.begin(), per_timestep.end(), 0.0) / static_cast<double>(per_timestep.size());
}

/// Estimated minus true cardinality for each sensor.
inline std::vector<double> cardinality_error(std::span<const double> total_weights, std::size_t true_count) {
    std::vector<double> out;
    out.reserve(total_weights.size());
    for (double w : total_weights) out.push_back(w - static_cast<double>(true_count));
    return out;
}

}  // namespace dgmphd
