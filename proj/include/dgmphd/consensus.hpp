#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include "dgmphd/bandwidth.hpp"
#include "dgmphd/gaussian_mixture.hpp"
#include "dgmphd/phd_filter.hpp"
#include "dgmphd/random.hpp"

namespace dgmphd {

/// Directed communication graph. An edge (j, i) means sensor j can send to sensor i.
class SensorNetwork {
public:
    using Edge = std::pair<std::size_t, std::size_t>;

    SensorNetwork(std::size_t vertex_count, std::set<Edge> edges)
        : vertex_count_(vertex_count), edges_(std::move(edges)) {
        detail::require(vertex_count_ >= 1, "network needs at least one sensor");
        for (const auto& [from, to] : edges_) {
            detail::require(from < vertex_count_ && to < vertex_count_, "edge references an unknown sensor");
            detail::require(from != to, "self loops are implicit and must not be listed");
        }
        detail::require(strongly_connected(), "sensor network is not strongly connected");
    }

    /// Builds a network where every listed pair can communicate both ways.
    static SensorNetwork bidirectional(std::size_t vertex_count, std::span<const Edge> links) {
        std::set<Edge> edges;
        for (const auto& [a, b] : links) {
            edges.emplace(a, b);
            edges.emplace(b, a);
        }
        return SensorNetwork(vertex_count, std::move(edges));
    }

    [[nodiscard]] std::size_t vertex_count() const { return vertex_count_; }
    [[nodiscard]] const std::set<Edge>& edges() const { return edges_; }
    [[nodiscard]] bool has_edge(std::size_t from, std::size_t to) const { return edges_.contains({from, to}); }

    [[nodiscard]] std::vector<std::size_t> in_neighbors(std::size_t i) const {
        std::vector<std::size_t> out;
        for (const auto& [from, to] : edges_) {
            if (to == i) out.push_back(from);
        }
        return out;
    }

    [[nodiscard]] std::vector<std::size_t> out_neighbors(std::size_t i) const {
        std::vector<std::size_t> out;
        for (const auto& [from, to] : edges_) {
            if (from == i) out.push_back(to);
        }
        return out;
    }

    [[nodiscard]] bool is_bidirectional() const {
        for (const auto& [from, to] : edges_) {
            if (!has_edge(to, from)) return false;
        }
        return true;
    }

private:
    [[nodiscard]] bool reaches_all(bool forward) const {
        std::vector<bool> seen(vertex_count_, false);
        std::queue<std::size_t> frontier;
        frontier.push(0);
        seen[0] = true;
        std::size_t count = 1;
        while (!frontier.empty()) {
            const std::size_t v = frontier.front();
            frontier.pop();
            for (const auto& [from, to] : edges_) {
                const std::size_t src = forward ? from : to;
                const std::size_t dst = forward ? to : from;
                if (src == v && !seen[dst]) {
                    seen[dst] = true;
                    ++count;
                    frontier.push(dst);
                }
            }
        }
        return count == vertex_count_;
    }

    [[nodiscard]] bool strongly_connected() const { return reaches_all(true) && reaches_all(false); }

    std::size_t vertex_count_;
    std::set<Edge> edges_;
};

/// Consensus matrix Ω (row i combines sensor i's in-neighbors) and the fusion
/// weights ω it preserves.
struct ConsensusWeights {
    Matrix omega;
    Vector fusion_weights;
};

/// ‖Ω − 1ωᵀ‖, the largest singular value.
inline double contraction_factor(const ConsensusWeights& cw) {
    const auto n = cw.omega.rows();
    const Matrix deviation = cw.omega - Vector::Ones(n) * cw.fusion_weights.transpose();
    Eigen::JacobiSVD<Matrix> svd(deviation);
    return svd.singularValues()(0);
}

struct WeightValidation {
    bool row_stochastic = false;
    bool left_eigenvector = false;
    bool contraction = false;
    bool sparsity = false;
    double contraction_factor = 0.0;
    std::vector<std::string> failures;

    [[nodiscard]] bool ok() const { return failures.empty(); }
};

class WeightValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Checks Ω·1 = 1, ωᵀΩ = ωᵀ, ‖Ω − 1ωᵀ‖ < 1 and that Ω only mixes along edges.
/// Failures are named "row-stochastic", "left-eigenvector", "contraction",
/// "sparsity" and "fusion-weights".
inline WeightValidation validate_weights(const ConsensusWeights& cw, const SensorNetwork& net,
                                         double tolerance = 1e-12) {
    const auto n = static_cast<Eigen::Index>(net.vertex_count());
    detail::require(cw.omega.rows() == n && cw.omega.cols() == n, "consensus matrix does not match the network");
    detail::require(cw.fusion_weights.size() == n, "fusion weights do not match the network");

    WeightValidation report;
    const Vector ones = Vector::Ones(n);
    report.row_stochastic = ((cw.omega * ones - ones).cwiseAbs().maxCoeff() <= tolerance);
    report.left_eigenvector =
        ((cw.omega.transpose() * cw.fusion_weights - cw.fusion_weights).cwiseAbs().maxCoeff() <= tolerance);
    report.contraction_factor = contraction_factor(cw);
    report.contraction = report.contraction_factor < 1.0 - tolerance;
    report.sparsity = true;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i != j && cw.omega(i, j) != 0.0 &&
                !net.has_edge(static_cast<std::size_t>(j), static_cast<std::size_t>(i))) {
                report.sparsity = false;
            }
        }
    }
    const bool weights_ok = cw.fusion_weights.minCoeff() >= 0.0 &&
                            std::abs(cw.fusion_weights.sum() - 1.0) <= tolerance;

    if (!report.row_stochastic) report.failures.emplace_back("row-stochastic");
    if (!report.left_eigenvector) report.failures.emplace_back("left-eigenvector");
    if (!report.contraction) report.failures.emplace_back("contraction");
    if (!report.sparsity) report.failures.emplace_back("sparsity");
    if (!weights_ok) report.failures.emplace_back("fusion-weights");
    return report;
}

inline void require_valid_weights(const ConsensusWeights& cw, const SensorNetwork& net) {
    const auto report = validate_weights(cw, net);
    if (!report.ok()) {
        std::string message = "consensus weights violate:";
        for (const auto& f : report.failures) message += " " + f;
        throw WeightValidationError(message);
    }
}

enum class MetropolisVariant {
    /// Ω_ij = 1 / (1 + max(d_i, d_j))
    kStandard,
    /// Degrees count the self loop: Ω_ij = 1 / (1 + max(d_i + 1, d_j + 1))
    kSelfInclusiveDegree,
};

inline ConsensusWeights metropolis_weights(const SensorNetwork& net,
                                           MetropolisVariant variant = MetropolisVariant::kStandard) {
    detail::require(net.is_bidirectional(), "Metropolis weights need a bidirectional network");
    const auto n = static_cast<Eigen::Index>(net.vertex_count());
    std::vector<double> degree(net.vertex_count());
    for (std::size_t i = 0; i < net.vertex_count(); ++i) {
        degree[i] = static_cast<double>(net.in_neighbors(i).size());
        if (variant == MetropolisVariant::kSelfInclusiveDegree) degree[i] += 1.0;
    }
    Matrix omega = Matrix::Zero(n, n);
    for (const auto& [j, i] : net.edges()) {
        omega(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0 / (1.0 + std::max(degree[i], degree[j]));
    }
    for (Eigen::Index i = 0; i < n; ++i) omega(i, i) = 1.0 - (omega.row(i).sum() - omega(i, i));
    return {omega, Vector::Constant(n, 1.0 / static_cast<double>(n))};
}

/// Weighted arithmetic average Σ ω_i v_i. Sensors with zero weight are skipped.
inline GaussianMixture waa(std::span<const GaussianMixture> intensities, const Vector& fusion_weights) {
    detail::require(!intensities.empty(), "waa needs at least one intensity");
    detail::require(fusion_weights.size() == static_cast<Eigen::Index>(intensities.size()),
                    "one fusion weight per intensity is required");
    detail::require(fusion_weights.minCoeff() >= 0.0, "fusion weights must be nonnegative");
    detail::require(std::abs(fusion_weights.sum() - 1.0) <= 1e-12, "fusion weights must sum to 1");
    GaussianMixture out(intensities.front().dimension());
    for (std::size_t i = 0; i < intensities.size(); ++i) {
        detail::require(intensities[i].dimension() == out.dimension(), "intensity dimensions differ");
        const double w = fusion_weights(static_cast<Eigen::Index>(i));
        if (w == 0.0) continue;
        for (const auto& c : intensities[i]) out.push_back({w * c.weight, c.mean, c.covariance});
    }
    return out;
}

struct RoundResult {
    std::vector<GaussianMixture> intensities;
    /// One broadcast per sensor, produced from the round-start snapshot.
    std::vector<Transmission> transmissions;
};

/// One synchronous consensus round. Every sensor broadcasts once under the
/// policy, then each sensor i fuses Ω_ii × (its own full mixture) with
/// Ω_ij × (reconstructed broadcast of j) for its in-neighbors j. With a
/// reduction config the fused mixture is pruned, merged and capped; without
/// one, only bit-identical components are combined, which leaves the
/// represented function unchanged.
///
/// Sensor j's randomness comes from the substream derive_seed(round_seed, {j}).
inline RoundResult consensus_round(std::span<const GaussianMixture> intensities, const ConsensusWeights& cw,
                                   const BandwidthPolicy& policy, std::uint64_t round_seed,
                                   const std::optional<PhdConfig>& reduction = std::nullopt) {
    const std::size_t n = intensities.size();
    detail::require(n >= 1, "consensus needs at least one sensor");
    detail::require(cw.omega.rows() == static_cast<Eigen::Index>(n) && cw.omega.cols() == static_cast<Eigen::Index>(n),
                    "consensus matrix does not match the number of sensors");

    RoundResult result;
    result.transmissions.reserve(n);
    std::vector<GaussianMixture> received;
    received.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        Rng rng = make_stream(round_seed, {j});
        result.transmissions.push_back(apply_policy(policy, intensities[j], rng));
        received.push_back(reconstruct(result.transmissions.back()));
    }

    result.intensities.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        GaussianMixture fused(intensities[i].dimension());
        for (std::size_t j = 0; j < n; ++j) {
            const double w = cw.omega(row, static_cast<Eigen::Index>(j));
            if (w == 0.0) continue;
            detail::require(w > 0.0, "consensus weights must be nonnegative");
            const GaussianMixture& source = (i == j) ? intensities[i] : received[j];
            for (const auto& c : source) fused.push_back({w * c.weight, c.mean, c.covariance});
        }
        result.intensities.push_back(reduction ? reduce(fused, *reduction) : consolidate(fused));
    }
    return result;
}

struct RoundDiagnostics {
    /// L2 distance of each sensor's intensity to the WAA of the initial intensities.
    std::vector<double> distance_to_waa;
    std::vector<TransmissionCost> costs;
    TransmissionCost total_cost;
};

struct ConsensusRun {
    std::vector<GaussianMixture> intensities;
    std::vector<RoundDiagnostics> rounds;
    /// Present when distances were tracked.
    std::optional<GaussianMixture> reference;
};

/// Applies `alpha` consensus rounds. Round l uses seed derive_seed(seed, {l}).
inline ConsensusRun run_consensus(std::span<const GaussianMixture> intensities, const ConsensusWeights& cw,
                                  const BandwidthPolicy& policy, std::size_t alpha, std::uint64_t seed,
                                  const std::optional<PhdConfig>& reduction = std::nullopt,
                                  bool track_distance = false) {
    ConsensusRun run;
    run.intensities.assign(intensities.begin(), intensities.end());
    if (track_distance) run.reference = consolidate(waa(intensities, cw.fusion_weights));
    for (std::size_t l = 0; l < alpha; ++l) {
        RoundResult round = consensus_round(run.intensities, cw, policy, derive_seed(seed, {l}), reduction);
        RoundDiagnostics diag;
        for (const auto& t : round.transmissions) {
            diag.costs.push_back(transmission_cost(t));
            diag.total_cost += diag.costs.back();
        }
        run.intensities = std::move(round.intensities);
        if (track_distance) {
            for (const auto& v : run.intensities) diag.distance_to_waa.push_back(l2_distance(v, *run.reference));
        }
        run.rounds.push_back(std::move(diag));
    }
    return run;
}

}  // namespace dgmphd
