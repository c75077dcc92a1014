#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dgmphd/gaussian_mixture.hpp"
#include "dgmphd/random.hpp"

namespace dgmphd {

enum class PolicyTag : std::uint8_t {
    kFull = 0,
    kRank = 1,
    kThreshold = 2,
    kSampleReplacement = 3,
    kSampleNoReplacement = 4,
};

inline const char* to_string(PolicyTag tag) {
    switch (tag) {
        case PolicyTag::kFull: return "full";
        case PolicyTag::kRank: return "rank";
        case PolicyTag::kThreshold: return "threshold";
        case PolicyTag::kSampleReplacement: return "sample_replacement";
        case PolicyTag::kSampleNoReplacement: return "sample_no_replacement";
    }
    return "unknown";
}

/// One transmitted component. `count` is meaningful when the transmission
/// carries a shared weight, `weight` otherwise.
struct TransmissionEntry {
    Vector mean;
    Matrix covariance;
    std::uint32_t count = 0;
    double weight = 0.0;
};

/// A sensor's broadcast payload for one consensus round.
struct Transmission {
    PolicyTag policy = PolicyTag::kFull;
    Eigen::Index dimension = 0;
    std::optional<double> shared_weight;
    std::vector<TransmissionEntry> entries;

    [[nodiscard]] std::size_t distinct_components() const { return entries.size(); }
    [[nodiscard]] bool counted() const { return shared_weight.has_value(); }
};

enum class DrawMode { kStopAtBDistinct, kFixedDraws };

struct SamplingConfig {
    std::size_t bandwidth = 5;
    DrawMode draw_mode = DrawMode::kStopAtBDistinct;
    /// Draw count for kFixedDraws; 0 means 4 × bandwidth.
    std::size_t draws = 0;
    bool replacement = true;
    /// Monte Carlo replicates used to estimate inclusion probabilities when
    /// sampling without replacement.
    std::size_t inclusion_replicates = 10000;

    [[nodiscard]] std::size_t fixed_draw_count() const { return draws == 0 ? 4 * bandwidth : draws; }
};

struct TransmissionCost {
    std::size_t floats = 0;
    std::size_t integers = 0;
    std::size_t components = 0;

    /// Serialized size: 1 tag byte + 4 count bytes + 8 per float + 4 per integer.
    [[nodiscard]] std::size_t bytes() const { return 5 + 8 * floats + 4 * integers; }

    TransmissionCost& operator+=(const TransmissionCost& o) {
        floats += o.floats;
        integers += o.integers;
        components += o.components;
        return *this;
    }
};

namespace detail {

inline TransmissionEntry explicit_entry(const GaussianComponent& c, double weight) {
    return {c.mean, c.covariance, 0, weight};
}

inline Transmission explicit_transmission(const GaussianMixture& gm, PolicyTag tag,
                                          std::span<const std::size_t> indices) {
    Transmission t{tag, gm.dimension(), std::nullopt, {}};
    t.entries.reserve(indices.size());
    for (std::size_t i : indices) t.entries.push_back(explicit_entry(gm[i], gm[i].weight));
    return t;
}

inline std::vector<std::size_t> positive_indices(const GaussianMixture& gm) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < gm.size(); ++i) {
        if (gm[i].weight > 0.0) out.push_back(i);
    }
    return out;
}

inline std::vector<std::size_t> top_indices(const GaussianMixture& gm, std::size_t count) {
    std::vector<std::size_t> order(gm.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return gm[a].weight > gm[b].weight; });
    if (order.size() > count) order.resize(count);
    return order;
}

}  // namespace detail

inline Transmission select_full(const GaussianMixture& gm) {
    std::vector<std::size_t> all(gm.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return detail::explicit_transmission(gm, PolicyTag::kFull, all);
}

/// The `bandwidth` heaviest components, heaviest first, ties by original order.
inline Transmission select_rank(const GaussianMixture& gm, std::size_t bandwidth) {
    detail::require(bandwidth >= 1, "bandwidth must be at least 1");
    return detail::explicit_transmission(gm, PolicyTag::kRank, detail::top_indices(gm, bandwidth));
}

/// Components with weight strictly greater than `threshold`.
inline Transmission select_threshold(const GaussianMixture& gm, double threshold) {
    detail::require(threshold >= 0.0, "threshold must be nonnegative");
    std::vector<std::size_t> picked;
    for (std::size_t i = 0; i < gm.size(); ++i) {
        if (gm[i].weight > threshold) picked.push_back(i);
    }
    return detail::explicit_transmission(gm, PolicyTag::kThreshold, picked);
}

/// Sampling probabilities proportional to the component weights.
inline std::vector<double> sampling_probabilities(const GaussianMixture& gm) {
    const double total = total_weight(gm);
    detail::require(total > 0.0, "sampling needs a mixture with positive total weight");
    std::vector<double> p;
    p.reserve(gm.size());
    for (const auto& c : gm) p.push_back(c.weight / total);
    return p;
}

/// Random sampling rule with replacement. Components are drawn i.i.d. with
/// probability proportional to weight; each distinct drawn component is sent
/// once with its draw count, together with one shared weight Σw / draws.
///
/// In kStopAtBDistinct mode the draw that would introduce a (B+1)-th distinct
/// index is discarded and sampling stops. If at most B components carry
/// weight, they are all sent with exact weights instead. In kFixedDraws mode
/// exactly n draws are made; configurations where n draws could exceed B
/// distinct components are rejected.
template <class URBG>
Transmission sample_with_replacement(const GaussianMixture& gm, const SamplingConfig& config, URBG& rng) {
    detail::require(config.replacement, "sample_with_replacement needs replacement = true");
    detail::require(config.bandwidth >= 1, "bandwidth must be at least 1");
    detail::require(!gm.empty(), "cannot sample from an empty mixture");
    const double total = total_weight(gm);
    detail::require(total > 0.0, "cannot sample from a zero-weight mixture");

    const auto positive = detail::positive_indices(gm);
    std::vector<std::uint32_t> counts(gm.size(), 0);
    std::size_t draws = 0;

    std::vector<double> weights;
    weights.reserve(gm.size());
    for (const auto& c : gm) weights.push_back(c.weight);
    std::discrete_distribution<std::size_t> categorical(weights.begin(), weights.end());

    if (config.draw_mode == DrawMode::kStopAtBDistinct) {
        if (positive.size() <= config.bandwidth) {
            return detail::explicit_transmission(gm, PolicyTag::kSampleReplacement, positive);
        }
        std::size_t distinct = 0;
        for (;;) {
            const std::size_t idx = categorical(rng);
            if (counts[idx] == 0) {
                if (distinct == config.bandwidth) break;
                ++distinct;
            }
            ++counts[idx];
            ++draws;
        }
    } else {
        const std::size_t n = config.fixed_draw_count();
        detail::require(n >= 1, "fixed draw count must be at least 1");
        detail::require(std::min(n, positive.size()) <= config.bandwidth,
                        "fixed draw count can exceed the bandwidth for this mixture");
        for (std::size_t k = 0; k < n; ++k) ++counts[categorical(rng)];
        draws = n;
    }

    Transmission t{PolicyTag::kSampleReplacement, gm.dimension(), total / static_cast<double>(draws), {}};
    for (std::size_t i = 0; i < gm.size(); ++i) {
        if (counts[i] > 0) t.entries.push_back({gm[i].mean, gm[i].covariance, counts[i], 0.0});
    }
    return t;
}

/// Exponential-keys weighted sampling of `count` distinct indices: each index
/// gets key log(u)/w and the largest keys win.
template <class URBG>
std::vector<std::size_t> weighted_sample_without_replacement(std::span<const double> weights, std::size_t count,
                                                             URBG& rng) {
    detail::require(count <= weights.size(), "cannot draw more indices than there are weights");
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::vector<std::pair<double, std::size_t>> keys;
    keys.reserve(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        double u = uniform(rng);
        while (u <= 0.0) u = uniform(rng);
        keys.emplace_back(std::log(u) / weights[i], i);
    }
    std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(count), keys.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::size_t> picked;
    picked.reserve(count);
    for (std::size_t k = 0; k < count; ++k) picked.push_back(keys[k].second);
    std::sort(picked.begin(), picked.end());
    return picked;
}

/// Monte Carlo estimate of P(l ∈ sample) under weighted_sample_without_replacement.
template <class URBG>
std::vector<double> estimate_inclusion_probabilities(std::span<const double> weights, std::size_t count,
                                                     std::size_t replicates, URBG& rng) {
    detail::require(replicates >= 1, "need at least one replicate");
    std::vector<std::size_t> hits(weights.size(), 0);
    for (std::size_t r = 0; r < replicates; ++r) {
        for (std::size_t i : weighted_sample_without_replacement(weights, count, rng)) ++hits[i];
    }
    std::vector<double> p(weights.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>(hits[i]) / static_cast<double>(replicates);
    return p;
}

/// Sampling rule without replacement. B distinct indices are drawn and each
/// is sent with weight w / P(l ∈ sample). Inclusion probabilities are taken
/// from `inclusion` when given, otherwise estimated from a Monte Carlo
/// pre-pass on an independent stream.
template <class URBG>
Transmission sample_without_replacement(const GaussianMixture& gm, const SamplingConfig& config, URBG& rng,
                                        std::optional<std::span<const double>> inclusion = std::nullopt) {
    const std::size_t B = config.bandwidth;
    detail::require(B >= 1, "bandwidth must be at least 1");
    detail::require(B <= gm.size(), "bandwidth exceeds the number of components");
    std::vector<double> weights;
    weights.reserve(gm.size());
    for (const auto& c : gm) {
        detail::require(c.weight > 0.0, "sampling without replacement needs positive weights");
        weights.push_back(c.weight);
    }
    if (B == gm.size()) {
        std::vector<std::size_t> all(gm.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        return detail::explicit_transmission(gm, PolicyTag::kSampleNoReplacement, all);
    }

    std::vector<double> estimated;
    if (!inclusion) {
        Rng prepass(rng());
        estimated = estimate_inclusion_probabilities(std::span<const double>(weights), B,
                                                     config.inclusion_replicates, prepass);
        inclusion = std::span<const double>(estimated);
    }
    detail::require(inclusion->size() == gm.size(), "inclusion probabilities do not match the mixture");

    Transmission t{PolicyTag::kSampleNoReplacement, gm.dimension(), std::nullopt, {}};
    for (std::size_t i : weighted_sample_without_replacement(std::span<const double>(weights), B, rng)) {
        const double p = (*inclusion)[i];
        if (!(p > 0.0)) throw NumericalError("selected component has zero estimated inclusion probability");
        t.entries.push_back(detail::explicit_entry(gm[i], gm[i].weight / p));
    }
    return t;
}

inline GaussianMixture reconstruct(const Transmission& t) {
    detail::require(t.dimension > 0, "transmission has no dimension");
    if (t.shared_weight) {
        detail::require(std::isfinite(*t.shared_weight) && *t.shared_weight >= 0.0,
                        "malformed transmission: bad shared weight");
    }
    GaussianMixture gm(t.dimension);
    gm.reserve(t.entries.size());
    for (const auto& e : t.entries) {
        detail::require(e.mean.size() == t.dimension && e.covariance.rows() == t.dimension &&
                            e.covariance.cols() == t.dimension,
                        "malformed transmission: entry dimension mismatch");
        if (t.shared_weight) {
            detail::require(e.count > 0, "malformed transmission: zero count");
            gm.push_back({static_cast<double>(e.count) * *t.shared_weight, e.mean, e.covariance});
        } else {
            detail::require(std::isfinite(e.weight) && e.weight >= 0.0, "malformed transmission: bad weight");
            gm.push_back({e.weight, e.mean, e.covariance});
        }
    }
    return gm;
}

inline TransmissionCost transmission_cost(const Transmission& t) {
    TransmissionCost cost;
    const std::size_t n = t.entries.size();
    if (n == 0) return cost;
    const auto d = static_cast<std::size_t>(t.dimension);
    cost.components = n;
    cost.floats = n * (d + d * (d + 1) / 2);
    if (t.counted()) {
        cost.floats += 1;
        cost.integers = n;
    } else {
        cost.floats += n;
    }
    return cost;
}

// Wire format (little endian):
//   u8  policy tag, high bit set when a shared weight follows
//   u32 entry count
//   f64 shared weight (optional)
//   per entry: f64 × d mean, f64 × d(d+1)/2 upper-triangular covariance
//              (row-major), then u32 count or f64 weight.

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

inline void put_f64(std::vector<std::uint8_t>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
}

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * k);
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t v = 0;
        for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * k);
        return std::bit_cast<double>(v);
    }
    [[nodiscard]] bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw std::invalid_argument("malformed transmission: truncated record");
    }
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

constexpr std::uint8_t kSharedWeightFlag = 0x80;

}  // namespace detail

inline std::vector<std::uint8_t> serialize(const Transmission& t) {
    std::vector<std::uint8_t> out;
    out.reserve(transmission_cost(t).bytes());
    auto tag = static_cast<std::uint8_t>(t.policy);
    if (t.counted()) tag |= detail::kSharedWeightFlag;
    out.push_back(tag);
    detail::put_u32(out, static_cast<std::uint32_t>(t.entries.size()));
    if (t.counted() && !t.entries.empty()) detail::put_f64(out, *t.shared_weight);
    for (const auto& e : t.entries) {
        for (Eigen::Index i = 0; i < t.dimension; ++i) detail::put_f64(out, e.mean(i));
        for (Eigen::Index i = 0; i < t.dimension; ++i) {
            for (Eigen::Index j = i; j < t.dimension; ++j) detail::put_f64(out, e.covariance(i, j));
        }
        if (t.counted()) {
            detail::put_u32(out, e.count);
        } else {
            detail::put_f64(out, e.weight);
        }
    }
    return out;
}

inline Transmission deserialize(std::span<const std::uint8_t> bytes, Eigen::Index dimension) {
    detail::require(dimension > 0, "dimension must be positive");
    detail::ByteReader in(bytes);
    const std::uint8_t raw_tag = in.u8();
    const bool counted = (raw_tag & detail::kSharedWeightFlag) != 0;
    const std::uint8_t policy = raw_tag & static_cast<std::uint8_t>(~detail::kSharedWeightFlag);
    detail::require(policy <= static_cast<std::uint8_t>(PolicyTag::kSampleNoReplacement),
                    "malformed transmission: unknown policy tag");
    Transmission t{static_cast<PolicyTag>(policy), dimension, std::nullopt, {}};
    const std::uint32_t n = in.u32();
    if (counted) t.shared_weight = n > 0 ? in.f64() : 0.0;
    t.entries.reserve(n);
    for (std::uint32_t k = 0; k < n; ++k) {
        TransmissionEntry e{Vector(dimension), Matrix(dimension, dimension), 0, 0.0};
        for (Eigen::Index i = 0; i < dimension; ++i) e.mean(i) = in.f64();
        for (Eigen::Index i = 0; i < dimension; ++i) {
            for (Eigen::Index j = i; j < dimension; ++j) e.covariance(i, j) = e.covariance(j, i) = in.f64();
        }
        if (counted) {
            e.count = in.u32();
        } else {
            e.weight = in.f64();
        }
        t.entries.push_back(std::move(e));
    }
    detail::require(in.done(), "malformed transmission: trailing bytes");
    reconstruct(t);  // validates entries
    return t;
}

/// Component-selection rule applied to every broadcast.
struct BandwidthPolicy {
    PolicyTag kind = PolicyTag::kFull;
    SamplingConfig sampling{};
    double threshold = 0.0;

    static BandwidthPolicy full() { return {}; }
    static BandwidthPolicy rank(std::size_t bandwidth) {
        BandwidthPolicy p{PolicyTag::kRank, {}, 0.0};
        p.sampling.bandwidth = bandwidth;
        return p;
    }
    static BandwidthPolicy threshold_rule(double tau) { return {PolicyTag::kThreshold, {}, tau}; }
    static BandwidthPolicy with_replacement(SamplingConfig cfg) {
        cfg.replacement = true;
        return {PolicyTag::kSampleReplacement, cfg, 0.0};
    }
    static BandwidthPolicy without_replacement(SamplingConfig cfg) {
        cfg.replacement = false;
        return {PolicyTag::kSampleNoReplacement, cfg, 0.0};
    }
};

/// Applies a policy to a sender's mixture. Mixtures with no weight produce an
/// empty transmission, and sampling without replacement sends everything
/// when the bandwidth covers all weighted components.
template <class URBG>
Transmission apply_policy(const BandwidthPolicy& policy, const GaussianMixture& gm, URBG& rng) {
    switch (policy.kind) {
        case PolicyTag::kFull: return select_full(gm);
        case PolicyTag::kRank: return select_rank(gm, policy.sampling.bandwidth);
        case PolicyTag::kThreshold: return select_threshold(gm, policy.threshold);
        case PolicyTag::kSampleReplacement:
            if (gm.empty() || total_weight(gm) <= 0.0) return {policy.kind, gm.dimension(), std::nullopt, {}};
            return sample_with_replacement(gm, policy.sampling, rng);
        case PolicyTag::kSampleNoReplacement: {
            const auto positive = detail::positive_indices(gm);
            if (positive.size() <= policy.sampling.bandwidth) {
                return detail::explicit_transmission(gm, policy.kind, positive);
            }
            GaussianMixture weighted(gm.dimension());
            for (std::size_t i : positive) weighted.push_back(gm[i]);
            return sample_without_replacement(weighted, policy.sampling, rng);
        }
    }
    throw std::invalid_argument("unknown bandwidth policy");
}

}  // namespace dgmphd
