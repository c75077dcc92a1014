#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <iomanip>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dgmphd/bandwidth.hpp"
#include "dgmphd/consensus.hpp"
#include "dgmphd/metrics.hpp"
#include "dgmphd/phd_filter.hpp"
#include "dgmphd/random.hpp"
#include "dgmphd/scenario.hpp"

namespace dgmphd {

inline constexpr int kOutputSchemaVersion = 1;

enum class Algorithm {
    kNoConsensus,
    kFull,
    kPartialRank,
    kPartialThreshold,
    kSampleReplacement,
    kSampleNoReplacement,
};

inline const char* to_string(Algorithm a) {
    switch (a) {
        case Algorithm::kNoConsensus: return "no_consensus";
        case Algorithm::kFull: return "full";
        case Algorithm::kPartialRank: return "partial_rank";
        case Algorithm::kPartialThreshold: return "partial_threshold";
        case Algorithm::kSampleReplacement: return "sample_replacement";
        case Algorithm::kSampleNoReplacement: return "sample_no_replacement";
    }
    return "unknown";
}

inline Algorithm parse_algorithm(const std::string& name) {
    for (auto a : {Algorithm::kNoConsensus, Algorithm::kFull, Algorithm::kPartialRank, Algorithm::kPartialThreshold,
                   Algorithm::kSampleReplacement, Algorithm::kSampleNoReplacement}) {
        if (name == to_string(a)) return a;
    }
    throw std::invalid_argument("unknown algorithm '" + name + "'");
}

inline bool is_bandwidth_limited(Algorithm a) {
    return a == Algorithm::kPartialRank || a == Algorithm::kSampleReplacement || a == Algorithm::kSampleNoReplacement;
}

struct ExperimentConfig {
    ScenarioConfig scenario = reference_scenario_config();
    Algorithm algorithm = Algorithm::kSampleReplacement;
    std::size_t alpha = 1;
    std::size_t bandwidth = 5;
    /// Weight threshold for partial_threshold.
    double threshold = 0.5;
    DrawMode draw_mode = DrawMode::kStopAtBDistinct;
    std::size_t draws = 0;
    std::size_t inclusion_replicates = 10000;
    std::size_t mc_runs = 25;
    std::uint64_t master_seed = 1;
    std::string output_path = "results";
    std::size_t jobs = 1;
    PhdConfig phd{};
    OspaConfig ospa{};

    void validate() const {
        // Also checks the network and consensus weights.
        (void)build_models(scenario);
        detail::require(mc_runs >= 1, "mc_runs must be at least 1");
        detail::require(bandwidth >= 1, "bandwidth must be at least 1");
        detail::require(jobs >= 1, "jobs must be at least 1");
        detail::require(threshold >= 0.0, "threshold must be nonnegative");
        detail::require(phd.prune_threshold >= 0.0 && phd.merge_threshold >= 0.0 && phd.max_components >= 1 &&
                            phd.extraction_threshold >= 0.0,
                        "invalid filter configuration");
        detail::require(ospa.order >= 1.0 && ospa.cutoff > 0.0, "invalid OSPA configuration");
        if (draw_mode == DrawMode::kFixedDraws) {
            detail::require((draws == 0 ? 4 * bandwidth : draws) >= 1, "fixed draw count must be positive");
        }
    }

    [[nodiscard]] BandwidthPolicy policy() const {
        SamplingConfig sampling{bandwidth, draw_mode, draws, true, inclusion_replicates};
        switch (algorithm) {
            case Algorithm::kNoConsensus:
            case Algorithm::kFull: return BandwidthPolicy::full();
            case Algorithm::kPartialRank: return BandwidthPolicy::rank(bandwidth);
            case Algorithm::kPartialThreshold: return BandwidthPolicy::threshold_rule(threshold);
            case Algorithm::kSampleReplacement: return BandwidthPolicy::with_replacement(sampling);
            case Algorithm::kSampleNoReplacement: return BandwidthPolicy::without_replacement(sampling);
        }
        throw std::invalid_argument("unknown algorithm");
    }

    [[nodiscard]] std::size_t rounds() const { return algorithm == Algorithm::kNoConsensus ? 0 : alpha; }
};

/// Metrics of one sensor at one timestep; transmission figures are summed
/// over that timestep's consensus rounds.
struct StepRecord {
    int timestep = 0;
    std::size_t sensor = 0;
    double ospa = 0.0;
    double cardinality_estimate = 0.0;
    std::size_t extracted = 0;
    TransmissionCost tx;
};

/// Deterministic work counters standing in for wall-clock timing.
struct OperationCounts {
    std::size_t filter_components = 0;
    std::size_t consensus_components = 0;
};

struct RunRecord {
    std::size_t run = 0;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    std::vector<StepRecord> steps;
    std::vector<double> network_ospa;
    double time_averaged_ospa = 0.0;
    TransmissionCost total_cost;
    std::size_t transmissions = 0;
    std::size_t max_transmitted_components = 0;
    /// Broadcasts with more distinct components than the bandwidth.
    std::size_t bandwidth_violations = 0;
    /// Sampling broadcasts costing more floats than the rank rule would on the same mixture.
    std::size_t cost_order_violations = 0;
    OperationCounts ops;
};

struct ExperimentSummary {
    std::size_t completed_runs = 0;
    std::size_t failed_runs = 0;
    double mean_time_averaged_ospa = 0.0;
    double se_time_averaged_ospa = 0.0;
    double mean_tx_floats = 0.0;
    double mean_tx_integers = 0.0;
    double mean_filter_components = 0.0;
    double mean_consensus_components = 0.0;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<RunRecord> runs;
    ExperimentSummary summary;
};

inline std::uint64_t run_seed(std::uint64_t master_seed, std::size_t run) { return derive_seed(master_seed, {run}); }

inline double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Standard error of the mean.
inline double standard_error(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

/// Filters, fuses, extracts and scores one recorded stream. `seed` feeds the
/// consensus substreams.
inline RunRecord run_stream(const ExperimentConfig& config, const Scenario& scenario, const ScenarioStream& stream,
                            std::size_t run, std::uint64_t seed) {
    RunRecord record;
    record.run = run;
    record.seed = seed;
    const auto& models = scenario.models;
    const std::size_t sensors = scenario.config.sensor_count;
    const BandwidthPolicy policy = config.policy();
    const std::size_t rounds = config.rounds();

    try {
        detail::require(stream.sensor_count == sensors && stream.horizon == scenario.config.horizon &&
                            stream.measurements.size() == static_cast<std::size_t>(stream.horizon) &&
                            stream.truth.frames.size() == stream.measurements.size(),
                        "stream does not match the scenario");
        std::vector<GaussianMixture> posteriors(sensors, GaussianMixture(4));
        for (int k = 1; k <= scenario.config.horizon; ++k) {
            const auto& frame = stream.measurements[static_cast<std::size_t>(k - 1)];
            for (std::size_t s = 0; s < sensors; ++s) {
                const auto prior = predict(posteriors[s], models.motion, models.birth, models.spawn);
                const auto updated = update(prior, models.sensors[s], frame.per_sensor[s], config.phd.joseph_form);
                record.ops.filter_components += prior.size() + updated.size();
                posteriors[s] = reduce(updated, config.phd);
            }

            std::vector<TransmissionCost> step_cost(sensors);
            const std::uint64_t consensus_seed =
                derive_seed(record.seed, {tag(Stream::kConsensus), static_cast<std::uint64_t>(k)});
            for (std::size_t l = 0; l < rounds; ++l) {
                RoundResult round =
                    consensus_round(posteriors, models.weights, policy, derive_seed(consensus_seed, {l}), config.phd);
                for (std::size_t s = 0; s < sensors; ++s) {
                    const auto& t = round.transmissions[s];
                    const auto cost = transmission_cost(t);
                    step_cost[s] += cost;
                    record.total_cost += cost;
                    ++record.transmissions;
                    record.max_transmitted_components =
                        std::max(record.max_transmitted_components, t.distinct_components());
                    if (is_bandwidth_limited(config.algorithm) && t.distinct_components() > config.bandwidth) {
                        ++record.bandwidth_violations;
                    }
                    if (config.algorithm == Algorithm::kSampleReplacement &&
                        cost.floats > transmission_cost(select_rank(posteriors[s], config.bandwidth)).floats) {
                        ++record.cost_order_violations;
                    }
                }
                for (const auto& fused : round.intensities) record.ops.consensus_components += fused.size();
                posteriors = std::move(round.intensities);
            }

            const auto truth = stream.truth.frames[static_cast<std::size_t>(k - 1)].states();
            const auto truth_points = ospa_points(truth, config.ospa);
            double network = 0.0;
            for (std::size_t s = 0; s < sensors; ++s) {
                const auto estimates = extract_targets(posteriors[s], config.phd);
                StepRecord step;
                step.timestep = k;
                step.sensor = s;
                step.ospa = ospa(ospa_points(estimates, config.ospa), truth_points, config.ospa).distance;
                step.cardinality_estimate = total_weight(posteriors[s]);
                step.extracted = estimates.size();
                step.tx = step_cost[s];
                network += step.ospa;
                record.steps.push_back(step);
            }
            record.network_ospa.push_back(network / static_cast<double>(sensors));
        }
        record.time_averaged_ospa = time_averaged_network_ospa(record.network_ospa);
    } catch (const std::exception& e) {
        record.failed = true;
        record.error = e.what();
    }
    return record;
}

/// One Monte Carlo run: simulate with the run's seed, then run_stream.
inline RunRecord run_single(const ExperimentConfig& config, const Scenario& scenario, std::size_t run) {
    const std::uint64_t seed = run_seed(config.master_seed, run);
    std::optional<ScenarioStream> stream;
    try {
        stream = simulate(scenario, seed);
    } catch (const std::exception& e) {
        RunRecord record;
        record.run = run;
        record.seed = seed;
        record.failed = true;
        record.error = e.what();
        return record;
    }
    return run_stream(config, scenario, *stream, run, seed);
}

inline ExperimentSummary summarize(std::span<const RunRecord> runs) {
    ExperimentSummary s;
    std::vector<double> ospa_values, floats, ints, filter_ops, consensus_ops;
    for (const auto& r : runs) {
        if (r.failed) {
            ++s.failed_runs;
            continue;
        }
        ++s.completed_runs;
        ospa_values.push_back(r.time_averaged_ospa);
        floats.push_back(static_cast<double>(r.total_cost.floats));
        ints.push_back(static_cast<double>(r.total_cost.integers));
        filter_ops.push_back(static_cast<double>(r.ops.filter_components));
        consensus_ops.push_back(static_cast<double>(r.ops.consensus_components));
    }
    s.mean_time_averaged_ospa = mean(ospa_values);
    s.se_time_averaged_ospa = standard_error(ospa_values);
    s.mean_tx_floats = mean(floats);
    s.mean_tx_integers = mean(ints);
    s.mean_filter_components = mean(filter_ops);
    s.mean_consensus_components = mean(consensus_ops);
    return s;
}

/// Runs every Monte Carlo replicate (up to `jobs` at a time). Results are
/// ordered by run index, so output does not depend on scheduling.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    const Scenario scenario{config.scenario, build_models(config.scenario)};
    ExperimentResult result;
    result.config = config;
    result.runs.resize(config.mc_runs);

    const std::size_t workers = std::min(config.jobs, config.mc_runs);
    if (workers <= 1) {
        for (std::size_t r = 0; r < config.mc_runs; ++r) result.runs[r] = run_single(config, scenario, r);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t r = next++; r < config.mc_runs; r = next++) {
                    result.runs[r] = run_single(config, scenario, r);
                }
            });
        }
    }
    result.summary = summarize(result.runs);
    return result;
}

struct PairedDifference {
    double mean = 0.0;
    double standard_error = 0.0;
    std::size_t pairs = 0;
};

/// Per-run differences a − b of time-averaged network OSPA over runs that
/// completed in both experiments.
inline PairedDifference paired_difference(const ExperimentResult& a, const ExperimentResult& b) {
    detail::require(a.runs.size() == b.runs.size(), "paired comparison needs equal run counts");
    std::vector<double> diffs;
    for (std::size_t r = 0; r < a.runs.size(); ++r) {
        detail::require(a.runs[r].seed == b.runs[r].seed, "paired comparison needs matching seeds");
        if (a.runs[r].failed || b.runs[r].failed) continue;
        diffs.push_back(a.runs[r].time_averaged_ospa - b.runs[r].time_averaged_ospa);
    }
    return {mean(diffs), standard_error(diffs), diffs.size()};
}

// ---------------------------------------------------------------------------
// Configuration file (JSON)

namespace detail {

template <class T>
void read_optional(const nlohmann::json& j, const char* key, T& target) {
    if (j.contains(key)) target = j.at(key).get<T>();
}

inline Vector to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> from_vector(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace detail

inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
    ScenarioConfig cfg = reference_scenario_config();
    if (j.is_string()) {
        detail::require(j.get<std::string>() == "paper", "unknown scenario preset '" + j.get<std::string>() + "'");
        return cfg;
    }
    detail::require(j.is_object(), "scenario must be \"paper\" or an object");
    if (j.contains("preset")) {
        detail::require(j.at("preset") == "paper", "unknown scenario preset");
    }
    if (j.contains("region")) {
        const auto r = j.at("region").get<std::vector<double>>();
        detail::require(r.size() == 4, "region is [x_min, x_max, y_min, y_max]");
        cfg.region = {r[0], r[1], r[2], r[3]};
    }
    detail::read_optional(j, "step_time", cfg.step_time);
    detail::read_optional(j, "process_noise_scale", cfg.process_noise_scale);
    detail::read_optional(j, "detection_probability", cfg.detection_probability);
    detail::read_optional(j, "survival_probability", cfg.survival_probability);
    detail::read_optional(j, "clutter_rate", cfg.clutter_rate);
    detail::read_optional(j, "measurement_noise_variance", cfg.measurement_noise_variance);
    detail::read_optional(j, "horizon", cfg.horizon);
    detail::read_optional(j, "truth_process_noise", cfg.truth_process_noise);
    detail::read_optional(j, "birth_weight", cfg.birth_weight);
    detail::read_optional(j, "spawn_weight", cfg.spawn_weight);
    if (j.contains("targets")) {
        cfg.targets.clear();
        for (const auto& t : j.at("targets")) {
            cfg.targets.push_back({detail::to_vector(t.at("state").get<std::vector<double>>()), t.at("start").get<int>(),
                                   t.at("end").get<int>()});
        }
    }
    const bool topology_changed = j.contains("sensor_count") || j.contains("links");
    detail::read_optional(j, "sensor_count", cfg.sensor_count);
    if (topology_changed) {
        cfg.links.clear();
        cfg.omega.resize(0, 0);
    }
    if (j.contains("links")) {
        for (const auto& l : j.at("links")) cfg.links.emplace_back(l.at(0).get<std::size_t>(), l.at(1).get<std::size_t>());
    }
    if (j.contains("omega")) {
        const auto rows = j.at("omega").get<std::vector<std::vector<double>>>();
        cfg.omega.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            detail::require(rows[i].size() == rows.size(), "omega must be square");
            for (std::size_t c = 0; c < rows.size(); ++c) {
                cfg.omega(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
            }
        }
    }
    cfg.validate();
    return cfg;
}

inline nlohmann::json to_json(const ScenarioConfig& cfg) {
    nlohmann::json j;
    j["region"] = {cfg.region.x_min, cfg.region.x_max, cfg.region.y_min, cfg.region.y_max};
    j["step_time"] = cfg.step_time;
    j["process_noise_scale"] = cfg.process_noise_scale;
    j["detection_probability"] = cfg.detection_probability;
    j["survival_probability"] = cfg.survival_probability;
    j["clutter_rate"] = cfg.clutter_rate;
    j["measurement_noise_variance"] = cfg.measurement_noise_variance;
    j["horizon"] = cfg.horizon;
    j["sensor_count"] = cfg.sensor_count;
    j["truth_process_noise"] = cfg.truth_process_noise;
    j["birth_weight"] = cfg.birth_weight;
    j["spawn_weight"] = cfg.spawn_weight;
    j["targets"] = nlohmann::json::array();
    for (const auto& t : cfg.targets) {
        j["targets"].push_back({{"state", detail::from_vector(t.initial_state)}, {"start", t.start}, {"end", t.end}});
    }
    j["links"] = nlohmann::json::array();
    for (const auto& [a, b] : cfg.links) j["links"].push_back({a, b});
    j["omega"] = nlohmann::json::array();
    for (Eigen::Index i = 0; i < cfg.omega.rows(); ++i) {
        j["omega"].push_back(detail::from_vector(cfg.omega.row(i).transpose()));
    }
    return j;
}

inline ExperimentConfig experiment_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    if (j.contains("scenario")) cfg.scenario = scenario_from_json(j.at("scenario"));
    if (j.contains("algorithm")) cfg.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    if (j.contains("alpha")) {
        const auto& a = j.at("alpha");
        detail::require(!a.is_array() || !a.empty(), "alpha list is empty");
        cfg.alpha = a.is_array() ? a.front().get<std::size_t>() : a.get<std::size_t>();
    }
    detail::read_optional(j, "bandwidth", cfg.bandwidth);
    detail::read_optional(j, "threshold", cfg.threshold);
    detail::read_optional(j, "mc_runs", cfg.mc_runs);
    detail::read_optional(j, "master_seed", cfg.master_seed);
    detail::read_optional(j, "output_path", cfg.output_path);
    detail::read_optional(j, "jobs", cfg.jobs);
    detail::read_optional(j, "inclusion_replicates", cfg.inclusion_replicates);
    if (j.contains("draw_mode")) {
        const auto mode = j.at("draw_mode").get<std::string>();
        if (mode == "stop_at_B_distinct") {
            cfg.draw_mode = DrawMode::kStopAtBDistinct;
        } else if (mode == "fixed_draws") {
            cfg.draw_mode = DrawMode::kFixedDraws;
        } else {
            throw std::invalid_argument("unknown draw_mode '" + mode + "'");
        }
    }
    detail::read_optional(j, "draws", cfg.draws);
    if (j.contains("phd")) {
        const auto& p = j.at("phd");
        detail::read_optional(p, "prune_threshold", cfg.phd.prune_threshold);
        detail::read_optional(p, "merge_threshold", cfg.phd.merge_threshold);
        detail::read_optional(p, "max_components", cfg.phd.max_components);
        detail::read_optional(p, "extraction_threshold", cfg.phd.extraction_threshold);
        detail::read_optional(p, "joseph_form", cfg.phd.joseph_form);
    }
    if (j.contains("ospa")) {
        const auto& o = j.at("ospa");
        detail::read_optional(o, "order", cfg.ospa.order);
        detail::read_optional(o, "cutoff", cfg.ospa.cutoff);
        detail::read_optional(o, "positions_only", cfg.ospa.positions_only);
    }
    cfg.validate();
    return cfg;
}

/// The α values of a sweep: "alpha" may be a single value or a list.
inline std::vector<std::size_t> alpha_sweep(const nlohmann::json& j, std::size_t fallback) {
    if (!j.contains("alpha")) return {fallback};
    const auto& a = j.at("alpha");
    if (a.is_array()) return a.get<std::vector<std::size_t>>();
    return {a.get<std::size_t>()};
}

inline nlohmann::json to_json(const ExperimentConfig& cfg) {
    return {
        {"schema_version", kOutputSchemaVersion},
        {"scenario", to_json(cfg.scenario)},
        {"algorithm", to_string(cfg.algorithm)},
        {"alpha", cfg.alpha},
        {"bandwidth", cfg.bandwidth},
        {"threshold", cfg.threshold},
        {"draw_mode", cfg.draw_mode == DrawMode::kStopAtBDistinct ? "stop_at_B_distinct" : "fixed_draws"},
        {"draws", cfg.draws},
        {"inclusion_replicates", cfg.inclusion_replicates},
        {"mc_runs", cfg.mc_runs},
        {"master_seed", cfg.master_seed},
        {"output_path", cfg.output_path},
        {"jobs", cfg.jobs},
        {"phd",
         {{"prune_threshold", cfg.phd.prune_threshold},
          {"merge_threshold", cfg.phd.merge_threshold},
          {"max_components", cfg.phd.max_components},
          {"extraction_threshold", cfg.phd.extraction_threshold},
          {"joseph_form", cfg.phd.joseph_form}}},
        {"ospa", {{"order", cfg.ospa.order}, {"cutoff", cfg.ospa.cutoff}, {"positions_only", cfg.ospa.positions_only}}},
    };
}

// ---------------------------------------------------------------------------
// Output files

inline constexpr const char* kRunsCsvHeader =
    "run,timestep,sensor,ospa_m,card_est,extracted,tx_floats,tx_ints,tx_components";
inline constexpr const char* kSummaryCsvHeader =
    "algorithm,alpha,bandwidth,runs,failed_runs,tavg_network_ospa_mean,tavg_network_ospa_se,"
    "tx_floats_per_run,tx_ints_per_run,filter_components_per_run,consensus_components_per_run";

inline void write_runs_csv(std::ostream& out, const ExperimentResult& result) {
    out << kRunsCsvHeader << '\n';
    out << std::setprecision(12);
    for (const auto& run : result.runs) {
        for (const auto& s : run.steps) {
            out << run.run << ',' << s.timestep << ',' << s.sensor << ',' << s.ospa << ',' << s.cardinality_estimate
                << ',' << s.extracted << ',' << s.tx.floats << ',' << s.tx.integers << ',' << s.tx.components << '\n';
        }
    }
}

inline void write_summary_row(std::ostream& out, const ExperimentResult& result) {
    const auto& s = result.summary;
    out << std::setprecision(12) << to_string(result.config.algorithm) << ',' << result.config.rounds() << ','
        << result.config.bandwidth << ',' << s.completed_runs << ',' << s.failed_runs << ','
        << s.mean_time_averaged_ospa << ',' << s.se_time_averaged_ospa << ',' << s.mean_tx_floats << ','
        << s.mean_tx_integers << ',' << s.mean_filter_components << ',' << s.mean_consensus_components << '\n';
}

inline void write_summary_csv(std::ostream& out, std::span<const ExperimentResult> results) {
    out << kSummaryCsvHeader << '\n';
    for (const auto& r : results) write_summary_row(out, r);
}

inline nlohmann::json run_manifest(const ExperimentResult& result, const std::vector<std::string>& files) {
    nlohmann::json seeds = nlohmann::json::array();
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& r : result.runs) {
        seeds.push_back(r.seed);
        if (r.failed) failures.push_back({{"run", r.run}, {"error", r.error}});
    }
    return {{"schema_version", kOutputSchemaVersion},
            {"tool", "dgmphd"},
            {"config", to_json(result.config)},
            {"master_seed", result.config.master_seed},
            {"run_seeds", seeds},
            {"failed_runs", failures},
            {"files", files}};
}

// ---------------------------------------------------------------------------
// Comparisons

struct ComparisonRow {
    std::string baseline;
    std::string candidate;
    std::size_t alpha = 0;
    PairedDifference ospa_difference;  ///< candidate − baseline
    double cost_ratio = 0.0;           ///< candidate floats / baseline floats (0 when baseline sends nothing)
};

struct Comparison {
    std::vector<ExperimentResult> results;
    std::vector<ComparisonRow> rows;
};

/// Runs configurations that differ only in algorithm, α or bandwidth and
/// compares every pair of results at equal α, paired by seed.
inline Comparison compare_algorithms(const std::vector<ExperimentConfig>& configs) {
    detail::require(!configs.empty(), "nothing to compare");
    const auto reference = to_json(configs.front().scenario);
    for (const auto& c : configs) {
        detail::require(to_json(c.scenario) == reference, "compared configurations use different scenarios");
        detail::require(c.master_seed == configs.front().master_seed, "compared configurations use different seeds");
        detail::require(c.mc_runs == configs.front().mc_runs, "compared configurations use different run counts");
    }
    Comparison out;
    for (const auto& c : configs) out.results.push_back(run_experiment(c));
    for (std::size_t a = 0; a < out.results.size(); ++a) {
        for (std::size_t b = a + 1; b < out.results.size(); ++b) {
            const auto& base = out.results[a];
            const auto& cand = out.results[b];
            if (base.config.rounds() != cand.config.rounds() &&
                base.config.algorithm != Algorithm::kNoConsensus && cand.config.algorithm != Algorithm::kNoConsensus) {
                continue;
            }
            ComparisonRow row;
            row.baseline = to_string(base.config.algorithm);
            row.candidate = to_string(cand.config.algorithm);
            row.alpha = std::max(base.config.rounds(), cand.config.rounds());
            row.ospa_difference = paired_difference(cand, base);
            row.cost_ratio = base.summary.mean_tx_floats > 0.0
                                 ? cand.summary.mean_tx_floats / base.summary.mean_tx_floats
                                 : 0.0;
            out.rows.push_back(row);
        }
    }
    return out;
}

inline void write_comparison_csv(std::ostream& out, const Comparison& comparison) {
    out << "baseline,candidate,alpha,pairs,ospa_diff_mean,ospa_diff_se,cost_ratio\n";
    out << std::setprecision(12);
    for (const auto& r : comparison.rows) {
        out << r.baseline << ',' << r.candidate << ',' << r.alpha << ',' << r.ospa_difference.pairs << ','
            << r.ospa_difference.mean << ',' << r.ospa_difference.standard_error << ',' << r.cost_ratio << '\n';
    }
}

}  // namespace dgmphd
