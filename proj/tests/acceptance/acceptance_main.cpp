// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Pass criterion numbers to run a subset.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dgmphd/dgmphd.hpp"

using namespace dgmphd;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

ConsensusWeights reference_weights() { return {reference_omega(), Vector::Constant(6, 1.0 / 6.0)}; }

SensorNetwork reference_network() {
    const auto links = reference_links();
    return SensorNetwork::bidirectional(6, links);
}

Matrix random_spd(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix a(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) a(i, j) = n(rng);
    return a * a.transpose() + 0.5 * Matrix::Identity(4, 4);
}

std::vector<GaussianMixture> random_intensities(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> count(1, 10);
    std::uniform_real_distribution<double> w(0.05, 1.5);
    std::uniform_real_distribution<double> m(-5.0, 5.0);
    std::vector<GaussianMixture> out;
    for (int s = 0; s < 6; ++s) {
        GaussianMixture gm(4);
        for (int c = count(rng); c > 0; --c) {
            Vector mean(4);
            for (int i = 0; i < 4; ++i) mean(i) = m(rng);
            gm.push_back({w(rng), mean, random_spd(rng)});
        }
        out.push_back(std::move(gm));
    }
    return out;
}

Outcome contraction() {
    const auto cw = reference_weights();
    const Matrix deviation = cw.omega - Matrix::Ones(6, 6) * cw.fusion_weights.asDiagonal();
    const double sigma = Eigen::JacobiSVD<Matrix>(deviation).singularValues()(0);
    std::mt19937_64 rng(101);
    double worst_ratio = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const auto v = random_intensities(rng);
        const auto run = run_consensus(v, cw, BandwidthPolicy::full(), 20, 7, std::nullopt, true);
        double initial_sq = 0.0;
        for (const auto& g : v) initial_sq += std::pow(l2_distance(g, *run.reference), 2);
        const double initial = std::sqrt(initial_sq);
        for (std::size_t l = 0; l < run.rounds.size(); ++l) {
            const auto& d = run.rounds[l].distance_to_waa;
            const double bound = std::pow(sigma, static_cast<double>(l + 1)) * initial;
            worst_ratio = std::max(worst_ratio, *std::max_element(d.begin(), d.end()) / bound);
        }
    }
    return {worst_ratio <= 1.0 + 1e-9, fmt("sigma=%.6f, worst distance/bound=%.4f over 5 trials x 20 rounds", sigma, worst_ratio)};
}

Outcome waa_invariance() {
    const auto cw = reference_weights();
    std::mt19937_64 rng(202);
    auto v = random_intensities(rng);
    const auto reference = waa(v, cw.fusion_weights);
    double worst = 0.0;
    for (int l = 0; l < 10; ++l) {
        v = consensus_round(v, cw, BandwidthPolicy::full(), static_cast<std::uint64_t>(l)).intensities;
        worst = std::max(worst, l2_distance(waa(v, cw.fusion_weights), reference));
    }
    return {worst < 1e-9, fmt("max L2 drift of the weighted average over 10 rounds = %.3e", worst)};
}

Outcome deterministic_cardinality() {
    const auto cw = reference_weights();
    SamplingConfig sampling;
    const auto policy = BandwidthPolicy::with_replacement(sampling);
    std::mt19937_64 rng(303);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        auto v = random_intensities(rng);
        for (int l = 0; l < 10; ++l) {
            Vector before(6);
            for (int i = 0; i < 6; ++i) before(i) = total_weight(v[static_cast<std::size_t>(i)]);
            v = consensus_round(v, cw, policy, derive_seed(static_cast<std::uint64_t>(trial), {static_cast<std::uint64_t>(l)}))
                    .intensities;
            const Vector expected = cw.omega * before;
            for (int i = 0; i < 6; ++i)
                worst = std::max(worst, std::abs(total_weight(v[static_cast<std::size_t>(i)]) - expected(i)));
        }
    }
    return {worst <= 1e-10, fmt("max |w_after - Omega w_before| = %.3e over 20 trials x 10 rounds", worst)};
}

Outcome unbiasedness() {
    GaussianMixture gm(1);
    for (double w : {0.5, 0.25, 0.25}) gm.push_back({w, Vector::Constant(1, gm.size()), Matrix::Identity(1, 1)});
    SamplingConfig cfg;
    cfg.draw_mode = DrawMode::kFixedDraws;
    const double n = static_cast<double>(cfg.fixed_draw_count());
    const int trials = 100000;
    std::vector<double> sum(3, 0.0);
    Rng rng(404);
    for (int t = 0; t < trials; ++t) {
        const auto tx = sample_with_replacement(gm, cfg, rng);
        for (const auto& c : reconstruct(tx)) sum[static_cast<std::size_t>(c.mean(0))] += c.weight;
    }
    bool ok = true;
    std::ostringstream detail;
    for (std::size_t i = 0; i < 3; ++i) {
        const double p = gm[i].weight;
        const double se = std::sqrt(p * (1 - p) / (n * trials));
        const double z = (sum[i] / trials - p) / se;
        ok = ok && std::abs(z) <= 3.0;
        detail << (i ? ", " : "") << fmt("w=%.2f mean=%.5f z=%+.2f", p, sum[i] / trials, z);
    }
    return {ok, detail.str()};
}

double brute_force_ospa(std::vector<Vector> x, std::vector<Vector> y, double c) {
    if (x.size() > y.size()) std::swap(x, y);
    const std::size_t m = x.size(), n = y.size();
    if (n == 0) return 0.0;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    double best = std::numeric_limits<double>::infinity();
    do {
        std::vector<double> terms;
        for (std::size_t i = 0; i < m; ++i) terms.push_back(std::min(c, (x[i] - y[perm[i]]).norm()));
        std::sort(terms.begin(), terms.end());
        double s = 0.0;
        for (double t : terms) s += t;
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return (best + c * static_cast<double>(n - m)) / static_cast<double>(n);
}

Outcome ospa_oracle() {
    std::mt19937_64 rng(505);
    std::uniform_int_distribution<std::size_t> size(0, 5);
    std::uniform_real_distribution<double> u(-150.0, 150.0);
    const OspaConfig cfg;
    int mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<Vector> x, y;
        for (std::size_t i = size(rng); i > 0; --i) x.push_back((Vector(2) << u(rng), u(rng)).finished());
        for (std::size_t i = size(rng); i > 0; --i) y.push_back((Vector(2) << u(rng), u(rng)).finished());
        if (ospa(x, y, cfg).distance != brute_force_ospa(x, y, cfg.cutoff)) ++mismatches;
    }
    return {mismatches == 0, fmt("%d of 1000 random pairs differ from enumeration", mismatches)};
}

Outcome kalman_equivalence() {
    ScenarioConfig cfg = reference_scenario_config();
    cfg.targets = {TargetSpec{(Vector(4) << -120.0, -90.0, 3.0, 2.0).finished(), 1, 40}};
    cfg.detection_probability = 1.0;
    cfg.clutter_rate = 0.0;
    // Noisy truth can drift out of the region before step 40.
    cfg.truth_process_noise = false;
    const Scenario sc{cfg, build_models(cfg)};
    const auto stream = simulate(sc, 606);

    MotionModel motion = sc.models.motion;
    motion.survival_probability = constant_function(1.0);
    SensorModel sensor = sc.models.sensors[0];
    sensor.detection_probability = constant_function(1.0);
    sensor.clutter_intensity = constant_function(0.0);

    const Eigen::Vector4d m0(-115.0, -95.0, 0.0, 0.0);
    const Eigen::Matrix4d P0 = Eigen::Vector4d(100, 100, 25, 25).asDiagonal();
    GaussianMixture post(4, {{1.0, m0, P0}});
    Eigen::Vector4d x = m0;
    Eigen::Matrix4d P = P0;
    const Eigen::Matrix4d F = motion.transition;
    const Eigen::Matrix4d Q = motion.process_noise;
    const Eigen::Matrix<double, 2, 4> H = sensor.observation;
    const Eigen::Matrix2d R = sensor.noise;
    const PhdConfig phd;
    double worst = 0.0;
    for (int k = 1; k <= 40; ++k) {
        const auto& z = stream.measurements[static_cast<std::size_t>(k - 1)].per_sensor[0];
        if (z.size() != 1) return {false, fmt("expected one measurement at step %d, got %zu", k, z.size())};
        post = filter_step(post, motion, {GaussianMixture(4)}, {}, sensor, z, phd);

        x = F * x;
        P = F * P * F.transpose() + Q;
        const Eigen::Matrix2d S = H * P * H.transpose() + R;
        const Eigen::Matrix<double, 4, 2> K = P * H.transpose() * S.inverse();
        x += K * (Eigen::Vector2d(z[0]) - H * x);
        P = (Eigen::Matrix4d::Identity() - K * H) * P;

        const auto best = std::max_element(post.begin(), post.end(),
                                           [](const auto& a, const auto& b) { return a.weight < b.weight; });
        worst = std::max({worst, (best->mean - x).cwiseAbs().maxCoeff(), (best->covariance - P).cwiseAbs().maxCoeff()});
    }
    return {worst <= 1e-8, fmt("max abs deviation of mean/covariance over 40 steps = %.3e", worst)};
}

// Criteria 7 and 8 share one set of Monte Carlo runs.
struct TrendRuns {
    ExperimentResult none;
    std::map<std::size_t, ExperimentResult> full, proposed;
    ExperimentResult partial;
};

const TrendRuns& trend_runs() {
    static const TrendRuns runs = [] {
        ExperimentConfig base;
        base.mc_runs = 25;
        base.bandwidth = 5;
        base.master_seed = 20240607;
        base.jobs = std::max(1u, std::thread::hardware_concurrency());
        auto with = [&](Algorithm a, std::size_t alpha) {
            auto c = base;
            c.algorithm = a;
            c.alpha = alpha;
            return run_experiment(c);
        };
        TrendRuns r;
        r.none = with(Algorithm::kNoConsensus, 0);
        for (std::size_t alpha : {1u, 3u, 6u}) {
            r.full[alpha] = with(Algorithm::kFull, alpha);
            r.proposed[alpha] = with(Algorithm::kSampleReplacement, alpha);
        }
        r.partial = with(Algorithm::kPartialRank, 6);
        return r;
    }();
    return runs;
}

Outcome trend() {
    const auto& r = trend_runs();
    bool ok = true;
    std::ostringstream detail;
    for (const auto* series : {&r.full, &r.proposed}) {
        const char* name = series == &r.full ? "full" : "sample_replacement";
        detail << name << ":";
        const ExperimentResult* previous = &r.none;
        std::size_t previous_alpha = 0;
        detail << fmt(" a0=%.2f", r.none.summary.mean_time_averaged_ospa);
        for (const auto& [alpha, result] : *series) {
            const auto d = paired_difference(result, *previous);
            const bool step_ok = d.mean <= d.standard_error;
            ok = ok && step_ok;
            detail << fmt(" a%zu=%.2f", alpha, result.summary.mean_time_averaged_ospa);
            if (!step_ok) detail << fmt("(rises %.2f+-%.2f from a%zu)", d.mean, d.standard_error, previous_alpha);
            previous = &result;
            previous_alpha = alpha;
        }
        detail << "; ";
    }
    const auto& full6 = r.full.at(6);
    const auto& prop6 = r.proposed.at(6);
    const auto a = paired_difference(full6, prop6);
    const auto b = paired_difference(r.partial, prop6);
    const auto c = paired_difference(r.none, r.partial);
    const bool full_vs_prop = a.mean <= 2 * a.standard_error;
    const bool prop_vs_partial = b.mean > 2 * b.standard_error;
    const bool partial_vs_none = c.mean > 2 * c.standard_error;
    ok = ok && full_vs_prop && prop_vs_partial && partial_vs_none;
    detail << fmt("alpha=6: full-proposed=%.2f+-%.2f [%s], partial-proposed=%.2f+-%.2f [%s], none-partial=%.2f+-%.2f [%s]",
                  a.mean, a.standard_error, full_vs_prop ? "ok" : "violated", b.mean, b.standard_error,
                  prop_vs_partial ? "ok" : "violated", c.mean, c.standard_error, partial_vs_none ? "ok" : "violated");
    std::size_t failed = r.none.summary.failed_runs + r.partial.summary.failed_runs;
    for (const auto* series : {&r.full, &r.proposed})
        for (const auto& [alpha, result] : *series) failed += result.summary.failed_runs;
    if (failed > 0) {
        ok = false;
        detail << fmt("; %zu failed runs", failed);
    }
    return {ok, detail.str()};
}

Outcome bandwidth_compliance() {
    const auto& r = trend_runs();
    std::size_t transmissions = 0, violations = 0, cost_violations = 0, widest = 0;
    std::vector<const ExperimentResult*> checked{&r.partial};
    for (const auto& [alpha, result] : r.proposed) checked.push_back(&result);
    for (const auto* result : checked) {
        for (const auto& run : result->runs) {
            transmissions += run.transmissions;
            violations += run.bandwidth_violations;
            cost_violations += run.cost_order_violations;
            widest = std::max(widest, run.max_transmitted_components);
        }
    }
    return {transmissions > 0 && violations == 0 && cost_violations == 0 && widest <= 5,
            fmt("%zu transmissions, widest %zu components, %zu over B, %zu sampling broadcasts costlier than rank",
                transmissions, widest, violations, cost_violations)};
}

Outcome calibration() {
    auto cfg = reference_scenario_config();
    const auto models = build_models(cfg);
    const auto truth = generate_ground_truth(cfg, 909);
    double clutter = 0.0;
    const int frames = 10000;
    auto blind = cfg;
    blind.detection_probability = 0.0;
    const std::vector<SensorModel> one{models.sensors[0]};
    for (int f = 0; f < frames; ++f) {
        clutter += static_cast<double>(generate_measurements(truth.frames[0], one, blind, static_cast<std::uint64_t>(f)).per_sensor[0].size());
    }
    const double mean_clutter = clutter / frames;
    const double sigma = std::sqrt(5.0 / frames);
    const bool clutter_ok = std::abs(mean_clutter - 5.0) <= 3 * sigma;

    const std::vector<std::pair<int, int>> schedule{{1, 34}, {1, 40}, {1, 40}, {1, 37}, {1, 40},
                                                    {1, 19}, {10, 40}, {20, 40}, {16, 40}, {23, 40}};
    int bad_steps = 0;
    for (int k = 1; k <= 40; ++k) {
        std::set<int> expected, actual;
        for (std::size_t i = 0; i < schedule.size(); ++i)
            if (schedule[i].first <= k && k <= schedule[i].second) expected.insert(static_cast<int>(i) + 1);
        for (const auto& t : truth.frames[static_cast<std::size_t>(k - 1)].targets) actual.insert(t.id);
        if (expected != actual) ++bad_steps;
    }
    return {clutter_ok && bad_steps == 0,
            fmt("clutter mean %.4f (5 +- %.4f); %d timesteps off the target schedule", mean_clutter, 3 * sigma, bad_steps)};
}

Outcome weight_gate() {
    const auto net = reference_network();
    auto not_stochastic = reference_weights();
    not_stochastic.omega(0, 0) = 0.9;
    const auto r1 = validate_weights(not_stochastic, net);
    const auto r2 = validate_weights({Matrix::Identity(6, 6), Vector::Constant(6, 1.0 / 6.0)}, net);
    const auto r3 = validate_weights(reference_weights(), net);
    auto names = [](const WeightValidation& v) {
        std::string s;
        for (const auto& f : v.failures) s += (s.empty() ? "" : "+") + f;
        return s.empty() ? std::string("none") : s;
    };
    const bool ok = !r1.ok() && !r1.row_stochastic && !r2.ok() && !r2.contraction && r2.row_stochastic && r3.ok();
    return {ok, fmt("non-stochastic -> %s; identity -> %s (sigma=%.3f); reference -> %s (sigma=%.4f)", names(r1).c_str(),
                    names(r2).c_str(), r2.contraction_factor, names(r3).c_str(), r3.contraction_factor)};
}

struct Criterion {
    int id;
    const char* name;
    double time_limit_s;  // 0: no limit
    std::function<Outcome()> check;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {1, "consensus contraction", 10, contraction},
        {2, "weighted-average invariance", 0, waa_invariance},
        {3, "deterministic cardinality", 0, deterministic_cardinality},
        {4, "sampling unbiasedness", 30, unbiasedness},
        {5, "OSPA oracle equivalence", 10, ospa_oracle},
        {6, "Kalman equivalence", 0, kalman_equivalence},
        {7, "OSPA trend in alpha and algorithm ordering", 0, trend},
        {8, "bandwidth compliance", 0, bandwidth_compliance},
        {9, "clutter and cardinality calibration", 0, calibration},
        {10, "weight-validation gate", 0, weight_gate},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));

    int failures = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.contains(c.id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.time_limit_s > 0 && seconds > c.time_limit_s) {
            o.pass = false;
            o.detail += fmt(" (runtime %.1fs over the %.0fs limit)", seconds, c.time_limit_s);
        }
        std::printf("%s %2d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), seconds);
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
