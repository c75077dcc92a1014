#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dgmphd/consensus.hpp"
#include "dgmphd/gaussian_mixture.hpp"
#include "dgmphd/phd_filter.hpp"
#include "dgmphd/random.hpp"

namespace dgmphd {

/// Axis-aligned surveillance rectangle over the first two state entries (m).
struct Region {
    double x_min = -200.0;
    double x_max = 200.0;
    double y_min = -200.0;
    double y_max = 200.0;

    [[nodiscard]] bool contains(const Vector& v) const {
        return v(0) >= x_min && v(0) <= x_max && v(1) >= y_min && v(1) <= y_max;
    }
    [[nodiscard]] double area() const { return (x_max - x_min) * (y_max - y_min); }
};

/// A scripted target, alive on timesteps [start, end] inclusive.
struct TargetSpec {
    Vector initial_state;
    int start = 1;
    int end = 1;
};

struct ScenarioConfig {
    Region region;
    double step_time = 1.0;
    /// Acceleration variance scaling Q (m² s⁻⁴).
    double process_noise_scale = 9.0;
    std::vector<TargetSpec> targets;
    double detection_probability = 0.98;
    double survival_probability = 0.99;
    /// Clutter per unit area (m⁻²).
    double clutter_rate = 3.125e-5;
    double measurement_noise_variance = 25.0;
    int horizon = 40;
    std::size_t sensor_count = 6;
    /// Perturb true trajectories with process noise; off means nominal
    /// constant-velocity trajectories.
    bool truth_process_noise = false;

    double birth_weight = 0.2;
    Vector birth_variances = (Vector(4) << 100.0, 100.0, 25.0, 25.0).finished();
    double spawn_weight = 0.1;
    Vector spawn_variances = (Vector(4) << 100.0, 100.0, 400.0, 400.0).finished();

    /// Undirected links (0-based); empty means a ring.
    std::vector<SensorNetwork::Edge> links;
    /// Consensus matrix; empty means standard Metropolis weights.
    Matrix omega;

    [[nodiscard]] double expected_clutter() const { return clutter_rate * region.area(); }

    void validate() const {
        detail::require(region.area() > 0.0, "surveillance region must have positive area");
        detail::require(step_time > 0.0, "step time must be positive");
        detail::require(horizon >= 1, "horizon must be at least one step");
        detail::require(sensor_count >= 1, "need at least one sensor");
        detail::require(detection_probability >= 0.0 && detection_probability <= 1.0, "detection probability out of range");
        detail::require(survival_probability >= 0.0 && survival_probability <= 1.0, "survival probability out of range");
        detail::require(clutter_rate >= 0.0 && process_noise_scale >= 0.0, "rates must be nonnegative");
        detail::require(measurement_noise_variance > 0.0, "measurement noise must be positive");
        for (const auto& t : targets) {
            detail::require(t.initial_state.size() == 4, "target states are [x, y, vx, vy]");
            detail::require(t.start < t.end, "target start must precede its end");
        }
    }
};

/// Linear-Gaussian models and network derived from a ScenarioConfig.
struct ScenarioModels {
    MotionModel motion;
    BirthModel birth;
    SpawnModel spawn;
    std::vector<SensorModel> sensors;
    SensorNetwork network;
    ConsensusWeights weights;
};

struct Scenario {
    ScenarioConfig config;
    ScenarioModels models;
};

inline Matrix constant_velocity_transition(double h) {
    Matrix F = Matrix::Identity(4, 4);
    F(0, 2) = h;
    F(1, 3) = h;
    return F;
}

inline Matrix constant_velocity_noise(double h, double scale) {
    Matrix Q = Matrix::Zero(4, 4);
    const double a = h * h * h * h / 4.0, b = h * h * h / 2.0, c = h * h;
    for (int i = 0; i < 2; ++i) {
        Q(i, i) = a;
        Q(i, i + 2) = Q(i + 2, i) = b;
        Q(i + 2, i + 2) = c;
    }
    return scale * Q;
}

/// The six-sensor topology: links 1-2, 2-3, 2-4, 3-6, 4-5, 4-6, 5-6 (0-based here).
inline std::vector<SensorNetwork::Edge> reference_links() {
    return {{0, 1}, {1, 2}, {1, 3}, {2, 5}, {3, 4}, {3, 5}, {4, 5}};
}

inline Matrix reference_omega() {
    Matrix omega(6, 6);
    omega << 0.8, 0.2, 0.0, 0.0, 0.0, 0.0,
             0.2, 0.4, 0.2, 0.2, 0.0, 0.0,
             0.0, 0.2, 0.6, 0.0, 0.0, 0.2,
             0.0, 0.2, 0.0, 0.4, 0.2, 0.2,
             0.0, 0.0, 0.0, 0.2, 0.6, 0.2,
             0.0, 0.0, 0.2, 0.2, 0.2, 0.4;
    return omega;
}

/// Reference layout of the ten scripted targets. Start and end steps follow the
/// published schedule; positions and velocities are a well-separated layout
/// inside the 400 m × 400 m region.
inline std::vector<TargetSpec> reference_targets() {
    auto t = [](double x, double y, double vx, double vy, int start, int end) {
        return TargetSpec{(Vector(4) << x, y, vx, vy).finished(), start, end};
    };
    return {
        t(-150.0, -150.0, 3.0, 2.5, 1, 34),
        t(150.0, -150.0, -3.0, 3.0, 1, 40),
        t(-150.0, 150.0, 3.0, -2.0, 1, 40),
        t(150.0, 150.0, -2.5, -3.0, 1, 37),
        t(0.0, -170.0, 0.5, 2.5, 1, 40),
        t(10.0, 170.0, -2.0, -4.0, 1, 19),
        t(-175.0, 0.0, 4.0, 0.5, 10, 40),
        t(175.0, 20.0, -4.0, -1.0, 20, 40),
        t(150.0, -100.0, 1.0, 3.0, 16, 40),
        t(10.0, 60.0, 1.0, 2.0, 23, 40),
    };
}

inline ScenarioConfig reference_scenario_config() {
    ScenarioConfig cfg;
    cfg.targets = reference_targets();
    cfg.links = reference_links();
    cfg.omega = reference_omega();
    return cfg;
}

inline std::vector<SensorNetwork::Edge> ring_links(std::size_t n) {
    std::vector<SensorNetwork::Edge> links;
    for (std::size_t i = 0; i + 1 < n; ++i) links.emplace_back(i, i + 1);
    if (n > 2) links.emplace_back(n - 1, 0);
    return links;
}

inline ScenarioModels build_models(const ScenarioConfig& cfg) {
    cfg.validate();
    const Region region = cfg.region;

    MotionModel motion;
    motion.transition = constant_velocity_transition(cfg.step_time);
    motion.process_noise = constant_velocity_noise(cfg.step_time, cfg.process_noise_scale);
    const double ps = cfg.survival_probability;
    motion.survival_probability = [region, ps](const Vector& x) { return region.contains(x) ? ps : 0.0; };

    GaussianMixture birth(4);
    for (const auto& t : cfg.targets) {
        Vector mean = Vector::Zero(4);
        mean.head(2) = t.initial_state.head(2);
        birth.push_back({cfg.birth_weight, mean, cfg.birth_variances.asDiagonal()});
    }

    SpawnModel spawn;
    if (cfg.spawn_weight > 0.0) {
        spawn.terms.push_back({cfg.spawn_weight, Matrix::Identity(4, 4), Vector::Zero(4),
                               cfg.spawn_variances.asDiagonal()});
    }

    Matrix H = Matrix::Zero(2, 4);
    H(0, 0) = 1.0;
    H(1, 1) = 1.0;
    const Matrix R = cfg.measurement_noise_variance * Matrix::Identity(2, 2);
    const double pd = cfg.detection_probability;
    const double lambda = cfg.clutter_rate;
    SensorModel sensor;
    sensor.observation = H;
    sensor.noise = R;
    sensor.detection_probability = [region, pd](const Vector& x) { return region.contains(x) ? pd : 0.0; };
    // κ(z) = λ_c · A · u(z), i.e. λ_c inside the region.
    sensor.clutter_intensity = [region, lambda](const Vector& z) { return region.contains(z) ? lambda : 0.0; };

    const auto links = cfg.links.empty() ? ring_links(cfg.sensor_count) : cfg.links;
    SensorNetwork network = SensorNetwork::bidirectional(cfg.sensor_count, links);
    ConsensusWeights weights = cfg.omega.size() == 0
                                   ? metropolis_weights(network)
                                   : ConsensusWeights{cfg.omega, Vector::Constant(static_cast<Eigen::Index>(cfg.sensor_count),
                                                                                  1.0 / static_cast<double>(cfg.sensor_count))};
    require_valid_weights(weights, network);

    return {std::move(motion), BirthModel{std::move(birth)}, std::move(spawn),
            std::vector<SensorModel>(cfg.sensor_count, sensor), std::move(network), std::move(weights)};
}

inline Scenario reference_scenario() {
    auto cfg = reference_scenario_config();
    auto models = build_models(cfg);
    return {std::move(cfg), std::move(models)};
}

struct TruthTarget {
    int id = 0;  ///< 1-based index into ScenarioConfig::targets
    Vector state;
};

struct TruthFrame {
    int timestep = 0;
    std::vector<TruthTarget> targets;

    [[nodiscard]] std::vector<Vector> states() const {
        std::vector<Vector> out;
        out.reserve(targets.size());
        for (const auto& t : targets) out.push_back(t.state);
        return out;
    }
};

struct GroundTruth {
    std::vector<TruthFrame> frames;  ///< frames[k - 1] holds timestep k
};

struct MeasurementFrame {
    int timestep = 0;
    std::vector<std::vector<Vector>> per_sensor;
};

namespace detail {

inline Matrix psd_square_root(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
    const Vector roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * roots.asDiagonal();
}

inline Vector sample_normal(const Matrix& root, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector e(root.cols());
    for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = normal(rng);
    return root * e;
}

}  // namespace detail

/// Advances the truth by one step: live targets move under the constant
/// velocity model (plus process noise when enabled) and are dropped once past
/// their end step or outside the region; targets starting now are inserted at
/// their scripted initial state.
inline TruthFrame step_ground_truth(const TruthFrame& previous, const ScenarioConfig& cfg, std::uint64_t seed) {
    const int k = previous.timestep + 1;
    detail::require(k <= cfg.horizon, "ground truth already reached the horizon");
    const Matrix F = constant_velocity_transition(cfg.step_time);
    Matrix root;
    if (cfg.truth_process_noise) root = detail::psd_square_root(constant_velocity_noise(cfg.step_time, cfg.process_noise_scale));
    Rng rng = make_stream(seed, {tag(Stream::kTruthNoise), static_cast<std::uint64_t>(k)});

    TruthFrame next{k, {}};
    for (const auto& target : previous.targets) {
        const auto& t = cfg.targets.at(static_cast<std::size_t>(target.id - 1));
        if (t.end < k) continue;
        Vector state = F * target.state;
        if (cfg.truth_process_noise) state += detail::sample_normal(root, rng);
        if (!cfg.region.contains(state)) continue;
        next.targets.push_back({target.id, std::move(state)});
    }
    for (std::size_t i = 0; i < cfg.targets.size(); ++i) {
        if (cfg.targets[i].start == k) next.targets.push_back({static_cast<int>(i) + 1, cfg.targets[i].initial_state});
    }
    std::sort(next.targets.begin(), next.targets.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return next;
}

inline GroundTruth generate_ground_truth(const ScenarioConfig& cfg, std::uint64_t seed) {
    GroundTruth truth;
    TruthFrame frame;
    for (int k = 1; k <= cfg.horizon; ++k) {
        frame = step_ground_truth(frame, cfg, seed);
        truth.frames.push_back(frame);
    }
    return truth;
}

/// Per-sensor measurement sets: each in-region target is detected with the
/// configured probability and observed with Gaussian noise; Poisson clutter is
/// uniform over the region; the set is shuffled.
inline MeasurementFrame generate_measurements(const TruthFrame& truth, std::span<const SensorModel> sensors,
                                              const ScenarioConfig& cfg, std::uint64_t seed) {
    const auto k = static_cast<std::uint64_t>(truth.timestep);
    MeasurementFrame frame{truth.timestep, {}};
    frame.per_sensor.reserve(sensors.size());
    for (std::size_t s = 0; s < sensors.size(); ++s) {
        const auto& sensor = sensors[s];
        Rng detect = make_stream(seed, {tag(Stream::kDetection), k, s});
        Rng noise = make_stream(seed, {tag(Stream::kMeasurementNoise), k, s});
        Rng count_rng = make_stream(seed, {tag(Stream::kClutterCount), k, s});
        Rng position = make_stream(seed, {tag(Stream::kClutterPosition), k, s});
        Rng shuffle = make_stream(seed, {tag(Stream::kShuffle), k, s});

        const Matrix root = detail::psd_square_root(sensor.noise);
        std::bernoulli_distribution detected(cfg.detection_probability);
        std::vector<Vector> z;
        for (const auto& target : truth.targets) {
            if (!cfg.region.contains(target.state)) continue;
            if (!detected(detect)) continue;
            z.push_back(sensor.observation * target.state + detail::sample_normal(root, noise));
        }
        if (cfg.clutter_rate > 0.0) {
            std::poisson_distribution<int> clutter_count(cfg.expected_clutter());
            std::uniform_real_distribution<double> ux(cfg.region.x_min, cfg.region.x_max);
            std::uniform_real_distribution<double> uy(cfg.region.y_min, cfg.region.y_max);
            const int n = clutter_count(count_rng);
            for (int c = 0; c < n; ++c) {
                Vector p(2);
                p(0) = ux(position);
                p(1) = uy(position);
                z.push_back(std::move(p));
            }
        }
        std::shuffle(z.begin(), z.end(), shuffle);
        frame.per_sensor.push_back(std::move(z));
    }
    return frame;
}

/// Truth and measurement streams for a whole scenario run.
struct ScenarioStream {
    int horizon = 0;
    std::size_t sensor_count = 0;
    GroundTruth truth;
    std::vector<MeasurementFrame> measurements;
};

inline ScenarioStream simulate(const Scenario& scenario, std::uint64_t seed) {
    ScenarioStream stream{scenario.config.horizon, scenario.config.sensor_count,
                          generate_ground_truth(scenario.config, seed), {}};
    for (const auto& frame : stream.truth.frames) {
        stream.measurements.push_back(generate_measurements(frame, scenario.models.sensors, scenario.config, seed));
    }
    return stream;
}

// Line-oriented text format:
//   dgmphd-stream 1
//   horizon <K> sensors <N>
//   truth <k> <target id> <state entries...>
//   meas <k> <sensor (0-based)> <measurement entries...>
// Lines starting with '#' and blank lines are ignored. Values use 17
// significant digits so a write/read cycle is exact.

inline void write_stream(std::ostream& out, const ScenarioStream& stream) {
    const auto flags = out.flags();
    const auto precision = out.precision();
    out << std::setprecision(17);
    out << "dgmphd-stream 1\n";
    out << "horizon " << stream.horizon << " sensors " << stream.sensor_count << "\n";
    auto write_vector = [&](const Vector& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << v(i);
        out << '\n';
    };
    for (const auto& frame : stream.truth.frames) {
        for (const auto& t : frame.targets) {
            out << "truth " << frame.timestep << ' ' << t.id;
            write_vector(t.state);
        }
    }
    for (const auto& frame : stream.measurements) {
        for (std::size_t s = 0; s < frame.per_sensor.size(); ++s) {
            for (const auto& z : frame.per_sensor[s]) {
                out << "meas " << frame.timestep << ' ' << s;
                write_vector(z);
            }
        }
    }
    out.flags(flags);
    out.precision(precision);
}

inline ScenarioStream read_stream(std::istream& in) {
    ScenarioStream stream;
    std::string line;
    bool have_magic = false;
    bool have_header = false;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& why) {
        throw std::invalid_argument("stream line " + std::to_string(line_no) + ": " + why);
    };
    auto read_values = [&](std::istringstream& fields) {
        std::vector<double> values;
        std::string token;
        while (fields >> token) {
            try {
                std::size_t used = 0;
                values.push_back(std::stod(token, &used));
                if (used != token.size()) fail("bad number '" + token + "'");
            } catch (const std::logic_error&) {
                fail("bad number '" + token + "'");
            }
        }
        if (values.empty()) fail("missing vector entries");
        return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size())).eval();
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        std::string kind;
        fields >> kind;
        if (!have_magic) {
            int version = 0;
            if (kind != "dgmphd-stream" || !(fields >> version) || version != 1) fail("expected 'dgmphd-stream 1'");
            have_magic = true;
            continue;
        }
        if (kind == "horizon") {
            std::string sensors_word;
            if (!(fields >> stream.horizon >> sensors_word >> stream.sensor_count) || sensors_word != "sensors" ||
                stream.horizon < 1 || stream.sensor_count < 1) {
                fail("bad header");
            }
            have_header = true;
            for (int k = 1; k <= stream.horizon; ++k) {
                stream.truth.frames.push_back({k, {}});
                stream.measurements.push_back({k, std::vector<std::vector<Vector>>(stream.sensor_count)});
            }
            continue;
        }
        if (!have_header) fail("record before header");
        int k = 0;
        long long index = 0;
        if (!(fields >> k >> index)) fail("bad record prefix");
        if (k < 1 || k > stream.horizon) fail("timestep out of range");
        if (kind == "truth") {
            stream.truth.frames[static_cast<std::size_t>(k - 1)].targets.push_back(
                {static_cast<int>(index), read_values(fields)});
        } else if (kind == "meas") {
            if (index < 0 || static_cast<std::size_t>(index) >= stream.sensor_count) fail("sensor out of range");
            stream.measurements[static_cast<std::size_t>(k - 1)].per_sensor[static_cast<std::size_t>(index)].push_back(
                read_values(fields));
        } else {
            fail("unknown record '" + kind + "'");
        }
    }
    if (!have_header) throw std::invalid_argument("stream has no header");
    return stream;
}

}  // namespace dgmphd
