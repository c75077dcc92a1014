#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "dgmphd/gaussian_mixture.hpp"

namespace dgmphd {

using StateFunction = std::function<double(const Vector&)>;

inline StateFunction constant_function(double value) {
    return [value](const Vector&) { return value; };
}

struct MotionModel {
    Matrix transition;
    Matrix process_noise;
    StateFunction survival_probability = constant_function(1.0);
};

struct BirthModel {
    GaussianMixture intensity;
};

struct SpawnTerm {
    double weight = 0.0;
    Matrix transition;
    Vector offset;
    Matrix covariance;
};

struct SpawnModel {
    std::vector<SpawnTerm> terms;
};

struct SensorModel {
    Matrix observation;
    Matrix noise;
    StateFunction detection_probability = constant_function(1.0);
    /// Clutter intensity evaluated at a measurement.
    StateFunction clutter_intensity = constant_function(0.0);
};

struct PhdConfig {
    double prune_threshold = 1e-5;
    double merge_threshold = 15.0;
    std::size_t max_components = 50;
    double extraction_threshold = 0.5;
    /// Use the Joseph form for the covariance update instead of (I - KH)P.
    bool joseph_form = false;
};

/// Prune, then merge, then cap.
inline GaussianMixture reduce(const GaussianMixture& gm, const PhdConfig& config) {
    return cap(merge(prune(gm, config.prune_threshold), config.merge_threshold), config.max_components);
}

/// Prior intensity: survivors, then spawns (term-major), then births.
inline GaussianMixture predict(const GaussianMixture& posterior, const MotionModel& motion,
                               const BirthModel& birth, const SpawnModel& spawn) {
    const Eigen::Index d = posterior.dimension();
    detail::require(motion.transition.rows() == d && motion.transition.cols() == d,
                    "transition matrix does not match state dimension");
    detail::require(motion.process_noise.rows() == d && motion.process_noise.cols() == d,
                    "process noise does not match state dimension");
    detail::require(birth.intensity.dimension() == d, "birth intensity dimension mismatch");

    GaussianMixture prior(d);
    prior.reserve(posterior.size() * (1 + spawn.terms.size()) + birth.intensity.size());
    const Matrix& F = motion.transition;
    for (const auto& c : posterior) {
        const double ps = motion.survival_probability(c.mean);
        prior.push_back({ps * c.weight, F * c.mean,
                         detail::symmetrized(motion.process_noise + F * c.covariance * F.transpose())});
    }
    for (const auto& term : spawn.terms) {
        detail::require(term.transition.rows() == d && term.transition.cols() == d &&
                            term.offset.size() == d && term.covariance.rows() == d &&
                            term.covariance.cols() == d,
                        "spawn term does not match state dimension");
        for (const auto& c : posterior) {
            prior.push_back({c.weight * term.weight, term.transition * c.mean + term.offset,
                             detail::symmetrized(term.covariance +
                                                 term.transition * c.covariance * term.transition.transpose())});
        }
    }
    for (const auto& c : birth.intensity) prior.push_back(c);
    return prior;
}

/// Posterior intensity: the missed-detection copy of the prior followed by one
/// block of Kalman-updated components per measurement.
inline GaussianMixture update(const GaussianMixture& prior, const SensorModel& sensor,
                              std::span<const Vector> measurements, bool joseph_form = false) {
    const Eigen::Index dx = prior.dimension();
    const Matrix& H = sensor.observation;
    const Eigen::Index dz = H.rows();
    detail::require(H.cols() == dx, "observation matrix does not match state dimension");
    detail::require(sensor.noise.rows() == dz && sensor.noise.cols() == dz,
                    "measurement noise does not match measurement dimension");
    for (const auto& z : measurements) detail::require(z.size() == dz, "measurement has wrong dimension");

    struct Innovation {
        double detection;
        Vector predicted;
        Matrix covariance;
        Matrix gain;
        Matrix updated_covariance;
    };
    std::vector<Innovation> terms;
    terms.reserve(prior.size());
    const Matrix I = Matrix::Identity(dx, dx);
    for (const auto& c : prior) {
        Innovation t;
        t.detection = sensor.detection_probability(c.mean);
        if (t.detection > 0.0 && c.weight > 0.0 && !measurements.empty()) {
            t.predicted = H * c.mean;
            t.covariance = detail::symmetrized(H * c.covariance * H.transpose() + sensor.noise);
            Eigen::LLT<Matrix> llt(t.covariance);
            if (llt.info() != Eigen::Success) throw NumericalError("innovation covariance is singular");
            t.gain = llt.solve(H * c.covariance).transpose();
            const Matrix IKH = I - t.gain * H;
            if (joseph_form) {
                t.updated_covariance = IKH * c.covariance * IKH.transpose() +
                                       t.gain * sensor.noise * t.gain.transpose();
            } else {
                t.updated_covariance = IKH * c.covariance;
            }
            t.updated_covariance = detail::symmetrized(t.updated_covariance);
        }
        terms.push_back(std::move(t));
    }

    GaussianMixture posterior(dx);
    posterior.reserve(prior.size() * (1 + measurements.size()));
    for (std::size_t l = 0; l < prior.size(); ++l) {
        const auto& c = prior[l];
        posterior.push_back({(1.0 - terms[l].detection) * c.weight, c.mean, c.covariance});
    }

    std::vector<double> unnormalized(prior.size());
    for (const auto& z : measurements) {
        double denominator = sensor.clutter_intensity(z);
        for (std::size_t l = 0; l < prior.size(); ++l) {
            const auto& t = terms[l];
            if (t.predicted.size() == 0) {
                unnormalized[l] = 0.0;
                continue;
            }
            unnormalized[l] = t.detection * prior[l].weight * detail::gaussian_density(z, t.predicted, t.covariance);
            denominator += unnormalized[l];
        }
        if (denominator <= 0.0) continue;
        for (std::size_t l = 0; l < prior.size(); ++l) {
            if (unnormalized[l] == 0.0) continue;
            const auto& t = terms[l];
            posterior.push_back({unnormalized[l] / denominator, prior[l].mean + t.gain * (z - t.predicted),
                                 t.updated_covariance});
        }
    }
    return posterior;
}

/// Means of components with weight ≥ the extraction threshold, heaviest first.
inline std::vector<Vector> extract_targets(const GaussianMixture& posterior, const PhdConfig& config) {
    std::vector<std::size_t> picked;
    for (std::size_t i = 0; i < posterior.size(); ++i) {
        if (posterior[i].weight >= config.extraction_threshold) picked.push_back(i);
    }
    std::stable_sort(picked.begin(), picked.end(),
                     [&](std::size_t a, std::size_t b) { return posterior[a].weight > posterior[b].weight; });
    std::vector<Vector> states;
    states.reserve(picked.size());
    for (std::size_t i : picked) states.push_back(posterior[i].mean);
    return states;
}

inline GaussianMixture filter_step(const GaussianMixture& posterior, const MotionModel& motion,
                                   const BirthModel& birth, const SpawnModel& spawn, const SensorModel& sensor,
                                   std::span<const Vector> measurements, const PhdConfig& config) {
    return reduce(update(predict(posterior, motion, birth, spawn), sensor, measurements, config.joseph_form),
                  config);
}

}  // namespace dgmphd
