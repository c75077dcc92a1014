#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "dgmphd/linalg.hpp"

namespace dgmphd {

/// One weighted Gaussian term of an intensity. The weight is the expected
/// number of targets the term accounts for.
struct GaussianComponent {
    double weight = 0.0;
    Vector mean;
    Matrix covariance;
};

/// True when `cov` is square, symmetric to 1e-12 relative and positive definite.
inline bool is_valid_covariance(const Matrix& cov) {
    if (cov.rows() != cov.cols() || cov.rows() == 0) return false;
    const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) return false;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov, Eigen::EigenvaluesOnly);
    return eig.info() == Eigen::Success && eig.eigenvalues().minCoeff() > 0.0;
}

/// Weighted Gaussian sum over a fixed-dimension state space. Components keep
/// insertion order; every operation below returns a new mixture.
class GaussianMixture {
public:
    using const_iterator = std::vector<GaussianComponent>::const_iterator;

    explicit GaussianMixture(Eigen::Index dimension) : dimension_(dimension) {
        detail::require(dimension > 0, "mixture dimension must be positive");
    }

    GaussianMixture(Eigen::Index dimension, std::vector<GaussianComponent> components)
        : GaussianMixture(dimension) {
        components_.reserve(components.size());
        for (auto& c : components) push_back(std::move(c));
    }

    void push_back(GaussianComponent component) {
        detail::require(component.mean.size() == dimension_, "component mean has wrong dimension");
        detail::require(component.covariance.rows() == dimension_ &&
                            component.covariance.cols() == dimension_,
                        "component covariance has wrong shape");
        detail::require(component.weight >= 0.0 && std::isfinite(component.weight),
                        "component weight must be finite and nonnegative");
        components_.push_back(std::move(component));
    }

    void reserve(std::size_t n) { components_.reserve(n); }

    [[nodiscard]] Eigen::Index dimension() const { return dimension_; }
    [[nodiscard]] std::size_t size() const { return components_.size(); }
    [[nodiscard]] bool empty() const { return components_.empty(); }
    [[nodiscard]] const std::vector<GaussianComponent>& components() const { return components_; }
    [[nodiscard]] const GaussianComponent& operator[](std::size_t i) const { return components_[i]; }
    [[nodiscard]] const_iterator begin() const { return components_.begin(); }
    [[nodiscard]] const_iterator end() const { return components_.end(); }

private:
    Eigen::Index dimension_;
    std::vector<GaussianComponent> components_;
};

inline double evaluate_at(const GaussianMixture& gm, const Vector& x) {
    detail::require(x.size() == gm.dimension(), "evaluation point has wrong dimension");
    double value = 0.0;
    for (const auto& c : gm) {
        if (c.weight == 0.0) continue;
        value += c.weight * detail::gaussian_density(x, c.mean, c.covariance);
    }
    return value;
}

/// Integral of the intensity, i.e. the expected cardinality.
inline double total_weight(const GaussianMixture& gm) {
    double sum = 0.0;
    for (const auto& c : gm) sum += c.weight;
    return sum;
}

inline GaussianMixture scale(const GaussianMixture& gm, double factor) {
    detail::require(factor >= 0.0, "scale factor must be nonnegative");
    GaussianMixture out(gm.dimension());
    out.reserve(gm.size());
    for (const auto& c : gm) out.push_back({c.weight * factor, c.mean, c.covariance});
    return out;
}

inline GaussianMixture mixture_sum(std::span<const GaussianMixture> mixtures) {
    detail::require(!mixtures.empty(), "mixture_sum needs at least one mixture");
    GaussianMixture out(mixtures.front().dimension());
    std::size_t n = 0;
    for (const auto& gm : mixtures) n += gm.size();
    out.reserve(n);
    for (const auto& gm : mixtures) {
        detail::require(gm.dimension() == out.dimension(), "mixture dimensions differ");
        for (const auto& c : gm) out.push_back(c);
    }
    return out;
}

inline GaussianMixture mixture_sum(const GaussianMixture& a, const GaussianMixture& b) {
    const GaussianMixture parts[] = {a, b};
    return mixture_sum(parts);
}

/// Drops components with weight strictly below `threshold`.
inline GaussianMixture prune(const GaussianMixture& gm, double threshold) {
    detail::require(threshold >= 0.0, "prune threshold must be nonnegative");
    GaussianMixture out(gm.dimension());
    out.reserve(gm.size());
    for (const auto& c : gm) {
        if (c.weight >= threshold) out.push_back(c);
    }
    return out;
}

/// Greedy moment-matching merge. The heaviest unmerged component absorbs every
/// remaining component whose squared Mahalanobis distance to it, measured with
/// the candidate's own covariance, is at most `merge_threshold`. Output is in order of
/// absorption (descending weight of the absorbing component).
inline GaussianMixture merge(const GaussianMixture& gm, double merge_threshold) {
    detail::require(merge_threshold >= 0.0, "merge threshold must be nonnegative");
    const auto& comps = gm.components();
    std::vector<std::size_t> remaining(comps.size());
    std::iota(remaining.begin(), remaining.end(), std::size_t{0});

    std::vector<Eigen::LLT<Matrix>> factors;
    factors.reserve(comps.size());
    for (const auto& c : comps) {
        factors.emplace_back(c.covariance);
        if (factors.back().info() != Eigen::Success) throw NumericalError("merge: covariance is not positive definite");
    }

    GaussianMixture out(gm.dimension());
    std::vector<std::size_t> group;
    std::vector<std::size_t> rest;
    while (!remaining.empty()) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < remaining.size(); ++k) {
            if (comps[remaining[k]].weight > comps[remaining[best]].weight) best = k;
        }
        const auto& head = comps[remaining[best]];

        group.clear();
        rest.clear();
        for (std::size_t idx : remaining) {
            const Vector diff = comps[idx].mean - head.mean;
            const double d2 = diff.dot(factors[idx].solve(diff));
            if (d2 <= merge_threshold) {
                group.push_back(idx);
            } else {
                rest.push_back(idx);
            }
        }

        double w = 0.0;
        for (std::size_t idx : group) w += comps[idx].weight;
        if (group.size() == 1 || w == 0.0) {
            out.push_back({w, head.mean, head.covariance});
        } else {
            Vector mean = Vector::Zero(gm.dimension());
            for (std::size_t idx : group) mean += comps[idx].weight * comps[idx].mean;
            mean /= w;
            Matrix cov = Matrix::Zero(gm.dimension(), gm.dimension());
            for (std::size_t idx : group) {
                const Vector spread = mean - comps[idx].mean;
                cov += comps[idx].weight * (comps[idx].covariance + spread * spread.transpose());
            }
            cov /= w;
            out.push_back({w, std::move(mean), detail::symmetrized(cov)});
        }
        remaining.swap(rest);
    }
    return out;
}

/// Keeps the `max_components` heaviest components (ties by original order),
/// preserving their relative order.
inline GaussianMixture cap(const GaussianMixture& gm, std::size_t max_components) {
    detail::require(max_components >= 1, "component cap must be at least 1");
    if (gm.size() <= max_components) return gm;
    std::vector<std::size_t> order(gm.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return gm[a].weight > gm[b].weight; });
    order.resize(max_components);
    std::sort(order.begin(), order.end());
    GaussianMixture out(gm.dimension());
    out.reserve(max_components);
    for (std::size_t idx : order) out.push_back(gm[idx]);
    return out;
}

namespace detail {

inline std::vector<double> component_key(const GaussianComponent& c) {
    std::vector<double> key(c.mean.data(), c.mean.data() + c.mean.size());
    key.insert(key.end(), c.covariance.data(), c.covariance.data() + c.covariance.size());
    return key;
}

struct SignedTerm {
    double coefficient;
    const GaussianComponent* component;
};

/// Sums coefficients of terms whose mean and covariance are bit-identical.
inline std::vector<SignedTerm> collect_terms(std::vector<SignedTerm> terms) {
    std::map<std::vector<double>, std::size_t> index;
    std::vector<SignedTerm> out;
    for (const auto& t : terms) {
        auto [it, inserted] = index.try_emplace(component_key(*t.component), out.size());
        if (inserted) {
            out.push_back(t);
        } else {
            out[it->second].coefficient += t.coefficient;
        }
    }
    return out;
}

/// ∫ N(x; a.mean, a.cov) N(x; b.mean, b.cov) dx.
inline double gaussian_overlap(const GaussianComponent& a, const GaussianComponent& b) {
    return gaussian_density(a.mean, b.mean, a.covariance + b.covariance);
}

inline double quadratic_form(const std::vector<SignedTerm>& terms) {
    double sum = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (terms[i].coefficient == 0.0) continue;
        sum += terms[i].coefficient * terms[i].coefficient *
               gaussian_overlap(*terms[i].component, *terms[i].component);
        for (std::size_t j = i + 1; j < terms.size(); ++j) {
            if (terms[j].coefficient == 0.0) continue;
            sum += 2.0 * terms[i].coefficient * terms[j].coefficient *
                   gaussian_overlap(*terms[i].component, *terms[j].component);
        }
    }
    return sum;
}

}  // namespace detail

/// Combines components whose mean and covariance are bit-identical by adding
/// their weights. The represented function is unchanged.
inline GaussianMixture consolidate(const GaussianMixture& gm) {
    std::vector<detail::SignedTerm> terms;
    terms.reserve(gm.size());
    for (const auto& c : gm) terms.push_back({c.weight, &c});
    GaussianMixture out(gm.dimension());
    for (const auto& t : detail::collect_terms(std::move(terms))) {
        out.push_back({t.coefficient, t.component->mean, t.component->covariance});
    }
    return out;
}

/// Closed-form ⟨f, g⟩ in L2. Terms are summed in sorted order, so the result
/// is exactly symmetric in its arguments.
inline double l2_inner_product(const GaussianMixture& f, const GaussianMixture& g) {
    detail::require(f.dimension() == g.dimension(), "inner product of mixtures of different dimension");
    std::vector<double> terms;
    terms.reserve(f.size() * g.size());
    for (const auto& a : f) {
        if (a.weight == 0.0) continue;
        for (const auto& b : g) {
            if (b.weight == 0.0) continue;
            terms.push_back(a.weight * b.weight * detail::gaussian_overlap(a, b));
        }
    }
    return detail::sorted_sum(std::move(terms));
}

inline double l2_norm(const GaussianMixture& f) {
    return std::sqrt(std::max(0.0, l2_inner_product(f, f)));
}

/// ‖f − g‖ in L2. The difference is formed term by term (shared components
/// cancel exactly) before the quadratic form is evaluated, which keeps small
/// distances accurate.
inline double l2_distance(const GaussianMixture& f, const GaussianMixture& g) {
    detail::require(f.dimension() == g.dimension(), "distance between mixtures of different dimension");
    std::vector<detail::SignedTerm> terms;
    terms.reserve(f.size() + g.size());
    for (const auto& c : f) terms.push_back({c.weight, &c});
    for (const auto& c : g) terms.push_back({-c.weight, &c});
    return std::sqrt(std::max(0.0, detail::quadratic_form(detail::collect_terms(std::move(terms)))));
}

/// Cauchy-Schwarz divergence −log(⟨f,g⟩ / (‖f‖‖g‖)); scale invariant in both arguments.
inline double cs_divergence(const GaussianMixture& f, const GaussianMixture& g) {
    const double ff = l2_inner_product(f, f);
    const double gg = l2_inner_product(g, g);
    detail::require(ff > 0.0 && gg > 0.0, "Cauchy-Schwarz divergence needs mixtures with positive norm");
    const double fg = l2_inner_product(f, g);
    if (fg <= 0.0) return std::numeric_limits<double>::infinity();
    return std::max(0.0, -std::log(fg / std::sqrt(ff * gg)));
}

}  // namespace dgmphd
