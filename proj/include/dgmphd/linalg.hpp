#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace dgmphd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when a computation hits a singular or non-finite intermediate.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
    if (!condition) throw std::invalid_argument(message);
}

/// Sum in ascending order so equal multisets of terms give identical results.
inline double sorted_sum(std::vector<double> terms) {
    std::sort(terms.begin(), terms.end());
    double sum = 0.0;
    for (double t : terms) sum += t;
    return sum;
}

inline Matrix symmetrized(const Matrix& m) {
    return 0.5 * (m + m.transpose());
}

/// Log of N(x; mean, cov). Throws NumericalError when cov is not positive definite.
inline double log_gaussian_density(const Vector& x, const Vector& mean, const Matrix& cov) {
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("covariance is not positive definite");
    }
    const Vector diff = x - mean;
    const Vector solved = llt.matrixL().solve(diff);
    const auto& factor = llt.matrixLLT();
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < factor.rows(); ++i) log_det += 2.0 * std::log(factor(i, i));
    const double d = static_cast<double>(x.size());
    return -0.5 * (solved.squaredNorm() + log_det + d * std::log(2.0 * std::numbers::pi));
}

inline double gaussian_density(const Vector& x, const Vector& mean, const Matrix& cov) {
    return std::exp(log_gaussian_density(x, mean, cov));
}

}  // namespace detail
}  // namespace dgmphd
