#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "dgmphd/metrics.hpp"

using namespace dgmphd;

namespace {

Vector pt(double x, double y) { return (Vector(2) << x, y).finished(); }

std::vector<Vector> random_set(std::size_t n, std::mt19937_64& rng, double spread = 150.0) {
    std::uniform_real_distribution<double> u(-spread, spread);
    std::vector<Vector> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(pt(u(rng), u(rng)));
    return out;
}

// Minimum over every injection of the smaller set into the larger.
double brute_force_ospa(std::vector<Vector> x, std::vector<Vector> y, double p, double c) {
    if (x.size() > y.size()) std::swap(x, y);
    const std::size_t m = x.size(), n = y.size();
    if (n == 0) return 0.0;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += std::pow(std::min(c, (x[i] - y[perm[i]]).norm()), p);
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::pow((best + std::pow(c, p) * static_cast<double>(n - m)) / static_cast<double>(n), 1.0 / p);
}

double brute_force_assignment(const std::vector<std::vector<double>>& cost) {
    const std::size_t m = cost.size(), n = cost.front().size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += cost[i][perm[i]];
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

const OspaConfig kDefault{};

}  // namespace

TEST(Ospa, Examples) {
    std::mt19937_64 rng(1);
    const auto x = random_set(5, rng);
    EXPECT_EQ(ospa(x, x, kDefault).distance, 0.0);
    const std::vector<Vector> none;
    const std::vector<Vector> one{pt(3, 4)};
    EXPECT_DOUBLE_EQ(ospa(none, one, kDefault).distance, 100.0);
    EXPECT_DOUBLE_EQ(ospa(one, none, kDefault).distance, 100.0);
    EXPECT_EQ(ospa(none, none, kDefault).distance, 0.0);
    const std::vector<Vector> origin{pt(0, 0)};
    EXPECT_DOUBLE_EQ(ospa(origin, one, kDefault).distance, 5.0);
    EXPECT_DOUBLE_EQ(ospa(origin, std::vector<Vector>{pt(300, 0)}, kDefault).distance, 100.0);
}

TEST(Ospa, Components) {
    const std::vector<Vector> x{pt(0, 0)};
    const std::vector<Vector> y{pt(0, 10), pt(50, 50)};
    const auto r = ospa(x, y, kDefault);
    EXPECT_DOUBLE_EQ(r.distance, (10.0 + 100.0) / 2.0);
    EXPECT_DOUBLE_EQ(r.localization, 5.0);
    EXPECT_DOUBLE_EQ(r.cardinality, 50.0);

    OspaConfig p2;
    p2.order = 2.0;
    EXPECT_DOUBLE_EQ(ospa(x, y, p2).distance, std::sqrt((100.0 + 10000.0) / 2.0));
}

TEST(Ospa, MatchesBruteForce) {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<std::size_t> size(0, 5);
    for (int trial = 0; trial < 500; ++trial) {
        const auto x = random_set(size(rng), rng);
        const auto y = random_set(size(rng), rng);
        for (double p : {1.0, 2.0}) {
            OspaConfig cfg;
            cfg.order = p;
            EXPECT_NEAR(ospa(x, y, cfg).distance, brute_force_ospa(x, y, p, 100.0), 1e-9);
        }
    }
}

TEST(Ospa, MetricProperties) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> size(0, 6);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto a = random_set(size(rng), rng);
        const auto b = random_set(size(rng), rng);
        const auto c = random_set(size(rng), rng);
        const double ab = ospa(a, b, kDefault).distance;
        EXPECT_EQ(ab, ospa(b, a, kDefault).distance);
        EXPECT_LE(ab, ospa(a, c, kDefault).distance + ospa(c, b, kDefault).distance + 1e-9);
        EXPECT_GE(ab, 0.0);
        EXPECT_LE(ab, 100.0 + 1e-12);
    }
}

TEST(Ospa, ZeroOnlyForEqualMultisets) {
    std::mt19937_64 rng(4);
    auto x = random_set(4, rng);
    auto y = x;
    std::shuffle(y.begin(), y.end(), rng);
    EXPECT_NEAR(ospa(x, y, kDefault).distance, 0.0, 1e-12);
    y.push_back(x[0]);
    EXPECT_GT(ospa(x, y, kDefault).distance, 0.0);
}

TEST(Ospa, GrowsWithCardinalityGap) {
    std::mt19937_64 rng(5);
    const auto x = random_set(3, rng);
    auto y = x;
    double previous = ospa(x, y, kDefault).distance;
    for (int extra = 0; extra < 6; ++extra) {
        y.push_back(random_set(1, rng)[0]);
        const double d = ospa(x, y, kDefault).distance;
        EXPECT_GE(d, previous - 1e-12);
        previous = d;
    }
}

TEST(Ospa, PositionsOnlyByDefault) {
    const std::vector<Vector> x{(Vector(4) << 1, 2, 30, 40).finished()};
    const std::vector<Vector> y{(Vector(4) << 1, 2, -3, -4).finished()};
    EXPECT_EQ(ospa(ospa_points(x, kDefault), ospa_points(y, kDefault), kDefault).distance, 0.0);
    OspaConfig full;
    full.positions_only = false;
    EXPECT_DOUBLE_EQ(ospa(ospa_points(x, full), ospa_points(y, full), full).distance, std::hypot(33.0, 44.0));
}

TEST(Ospa, Rejections) {
    const std::vector<Vector> x{pt(0, 0)};
    const std::vector<Vector> y{(Vector(3) << 0, 0, 0).finished()};
    EXPECT_THROW(ospa(x, y, kDefault), std::invalid_argument);
    OspaConfig bad;
    bad.order = 0.5;
    EXPECT_THROW(ospa(x, x, bad), std::invalid_argument);
    bad = OspaConfig{};
    bad.cutoff = 0.0;
    EXPECT_THROW(ospa(x, x, bad), std::invalid_argument);
    const std::vector<Vector> scalar{Vector::Zero(1)};
    EXPECT_THROW(ospa_points(scalar, kDefault), std::invalid_argument);
}

TEST(Assignment, MatchesBruteForce) {
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<std::size_t> size(1, 6);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int trial = 0; trial < 2000; ++trial) {
        std::size_t m = size(rng), n = size(rng);
        if (m > n) std::swap(m, n);
        std::vector<std::vector<double>> cost(m, std::vector<double>(n));
        for (auto& row : cost)
            for (auto& v : row) v = trial % 3 == 0 ? std::floor(u(rng)) : u(rng);  // integer costs force ties
        const auto a = solve_assignment(cost);
        ASSERT_EQ(a.row_to_col.size(), m);
        std::vector<std::size_t> cols = a.row_to_col;
        std::sort(cols.begin(), cols.end());
        EXPECT_EQ(std::adjacent_find(cols.begin(), cols.end()), cols.end());
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += cost[i][a.row_to_col[i]];
        EXPECT_NEAR(s, brute_force_assignment(cost), 1e-9);
        EXPECT_NEAR(a.cost, s, 1e-9);
    }
}

TEST(Assignment, Rejections) {
    EXPECT_THROW(solve_assignment(std::vector<std::vector<double>>{{1.0}, {2.0}}), std::invalid_argument);
    EXPECT_THROW(solve_assignment(std::vector<std::vector<double>>{{1.0, 2.0}, {2.0}}), std::invalid_argument);
    EXPECT_TRUE(solve_assignment(std::vector<std::vector<double>>{}).row_to_col.empty());
}

TEST(NetworkOspa, Averages) {
    const std::vector<Vector> truth{pt(0, 0)};
    const std::vector<std::vector<Vector>> same(3, std::vector<Vector>{pt(3, 4)});
    EXPECT_DOUBLE_EQ(network_ospa(same, truth, kDefault), 5.0);
    const std::vector<std::vector<Vector>> two{{pt(0, 0)}, {}};
    EXPECT_DOUBLE_EQ(network_ospa(two, truth, kDefault), 50.0);
    EXPECT_THROW(network_ospa(std::vector<std::vector<Vector>>{}, truth, kDefault), std::invalid_argument);

    const std::vector<double> constant(40, 12.5);
    EXPECT_DOUBLE_EQ(time_averaged_network_ospa(constant), 12.5);
    const std::vector<double> ramp{1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(time_averaged_network_ospa(ramp), 2.5);
    EXPECT_THROW(time_averaged_network_ospa(std::vector<double>{}), std::invalid_argument);
}

TEST(CardinalityError, Examples) {
    EXPECT_EQ(cardinality_error(std::vector<double>{7.5}, 7), std::vector<double>{0.5});
    EXPECT_EQ(cardinality_error(std::vector<double>{0.0}, 0), std::vector<double>{0.0});
    EXPECT_EQ(cardinality_error(std::vector<double>{6.0}, 9), std::vector<double>{-3.0});
}
