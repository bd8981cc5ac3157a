#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "qpcd/transport.hpp"

using namespace qpcd;

namespace {

EmpiricalMeasure cloud(std::mt19937_64& rng, int n, int d, double shift = 0.0) {
    std::normal_distribution<double> nd;
    Eigen::MatrixXd pts(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) pts(i, j) = nd(rng) + shift;
    return EmpiricalMeasure::uniform(std::move(pts));
}

// Minimum over all n! assignments of the mean matched cost.
double brute_force_uniform(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p) {
    const Eigen::MatrixXd C = cost_matrix(a, b, p);
    const int n = static_cast<int>(a.size());
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (int i = 0; i < n; ++i) total += C(i, perm[static_cast<std::size_t>(i)]);
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / n;
}

EmpiricalMeasure from_rows(std::vector<std::vector<double>> rows) {
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            pts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return EmpiricalMeasure::uniform(std::move(pts));
}

}  // namespace

TEST_CASE("cost matrix entries are p-th powers of Euclidean distances") {
    EmpiricalMeasure a = from_rows({{0.0}});
    EmpiricalMeasure b = from_rows({{3.0}});
    Eigen::MatrixXd C = cost_matrix(a, b, 2.0);
    CHECK(C.rows() == 1);
    CHECK(C(0, 0) == doctest::Approx(9.0));

    EmpiricalMeasure c = from_rows({{0.0, 0.0}, {1.0, 0.0}});
    EmpiricalMeasure d = from_rows({{0.0, 1.0}});
    Eigen::MatrixXd C2 = cost_matrix(c, d, 1.0);
    CHECK(C2(0, 0) == doctest::Approx(1.0));
    CHECK(C2(1, 0) == doctest::Approx(std::sqrt(2.0)));

    Eigen::MatrixXd C3 = cost_matrix(c, c, 2.0);
    CHECK(C3(0, 0) == 0.0);
    CHECK(C3(1, 1) == 0.0);
}

TEST_CASE("cost matrix rejects dimension mismatch") {
    EmpiricalMeasure a = from_rows({{0.0, 0.0}});
    EmpiricalMeasure b = from_rows({{1.0}});
    CHECK_THROWS(cost_matrix(a, b, 2.0));
}

TEST_CASE("exact distance of a measure to itself is zero") {
    std::mt19937_64 rng(1);
    EmpiricalMeasure a = cloud(rng, 6, 3);
    CHECK(wasserstein_exact(a, a, 2.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("1-D uniform measures match monotonically") {
    EmpiricalMeasure a = from_rows({{0.0}, {1.0}});
    EmpiricalMeasure b = from_rows({{2.0}, {3.0}});
    CHECK(wasserstein_exact(a, b, 1.0) == doctest::Approx(2.0));
}

TEST_CASE("exact solver agrees with permutation enumeration") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        EmpiricalMeasure a = cloud(rng, 5, 2);
        EmpiricalMeasure b = cloud(rng, 5, 2, 0.3);
        const double exact = wasserstein_exact(a, b, 2.0);
        const double brute = brute_force_uniform(a, b, 2.0);
        CHECK(exact == doctest::Approx(brute).epsilon(1e-9));
    }
}

TEST_CASE("weighted transport agrees with assignment on uniform weights") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 12);
        EmpiricalMeasure a = cloud(rng, n, 3);
        EmpiricalMeasure b = cloud(rng, n, 3, 0.5);
        Eigen::MatrixXd C = cost_matrix(a, b, 2.0);
        const double assigned = detail::assignment_cost(C) / n;
        const double flowed = detail::transport_cost(C, a.weights, b.weights);
        CHECK(flowed == doctest::Approx(assigned).epsilon(1e-10));
    }
}

TEST_CASE("weighted transport never exceeds a feasible plan") {
    std::mt19937_64 rng(4);
    std::exponential_distribution<double> e1(1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int m = 2 + static_cast<int>(rng() % 5);
        const int n = 2 + static_cast<int>(rng() % 5);
        EmpiricalMeasure a = cloud(rng, m, 2);
        EmpiricalMeasure b = cloud(rng, n, 2, 0.4);
        Eigen::VectorXd wa(m), wb(n);
        for (int i = 0; i < m; ++i) wa(i) = e1(rng);
        for (int j = 0; j < n; ++j) wb(j) = e1(rng);
        wa /= wa.sum();
        wb /= wb.sum();
        Eigen::MatrixXd C = cost_matrix(a, b, 2.0);
        const double opt = detail::transport_cost(C, wa, wb);

        // greedy feasible plans built in random row orders are upper bounds
        for (int r = 0; r < 10; ++r) {
            std::vector<int> order(static_cast<std::size_t>(m));
            std::iota(order.begin(), order.end(), 0);
            std::shuffle(order.begin(), order.end(), rng);
            Eigen::VectorXd rb = wb;
            double val = 0.0;
            for (int i : order) {
                double rem = wa(i);
                while (rem > 1e-15) {
                    int jb = -1;
                    double best = std::numeric_limits<double>::infinity();
                    for (int j = 0; j < n; ++j)
                        if (rb(j) > 1e-15 && C(i, j) < best) {
                            best = C(i, j);
                            jb = j;
                        }
                    const double d = std::min(rem, rb(jb));
                    val += d * C(i, jb);
                    rem -= d;
                    rb(jb) -= d;
                }
            }
            CHECK(opt <= val + 1e-9);
        }
    }
}

TEST_CASE("transport handles zero-weight support points") {
    EmpiricalMeasure a = from_rows({{0.0}, {1.0}, {5.0}});
    a.weights << 0.5, 0.5, 0.0;
    EmpiricalMeasure b = from_rows({{0.0}, {1.0}});
    CHECK(wasserstein_exact(a, b, 2.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("sinkhorn on identical supports stays near zero") {
    std::mt19937_64 rng(5);
    EmpiricalMeasure a = cloud(rng, 12, 3);
    Eigen::MatrixXd C = cost_matrix(a, a, 2.0);
    OtConfig cfg;
    cfg.epsilon = 0.01 * C.maxCoeff();
    SinkhornResult res = wasserstein_sinkhorn(a, a, cfg);
    CHECK(res.value < 0.05 * C.mean());
}

TEST_CASE("sinkhorn tracks the exact value at small epsilon") {
    std::mt19937_64 rng(6);
    int ok = 0;
    for (int trial = 0; trial < 20; ++trial) {
        EmpiricalMeasure a = cloud(rng, 8, 3);
        EmpiricalMeasure b = cloud(rng, 8, 3, 0.5);
        const double exact = wasserstein_exact(a, b, 2.0);
        OtConfig cfg;
        cfg.epsilon = 0.01 * cost_matrix(a, b, 2.0).mean();
        SinkhornResult res = wasserstein_sinkhorn(a, b, cfg);
        CHECK(res.converged);
        if (std::abs(res.value - exact) / exact <= 0.02) ++ok;
    }
    CHECK(ok >= 18);
}

TEST_CASE("single-point measures are solved by the forced coupling") {
    EmpiricalMeasure a = from_rows({{1.0, 2.0, 3.0}});
    EmpiricalMeasure b = from_rows({{4.0, 6.0, 3.0}});
    OtConfig cfg;
    cfg.epsilon = 0.7;
    SinkhornResult res = wasserstein_sinkhorn(a, b, cfg);
    CHECK(res.value == doctest::Approx(25.0).epsilon(1e-9));
}

TEST_CASE("distance is symmetric") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        EmpiricalMeasure a = cloud(rng, 7, 3);
        EmpiricalMeasure b = cloud(rng, 7, 3, 0.3);
        CHECK(wasserstein_exact(a, b, 2.0) ==
              doctest::Approx(wasserstein_exact(b, a, 2.0)).epsilon(1e-12));
        OtConfig cfg;
        SinkhornResult ab = wasserstein_sinkhorn(a, b, cfg);
        SinkhornResult ba = wasserstein_sinkhorn(b, a, cfg);
        // finite marginal tolerance leaves a small asymmetry in the iterate
        CHECK(ab.value == doctest::Approx(ba.value).epsilon(1e-3));
    }
}

TEST_CASE("triangle inequality holds for the p-th root") {
    std::mt19937_64 rng(8);
    for (double p : {1.0, 2.0}) {
        for (int trial = 0; trial < 30; ++trial) {
            EmpiricalMeasure a = cloud(rng, 6, 2);
            EmpiricalMeasure b = cloud(rng, 6, 2, 0.4);
            EmpiricalMeasure c = cloud(rng, 6, 2, -0.4);
            const double ab = std::pow(wasserstein_exact(a, b, p), 1.0 / p);
            const double bc = std::pow(wasserstein_exact(b, c, p), 1.0 / p);
            const double ac = std::pow(wasserstein_exact(a, c, p), 1.0 / p);
            CHECK(ac <= ab + bc + 1e-9);
        }
    }
}

TEST_CASE("translation invariance and scaling covariance") {
    std::mt19937_64 rng(9);
    EmpiricalMeasure a = cloud(rng, 9, 3);
    EmpiricalMeasure b = cloud(rng, 9, 3, 0.6);
    const double base = wasserstein_exact(a, b, 2.0);

    Eigen::RowVector3d shift(1.5, -2.0, 0.25);
    EmpiricalMeasure at = a, bt = b;
    at.support.rowwise() += shift;
    bt.support.rowwise() += shift;
    CHECK(wasserstein_exact(at, bt, 2.0) == doctest::Approx(base).epsilon(1e-9));

    const double c = 3.0;
    EmpiricalMeasure as = a, bs = b;
    as.support *= c;
    bs.support *= c;
    CHECK(wasserstein_exact(as, bs, 2.0) == doctest::Approx(base * c * c).epsilon(1e-9));
}

TEST_CASE("sinkhorn accuracy improves as epsilon shrinks") {
    std::mt19937_64 rng(10);
    int monotone = 0;
    const int trials = 20;
    for (int trial = 0; trial < trials; ++trial) {
        EmpiricalMeasure a = cloud(rng, 8, 3);
        EmpiricalMeasure b = cloud(rng, 8, 3, 0.5);
        const double exact = wasserstein_exact(a, b, 2.0);
        const double mean_c = cost_matrix(a, b, 2.0).mean();
        double prev = std::numeric_limits<double>::infinity();
        bool ok = true;
        for (double f : {0.5, 0.1, 0.02}) {
            OtConfig cfg;
            cfg.epsilon = f * mean_c;
            const double err = std::abs(wasserstein_sinkhorn(a, b, cfg).value - exact);
            if (err > prev + 1e-12) ok = false;
            prev = err;
        }
        if (ok) ++monotone;
    }
    CHECK(monotone > trials / 2);
}

TEST_CASE("invalid measures are rejected") {
    EmpiricalMeasure a = from_rows({{0.0}, {1.0}});
    EmpiricalMeasure bad = a;
    bad.weights << 0.9, 0.3;
    CHECK_THROWS(wasserstein_exact(bad, a, 2.0));
    bad.weights << -0.1, 1.1;
    CHECK_THROWS(wasserstein_exact(bad, a, 2.0));
    CHECK_THROWS(wasserstein_exact(a, a, 0.5));
}
