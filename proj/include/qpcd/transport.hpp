#pragma once

#include <Eigen/Dense>
#include <cstddef>

namespace qpcd {

// Discrete probability measure: one support point per row, weights sum to 1.
struct EmpiricalMeasure {
    Eigen::MatrixXd support;
    Eigen::VectorXd weights;

    static EmpiricalMeasure uniform(Eigen::MatrixXd points);

    std::size_t size() const { return static_cast<std::size_t>(support.rows()); }
    bool is_uniform(double tol = 1e-12) const;
    void validate() const;
};

struct OtConfig {
    double p = 2.0;         // ground-cost exponent, >= 1
    double epsilon = 0.0;   // entropic regularization; <= 0 means 0.01 * mean(C)
    int max_iter = 10000;
    double tol = 1e-4;      // max marginal violation stop criterion
};

struct SinkhornResult {
    double value = 0.0;     // <plan, C>, no entropy term
    int iterations = 0;
    bool converged = false;
    double marginal_error = 0.0;
};

// C[i][j] = ||a_i - b_j||_2^p
Eigen::MatrixXd cost_matrix(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p);

// Exact W_p^p. Uniform equal-size measures solve the assignment problem;
// general weights fall back to a successive-shortest-path transportation solver.
double wasserstein_exact(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p);

SinkhornResult wasserstein_sinkhorn(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                                    const OtConfig& cfg);

namespace detail {
// Minimum-cost perfect matching value of a square cost matrix.
double assignment_cost(const Eigen::MatrixXd& cost);
// Optimal transport cost between weight vectors on a dense cost matrix.
// Zero-weight entries are permitted and carry no mass.
double transport_cost(const Eigen::MatrixXd& cost, const Eigen::VectorXd& supply,
                      const Eigen::VectorXd& demand);
// Entropic OT on a precomputed cost matrix; weights may contain zeros.
SinkhornResult sinkhorn_on_cost(const Eigen::MatrixXd& cost, const Eigen::VectorXd& supply,
                                const Eigen::VectorXd& demand, const OtConfig& cfg);
}  // namespace detail

}  // namespace qpcd
