#include "qpcd/transport.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace qpcd {

EmpiricalMeasure EmpiricalMeasure::uniform(Eigen::MatrixXd points) {
    EmpiricalMeasure m;
    const Eigen::Index h = points.rows();
    if (h == 0) throw std::invalid_argument("empty support");
    m.support = std::move(points);
    m.weights = Eigen::VectorXd::Constant(h, 1.0 / static_cast<double>(h));
    return m;
}

bool EmpiricalMeasure::is_uniform(double tol) const {
    const double w = 1.0 / static_cast<double>(support.rows());
    return (weights.array() - w).abs().maxCoeff() <= tol;
}

void EmpiricalMeasure::validate() const {
    if (support.rows() == 0) throw std::invalid_argument("empty support");
    if (weights.size() != support.rows())
        throw std::invalid_argument("weights/support size mismatch");
    if ((weights.array() < 0.0).any()) throw std::invalid_argument("negative weight");
    if (std::abs(weights.sum() - 1.0) > 1e-9)
        throw std::invalid_argument("weights do not sum to 1");
}

Eigen::MatrixXd cost_matrix(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p) {
    if (a.support.cols() != b.support.cols())
        throw std::invalid_argument("point dimension mismatch");
    const Eigen::Index m = a.support.rows();
    const Eigen::Index n = b.support.rows();
    Eigen::MatrixXd C(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const double d = (a.support.row(i) - b.support.row(j)).norm();
            C(i, j) = std::pow(d, p);
        }
    return C;
}

namespace detail {

// Shortest-augmenting-path assignment (Jonker-Volkovich style), O(n^3).
double assignment_cost(const Eigen::MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows());
    if (cost.cols() != n) throw std::invalid_argument("assignment needs a square matrix");
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> match(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
        std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = match[static_cast<std::size_t>(j0)];
            int j1 = -1;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    double total = 0.0;
    for (int j = 1; j <= n; ++j) total += cost(match[static_cast<std::size_t>(j)] - 1, j - 1);
    return total;
}

// Successive shortest paths with node potentials on the dense bipartite
// transportation graph. Exact for real-valued supplies/demands.
double transport_cost(const Eigen::MatrixXd& cost, const Eigen::VectorXd& supply,
                      const Eigen::VectorXd& demand) {
    const int m = static_cast<int>(supply.size());
    const int n = static_cast<int>(demand.size());
    const double inf = std::numeric_limits<double>::infinity();
    const double mass_eps = 1e-13;

    Eigen::ArrayXd a = supply.array();
    Eigen::ArrayXd b = demand.array();
    Eigen::MatrixXd flow = Eigen::MatrixXd::Zero(m, n);
    Eigen::ArrayXd phi_s = Eigen::ArrayXd::Zero(m);  // source potentials
    Eigen::ArrayXd phi_t = Eigen::ArrayXd::Zero(n);  // sink potentials

    double remaining = a.sum();
    const int nn = m + n;
    Eigen::ArrayXd dist(nn), sel(nn), cand(std::max(m, n));
    std::vector<int> prev(static_cast<std::size_t>(nn));
    std::vector<char> done(static_cast<std::size_t>(nn));

    while (remaining > mass_eps) {
        // multi-source Dijkstra: sources with remaining supply at distance 0;
        // sel mirrors dist with settled entries pinned at +inf so the next
        // node is a vectorized argmin
        dist.setConstant(inf);
        dist.head(m) = (a > mass_eps).select(0.0, dist.head(m));
        sel = dist;
        std::fill(prev.begin(), prev.end(), -1);
        std::fill(done.begin(), done.end(), 0);

        int target = -1;
        while (true) {
            int u;
            if (!(sel.minCoeff(&u) < inf)) break;
            const double du = dist(u);
            sel(u) = inf;
            done[static_cast<std::size_t>(u)] = 1;
            if (u >= m && b(u - m) > mass_eps) {
                target = u;
                break;
            }
            if (u < m) {
                cand.head(n) =
                    du + (cost.row(u).transpose().array() + phi_s(u) - phi_t).max(0.0);
                for (int j = 0; j < n; ++j)
                    if (!done[static_cast<std::size_t>(m + j)] && cand(j) < dist(m + j)) {
                        dist(m + j) = sel(m + j) = cand(j);
                        prev[static_cast<std::size_t>(m + j)] = u;
                    }
            } else {
                const int j = u - m;
                cand.head(m) = du + (-(cost.col(j).array() + phi_s - phi_t(j))).max(0.0);
                for (int i = 0; i < m; ++i)
                    if (flow(i, j) > mass_eps && !done[static_cast<std::size_t>(i)] &&
                        cand(i) < dist(i)) {
                        dist(i) = sel(i) = cand(i);
                        prev[static_cast<std::size_t>(i)] = u;
                    }
            }
        }
        if (target < 0) throw std::runtime_error("transport solver: no augmenting path");

        // bottleneck along the alternating path
        double delta = b(target - m);
        for (int v = target; prev[static_cast<std::size_t>(v)] != -1; v = prev[static_cast<std::size_t>(v)]) {
            const int u = prev[static_cast<std::size_t>(v)];
            if (u >= m) delta = std::min(delta, flow(v, u - m));  // residual arc sink->source
        }
        int path_start = target;
        while (prev[static_cast<std::size_t>(path_start)] != -1) path_start = prev[static_cast<std::size_t>(path_start)];
        delta = std::min(delta, a(path_start));

        for (int v = target; prev[static_cast<std::size_t>(v)] != -1; v = prev[static_cast<std::size_t>(v)]) {
            const int u = prev[static_cast<std::size_t>(v)];
            if (u < m)
                flow(u, v - m) += delta;  // forward arc
            else
                flow(v, u - m) -= delta;  // residual arc
        }
        a(path_start) -= delta;
        b(target - m) -= delta;
        remaining -= delta;

        // Johnson potential update for early-terminated Dijkstra: nodes not
        // settled before the target are capped at the target distance, which
        // keeps all reduced costs non-negative for the next iteration.
        const double dt = dist(target);
        phi_s += dist.head(m).min(dt);
        phi_t += dist.tail(n).min(dt);
    }

    return (flow.array() * cost.array()).sum();
}

}  // namespace detail

namespace {

// Drop zero-weight support points; solvers assume strictly positive mass.
EmpiricalMeasure compact(const EmpiricalMeasure& m) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < m.weights.size(); ++i)
        if (m.weights(i) > 0.0) keep.push_back(i);
    if (keep.size() == m.size()) return m;
    EmpiricalMeasure out;
    out.support.resize(static_cast<Eigen::Index>(keep.size()), m.support.cols());
    out.weights.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        out.support.row(static_cast<Eigen::Index>(k)) = m.support.row(keep[k]);
        out.weights(static_cast<Eigen::Index>(k)) = m.weights(keep[k]);
    }
    return out;
}

}  // namespace

double wasserstein_exact(const EmpiricalMeasure& a_in, const EmpiricalMeasure& b_in, double p) {
    a_in.validate();
    b_in.validate();
    if (p < 1.0) throw std::invalid_argument("p must be >= 1");
    const EmpiricalMeasure a = compact(a_in);
    const EmpiricalMeasure b = compact(b_in);
    const Eigen::MatrixXd C = cost_matrix(a, b, p);
    if (a.size() == b.size() && a.is_uniform() && b.is_uniform())
        return detail::assignment_cost(C) / static_cast<double>(a.size());
    return detail::transport_cost(C, a.weights, b.weights);
}

namespace detail {

SinkhornResult sinkhorn_on_cost(const Eigen::MatrixXd& C, const Eigen::VectorXd& supply,
                                const Eigen::VectorXd& demand, const OtConfig& cfg) {
    if (cfg.tol <= 0.0) throw std::invalid_argument("tol must be positive");

    SinkhornResult res;
    const double mean_c = C.mean();
    if (mean_c <= 0.0) {  // all support points coincide
        res.converged = true;
        return res;
    }
    const double eps = cfg.epsilon > 0.0 ? cfg.epsilon : 0.01 * mean_c;

    // log of zero mass replaced by a large negative sentinel so that
    // zero-weight points simply carry an all-zero plan row/column
    constexpr double kLogZero = -1e18;
    const Eigen::ArrayXd log_a = supply.array().max(0.0).unaryExpr(
        [](double w) { return w > 0.0 ? std::log(w) : kLogZero; });
    const Eigen::ArrayXd log_b = demand.array().max(0.0).unaryExpr(
        [](double w) { return w > 0.0 ? std::log(w) : kLogZero; });
    const Eigen::Index m = C.rows();
    const Eigen::Index n = C.cols();
    Eigen::ArrayXd f = Eigen::ArrayXd::Zero(m);
    Eigen::ArrayXd g = Eigen::ArrayXd::Zero(n);

    // log-domain scaling iterations: stabilized by row/col max-shifts
    auto lse_rows = [&](const Eigen::ArrayXXd& logk) -> Eigen::ArrayXd {
        Eigen::ArrayXd mx = logk.rowwise().maxCoeff();
        return mx + (logk.colwise() - mx).exp().rowwise().sum().log();
    };

    Eigen::ArrayXXd minus_c = -C.array() / eps;
    int it = 0;
    for (; it < cfg.max_iter; ++it) {
        // f-update: row marginals become exact
        Eigen::ArrayXXd logk = (minus_c.rowwise() + g.transpose() / eps);
        f = eps * (log_a - lse_rows(logk));
        // g-update: column marginals become exact
        Eigen::ArrayXXd logkt = (minus_c.colwise() + f / eps).transpose();
        g = eps * (log_b - lse_rows(logkt));

        // row-marginal violation of the current plan; checked sparsely since
        // the check costs a full plan evaluation
        if (it % 5 == 4 || it == cfg.max_iter - 1) {
            Eigen::ArrayXXd log_plan =
                ((minus_c.colwise() + f / eps).rowwise() + g.transpose() / eps);
            Eigen::ArrayXd row_mass = log_plan.exp().rowwise().sum();
            res.marginal_error = (row_mass - supply.array()).abs().maxCoeff();
            if (res.marginal_error < cfg.tol) {
                res.converged = true;
                ++it;
                break;
            }
        }
    }
    res.iterations = it;

    Eigen::ArrayXXd plan = ((minus_c.colwise() + f / eps).rowwise() + g.transpose() / eps).exp();
    res.value = (plan * C.array()).sum();
    return res;
}

}  // namespace detail

SinkhornResult wasserstein_sinkhorn(const EmpiricalMeasure& a_in, const EmpiricalMeasure& b_in,
                                    const OtConfig& cfg) {
    a_in.validate();
    b_in.validate();
    if (cfg.p < 1.0) throw std::invalid_argument("p must be >= 1");
    const EmpiricalMeasure a = compact(a_in);
    const EmpiricalMeasure b = compact(b_in);
    const Eigen::MatrixXd C = cost_matrix(a, b, cfg.p);
    return detail::sinkhorn_on_cost(C, a.weights, b.weights, cfg);
}

}  // namespace qpcd
