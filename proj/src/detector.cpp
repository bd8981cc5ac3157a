#include "qpcd/detector.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace qpcd {

namespace {

Eigen::MatrixXd window_cost(const PointCloud& cloud, std::size_t tau, std::size_t h, double p) {
    const Eigen::Index hi = static_cast<Eigen::Index>(h);
    const Eigen::Index t = static_cast<Eigen::Index>(tau);
    Eigen::MatrixXd C(hi, hi);
    for (Eigen::Index i = 0; i < hi; ++i)
        for (Eigen::Index j = 0; j < hi; ++j) {
            const double d = (cloud.points.row(t - hi + i) - cloud.points.row(t + j)).norm();
            C(i, j) = std::pow(d, p);
        }
    return C;
}

}  // namespace

std::pair<EmpiricalMeasure, EmpiricalMeasure> split_window(const PointCloud& cloud,
                                                           std::size_t tau, std::size_t h) {
    if (h < 1) throw std::invalid_argument("h must be >= 1");
    if (tau < h || tau + h > cloud.size())
        throw std::invalid_argument("tau out of admissible range");
    const Eigen::Index hi = static_cast<Eigen::Index>(h);
    const Eigen::Index t = static_cast<Eigen::Index>(tau);
    EmpiricalMeasure left = EmpiricalMeasure::uniform(cloud.points.middleRows(t - hi, hi));
    EmpiricalMeasure right = EmpiricalMeasure::uniform(cloud.points.middleRows(t, hi));
    return {std::move(left), std::move(right)};
}

WindowDistanceEngine::WindowDistanceEngine(const PointCloud& cloud, const DetectorConfig& cfg,
                                           std::size_t cache_budget_bytes)
    : cloud_(cloud), cfg_(cfg) {
    if (cfg.h < 2) throw std::invalid_argument("h must be >= 2");
    if (cfg.stride < 1) throw std::invalid_argument("stride must be >= 1");
    if (2 * cfg.h > cloud.size()) throw std::invalid_argument("cloud too small for window 2h");
    for (std::size_t tau = cfg.h; tau + cfg.h <= cloud.size(); tau += cfg.stride)
        taus_.push_back(tau);

    const std::size_t bytes = taus_.size() * cfg.h * cfg.h * sizeof(double);
    if (bytes <= cache_budget_bytes) {
        cost_cache_.resize(taus_.size());
        for (std::size_t k = 0; k < taus_.size(); ++k)
            cost_cache_[k] = window_cost(cloud_, taus_[k], cfg_.h, cfg_.ot.p);
        cached_ = true;
    }
}

const Eigen::MatrixXd& WindowDistanceEngine::cost_for(std::size_t k,
                                                      Eigen::MatrixXd& scratch) const {
    if (cached_) return cost_cache_[k];
    scratch = window_cost(cloud_, taus_[k], cfg_.h, cfg_.ot.p);
    return scratch;
}

WindowDistanceEngine::Eval WindowDistanceEngine::solve(const Eigen::MatrixXd& cost,
                                                       const Eigen::VectorXd& wl,
                                                       const Eigen::VectorXd& wr) const {
    Eval out;
    if (cfg_.exact_solver()) {
        const double w = 1.0 / static_cast<double>(wl.size());
        const bool uniform = wl.size() == wr.size() &&
                             (wl.array() - w).abs().maxCoeff() <= 1e-12 &&
                             (wr.array() - w).abs().maxCoeff() <= 1e-12;
        out.value = uniform ? detail::assignment_cost(cost) * w
                            : detail::transport_cost(cost, wl, wr);
    } else {
        SinkhornResult res = detail::sinkhorn_on_cost(cost, wl, wr, cfg_.ot);
        out.value = res.value;
        out.converged = res.converged;
    }
    return out;
}

WindowDistanceEngine::Eval WindowDistanceEngine::distance(std::size_t k) const {
    Eigen::MatrixXd scratch;
    const Eigen::MatrixXd& C = cost_for(k, scratch);
    const double w = 1.0 / static_cast<double>(cfg_.h);
    Eigen::VectorXd uni = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(cfg_.h), w);
    return solve(C, uni, uni);
}

WindowDistanceEngine::Eval WindowDistanceEngine::distance(
    std::size_t k, const Eigen::VectorXd& point_weights) const {
    const std::size_t tau = taus_[k];
    const Eigen::Index hi = static_cast<Eigen::Index>(cfg_.h);
    Eigen::VectorXd wl = point_weights.segment(static_cast<Eigen::Index>(tau) - hi, hi);
    Eigen::VectorXd wr = point_weights.segment(static_cast<Eigen::Index>(tau), hi);
    const double sl = wl.sum();
    const double sr = wr.sum();
    if (sl <= 0.0 || sr <= 0.0)
        throw std::invalid_argument("half-window carries zero bootstrap mass");
    wl /= sl;
    wr /= sr;
    Eigen::MatrixXd scratch;
    return solve(cost_for(k, scratch), wl, wr);
}

WindowDistanceEngine::Eval WindowDistanceEngine::distance_mapped(
    std::size_t k, const std::vector<std::size_t>& mapping,
    const Eigen::VectorXd& point_weights) const {
    const std::size_t tau = taus_[k];
    const Eigen::Index hi = static_cast<Eigen::Index>(cfg_.h);
    Eigen::VectorXd wl = point_weights.segment(static_cast<Eigen::Index>(tau) - hi, hi);
    Eigen::VectorXd wr = point_weights.segment(static_cast<Eigen::Index>(tau), hi);
    const double sl = wl.sum();
    const double sr = wr.sum();
    if (sl <= 0.0 || sr <= 0.0)
        throw std::invalid_argument("half-window carries zero bootstrap mass");
    wl /= sl;
    wr /= sr;
    Eigen::MatrixXd C(hi, hi);
    for (Eigen::Index i = 0; i < hi; ++i) {
        const auto li = static_cast<Eigen::Index>(mapping[tau - cfg_.h + i]);
        for (Eigen::Index j = 0; j < hi; ++j) {
            const auto rj = static_cast<Eigen::Index>(mapping[tau + j]);
            C(i, j) = std::pow((cloud_.points.row(li) - cloud_.points.row(rj)).norm(), cfg_.ot.p);
        }
    }
    return solve(C, wl, wr);
}

WindowDistanceEngine::Eval WindowDistanceEngine::distance_between(
    const std::vector<std::size_t>& left, const std::vector<std::size_t>& right,
    Eigen::VectorXd wl, Eigen::VectorXd wr) const {
    const double sl = wl.sum();
    const double sr = wr.sum();
    if (sl <= 0.0 || sr <= 0.0)
        throw std::invalid_argument("half-window carries zero bootstrap mass");
    wl /= sl;
    wr /= sr;
    Eigen::MatrixXd C(static_cast<Eigen::Index>(left.size()),
                      static_cast<Eigen::Index>(right.size()));
    for (std::size_t i = 0; i < left.size(); ++i) {
        const auto li = static_cast<Eigen::Index>(left[i]);
        for (std::size_t j = 0; j < right.size(); ++j) {
            const auto rj = static_cast<Eigen::Index>(right[j]);
            C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                std::pow((cloud_.points.row(li) - cloud_.points.row(rj)).norm(), cfg_.ot.p);
        }
    }
    return solve(C, wl, wr);
}

WassersteinSeries WindowDistanceEngine::series(const PointCloud& cloud) const {
    WassersteinSeries out;
    out.embed_tail = cloud.embed_tail;
    out.taus = taus_;
    out.values.resize(taus_.size());
    out.source_spans.resize(taus_.size());
    for (std::size_t k = 0; k < taus_.size(); ++k) {
        const std::size_t tau = taus_[k];
        Eval e = distance(k);
        out.values[k] = e.value;
        if (!e.converged) ++out.unconverged;
        out.source_spans[k] = {cloud.source_index[tau - cfg_.h],
                               cloud.source_index[tau + cfg_.h - 1]};
    }
    return out;
}

WassersteinSeries wasserstein_series(const PointCloud& cloud, const DetectorConfig& cfg) {
    WindowDistanceEngine engine(cloud, cfg, /*cache_budget_bytes=*/0);
    return engine.series(cloud);
}

ChangeStatistic change_statistic(const WassersteinSeries& series) {
    if (series.values.empty()) throw std::invalid_argument("empty Wasserstein series");
    ChangeStatistic stat;
    stat.value = series.values[0];
    stat.argmax_tau = series.taus[0];
    for (std::size_t k = 1; k < series.values.size(); ++k) {
        if (series.values[k] > stat.value) {
            stat.value = series.values[k];
            stat.argmax_tau = series.taus[k];
        }
    }
    return stat;
}

void save_series_csv(const WassersteinSeries& series, const std::string& path) {
    std::ofstream outf(path);
    if (!outf) throw std::runtime_error("cannot write file: " + path);
    outf << "tau,value,src_start,src_end\n";
    char buf[64];
    for (std::size_t k = 0; k < series.taus.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g", series.values[k]);
        outf << series.taus[k] << ',' << buf << ',' << series.source_spans[k].first << ','
             << series.source_spans[k].second << '\n';
    }
}

}  // namespace qpcd
