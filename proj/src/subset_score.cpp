#include "dpbss/subset_score.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dpbss {

double sensitivity_bound(double r, double x_max, double K) {
    if (r < 0.0 || x_max < 0.0 || K < 0.0)
        throw std::invalid_argument("sensitivity_bound: arguments must be >= 0");
    const double a = r + x_max * K;
    return a * a;
}

double recommended_k(const RegularityParams& reg, double x_max, int s) {
    reg.validate();
    if (x_max < 0.0 || s < 0)
        throw std::invalid_argument("recommended_k: need x_max >= 0 and s >= 0");
    return std::sqrt(static_cast<double>(s)) *
           ((reg.kappa_plus / reg.kappa_minus) * reg.b_max +
            (8.0 * x_max / reg.kappa_minus) * reg.sigma);
}

double approx_dp_delta(double eta, double epsilon) {
    if (eta < 0.0 || eta >= 1.0)
        throw std::invalid_argument("approx_dp_delta: need eta in [0, 1)");
    if (epsilon < 0.0)
        throw std::invalid_argument("approx_dp_delta: need epsilon >= 0");
    return eta * (1.0 + std::exp(epsilon));
}

namespace {

Eigen::MatrixXd select_columns(const Dataset& ds, const ModelState& gamma) {
    Eigen::MatrixXd Xg(ds.n, gamma.size());
    for (int k = 0; k < gamma.size(); ++k)
        Xg.col(k) = ds.X.col(gamma.indices[k]);
    return Xg;
}

double scale_factor(double y_norm2, double rss) {
    return y_norm2 > 0.0 ? (y_norm2 - rss) / y_norm2 : 0.0;
}

// Largest eigenvalue of the (symmetric PSD) Gram by power iteration.
double gram_spectral_norm(const Eigen::MatrixXd& G) {
    const int s = static_cast<int>(G.rows());
    Eigen::VectorXd v = Eigen::VectorXd::Ones(s) / std::sqrt(double(s));
    double lambda = 0.0;
    for (int it = 0; it < 50; ++it) {
        Eigen::VectorXd w = G * v;
        const double norm = w.norm();
        if (norm == 0.0)
            return 0.0;
        v = w / norm;
        lambda = norm;
    }
    return lambda;
}

// Solve G theta = b; minimum-norm solution through an eigendecomposition
// when the LDLT route is unreliable (rank-deficient Gram).
Eigen::VectorXd solve_normal_equations(const Eigen::MatrixXd& G, const Eigen::VectorXd& b,
                                       bool& rank_deficient) {
    rank_deficient = false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    const Eigen::VectorXd& evals = es.eigenvalues();
    const double cutoff = 1e-10 * std::max(G.trace(), 0.0);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(evals.size());
    for (int i = 0; i < evals.size(); ++i) {
        if (evals[i] > cutoff && evals[i] > 0.0)
            inv[i] = 1.0 / evals[i];
        else
            rank_deficient = true;
    }
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose() * b;
}

} // namespace

ScoreResult ols_rss(const Dataset& ds, const ModelState& gamma) {
    const double y_norm2 = ds.y.squaredNorm();
    ScoreResult result;
    if (gamma.empty()) {
        result.rss = y_norm2;
        result.r_gamma = scale_factor(y_norm2, result.rss);
        return result;
    }
    if (gamma.indices.back() >= ds.p)
        throw std::invalid_argument("ols_rss: model index out of range");

    const Eigen::MatrixXd Xg = select_columns(ds, gamma);
    const Eigen::MatrixXd G = Xg.transpose() * Xg;
    const Eigen::VectorXd b = Xg.transpose() * ds.y;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
    Eigen::VectorXd theta;
    bool rank_deficient = ldlt.info() != Eigen::Success ||
                          ldlt.vectorD().minCoeff() <= 1e-10 * std::max(G.trace(), 0.0);
    if (!rank_deficient) {
        theta = ldlt.solve(b);
        if (!theta.allFinite())
            rank_deficient = true;
    }
    if (rank_deficient) {
        bool unused = false;
        theta = solve_normal_equations(G, b, unused);
    }

    result.coef = theta;
    result.rss = (ds.y - Xg * theta).squaredNorm();
    result.r_gamma = scale_factor(y_norm2, result.rss);
    result.status = rank_deficient ? SolverStatus::MinNormFallback
                                   : SolverStatus::UnconstrainedOptimal;
    return result;
}

Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double K) {
    if (K < 0.0)
        throw std::invalid_argument("project_l1_ball: need K >= 0");
    if (K == 0.0)
        return Eigen::VectorXd::Zero(v.size());
    if (v.lpNorm<1>() <= K)
        return v;
    std::vector<double> mags(v.size());
    for (int i = 0; i < v.size(); ++i)
        mags[i] = std::abs(v[i]);
    std::sort(mags.begin(), mags.end(), std::greater<double>());
    double cumulative = 0.0, tau = 0.0;
    for (std::size_t j = 0; j < mags.size(); ++j) {
        cumulative += mags[j];
        const double candidate = (cumulative - K) / static_cast<double>(j + 1);
        if (mags[j] - candidate > 0.0)
            tau = candidate;
        else
            break;
    }
    Eigen::VectorXd out(v.size());
    for (int i = 0; i < v.size(); ++i) {
        const double mag = std::abs(v[i]) - tau;
        out[i] = mag > 0.0 ? (v[i] > 0.0 ? mag : -mag) : 0.0;
    }
    return out;
}

ScoreResult constrained_rss(const Dataset& ds, const ModelState& gamma, double K, double tol) {
    if (K < 0.0)
        throw std::invalid_argument("constrained_rss: need K >= 0");
    const double y_norm2 = ds.y.squaredNorm();

    ScoreResult result = ols_rss(ds, gamma);
    if (gamma.empty())
        return result;
    if (result.coef.lpNorm<1>() <= K) {
        // Feasible unconstrained optimum is the constrained optimum.
        if (result.status != SolverStatus::MinNormFallback)
            result.status = SolverStatus::UnconstrainedOptimal;
        return result;
    }

    const Eigen::MatrixXd Xg = select_columns(ds, gamma);
    const Eigen::MatrixXd G = Xg.transpose() * Xg;
    const Eigen::VectorXd b = Xg.transpose() * ds.y;

    // f(theta) = theta' G theta - 2 b' theta + |y|^2, grad = 2 (G theta - b).
    const auto objective = [&](const Eigen::VectorXd& t) {
        return t.dot(G * t) - 2.0 * b.dot(t) + y_norm2;
    };
    const double lambda_max = gram_spectral_norm(G);
    const double step = lambda_max > 0.0 ? 1.0 / (2.0 * lambda_max) : 1.0;

    Eigen::VectorXd theta = project_l1_ball(result.coef, K);
    Eigen::VectorXd momentum = theta;
    double f_prev = objective(theta);
    double t_prev = 1.0;
    const int max_iterations = 5000;
    SolverStatus status = SolverStatus::MaxIterations;
    int it = 0;
    for (it = 1; it <= max_iterations; ++it) {
        Eigen::VectorXd grad = 2.0 * (G * momentum - b);
        Eigen::VectorXd theta_next = project_l1_ball(momentum - step * grad, K);
        double f_next = objective(theta_next);
        if (f_next > f_prev) {
            // Momentum overshot; fall back to a plain projected step.
            grad = 2.0 * (G * theta - b);
            theta_next = project_l1_ball(theta - step * grad, K);
            f_next = objective(theta_next);
            t_prev = 1.0;
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_prev * t_prev));
        momentum = theta_next + ((t_prev - 1.0) / t_next) * (theta_next - theta);
        const bool converged = std::abs(f_prev - f_next) <= tol * std::max(1.0, std::abs(f_prev));
        theta = theta_next;
        f_prev = f_next;
        t_prev = t_next;
        if (converged) {
            status = SolverStatus::ProjectedConverged;
            break;
        }
    }

    result.coef = theta;
    result.rss = (ds.y - Xg * theta).squaredNorm();
    result.r_gamma = scale_factor(y_norm2, result.rss);
    result.status = status;
    result.iterations = std::min(it, max_iterations);
    return result;
}

ScoreCache::ScoreCache(std::size_t capacity) : capacity_(std::max<std::size_t>(1, capacity)) {}

std::optional<double> ScoreCache::lookup(const ModelState& gamma) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = map_.find(gamma);
    if (it == map_.end())
        return std::nullopt;
    order_.splice(order_.begin(), order_, it->second);
    return it->second->second;
}

void ScoreCache::insert(const ModelState& gamma, double value) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = map_.find(gamma);
    if (it != map_.end()) {
        it->second->second = value;
        order_.splice(order_.begin(), order_, it->second);
        return;
    }
    order_.emplace_front(gamma, value);
    map_[gamma] = order_.begin();
    if (map_.size() > capacity_) {
        map_.erase(order_.back().first);
        order_.pop_back();
    }
}

std::size_t ScoreCache::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return map_.size();
}

void ScoreCache::clear() {
    std::lock_guard<std::mutex> lock(mutex_);
    map_.clear();
    order_.clear();
}

double score(const Dataset& ds, const ModelState& gamma, double K, ScoreCache* cache,
             double tol) {
    if (cache) {
        if (auto hit = cache->lookup(gamma))
            return *hit;
    }
    const double value = -constrained_rss(ds, gamma, K, tol).rss;
    if (cache)
        cache->insert(gamma, value);
    return value;
}

} // namespace dpbss
