#include "dpbss/dataset.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "dpbss/exp_mechanism.hpp"

namespace dpbss {

Dataset Dataset::create(Eigen::MatrixXd X, Eigen::VectorXd y, double r, double x_max) {
    if (X.rows() < 1 || X.cols() < 1)
        throw std::invalid_argument("Dataset: need n >= 1 and p >= 1");
    if (y.size() != X.rows())
        throw std::invalid_argument("Dataset: y length must equal row count");
    if (!X.allFinite() || !y.allFinite())
        throw std::invalid_argument("Dataset: entries must be finite");
    if (r < 0.0 || x_max < 0.0)
        throw std::invalid_argument("Dataset: bounds must be nonnegative");
    Dataset ds;
    ds.n = static_cast<int>(X.rows());
    ds.p = static_cast<int>(X.cols());
    ds.X = std::move(X);
    ds.y = std::move(y);
    ds.r = r;
    ds.x_max = x_max;
    return ds;
}

Dataset Dataset::with_declared_bounds(double r_bound, double x_bound) const {
    return Dataset::create(X, y, r_bound, x_bound);
}

void GenConfig::validate() const {
    if (n < 1 || p < 1)
        throw std::invalid_argument("GenConfig: need n >= 1 and p >= 1");
    if (s < 0 || s > std::min(n, p))
        throw std::invalid_argument("GenConfig: need 0 <= s <= min(n, p)");
    if (!support.empty()) {
        if (static_cast<int>(support.size()) != s)
            throw std::invalid_argument("GenConfig: support size must equal s");
        std::set<int> seen;
        for (int j : support) {
            if (j < 0 || j >= p)
                throw std::invalid_argument("GenConfig: support index out of range");
            if (!seen.insert(j).second)
                throw std::invalid_argument("GenConfig: duplicate support index");
        }
    }
    if (signal == SignalRegime::Custom && static_cast<int>(custom_beta.size()) != s)
        throw std::invalid_argument("GenConfig: custom_beta must have length s");
    if (noise_half_width < 0.0)
        throw std::invalid_argument("GenConfig: noise half-width must be >= 0");
}

void RegularityParams::validate() const {
    if (!(kappa_minus > 0.0) || !(kappa_plus >= kappa_minus))
        throw std::invalid_argument("RegularityParams: need 0 < kappa_minus <= kappa_plus");
    if (!(b_max > 0.0))
        throw std::invalid_argument("RegularityParams: need b_max > 0");
    if (sigma < 0.0)
        throw std::invalid_argument("RegularityParams: need sigma >= 0");
}

GeneratedData generate_synthetic(const GenConfig& config) {
    config.validate();
    const int n = config.n, p = config.p, s = config.s;

    std::vector<int> support = config.support;
    if (support.empty())
        for (int j = 0; j < s; ++j)
            support.push_back(j);
    ModelState true_support{std::vector<int>(support)};

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    double signal_value = 0.0;
    switch (config.signal) {
    case SignalRegime::Strong:
        signal_value = 2.0 * std::sqrt(static_cast<double>(s) * std::log(double(p)) / n);
        break;
    case SignalRegime::Weak:
        signal_value = 2.0 * std::sqrt(std::log(double(p)) / n);
        break;
    case SignalRegime::Custom:
        break;
    }
    // custom_beta pairs with `support` in the order the caller gave it.
    for (int k = 0; k < s; ++k)
        beta[support[k]] =
            config.signal == SignalRegime::Custom ? config.custom_beta[k] : signal_value;

    // Draw order is part of the contract: X row-major first, then the noise.
    Rng rng(config.seed);
    Eigen::MatrixXd X(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j)
            X(i, j) = rng.next_symmetric(1.0);
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i)
        w[i] = rng.next_symmetric(config.noise_half_width);

    Eigen::VectorXd y = X * beta + w;

    const double r = y.cwiseAbs().maxCoeff();
    const double x_max = X.cwiseAbs().maxCoeff();

    GeneratedData out;
    out.dataset = Dataset::create(std::move(X), std::move(y), r, x_max);
    out.true_support = std::move(true_support);
    out.beta = std::move(beta);
    return out;
}

BoundsReport validate_bounds(const Dataset& ds) {
    BoundsReport report;
    for (int i = 0; i < ds.n; ++i) {
        for (int j = 0; j < ds.p; ++j)
            if (std::abs(ds.X(i, j)) > ds.x_max)
                report.x_violations.push_back({i, j, ds.X(i, j)});
        if (std::abs(ds.y[i]) > ds.r)
            report.y_violations.push_back({i, -1, ds.y[i]});
    }
    return report;
}

namespace {

void gram_extremes(const Dataset& ds, const std::vector<int>& gamma, double& lo, double& hi) {
    const int s = static_cast<int>(gamma.size());
    Eigen::MatrixXd Xg(ds.n, s);
    for (int k = 0; k < s; ++k)
        Xg.col(k) = ds.X.col(gamma[k]);
    Eigen::MatrixXd G = Xg.transpose() * Xg / double(ds.n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
    lo = std::max(0.0, es.eigenvalues().minCoeff());
    hi = es.eigenvalues().maxCoeff();
}

} // namespace

SrcEstimate estimate_src(const Dataset& ds, int s, long long sample_budget, Rng& rng) {
    if (s < 1 || s > std::min(ds.n, ds.p))
        throw std::invalid_argument("estimate_src: need 1 <= s <= min(n, p)");
    if (sample_budget < 1)
        throw std::invalid_argument("estimate_src: need a positive sample budget");

    SrcEstimate est;
    est.kappa_minus = std::numeric_limits<double>::infinity();
    est.kappa_plus = 0.0;

    const long long total = binomial_count(ds.p, s, sample_budget);
    if (total <= sample_budget) {
        est.exhaustive = true;
        for_each_model(ds.p, s, [&](const std::vector<int>& gamma) {
            double lo, hi;
            gram_extremes(ds, gamma, lo, hi);
            est.kappa_minus = std::min(est.kappa_minus, lo);
            est.kappa_plus = std::max(est.kappa_plus, hi);
            ++est.examined;
        });
    } else {
        std::vector<int> gamma(s);
        for (long long trial = 0; trial < sample_budget; ++trial) {
            // Partial Fisher-Yates draw of s distinct indices.
            std::vector<int> pool(ds.p);
            for (int j = 0; j < ds.p; ++j)
                pool[j] = j;
            for (int k = 0; k < s; ++k) {
                const auto pick = k + rng.next_index(static_cast<std::uint64_t>(ds.p - k));
                std::swap(pool[k], pool[pick]);
                gamma[k] = pool[k];
            }
            std::sort(gamma.begin(), gamma.end());
            double lo, hi;
            gram_extremes(ds, gamma, lo, hi);
            est.kappa_minus = std::min(est.kappa_minus, lo);
            est.kappa_plus = std::max(est.kappa_plus, hi);
            ++est.examined;
        }
    }
    return est;
}

} // namespace dpbss
