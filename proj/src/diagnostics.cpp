#include "dpbss/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace dpbss {

double f_score(const ModelState& gamma_hat, const ModelState& gamma_star) {
    if (gamma_hat.empty() || gamma_star.empty())
        throw std::invalid_argument("f_score: models must be nonempty");
    const int overlap = intersection_size(gamma_hat, gamma_star);
    return 2.0 * overlap / (gamma_hat.size() + gamma_star.size());
}

namespace {

Eigen::MatrixXd columns(const Dataset& ds, const std::vector<int>& idx) {
    Eigen::MatrixXd out(ds.n, static_cast<int>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k)
        out.col(static_cast<int>(k)) = ds.X.col(idx[k]);
    return out;
}

std::vector<int> set_difference(const ModelState& a, const ModelState& b) {
    std::vector<int> out;
    std::set_difference(a.indices.begin(), a.indices.end(), b.indices.begin(),
                        b.indices.end(), std::back_inserter(out));
    return out;
}

} // namespace

MarginReport identifiability_margin(const Dataset& ds, const ModelState& gamma_star,
                                    const Eigen::VectorXd& beta, int s, long long cap) {
    if (beta.size() != ds.p)
        throw std::invalid_argument("identifiability_margin: beta must have length p");
    if (!gamma_star.empty() && gamma_star.indices.back() >= ds.p)
        throw std::invalid_argument("identifiability_margin: gamma_star out of range");

    MarginReport report;
    report.margin = std::numeric_limits<double>::infinity();

    const std::vector<ModelState> models = enumerate_models(ds.p, s, cap);
    for (const ModelState& gamma : models) {
        if (gamma == gamma_star)
            continue;
        ++report.examined;
        const std::vector<int> dropped = set_difference(gamma_star, gamma);
        const std::vector<int> added = set_difference(gamma, gamma_star);
        if (dropped.empty()) {
            // gamma contains gamma_star entirely; no separation to measure.
            continue;
        }

        const Eigen::MatrixXd Xd = columns(ds, dropped);
        const Eigen::MatrixXd Xg = columns(ds, gamma.indices);
        const double n = static_cast<double>(ds.n);

        const Eigen::MatrixXd S_dd = Xd.transpose() * Xd / n;
        const Eigen::MatrixXd S_dg = Xd.transpose() * Xg / n;
        const Eigen::MatrixXd S_gg = Xg.transpose() * Xg / n;

        Eigen::LDLT<Eigen::MatrixXd> ldlt(S_gg);
        if (ldlt.info() != Eigen::Success ||
            ldlt.vectorD().minCoeff() <= 1e-12 * std::max(S_gg.trace(), 0.0)) {
            report.skipped_singular.push_back(gamma);
            continue;
        }
        const Eigen::MatrixXd schur = S_dd - S_dg * ldlt.solve(S_dg.transpose());

        Eigen::VectorXd beta_d(dropped.size());
        for (std::size_t k = 0; k < dropped.size(); ++k)
            beta_d[static_cast<int>(k)] = beta[dropped[k]];

        const double value = beta_d.dot(schur * beta_d) / static_cast<double>(added.size());
        if (value < report.margin) {
            report.margin = value;
            report.min_argument = gamma;
        }
    }
    if (report.examined == 0 || !std::isfinite(report.margin))
        throw std::runtime_error("identifiability_margin: no competing model evaluated");
    return report;
}

MarginConditionCheck check_margin_condition(double margin, double sigma, int n, int p,
                                            double epsilon, double delta_k, double c1,
                                            double kappa_minus) {
    if (c1 <= 0.0)
        throw std::invalid_argument("check_margin_condition: need c1 > 0");
    if (n < 1 || p < 1)
        throw std::invalid_argument("check_margin_condition: need n, p >= 1");
    const double log_p_over_n = std::log(static_cast<double>(p)) / n;
    const double sigma2 = sigma * sigma;
    // c1 sigma^2 max{1, delta/(eps sigma^2)} == c1 max{sigma^2, delta/eps};
    // the latter form avoids 0 * inf when sigma == 0.
    MarginConditionCheck check;
    check.eq9_threshold = c1 * std::max(sigma2, delta_k / epsilon) * log_p_over_n;
    check.eq12_threshold =
        c1 * std::max(sigma2, delta_k / (std::min(kappa_minus, 1.0) * epsilon)) *
        log_p_over_n;
    check.satisfied_eq9 = margin >= check.eq9_threshold;
    check.satisfied_eq12 = margin >= check.eq12_threshold;
    return check;
}

Assumption41Report check_assumption_4_1(const Dataset& ds, const ModelState& gamma_star,
                                        const RegularityParams& reg, double c1,
                                        long long cap) {
    reg.validate();
    if (c1 <= 0.0)
        throw std::invalid_argument("check_assumption_4_1: need c1 > 0");
    const int s = gamma_star.size();
    if (s < 1)
        throw std::invalid_argument("check_assumption_4_1: gamma_star must be nonempty");

    Assumption41Report report;
    report.threshold =
        std::sqrt(reg.kappa_minus * c1 * reg.sigma * reg.sigma / 2.0 *
                  std::log(static_cast<double>(ds.p))) /
        reg.b_max;

    const std::vector<ModelState> models = enumerate_models(ds.p, s, cap);
    for (const ModelState& gamma : models) {
        if (gamma == gamma_star)
            continue;
        ++report.checked;
        const std::vector<int> active_missing = set_difference(gamma_star, gamma);

        const Eigen::MatrixXd Xg = columns(ds, gamma.indices);
        const Eigen::MatrixXd G = Xg.transpose() * Xg;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(G);

        bool found = false;
        for (int k = 0; k < ds.p && !found; ++k) {
            if (gamma.contains(k) || gamma_star.contains(k))
                continue;
            // Residual of X_k against the span of X_gamma.
            Eigen::VectorXd u = ds.X.col(k);
            if (ldlt.info() == Eigen::Success)
                u -= Xg * ldlt.solve(Xg.transpose() * ds.X.col(k));
            const double norm = u.norm();
            if (norm <= 1e-12 * std::sqrt(static_cast<double>(ds.n))) {
                ++report.degenerate_skipped;
                continue;
            }
            double worst = 0.0;
            for (int j : active_missing)
                worst = std::max(worst, std::abs(ds.X.col(j).dot(u)) / norm);
            if (worst <= report.threshold)
                found = true;
        }
        if (!found)
            report.violations.push_back(gamma);
    }
    return report;
}

TransitionMatrix build_transition_matrix(const Dataset& ds, const PrivacyParams& pp, int s,
                                         bool lazy, long long cap) {
    const ExactDistribution dist = exact_distribution(ds, pp, s, cap);
    const int M = static_cast<int>(dist.models.size());

    TransitionMatrix tm;
    tm.models = dist.models;
    tm.lazy = lazy;
    tm.p = ds.p;
    tm.s = s;
    tm.P = Eigen::MatrixXd::Zero(M, M);

    const double pairs = static_cast<double>(s) * (ds.p - s);
    for (int i = 0; i < M; ++i) {
        double row_sum = 0.0;
        for (int j = 0; j < M; ++j) {
            if (j == i)
                continue;
            if (hamming_distance(tm.models[i], tm.models[j]) != 2)
                continue;
            const double accept =
                std::min(1.0, std::exp(dist.log_weights[j] - dist.log_weights[i]));
            tm.P(i, j) = accept / pairs;
            row_sum += tm.P(i, j);
        }
        tm.P(i, i) = std::max(0.0, 1.0 - row_sum);
    }
    if (lazy)
        tm.P = 0.5 * (tm.P + Eigen::MatrixXd::Identity(M, M));
    return tm;
}

Eigen::VectorXd stationary_distribution(const TransitionMatrix& tm) {
    const int M = tm.size();
    if (M == 1)
        return Eigen::VectorXd::Ones(1);
    // (P' - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    Eigen::MatrixXd A = tm.P.transpose() - Eigen::MatrixXd::Identity(M, M);
    A.row(M - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(M);
    rhs[M - 1] = 1.0;
    Eigen::VectorXd pi = A.colPivHouseholderQr().solve(rhs);
    return pi;
}

double spectral_gap(const TransitionMatrix& tm) {
    const int M = tm.size();
    if (M == 1)
        return 1.0;

    const Eigen::VectorXd pi = stationary_distribution(tm);
    double balance_violation = 0.0;
    for (int i = 0; i < M; ++i)
        for (int j = i + 1; j < M; ++j)
            balance_violation = std::max(
                balance_violation, std::abs(pi[i] * tm.P(i, j) - pi[j] * tm.P(j, i)));
    if (balance_violation > 1e-8)
        throw std::runtime_error("spectral_gap: chain is not reversible "
                                 "(detailed balance violated)");

    // For a reversible chain, sqrt(P_ij P_ji) is similar to P and symmetric;
    // this avoids forming D^{1/2} P D^{-1/2} with tiny stationary masses.
    Eigen::MatrixXd S(M, M);
    for (int i = 0; i < M; ++i) {
        S(i, i) = tm.P(i, i);
        for (int j = i + 1; j < M; ++j) {
            const double v = std::sqrt(tm.P(i, j) * tm.P(j, i));
            S(i, j) = v;
            S(j, i) = v;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    const double lambda2 = es.eigenvalues()[M - 2];
    return 1.0 - lambda2;
}

MixingReport measure_mixing(const TransitionMatrix& tm, const ExactDistribution& pi,
                            double eta, long long t_cap) {
    const int M = tm.size();
    if (static_cast<int>(pi.probs.size()) != M)
        throw std::invalid_argument("measure_mixing: pi does not match the state space");
    if (eta <= 0.0)
        throw std::invalid_argument("measure_mixing: need eta > 0");

    MixingReport report;
    report.eta = eta;
    report.gap = spectral_gap(tm);
    report.min_pi = *std::min_element(pi.probs.begin(), pi.probs.end());

    if (report.gap > 0.0) {
        report.sandwich_lower =
            0.5 * ((1.0 - report.gap) / report.gap) * std::log(1.0 / (2.0 * eta));
        report.sandwich_upper =
            (std::log(1.0 / report.min_pi) + std::log(1.0 / eta)) / report.gap;
    } else {
        report.sandwich_lower = 0.0;
        report.sandwich_upper = std::numeric_limits<double>::infinity();
    }

    if (eta >= 1.0) {
        report.tau_eta_measured = 0;
        report.sandwich_holds = report.sandwich_lower <= 0.0;
        return report;
    }
    if (report.gap <= 1e-14) {
        // No spectral gap: the chain cannot reach the target from every
        // start; iterating would spin until the cap.
        report.truncated = true;
        return report;
    }

    std::vector<int> starts;
    if (M <= 500) {
        starts.resize(M);
        std::iota(starts.begin(), starts.end(), 0);
    } else {
        report.proxy_starts = true;
        std::vector<int> order(M);
        std::iota(order.begin(), order.end(), 0);
        std::partial_sort(order.begin(), order.begin() + 10, order.end(),
                          [&](int a, int b) { return pi.probs[a] < pi.probs[b]; });
        starts.assign(order.begin(), order.begin() + 10);
    }

    Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(static_cast<int>(starts.size()), M);
    for (std::size_t row = 0; row < starts.size(); ++row)
        dist(static_cast<int>(row), starts[row]) = 1.0;
    Eigen::Map<const Eigen::VectorXd> target(pi.probs.data(), M);

    const auto max_start_tv = [&]() {
        double worst = 0.0;
        for (int row = 0; row < dist.rows(); ++row)
            worst = std::max(worst,
                             0.5 * (dist.row(row).transpose() - target).cwiseAbs().sum());
        return worst;
    };

    // TV to stationarity is non-increasing, so the first crossing is tau.
    // The sandwich upper bound caps how long a healthy run can take; going
    // far beyond it already decides the verdict.
    long long hard_cap = t_cap;
    if (std::isfinite(report.sandwich_upper)) {
        const double limit = 2.0 * report.sandwich_upper + 100.0;
        if (limit < static_cast<double>(hard_cap))
            hard_cap = static_cast<long long>(limit);
    }

    long long t = 0;
    double tv = max_start_tv();
    report.tv_curve.emplace_back(t, tv);
    while (tv > eta && t < hard_cap) {
        dist = dist * tm.P;
        ++t;
        tv = max_start_tv();
        report.tv_curve.emplace_back(t, tv);
    }
    report.tau_eta_measured = t;
    report.truncated = tv > eta;
    report.sandwich_holds = !report.truncated &&
                            report.sandwich_lower <= static_cast<double>(t) &&
                            static_cast<double>(t) <= report.sandwich_upper;
    return report;
}

MixingBound predicted_mixing_bound(int n, int p, int s, double epsilon,
                                 const RegularityParams& reg, double r, double x_max,
                                 double eta, double c2) {
    reg.validate();
    if (c2 <= 0.0)
        throw std::invalid_argument("predicted_mixing_bound: need c2 > 0");
    if (eta <= 0.0 || eta > 1.0)
        throw std::invalid_argument("predicted_mixing_bound: need eta in (0, 1]");
    MixingBound out;
    const double base = r + (reg.kappa_plus / reg.kappa_minus) * reg.b_max * x_max +
                        (reg.sigma / reg.kappa_minus) * x_max * x_max;
    out.psi = base * base;
    out.bound = c2 * p * static_cast<double>(s) * s *
                (n * epsilon * reg.kappa_plus * reg.b_max * reg.b_max / out.psi +
                 std::log(1.0 / eta));
    return out;
}

double empirical_tv_vs_exact(const ChainTrace& trace, const ExactDistribution& pi,
                             long long burn_in) {
    std::unordered_map<ModelState, long long, ModelStateHash> counts;
    long long total = 0;
    for (const StepRecord& record : trace.records) {
        if (record.t <= burn_in)
            continue;
        ++counts[record.model];
        ++total;
    }
    if (total == 0)
        throw std::invalid_argument("empirical_tv_vs_exact: no records after burn-in");

    double tv = 0.0;
    double outside_mass = 0.0;
    for (const auto& [model, count] : counts) {
        const int idx = pi.index_of(model);
        const double freq = static_cast<double>(count) / total;
        if (idx < 0)
            outside_mass += freq;
        else
            tv += std::abs(freq - pi.probs[idx]);
    }
    for (std::size_t i = 0; i < pi.models.size(); ++i)
        if (!counts.count(pi.models[i]))
            tv += pi.probs[i];
    return 0.5 * (tv + outside_mass);
}

} // namespace dpbss
