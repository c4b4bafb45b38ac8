#include "dpbss/exp_mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dpbss {

long long binomial_count(int p, int s, long long cap) {
    if (s < 0 || s > p)
        return 0;
    s = std::min(s, p - s);
    long long count = 1;
    for (int i = 1; i <= s; ++i) {
        // count *= (p - s + i) / i, exactly, watching for saturation.
        const double projected = static_cast<double>(count) * (p - s + i) / i;
        if (projected > static_cast<double>(cap) * 2.0)
            return cap + 1;
        count = count * (p - s + i) / i;
        if (count > cap)
            return cap + 1;
    }
    return count;
}

void for_each_model(int p, int s, const std::function<void(const std::vector<int>&)>& visit) {
    if (s < 0 || s > p)
        throw std::invalid_argument("for_each_model: need 0 <= s <= p");
    std::vector<int> gamma(s);
    for (int k = 0; k < s; ++k)
        gamma[k] = k;
    for (;;) {
        visit(gamma);
        // Advance to the next combination in lexicographic order.
        int k = s - 1;
        while (k >= 0 && gamma[k] == p - s + k)
            --k;
        if (k < 0)
            return;
        ++gamma[k];
        for (int j = k + 1; j < s; ++j)
            gamma[j] = gamma[j - 1] + 1;
    }
}

std::vector<ModelState> enumerate_models(int p, int s, long long cap) {
    if (s < 0 || s > p)
        throw std::invalid_argument("enumerate_models: need 0 <= s <= p");
    const long long count = binomial_count(p, s, cap);
    if (count > cap)
        throw std::runtime_error("enumerate_models: C(p, s) exceeds the enumeration cap; "
                                 "use the MH sampler for instances of this size");
    std::vector<ModelState> models;
    models.reserve(static_cast<std::size_t>(count));
    for_each_model(p, s, [&](const std::vector<int>& gamma) {
        ModelState m;
        m.indices = gamma;
        models.push_back(std::move(m));
    });
    return models;
}

double log_sum_exp(std::span<const double> values) {
    if (values.empty())
        throw std::invalid_argument("log_sum_exp: empty input");
    const double max_value = *std::max_element(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values)
        sum += std::exp(v - max_value);
    return max_value + std::log(sum);
}

int ExactDistribution::index_of(const ModelState& gamma) const {
    auto it = std::lower_bound(models.begin(), models.end(), gamma);
    if (it == models.end() || !(*it == gamma))
        return -1;
    return static_cast<int>(it - models.begin());
}

ExactDistribution exact_distribution(const Dataset& ds, const PrivacyParams& pp, int s,
                                     long long cap, ScoreCache* cache) {
    if (pp.epsilon < 0.0)
        throw std::invalid_argument("exact_distribution: need epsilon >= 0");
    ExactDistribution dist;
    dist.p = ds.p;
    dist.s = s;
    dist.epsilon = pp.epsilon;
    dist.K = pp.K;
    dist.delta_k = pp.delta_k(ds);
    dist.models = enumerate_models(ds.p, s, cap);

    dist.log_weights.resize(dist.models.size());
    for (std::size_t i = 0; i < dist.models.size(); ++i) {
        if (pp.epsilon == 0.0 || dist.delta_k <= 0.0)
            dist.log_weights[i] = 0.0;
        else
            dist.log_weights[i] =
                pp.epsilon * score(ds, dist.models[i], pp.K, cache) / dist.delta_k;
    }
    dist.log_z = log_sum_exp(dist.log_weights);
    dist.probs.resize(dist.log_weights.size());
    for (std::size_t i = 0; i < dist.log_weights.size(); ++i)
        dist.probs[i] = std::exp(dist.log_weights[i] - dist.log_z);
    return dist;
}

ModelState exact_sample(const ExactDistribution& dist, Rng& rng) {
    if (dist.models.empty() || dist.probs.size() != dist.models.size())
        throw std::invalid_argument("exact_sample: distribution not built");
    const double u = rng.next_double();
    double cumulative = 0.0;
    for (std::size_t i = 0; i < dist.probs.size(); ++i) {
        cumulative += dist.probs[i];
        if (u < cumulative)
            return dist.models[i];
    }
    return dist.models.back(); // u landed in the rounding tail
}

namespace {

// Neighbor with row `drop` removed.
Dataset remove_row(const Dataset& ds, int drop) {
    Eigen::MatrixXd X(ds.n - 1, ds.p);
    Eigen::VectorXd y(ds.n - 1);
    int out = 0;
    for (int i = 0; i < ds.n; ++i) {
        if (i == drop)
            continue;
        X.row(out) = ds.X.row(i);
        y[out] = ds.y[i];
        ++out;
    }
    return Dataset::create(std::move(X), std::move(y), ds.r, ds.x_max);
}

// Neighbor with one row appended, drawn inside the declared bounds.
Dataset append_row(const Dataset& ds, Rng& rng) {
    Eigen::MatrixXd X(ds.n + 1, ds.p);
    Eigen::VectorXd y(ds.n + 1);
    X.topRows(ds.n) = ds.X;
    y.head(ds.n) = ds.y;
    for (int j = 0; j < ds.p; ++j)
        X(ds.n, j) = rng.next_symmetric(ds.x_max);
    y[ds.n] = rng.next_symmetric(ds.r);
    return Dataset::create(std::move(X), std::move(y), ds.r, ds.x_max);
}

} // namespace

DpRatioAudit dp_ratio_audit(const Dataset& ds, const PrivacyParams& pp, int s, int trials,
                            Rng& rng, long long cap) {
    if (trials < 1)
        throw std::invalid_argument("dp_ratio_audit: need at least one trial");
    DpRatioAudit audit;
    audit.epsilon = pp.epsilon;

    ScoreCache base_cache;
    const ExactDistribution base = exact_distribution(ds, pp, s, cap, &base_cache);

    for (int trial = 0; trial < trials; ++trial) {
        DpRatioAudit::Trial record;
        record.removed_row = ds.n > 1 && rng.next_double() < 0.5;
        Dataset neighbor;
        if (record.removed_row) {
            record.row = static_cast<int>(rng.next_index(ds.n));
            neighbor = remove_row(ds, record.row);
        } else {
            record.row = -1;
            neighbor = append_row(ds, rng);
        }
        const ExactDistribution other = exact_distribution(neighbor, pp, s, cap);
        double max_ratio = 0.0;
        for (std::size_t i = 0; i < base.models.size(); ++i) {
            const double log_pi_base = base.log_weights[i] - base.log_z;
            const double log_pi_other = other.log_weights[i] - other.log_z;
            max_ratio = std::max(max_ratio, std::abs(log_pi_base - log_pi_other));
        }
        record.max_log_ratio = max_ratio;
        audit.worst = std::max(audit.worst, max_ratio);
        audit.trials.push_back(record);
    }
    return audit;
}

} // namespace dpbss
