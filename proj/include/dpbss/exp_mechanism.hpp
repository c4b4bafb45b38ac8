#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dpbss/dataset.hpp"
#include "dpbss/model_state.hpp"
#include "dpbss/rng.hpp"
#include "dpbss/subset_score.hpp"

namespace dpbss {

// C(p, s), saturating at cap + 1 so callers can test "fits under cap"
// without overflow.
long long binomial_count(int p, int s, long long cap);

// Visits every size-s subset of {0, ..., p-1} in lexicographic order.
void for_each_model(int p, int s, const std::function<void(const std::vector<int>&)>& visit);

// All size-s models, lexicographic, each exactly once. Throws when
// C(p, s) > cap with a hint to use the chain sampler instead.
std::vector<ModelState> enumerate_models(int p, int s, long long cap = 2'000'000);

// log(sum_i exp(values[i])) with max subtraction.
double log_sum_exp(std::span<const double> values);

// The full target distribution over size-s models:
// pi(gamma) proportional to exp(epsilon * u_K(gamma) / delta_K).
struct ExactDistribution {
    int p = 0;
    int s = 0;
    double epsilon = 0.0;
    double K = 0.0;
    double delta_k = 0.0;
    std::vector<ModelState> models; // lexicographic
    std::vector<double> log_weights;
    double log_z = 0.0;
    std::vector<double> probs;

    // Position of `gamma` in `models`, or -1 if absent.
    int index_of(const ModelState& gamma) const;
};

// Scores every size-s model and normalizes via log-sum-exp. epsilon == 0 (or
// a degenerate delta_K == 0) yields the uniform distribution.
ExactDistribution exact_distribution(const Dataset& ds, const PrivacyParams& pp, int s,
                                     long long cap = 2'000'000, ScoreCache* cache = nullptr);

// Inverse-CDF draw; deterministic given the RNG state.
ModelState exact_sample(const ExactDistribution& dist, Rng& rng);

// Empirical check of the privacy ratio against random add-or-remove
// neighbors: max over models of |log pi_D - log pi_D'| must stay below
// epsilon (plus numerical slack).
struct DpRatioAudit {
    struct Trial {
        bool removed_row = false; // false: appended a bounded row
        int row = 0;              // removed row index, or -1 for appends
        double max_log_ratio = 0.0;
    };
    double epsilon = 0.0;
    double worst = 0.0;
    std::vector<Trial> trials;

    bool passed(double slack = 1e-6) const { return worst <= epsilon + slack; }
};

DpRatioAudit dp_ratio_audit(const Dataset& ds, const PrivacyParams& pp, int s, int trials,
                            Rng& rng, long long cap = 2'000'000);

} // namespace dpbss
