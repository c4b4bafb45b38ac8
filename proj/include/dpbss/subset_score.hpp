#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <list>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <utility>

#include "dpbss/dataset.hpp"
#include "dpbss/model_state.hpp"

namespace dpbss {

// Global sensitivity bound of the truncated score: (r + x_max * K)^2.
double sensitivity_bound(double r, double x_max, double K);

// Smallest l1 radius for which the truncated score coincides with the
// unconstrained fit with high probability:
//   sqrt(s) * { (kappa_+/kappa_-) b_max + (8 x_max / kappa_-) sigma }.
double recommended_k(const RegularityParams& reg, double x_max, int s);

// delta for a chain stopped at its eta-mixing time: eta * (1 + e^epsilon).
double approx_dp_delta(double eta, double epsilon);

// Privacy budget plus the l1 truncation radius and mixing target. The
// sensitivity bound and delta are derived quantities and always recomputed.
struct PrivacyParams {
    double epsilon = 1.0;
    double K = 1.0;
    double eta = 0.01;

    double delta_k(const Dataset& ds) const { return sensitivity_bound(ds.r, ds.x_max, K); }
    double delta() const { return approx_dp_delta(eta, epsilon); }
};

enum class SolverStatus {
    UnconstrainedOptimal, // OLS solution lies inside the l1 ball
    ProjectedConverged,   // projected gradient met the tolerance
    MaxIterations,        // best iterate after the iteration cap
    MinNormFallback,      // rank-deficient fit, minimum-norm solution
};

struct ScoreResult {
    double rss = 0.0;
    Eigen::VectorXd coef;
    double r_gamma = 0.0; // (|y|^2 - rss) / |y|^2, 0 when y == 0
    SolverStatus status = SolverStatus::UnconstrainedOptimal;
    int iterations = 0;
};

// Unconstrained least squares on the selected columns via the normal
// equations (LDLT); rank-deficient Grams fall back to the minimum-norm
// solution through an eigendecomposition with cutoff 1e-10 * trace.
ScoreResult ols_rss(const Dataset& ds, const ModelState& gamma);

// min over ||theta||_1 <= K of ||y - X_gamma theta||^2. The OLS solution is
// returned directly when it is feasible; otherwise accelerated projected
// gradient with step 1/L (L from 50 power-iteration steps on the Gram),
// stopping on relative objective decrease <= tol, at most 5000 iterations.
ScoreResult constrained_rss(const Dataset& ds, const ModelState& gamma, double K,
                            double tol = 1e-8);

// Euclidean projection onto the l1 ball of radius K (sort-based, O(s log s)).
Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double K);

// Bounded LRU cache of utility values keyed by model. Internally
// synchronized: concurrent lookups/inserts never return a wrong value and
// never deadlock. Valid for one (dataset, K) pair; clear() when reusing.
class ScoreCache {
public:
    explicit ScoreCache(std::size_t capacity = std::size_t{1} << 20);

    std::optional<double> lookup(const ModelState& gamma);
    void insert(const ModelState& gamma, double value);
    std::size_t size() const;
    std::size_t capacity() const { return capacity_; }
    void clear();

private:
    using Entry = std::pair<ModelState, double>;
    mutable std::mutex mutex_;
    std::size_t capacity_;
    std::list<Entry> order_; // front = most recently used
    std::unordered_map<ModelState, std::list<Entry>::iterator, ModelStateHash> map_;
};

// Utility u_K(gamma) = -constrained_rss(...).rss, memoized in `cache` when
// one is supplied. Pure in (ds, gamma, K); safe for concurrent calls.
double score(const Dataset& ds, const ModelState& gamma, double K,
             ScoreCache* cache = nullptr, double tol = 1e-8);

inline double score(const Dataset& ds, const ModelState& gamma, const PrivacyParams& pp,
                    ScoreCache* cache = nullptr) {
    return score(ds, gamma, pp.K, cache);
}

} // namespace dpbss
