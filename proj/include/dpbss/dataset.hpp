#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "dpbss/model_state.hpp"
#include "dpbss/rng.hpp"

namespace dpbss {

// Fixed-design regression data with declared bounds (|y_i| <= r,
// |X_ij| <= x_max). Immutable after construction; safe to share across
// threads. The declared bounds are carried alongside the data because the
// sensitivity of the truncated score depends on them, not on the realized
// sample; callers may declare looser a-priori bounds than the empirical
// maxima via with_declared_bounds.
struct Dataset {
    int n = 0;
    int p = 0;
    Eigen::MatrixXd X; // n x p
    Eigen::VectorXd y; // n
    double r = 0.0;
    double x_max = 0.0;

    // Validates dimensions and finiteness (bounds are NOT enforced here;
    // see validate_bounds).
    static Dataset create(Eigen::MatrixXd X, Eigen::VectorXd y, double r, double x_max);

    // Same data under different declared bounds.
    Dataset with_declared_bounds(double r_bound, double x_bound) const;
};

enum class SignalRegime { Strong, Weak, Custom };

struct GenConfig {
    int n = 0;
    int p = 0;
    int s = 0;
    SignalRegime signal = SignalRegime::Strong;
    std::vector<double> custom_beta; // length s, used when signal == Custom
    std::vector<int> support;        // empty means {0, ..., s-1}
    double noise_half_width = 0.1;   // w_i ~ Uniform(-a, a)
    std::uint64_t seed = 0;

    void validate() const;
};

// Bounds used by the utility and mixing-time predictions: eigenvalue range
// of the s-column Gram submatrices, l1 bound on the signal, noise scale.
struct RegularityParams {
    double kappa_minus = 1.0;
    double kappa_plus = 1.0;
    double b_max = 1.0;
    double sigma = 0.0;

    void validate() const;
};

struct GeneratedData {
    Dataset dataset;
    ModelState true_support;
    Eigen::VectorXd beta; // full length p
};

// Design entries i.i.d. Uniform(-1,1), y = X beta + w with w ~ Uniform(-a,a).
// Strong regime sets beta_j = 2 sqrt(s log(p) / n) on the support, Weak sets
// beta_j = 2 sqrt(log(p) / n). Declared bounds are the exact empirical
// maxima of the generated sample. Deterministic given the seed (entries are
// drawn row-major, then the noise vector).
GeneratedData generate_synthetic(const GenConfig& config);

struct BoundsViolation {
    int row = 0;
    int col = 0; // -1 for a response entry
    double value = 0.0;
};

struct BoundsReport {
    std::vector<BoundsViolation> x_violations;
    std::vector<BoundsViolation> y_violations;
    bool compliant() const { return x_violations.empty() && y_violations.empty(); }
};

BoundsReport validate_bounds(const Dataset& ds);

struct SrcEstimate {
    double kappa_minus = 0.0;
    double kappa_plus = 0.0;
    bool exhaustive = false;
    long long examined = 0;
};

// Empirical eigenvalue range of X_gamma' X_gamma / n over size-s submatrices:
// exhaustive when C(p,s) <= sample_budget, otherwise sample_budget random
// subsets. Singular submatrices show up as kappa_minus == 0.
SrcEstimate estimate_src(const Dataset& ds, int s, long long sample_budget, Rng& rng);

} // namespace dpbss
