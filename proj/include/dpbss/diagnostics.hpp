#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "dpbss/dataset.hpp"
#include "dpbss/exp_mechanism.hpp"
#include "dpbss/mh_sampler.hpp"
#include "dpbss/model_state.hpp"

namespace dpbss {

// Harmonic mean of support-recovery precision and recall:
// 2 |a & b| / (|a| + |b|). Both arguments must be nonempty.
double f_score(const ModelState& gamma_hat, const ModelState& gamma_star);

struct MarginReport {
    double margin = 0.0;
    ModelState min_argument;
    std::vector<ModelState> skipped_singular;
    long long examined = 0;
};

// Identifiability margin m_*(s): the minimum over all size-s models gamma
// != gamma_star of beta_d' Gamma(gamma) beta_d / |gamma \ gamma_star| with
// d = gamma_star \ gamma and Gamma the Schur complement of the sample
// covariance X'X/n. Exact enumeration; singular blocks are skipped and
// reported.
MarginReport identifiability_margin(const Dataset& ds, const ModelState& gamma_star,
                                    const Eigen::VectorXd& beta, int s,
                                    long long cap = 2'000'000);

struct MarginConditionCheck {
    double eq9_threshold = 0.0;  // c1 sigma^2 max{1, delta_K/(eps sigma^2)} log(p)/n
    double eq12_threshold = 0.0; // same with (kappa_- ^ 1) eps in the denominator
    bool satisfied_eq9 = false;
    bool satisfied_eq12 = false;
};

MarginConditionCheck check_margin_condition(double margin, double sigma, int n, int p,
                                            double epsilon, double delta_k, double c1,
                                            double kappa_minus);

struct Assumption41Report {
    double threshold = 0.0;
    std::vector<ModelState> violations; // models with no qualifying column
    long long checked = 0;
    long long degenerate_skipped = 0; // candidate columns with zero residual
    bool holds() const { return violations.empty(); }
};

// For every size-s model gamma' != gamma_star there must be a column k
// outside gamma_star and gamma' whose residualized direction correlates
// with every active feature at most
// (1/b_max) sqrt((kappa_- c1 sigma^2 / 2) log p). Exhaustive verification.
Assumption41Report check_assumption_4_1(const Dataset& ds, const ModelState& gamma_star,
                                        const RegularityParams& reg, double c1,
                                        long long cap = 2'000'000);

struct TransitionMatrix {
    std::vector<ModelState> models; // lexicographic
    Eigen::MatrixXd P;              // row-stochastic
    bool lazy = false;
    int p = 0;
    int s = 0;

    int size() const { return static_cast<int>(models.size()); }
};

// Double-swap MH transition matrix over all size-s models: off-diagonal
// entries 1/(s(p-s)) min{1, pi(col)/pi(row)} for Hamming-2 pairs, diagonal
// fills the row to 1; the lazy variant is (P + I)/2.
TransitionMatrix build_transition_matrix(const Dataset& ds, const PrivacyParams& pp, int s,
                                         bool lazy, long long cap = 5000);

// Stationary distribution of a row-stochastic matrix via the linear system
// pi' P = pi', sum(pi) = 1.
Eigen::VectorXd stationary_distribution(const TransitionMatrix& tm);

// 1 - lambda_2 via the symmetrized matrix sqrt(P_ij P_ji). Throws when the
// chain is not reversible (detailed balance violated beyond 1e-8).
double spectral_gap(const TransitionMatrix& tm);

struct MixingReport {
    double gap = 0.0;
    double min_pi = 0.0;
    double eta = 0.0;
    long long tau_eta_measured = 0;
    double sandwich_lower = 0.0;
    double sandwich_upper = 0.0;
    bool sandwich_holds = false;
    bool truncated = false;    // iteration cap hit before TV dropped below eta
    bool proxy_starts = false; // starts restricted to the 10 lowest-mass states
    std::vector<std::pair<long long, double>> tv_curve; // (t, max-start TV)
};

// Measures the eta-mixing time by iterating the one-step distributions from
// every start state (all starts when the state count is <= 500, else the 10
// lowest-pi states) and compares the result against the spectral sandwich
//   (1/2) ((1-gap)/gap) log(1/(2 eta)) <= tau <= (log(1/min pi)+log(1/eta))/gap.
MixingReport measure_mixing(const TransitionMatrix& tm, const ExactDistribution& pi,
                            double eta, long long t_cap = 100'000'000);

struct MixingBound {
    double psi = 0.0;
    double bound = 0.0;
};

// Closed-form worst-case mixing bound
//   c2 p s^2 { n eps kappa_+ b_max^2 / Psi + log(1/eta) },
//   Psi = { r + (kappa_+/kappa_-) b_max x_max + (sigma/kappa_-) x_max^2 }^2.
MixingBound predicted_mixing_bound(int n, int p, int s, double epsilon,
                                 const RegularityParams& reg, double r, double x_max,
                                 double eta, double c2);

// Total variation distance between the post-burn-in empirical state
// frequencies of a trace and the exact target.
double empirical_tv_vs_exact(const ChainTrace& trace, const ExactDistribution& pi,
                             long long burn_in);

} // namespace dpbss
