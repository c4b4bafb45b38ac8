#include <doctest.h>

#include <cmath>

#include "dpbss/diagnostics.hpp"
#include "test_helpers.hpp"

using namespace dpbss;

namespace {

Dataset orthonormal_dataset(int n, int p, const Eigen::VectorXd& beta, Rng& rng) {
    Eigen::MatrixXd X = dpbss::testing::orthonormal_design(n, p, rng);
    Eigen::VectorXd y = X * beta;
    return Dataset::create(X, y, std::max(1.0, y.cwiseAbs().maxCoeff()),
                           X.cwiseAbs().maxCoeff());
}

} // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("f_score basics and symmetry") {
    const ModelState a({0, 1, 2, 3});
    const ModelState b({4, 5, 6, 7});
    const ModelState c({0, 9, 10, 11});
    CHECK(f_score(a, a) == 1.0);
    CHECK(f_score(a, b) == 0.0);
    CHECK(f_score(a, c) == doctest::Approx(0.25));
    CHECK_THROWS_AS(f_score(ModelState(), a), std::invalid_argument);

    Rng rng(151);
    for (int trial = 0; trial < 100; ++trial) {
        const ModelState x = random_model(12, 3, rng);
        const ModelState y = random_model(12, 4, rng);
        CHECK(f_score(x, y) == f_score(y, x));
    }
}

TEST_CASE("margin under an orthonormal design is the weakest squared signal") {
    Rng rng(157);
    const int n = 32, p = 7, s = 3;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    beta[0] = 0.9;
    beta[1] = -0.4;
    beta[2] = 1.3;
    const Dataset ds = orthonormal_dataset(n, p, beta, rng);
    const ModelState gamma_star({0, 1, 2});

    const MarginReport report = identifiability_margin(ds, gamma_star, beta, s);
    CHECK(report.margin == doctest::Approx(0.4 * 0.4).epsilon(1e-9));
    // The minimizer swaps out the weakest coordinate (index 1).
    CHECK_FALSE(report.min_argument.contains(1));
    CHECK(report.min_argument.contains(0));
    CHECK(report.min_argument.contains(2));
}

TEST_CASE("zero signal has zero margin") {
    Rng rng(163);
    const Dataset ds = testing::random_bounded_dataset(25, 6, 1.0, 1.0, rng);
    const Eigen::VectorXd beta = Eigen::VectorXd::Zero(6);
    const MarginReport report =
        identifiability_margin(ds, ModelState({0, 1}), beta, 2);
    CHECK(report.margin == doctest::Approx(0.0).scale(1e-14));
}

TEST_CASE("schur margin equals the projector form on random instances") {
    Rng rng(167);
    for (int trial = 0; trial < 25; ++trial) {
        const int p = 6 + static_cast<int>(rng.next_index(4)); // 6..9
        const int s = 2 + static_cast<int>(rng.next_index(2)); // 2..3
        const int n = 30 + static_cast<int>(rng.next_index(10));
        GenConfig cfg;
        cfg.n = n;
        cfg.p = p;
        cfg.s = s;
        cfg.seed = 1000 + trial;
        const GeneratedData gen = generate_synthetic(cfg);

        const MarginReport report =
            identifiability_margin(gen.dataset, gen.true_support, gen.beta, s);

        // Projector route: residualize the dropped signal columns.
        double oracle = std::numeric_limits<double>::infinity();
        for (const ModelState& gamma : enumerate_models(p, s)) {
            if (gamma == gen.true_support)
                continue;
            std::vector<int> dropped;
            for (int j : gen.true_support.indices)
                if (!gamma.contains(j))
                    dropped.push_back(j);
            if (dropped.empty())
                continue;
            Eigen::MatrixXd Xg(n, s);
            for (int k = 0; k < s; ++k)
                Xg.col(k) = gen.dataset.X.col(gamma.indices[k]);
            const Eigen::MatrixXd projector =
                Xg * (Xg.transpose() * Xg).inverse() * Xg.transpose();
            Eigen::VectorXd signal = Eigen::VectorXd::Zero(n);
            for (int j : dropped)
                signal += gen.dataset.X.col(j) * gen.beta[j];
            const Eigen::VectorXd residual =
                signal - projector * signal;
            const double value =
                residual.squaredNorm() / n / static_cast<double>(dropped.size());
            oracle = std::min(oracle, value);
        }
        CHECK(report.margin == doctest::Approx(oracle).epsilon(1e-9));
    }
}

TEST_CASE("margin condition thresholds and flags") {
    SUBCASE("zero margin fails both") {
        const auto check = check_margin_condition(0.0, 1.0, 100, 50, 1.0, 4.0, 4.0, 0.5);
        CHECK_FALSE(check.satisfied_eq9);
        CHECK_FALSE(check.satisfied_eq12);
    }
    SUBCASE("low-privacy collapse: threshold reduces to c1 sigma^2 log(p)/n") {
        const double sigma = 2.0, epsilon = 100.0, delta_k = 1.0;
        const auto check =
            check_margin_condition(1.0, sigma, 200, 40, epsilon, delta_k, 4.0, 1.0);
        const double expected = 4.0 * sigma * sigma * std::log(40.0) / 200.0;
        CHECK(check.eq9_threshold == doctest::Approx(expected).epsilon(1e-12));
        CHECK(check.eq12_threshold == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("margin at twice the threshold satisfies eq9") {
        const auto probe = check_margin_condition(1.0, 1.0, 100, 50, 1.0, 9.0, 4.0, 1.0);
        const auto check = check_margin_condition(2.0 * probe.eq9_threshold, 1.0, 100, 50,
                                                  1.0, 9.0, 4.0, 1.0);
        CHECK(check.satisfied_eq9);
    }
    SUBCASE("kappa wedge tightens eq12 only") {
        const auto check = check_margin_condition(1.0, 1.0, 100, 50, 0.5, 9.0, 4.0, 0.25);
        CHECK(check.eq12_threshold == doctest::Approx(4.0 * check.eq9_threshold / 1.0)
                                          .epsilon(1e-12));
        CHECK(check.eq12_threshold > check.eq9_threshold);
    }
}

TEST_CASE("assumption 4.1: orthogonal design always qualifies") {
    Rng rng(173);
    const int n = 40, p = 8;
    Eigen::MatrixXd X = testing::orthonormal_design(n, p, rng);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    const Dataset ds = Dataset::create(X, y, 1.0, X.cwiseAbs().maxCoeff());
    RegularityParams reg;
    reg.kappa_minus = 1.0;
    reg.kappa_plus = 1.0;
    reg.b_max = 1.0;
    reg.sigma = 1.0;
    const Assumption41Report report =
        check_assumption_4_1(ds, ModelState({0, 1}), reg, 4.0);
    CHECK(report.holds());
    CHECK(report.checked == 27);
}

TEST_CASE("assumption 4.1: zero threshold flags correlated designs") {
    GenConfig cfg;
    cfg.n = 30;
    cfg.p = 6;
    cfg.s = 2;
    cfg.seed = 31;
    const GeneratedData gen = generate_synthetic(cfg);
    RegularityParams reg;
    reg.kappa_minus = 1.0;
    reg.kappa_plus = 1.0;
    reg.b_max = 1.0;
    reg.sigma = 0.0; // threshold becomes 0; any nonzero correlation violates
    const Assumption41Report report =
        check_assumption_4_1(gen.dataset, gen.true_support, reg, 4.0);
    CHECK(report.threshold == 0.0);
    CHECK_FALSE(report.holds());
}

TEST_CASE("assumption 4.1 matches a direct double-loop recomputation") {
    GenConfig cfg;
    cfg.n = 35;
    cfg.p = 10;
    cfg.s = 2;
    cfg.seed = 37;
    const GeneratedData gen = generate_synthetic(cfg);
    RegularityParams reg;
    reg.kappa_minus = 0.6;
    reg.kappa_plus = 1.5;
    reg.b_max = 1.0;
    reg.sigma = 0.05;
    const double c1 = 4.0;
    const Assumption41Report report =
        check_assumption_4_1(gen.dataset, gen.true_support, reg, c1);

    const double threshold = std::sqrt(reg.kappa_minus * c1 * reg.sigma * reg.sigma / 2.0 *
                                       std::log(10.0)) /
                             reg.b_max;
    CHECK(report.threshold == doctest::Approx(threshold).epsilon(1e-12));

    std::vector<ModelState> expected_violations;
    for (const ModelState& gamma : enumerate_models(10, 2)) {
        if (gamma == gen.true_support)
            continue;
        Eigen::MatrixXd Xg(cfg.n, 2);
        Xg.col(0) = gen.dataset.X.col(gamma.indices[0]);
        Xg.col(1) = gen.dataset.X.col(gamma.indices[1]);
        const Eigen::MatrixXd projector =
            Xg * (Xg.transpose() * Xg).inverse() * Xg.transpose();
        bool found = false;
        for (int k = 0; k < 10 && !found; ++k) {
            if (gamma.contains(k) || gen.true_support.contains(k))
                continue;
            const Eigen::VectorXd u =
                gen.dataset.X.col(k) - projector * gen.dataset.X.col(k);
            if (u.norm() <= 1e-12)
                continue;
            double worst = 0.0;
            for (int j : gen.true_support.indices)
                if (!gamma.contains(j))
                    worst = std::max(worst,
                                     std::abs(gen.dataset.X.col(j).dot(u)) / u.norm());
            found = worst <= threshold;
        }
        if (!found)
            expected_violations.push_back(gamma);
    }
    CHECK(report.violations == expected_violations);
}

TEST_CASE("transition matrix: zero budget, stochasticity, stationarity") {
    GenConfig cfg;
    cfg.n = 20;
    cfg.p = 6;
    cfg.s = 2;
    cfg.seed = 41;
    const Dataset ds = generate_synthetic(cfg).dataset;

    SUBCASE("zero budget fills every neighbor entry with 1/(s(p-s))") {
        PrivacyParams pp;
        pp.epsilon = 0.0;
        pp.K = 1.0;
        const TransitionMatrix tm = build_transition_matrix(ds, pp, 2, false);
        const double q = 1.0 / (2.0 * (6 - 2));
        for (int i = 0; i < tm.size(); ++i)
            for (int j = 0; j < tm.size(); ++j) {
                if (i == j)
                    continue;
                if (hamming_distance(tm.models[i], tm.models[j]) == 2)
                    CHECK(tm.P(i, j) == doctest::Approx(q).epsilon(1e-14));
                else
                    CHECK(tm.P(i, j) == 0.0);
            }
    }

    SUBCASE("rows sum to one and stationarity matches the exact target") {
        PrivacyParams pp;
        pp.epsilon = 1.0;
        pp.K = 1.5;
        const TransitionMatrix tm = build_transition_matrix(ds, pp, 2, false);
        const ExactDistribution pi = exact_distribution(ds, pp, 2);
        REQUIRE(tm.size() == 15);
        for (int i = 0; i < tm.size(); ++i)
            CHECK(tm.P.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
        Eigen::Map<const Eigen::VectorXd> target(pi.probs.data(), tm.size());
        const Eigen::VectorXd after = tm.P.transpose() * target;
        for (int i = 0; i < tm.size(); ++i)
            CHECK(std::abs(after[i] - target[i]) <= 1e-10);

        // Detailed balance, entrywise.
        for (int i = 0; i < tm.size(); ++i)
            for (int j = 0; j < tm.size(); ++j)
                CHECK(std::abs(target[i] * tm.P(i, j) - target[j] * tm.P(j, i)) <= 1e-10);
    }

    SUBCASE("lazy and plain chains share the stationary distribution") {
        PrivacyParams pp;
        pp.epsilon = 2.0;
        pp.K = 1.0;
        const ExactDistribution pi = exact_distribution(ds, pp, 2);
        Eigen::Map<const Eigen::VectorXd> target(pi.probs.data(),
                                                 static_cast<int>(pi.probs.size()));
        for (bool lazy : {false, true}) {
            const TransitionMatrix tm = build_transition_matrix(ds, pp, 2, lazy);
            const Eigen::VectorXd after = tm.P.transpose() * target;
            for (int i = 0; i < tm.size(); ++i)
                CHECK(std::abs(after[i] - target[i]) <= 1e-10);
        }
    }
}

TEST_CASE("spectral gap closed forms") {
    SUBCASE("two-state chain has gap a + b") {
        const double a = 0.3, b = 0.45;
        TransitionMatrix tm;
        tm.models = {ModelState({0}), ModelState({1})};
        tm.P.resize(2, 2);
        tm.P << 1 - a, a, b, 1 - b;
        tm.p = 2;
        tm.s = 1;
        CHECK(spectral_gap(tm) == doctest::Approx(a + b).epsilon(1e-12));
    }
    SUBCASE("identity matrix has zero gap") {
        TransitionMatrix tm;
        tm.models = {ModelState({0}), ModelState({1}), ModelState({2})};
        tm.P = Eigen::MatrixXd::Identity(3, 3);
        tm.p = 3;
        tm.s = 1;
        // pi'P = pi' is degenerate for the identity; detailed balance holds
        // trivially and lambda_2 = 1.
        CHECK(spectral_gap(tm) == doctest::Approx(0.0).scale(1.0));
    }
    SUBCASE("non-reversible chains are rejected") {
        TransitionMatrix tm;
        tm.models = {ModelState({0}), ModelState({1}), ModelState({2})};
        tm.P.resize(3, 3);
        // A directed 3-cycle: stationary uniform but not reversible.
        tm.P << 0.0, 0.9, 0.1, 0.1, 0.0, 0.9, 0.9, 0.1, 0.0;
        tm.p = 3;
        tm.s = 1;
        CHECK_THROWS_AS(spectral_gap(tm), std::runtime_error);
    }
}

TEST_CASE("lazy chain gap matches a power-iteration estimate") {
    GenConfig cfg;
    cfg.n = 20;
    cfg.p = 6;
    cfg.s = 2;
    cfg.seed = 43;
    const Dataset ds = generate_synthetic(cfg).dataset;
    PrivacyParams pp;
    pp.epsilon = 1.0;
    pp.K = 1.5;
    const TransitionMatrix tm = build_transition_matrix(ds, pp, 2, /*lazy=*/true);
    const double gap = spectral_gap(tm);
    CHECK(gap > 0.0);
    CHECK(gap <= 1.0);

    // Power iteration on the symmetrized matrix, deflating the top
    // eigenvector; run to convergence.
    const int M = tm.size();
    Eigen::MatrixXd S(M, M);
    for (int i = 0; i < M; ++i) {
        S(i, i) = tm.P(i, i);
        for (int j = i + 1; j < M; ++j) {
            const double v = std::sqrt(tm.P(i, j) * tm.P(j, i));
            S(i, j) = v;
            S(j, i) = v;
        }
    }
    Eigen::VectorXd top = Eigen::VectorXd::Ones(M);
    for (int it = 0; it < 20000; ++it)
        top = (S * top).normalized();
    Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(M, 0.3, 1.7);
    v -= top * top.dot(v);
    v.normalize();
    double lambda2 = 0.0;
    for (int it = 0; it < 20000; ++it) {
        v = S * v;
        v -= top * top.dot(v);
        lambda2 = v.norm();
        if (lambda2 == 0.0)
            break;
        v /= lambda2;
    }
    CHECK(gap == doctest::Approx(1.0 - lambda2).epsilon(1e-8));
}

TEST_CASE("lazy eigenvalues are nonnegative") {
    GenConfig cfg;
    cfg.n = 22;
    cfg.p = 6;
    cfg.s = 2;
    cfg.seed = 47;
    const Dataset ds = generate_synthetic(cfg).dataset;
    PrivacyParams pp;
    pp.epsilon = 1.5;
    pp.K = 1.0;
    const TransitionMatrix tm = build_transition_matrix(ds, pp, 2, /*lazy=*/true);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        [&] {
            const int M = tm.size();
            Eigen::MatrixXd S(M, M);
            for (int i = 0; i < M; ++i) {
                S(i, i) = tm.P(i, i);
                for (int j = i + 1; j < M; ++j) {
                    const double v = std::sqrt(tm.P(i, j) * tm.P(j, i));
                    S(i, j) = v;
                    S(j, i) = v;
                }
            }
            return S;
        }(),
        Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
}

TEST_CASE("measure_mixing: vacuous target, one-step point mass, sandwich") {
    SUBCASE("eta >= 1 means zero mixing time") {
        TransitionMatrix tm;
        tm.models = {ModelState({0}), ModelState({1})};
        tm.P.resize(2, 2);
        tm.P << 0.5, 0.5, 0.5, 0.5;
        tm.p = 2;
        tm.s = 1;
        ExactDistribution pi;
        pi.models = tm.models;
        pi.probs = {0.5, 0.5};
        pi.log_weights = {0.0, 0.0};
        const MixingReport report = measure_mixing(tm, pi, 1.5);
        CHECK(report.tau_eta_measured == 0);
    }
    SUBCASE("jump-to-mass chain mixes in one step") {
        TransitionMatrix tm;
        tm.models = {ModelState({0}), ModelState({1})};
        tm.P.resize(2, 2);
        tm.P << 1.0, 0.0, 1.0, 0.0; // everything moves to state 0 immediately
        tm.p = 2;
        tm.s = 1;
        ExactDistribution pi;
        pi.models = tm.models;
        pi.probs = {1.0, 0.0};
        pi.log_weights = {0.0, -1e9};
        const MixingReport report = measure_mixing(tm, pi, 0.01);
        CHECK(report.tau_eta_measured == 1);
    }
    SUBCASE("sandwich holds on a real instance") {
        GenConfig cfg;
        cfg.n = 24;
        cfg.p = 6;
        cfg.s = 2;
        cfg.seed = 53;
        const Dataset ds = generate_synthetic(cfg).dataset;
        PrivacyParams pp;
        pp.epsilon = 1.0;
        pp.K = 1.5;
        const TransitionMatrix tm = build_transition_matrix(ds, pp, 2, /*lazy=*/true);
        const ExactDistribution pi = exact_distribution(ds, pp, 2);
        for (double eta : {0.1, 0.01}) {
            const MixingReport report = measure_mixing(tm, pi, eta);
            CHECK_FALSE(report.truncated);
            CHECK(report.sandwich_holds);
            CHECK(report.sandwich_lower <= static_cast<double>(report.tau_eta_measured));
            CHECK(static_cast<double>(report.tau_eta_measured) <= report.sandwich_upper);
        }
    }
}

TEST_CASE("closed-form mixing bound") {
    RegularityParams reg;
    reg.kappa_minus = 1.0;
    reg.kappa_plus = 1.0;
    reg.b_max = 1.0;
    reg.sigma = 1.0;
    const MixingBound at_eta_one = predicted_mixing_bound(100, 50, 3, 2.0, reg, 1.0, 1.0,
                                                        1.0, 1.0);
    CHECK(at_eta_one.psi == doctest::Approx(9.0));
    CHECK(at_eta_one.bound ==
          doctest::Approx(50.0 * 9.0 * (100.0 * 2.0 * 1.0 / 9.0)).epsilon(1e-12));

    const MixingBound zero = predicted_mixing_bound(100, 50, 3, 0.0, reg, 1.0, 1.0, 1.0, 1.0);
    CHECK(zero.bound == 0.0);
}

TEST_CASE("calibration: margin condition met implies the target concentrates") {
    // Noiseless instance with a comfortable margin; with the empirical
    // default c1 = 4 the eq9 threshold is met at epsilon = 16 and the exact
    // target then puts at least 1 - p^-2 mass on the true support.
    GenConfig cfg;
    cfg.n = 50;
    cfg.p = 8;
    cfg.s = 2;
    cfg.signal = SignalRegime::Custom;
    cfg.custom_beta = {1.5, 1.5};
    cfg.noise_half_width = 0.0;
    cfg.seed = 59;
    const GeneratedData gen = generate_synthetic(cfg);

    const MarginReport margin =
        identifiability_margin(gen.dataset, gen.true_support, gen.beta, 2);

    PrivacyParams pp;
    pp.epsilon = 16.0;
    pp.K = 4.0; // covers |beta|_1 = 3
    const double delta_k = pp.delta_k(gen.dataset);
    const MarginConditionCheck condition = check_margin_condition(
        margin.margin, /*sigma=*/0.0, cfg.n, cfg.p, pp.epsilon, delta_k, /*c1=*/4.0,
        /*kappa_minus=*/1.0);
    REQUIRE(condition.satisfied_eq9);

    const ExactDistribution dist = exact_distribution(gen.dataset, pp, 2);
    const int star = dist.index_of(gen.true_support);
    REQUIRE(star >= 0);
    CHECK(dist.probs[star] >= 1.0 - 1.0 / (cfg.p * cfg.p));
}

TEST_CASE("empirical tv: constant trace at a point mass, disjoint support") {
    ExactDistribution pi;
    pi.models = enumerate_models(4, 2);
    pi.probs.assign(6, 0.0);
    pi.probs[2] = 1.0;
    pi.log_weights.assign(6, -1e9);
    pi.log_weights[2] = 0.0;

    ChainTrace trace;
    for (int t = 0; t <= 50; ++t) {
        StepRecord record;
        record.t = t;
        record.model = pi.models[2];
        trace.records.push_back(record);
    }
    CHECK(empirical_tv_vs_exact(trace, pi, 10) == doctest::Approx(0.0).scale(1.0));

    ChainTrace outside;
    for (int t = 0; t <= 50; ++t) {
        StepRecord record;
        record.t = t;
        record.model = ModelState({8, 9}); // not in pi's universe
        outside.records.push_back(record);
    }
    CHECK(empirical_tv_vs_exact(outside, pi, 0) == doctest::Approx(1.0));

    CHECK_THROWS_AS(empirical_tv_vs_exact(trace, pi, 50), std::invalid_argument);
}

} // TEST_SUITE
