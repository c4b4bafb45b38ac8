#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dpbss/diagnostics.hpp"
#include "dpbss/exp_mechanism.hpp"
#include "dpbss/mh_sampler.hpp"
#include "dpbss/subset_score.hpp"

namespace py = pybind11;
using namespace dpbss;

namespace {

ModelState to_model(const std::vector<int>& indices) { return ModelState(indices); }

} // namespace

PYBIND11_MODULE(_dpbss, m) {
    m.doc() = "Differentially private best subset selection: scoring, exact "
              "exponential mechanism, double-swap MH sampling, diagnostics.";

    py::class_<Dataset>(m, "Dataset")
        .def(py::init([](Eigen::MatrixXd X, Eigen::VectorXd y, double r, double x_max) {
                 return Dataset::create(std::move(X), std::move(y), r, x_max);
             }),
             py::arg("X"), py::arg("y"), py::arg("r"), py::arg("x_max"))
        .def_readonly("n", &Dataset::n)
        .def_readonly("p", &Dataset::p)
        .def_readonly("X", &Dataset::X)
        .def_readonly("y", &Dataset::y)
        .def_readonly("r", &Dataset::r)
        .def_readonly("x_max", &Dataset::x_max)
        .def("with_declared_bounds", &Dataset::with_declared_bounds, py::arg("r"),
             py::arg("x_max"));

    py::class_<ScoreResult>(m, "ScoreResult")
        .def_readonly("rss", &ScoreResult::rss)
        .def_readonly("coef", &ScoreResult::coef)
        .def_readonly("r_gamma", &ScoreResult::r_gamma)
        .def_readonly("iterations", &ScoreResult::iterations)
        .def_property_readonly("status", [](const ScoreResult& r) {
            switch (r.status) {
            case SolverStatus::UnconstrainedOptimal: return "unconstrained_optimal";
            case SolverStatus::ProjectedConverged: return "projected_converged";
            case SolverStatus::MaxIterations: return "max_iterations";
            case SolverStatus::MinNormFallback: return "min_norm_fallback";
            }
            return "unknown";
        });

    m.def(
        "generate_synthetic",
        [](int n, int p, int s, const std::string& signal, double noise,
           std::uint64_t seed, const std::vector<int>& support,
           const std::vector<double>& custom_beta) {
            GenConfig cfg;
            cfg.n = n;
            cfg.p = p;
            cfg.s = s;
            cfg.noise_half_width = noise;
            cfg.seed = seed;
            cfg.support = support;
            if (signal == "strong")
                cfg.signal = SignalRegime::Strong;
            else if (signal == "weak")
                cfg.signal = SignalRegime::Weak;
            else if (signal == "custom")
                cfg.signal = SignalRegime::Custom;
            else
                throw std::invalid_argument("signal must be strong/weak/custom");
            cfg.custom_beta = custom_beta;
            const GeneratedData gen = generate_synthetic(cfg);
            return py::make_tuple(gen.dataset, gen.true_support.indices, gen.beta);
        },
        py::arg("n"), py::arg("p"), py::arg("s"), py::arg("signal") = "strong",
        py::arg("noise") = 0.1, py::arg("seed") = 0,
        py::arg("support") = std::vector<int>{},
        py::arg("custom_beta") = std::vector<double>{},
        "Returns (dataset, true_support, beta).");

    m.def(
        "ols_rss",
        [](const Dataset& ds, const std::vector<int>& gamma) {
            return ols_rss(ds, to_model(gamma));
        },
        py::arg("dataset"), py::arg("gamma"));

    m.def(
        "constrained_rss",
        [](const Dataset& ds, const std::vector<int>& gamma, double K, double tol) {
            return constrained_rss(ds, to_model(gamma), K, tol);
        },
        py::arg("dataset"), py::arg("gamma"), py::arg("K"), py::arg("tol") = 1e-8);

    m.def(
        "score",
        [](const Dataset& ds, const std::vector<int>& gamma, double K) {
            return score(ds, to_model(gamma), K);
        },
        py::arg("dataset"), py::arg("gamma"), py::arg("K"),
        "Truncated utility u_K(gamma) = -constrained rss.");

    m.def("sensitivity_bound", &sensitivity_bound, py::arg("r"), py::arg("x_max"),
          py::arg("K"));
    m.def(
        "recommended_k",
        [](double kappa_minus, double kappa_plus, double b_max, double sigma, double x_max,
           int s) {
            RegularityParams reg;
            reg.kappa_minus = kappa_minus;
            reg.kappa_plus = kappa_plus;
            reg.b_max = b_max;
            reg.sigma = sigma;
            return recommended_k(reg, x_max, s);
        },
        py::arg("kappa_minus"), py::arg("kappa_plus"), py::arg("b_max"), py::arg("sigma"),
        py::arg("x_max"), py::arg("s"));
    m.def("approx_dp_delta", &approx_dp_delta, py::arg("eta"), py::arg("epsilon"));

    py::class_<ExactDistribution>(m, "ExactDistribution")
        .def_readonly("p", &ExactDistribution::p)
        .def_readonly("s", &ExactDistribution::s)
        .def_readonly("epsilon", &ExactDistribution::epsilon)
        .def_readonly("K", &ExactDistribution::K)
        .def_readonly("delta_k", &ExactDistribution::delta_k)
        .def_readonly("log_weights", &ExactDistribution::log_weights)
        .def_readonly("log_z", &ExactDistribution::log_z)
        .def_readonly("probs", &ExactDistribution::probs)
        .def_property_readonly("models", [](const ExactDistribution& d) {
            std::vector<std::vector<int>> out;
            out.reserve(d.models.size());
            for (const ModelState& m : d.models)
                out.push_back(m.indices);
            return out;
        });

    m.def(
        "exact_distribution",
        [](const Dataset& ds, double epsilon, double K, int s, long long cap) {
            PrivacyParams pp;
            pp.epsilon = epsilon;
            pp.K = K;
            return exact_distribution(ds, pp, s, cap);
        },
        py::arg("dataset"), py::arg("epsilon"), py::arg("K"), py::arg("s"),
        py::arg("cap") = 2'000'000);

    m.def(
        "exact_sample",
        [](const ExactDistribution& dist, std::uint64_t seed, int draws) {
            Rng rng(seed);
            std::vector<std::vector<int>> out;
            out.reserve(draws);
            for (int i = 0; i < draws; ++i)
                out.push_back(exact_sample(dist, rng).indices);
            return out;
        },
        py::arg("dist"), py::arg("seed"), py::arg("draws") = 1);

    py::class_<StepRecord>(m, "StepRecord")
        .def_readonly("t", &StepRecord::t)
        .def_readonly("score", &StepRecord::score)
        .def_readonly("r_gamma", &StepRecord::r_gamma)
        .def_readonly("accepted", &StepRecord::accepted)
        .def_readonly("held", &StepRecord::held)
        .def_property_readonly("model",
                               [](const StepRecord& r) { return r.model.indices; })
        .def_property_readonly("proposed",
                               [](const StepRecord& r) { return r.proposed.indices; });

    py::class_<ChainTrace>(m, "ChainTrace")
        .def_readonly("records", &ChainTrace::records)
        .def_readonly("seed", &ChainTrace::seed)
        .def_readonly("accept_rate", &ChainTrace::accept_rate)
        .def_readonly("seconds", &ChainTrace::seconds)
        .def_property_readonly("final_model", [](const ChainTrace& t) {
            return t.final_record().model.indices;
        });

    m.def(
        "run_chain",
        [](const Dataset& ds, int s, long long steps, double epsilon, double K, bool lazy,
           std::uint64_t seed, long long record_every, const std::vector<int>& init) {
            ChainConfig cfg;
            cfg.s = s;
            cfg.steps = steps;
            cfg.epsilon = epsilon;
            cfg.K = K;
            cfg.lazy = lazy;
            cfg.seed = seed;
            cfg.record_every = record_every;
            if (!init.empty()) {
                cfg.init.kind = ChainInit::Kind::Explicit;
                cfg.init.state = to_model(init);
            }
            return run_chain(ds, cfg);
        },
        py::arg("dataset"), py::arg("s"), py::arg("steps"), py::arg("epsilon"),
        py::arg("K"), py::arg("lazy") = false, py::arg("seed") = 0,
        py::arg("record_every") = 1, py::arg("init") = std::vector<int>{},
        py::call_guard<py::gil_scoped_release>());

    m.def(
        "run_parallel_chains",
        [](const Dataset& ds, int s, long long steps, double epsilon, double K,
           int num_chains, std::uint64_t base_seed, bool lazy, long long record_every,
           int threads) {
            ChainConfig cfg;
            cfg.s = s;
            cfg.steps = steps;
            cfg.epsilon = epsilon;
            cfg.K = K;
            cfg.lazy = lazy;
            cfg.record_every = record_every;
            return run_parallel_chains(ds, cfg, num_chains, base_seed, threads);
        },
        py::arg("dataset"), py::arg("s"), py::arg("steps"), py::arg("epsilon"),
        py::arg("K"), py::arg("num_chains"), py::arg("base_seed") = 0,
        py::arg("lazy") = false, py::arg("record_every") = 1, py::arg("threads") = 0,
        py::call_guard<py::gil_scoped_release>());

    m.def(
        "f_score",
        [](const std::vector<int>& a, const std::vector<int>& b) {
            return f_score(to_model(a), to_model(b));
        },
        py::arg("gamma_hat"), py::arg("gamma_star"));

    m.def(
        "identifiability_margin",
        [](const Dataset& ds, const std::vector<int>& gamma_star,
           const Eigen::VectorXd& beta, int s) {
            const MarginReport report =
                identifiability_margin(ds, to_model(gamma_star), beta, s);
            return py::make_tuple(report.margin, report.min_argument.indices);
        },
        py::arg("dataset"), py::arg("gamma_star"), py::arg("beta"), py::arg("s"),
        "Returns (margin, argmin model).");

    py::class_<TransitionMatrix>(m, "TransitionMatrix")
        .def_readonly("P", &TransitionMatrix::P)
        .def_readonly("lazy", &TransitionMatrix::lazy)
        .def_property_readonly("models", [](const TransitionMatrix& tm) {
            std::vector<std::vector<int>> out;
            for (const ModelState& m : tm.models)
                out.push_back(m.indices);
            return out;
        });

    m.def(
        "build_transition_matrix",
        [](const Dataset& ds, double epsilon, double K, int s, bool lazy, long long cap) {
            PrivacyParams pp;
            pp.epsilon = epsilon;
            pp.K = K;
            return build_transition_matrix(ds, pp, s, lazy, cap);
        },
        py::arg("dataset"), py::arg("epsilon"), py::arg("K"), py::arg("s"),
        py::arg("lazy") = true, py::arg("cap") = 5000);

    m.def("spectral_gap", &spectral_gap, py::arg("transition_matrix"));

    m.def(
        "validate_bounds",
        [](const Dataset& ds) {
            const BoundsReport report = validate_bounds(ds);
            std::vector<std::pair<int, int>> x_bad;
            std::vector<int> y_bad;
            for (const auto& v : report.x_violations)
                x_bad.emplace_back(v.row, v.col);
            for (const auto& v : report.y_violations)
                y_bad.push_back(v.row);
            py::dict out;
            out["compliant"] = report.compliant();
            out["x_violations"] = x_bad;
            out["y_violations"] = y_bad;
            return out;
        },
        py::arg("dataset"));

    m.def(
        "estimate_src",
        [](const Dataset& ds, int s, long long sample_budget, std::uint64_t seed) {
            Rng rng(seed);
            const SrcEstimate est = estimate_src(ds, s, sample_budget, rng);
            return py::make_tuple(est.kappa_minus, est.kappa_plus, est.exhaustive);
        },
        py::arg("dataset"), py::arg("s"), py::arg("sample_budget") = 5000,
        py::arg("seed") = 0, "Returns (kappa_minus, kappa_plus, exhaustive).");

    m.def(
        "dp_ratio_audit",
        [](const Dataset& ds, double epsilon, double K, int s, int trials,
           std::uint64_t seed) {
            PrivacyParams pp;
            pp.epsilon = epsilon;
            pp.K = K;
            Rng rng(seed);
            const DpRatioAudit audit = dp_ratio_audit(ds, pp, s, trials, rng);
            py::dict out;
            out["epsilon"] = audit.epsilon;
            out["worst"] = audit.worst;
            out["passed"] = audit.passed();
            return out;
        },
        py::arg("dataset"), py::arg("epsilon"), py::arg("K"), py::arg("s"),
        py::arg("trials") = 25, py::arg("seed") = 0);

    m.def(
        "empirical_tv_vs_exact",
        [](const ChainTrace& trace, const ExactDistribution& pi, long long burn_in) {
            return empirical_tv_vs_exact(trace, pi, burn_in);
        },
        py::arg("trace"), py::arg("pi"), py::arg("burn_in") = 0);

    m.def(
        "measure_mixing",
        [](const TransitionMatrix& tm, const ExactDistribution& pi, double eta) {
            const MixingReport report = measure_mixing(tm, pi, eta);
            py::dict out;
            out["gap"] = report.gap;
            out["min_pi"] = report.min_pi;
            out["tau_eta_measured"] = report.tau_eta_measured;
            out["sandwich_lower"] = report.sandwich_lower;
            out["sandwich_upper"] = report.sandwich_upper;
            out["sandwich_holds"] = report.sandwich_holds;
            out["truncated"] = report.truncated;
            return out;
        },
        py::arg("transition_matrix"), py::arg("pi"), py::arg("eta"));

    m.attr("__version__") = "0.1.0";
}
