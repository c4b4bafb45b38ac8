// Command-line experiment harness: dataset generation, multi-chain runs
// over (epsilon, K) grids, exact-mechanism sampling at small scale, and the
// diagnostics reports. Progress goes to stderr, data to files.

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dpbss/diagnostics.hpp"
#include "dpbss/exp_mechanism.hpp"
#include "dpbss/mh_sampler.hpp"
#include "dpbss/serialize.hpp"
#include "dpbss/subset_score.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dpbss;

namespace {

std::string compact(double v) {
    char buffer[32];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), v);
    return std::string(buffer, result.ptr);
}

std::string metadata_path_for(const std::string& dataset_path) {
    std::string base = dataset_path;
    const std::string suffix = ".csv";
    if (base.size() > suffix.size() &&
        base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0)
        base.resize(base.size() - suffix.size());
    return base + ".meta.json";
}

struct LoadedDataset {
    Dataset data;
    std::optional<DatasetMetadata> metadata;
};

LoadedDataset load_with_metadata(const std::string& path, double r_override,
                                 double x_override) {
    LoadedDataset out;
    out.data = load_dataset_csv(path);
    const std::string meta_path = metadata_path_for(path);
    if (fs::exists(meta_path)) {
        out.metadata = load_dataset_metadata(meta_path);
        out.data = out.data.with_declared_bounds(out.metadata->r, out.metadata->x_max);
    }
    if (r_override >= 0.0)
        out.data = out.data.with_declared_bounds(r_override, out.data.x_max);
    if (x_override >= 0.0)
        out.data = out.data.with_declared_bounds(out.data.r, x_override);
    return out;
}

int resolve_threads(int flag_value) {
    if (flag_value > 0)
        return flag_value;
    if (const char* env = std::getenv("DPBSS_THREADS")) {
        const int parsed = std::atoi(env);
        if (parsed > 0)
            return parsed;
    }
    return 0; // library default: hardware concurrency
}

std::vector<int> parse_index_list(const std::string& text) {
    std::vector<int> out;
    std::string field;
    std::istringstream in(text);
    while (std::getline(in, field, ','))
        if (!field.empty())
            out.push_back(std::stoi(field));
    return out;
}

// ---- generate ----------------------------------------------------------

struct GenerateArgs {
    GenConfig config;
    std::string signal = "strong";
    std::string support_csv;
    std::vector<double> beta_values;
    std::string out_prefix = "dataset";
};

int cmd_generate(GenerateArgs& args) {
    if (args.signal == "strong")
        args.config.signal = SignalRegime::Strong;
    else if (args.signal == "weak")
        args.config.signal = SignalRegime::Weak;
    else if (args.signal == "custom")
        args.config.signal = SignalRegime::Custom;
    else
        throw std::invalid_argument("--signal must be strong, weak, or custom");
    if (args.config.signal == SignalRegime::Custom)
        args.config.custom_beta = args.beta_values;
    if (!args.support_csv.empty())
        args.config.support = parse_index_list(args.support_csv);

    const GeneratedData gen = generate_synthetic(args.config);

    const std::string csv_path = args.out_prefix + ".csv";
    save_dataset_csv(gen.dataset, csv_path);

    DatasetMetadata meta;
    meta.n = gen.dataset.n;
    meta.p = gen.dataset.p;
    meta.r = gen.dataset.r;
    meta.x_max = gen.dataset.x_max;
    meta.seed = args.config.seed;
    meta.support = gen.true_support.indices;
    meta.beta.assign(gen.beta.data(), gen.beta.data() + gen.beta.size());
    meta.sigma = args.config.noise_half_width;
    save_dataset_metadata(meta, metadata_path_for(csv_path));

    std::cerr << "wrote " << csv_path << " (n=" << gen.dataset.n << ", p=" << gen.dataset.p
              << ", r=" << gen.dataset.r << ", x_max=" << gen.dataset.x_max << ")\n";
    return 0;
}

// ---- run ---------------------------------------------------------------

struct RunArgs {
    std::string dataset_path;
    std::optional<GenConfig> inline_gen; // config-file alternative to a path
    std::vector<double> epsilons;
    std::vector<double> Ks;
    int chains = 10;
    long long steps = -1; // unset: default 50 p
    std::uint64_t seed = 0;
    double eta = 0.01;
    std::string output_dir = "runs";
    long long record_every = 0; // 0: max(1, steps / 10000)
    int threads = 0;
    bool lazy = false;
    int s_flag = 0;
    double r_override = -1.0;
    double x_override = -1.0;
    std::string config_path;
};

GenConfig gen_config_from_json(const json& j) {
    GenConfig cfg;
    cfg.n = j.at("n").get<int>();
    cfg.p = j.at("p").get<int>();
    cfg.s = j.at("s").get<int>();
    const std::string signal = j.value("signal", std::string("strong"));
    if (signal == "strong")
        cfg.signal = SignalRegime::Strong;
    else if (signal == "weak")
        cfg.signal = SignalRegime::Weak;
    else if (signal == "custom")
        cfg.signal = SignalRegime::Custom;
    else
        throw std::invalid_argument("config dataset.signal must be strong/weak/custom");
    if (j.contains("beta"))
        cfg.custom_beta = j.at("beta").get<std::vector<double>>();
    if (j.contains("support"))
        cfg.support = j.at("support").get<std::vector<int>>();
    cfg.noise_half_width = j.value("noise", 0.1);
    cfg.seed = j.value("seed", std::uint64_t{0});
    return cfg;
}

void apply_run_config_file(RunArgs& args) {
    if (args.config_path.empty())
        return;
    std::ifstream in(args.config_path);
    if (!in)
        throw std::runtime_error("cannot open config: " + args.config_path);
    const json j = json::parse(in);
    if (j.contains("dataset")) {
        if (j.at("dataset").is_object())
            args.inline_gen = gen_config_from_json(j.at("dataset"));
        else
            args.dataset_path = j.at("dataset").get<std::string>();
    }
    if (j.contains("epsilon"))
        args.epsilons = j.at("epsilon").get<std::vector<double>>();
    if (j.contains("K"))
        args.Ks = j.at("K").get<std::vector<double>>();
    if (j.contains("chains"))
        args.chains = j.at("chains").get<int>();
    if (j.contains("steps"))
        args.steps = j.at("steps").get<long long>();
    if (j.contains("seed"))
        args.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("eta"))
        args.eta = j.at("eta").get<double>();
    if (j.contains("output_dir"))
        args.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("record_every"))
        args.record_every = j.at("record_every").get<long long>();
    if (j.contains("threads"))
        args.threads = j.at("threads").get<int>();
    if (j.contains("lazy"))
        args.lazy = j.at("lazy").get<bool>();
    if (j.contains("s"))
        args.s_flag = j.at("s").get<int>();
}

int cmd_run(RunArgs& args) {
    apply_run_config_file(args);
    if (args.epsilons.empty() || args.Ks.empty())
        throw std::invalid_argument("run: need nonempty --epsilon and --K grids");

    LoadedDataset loaded;
    if (args.inline_gen) {
        const GeneratedData gen = generate_synthetic(*args.inline_gen);
        loaded.data = gen.dataset;
        DatasetMetadata meta;
        meta.n = gen.dataset.n;
        meta.p = gen.dataset.p;
        meta.r = gen.dataset.r;
        meta.x_max = gen.dataset.x_max;
        meta.seed = args.inline_gen->seed;
        meta.support = gen.true_support.indices;
        meta.beta.assign(gen.beta.data(), gen.beta.data() + gen.beta.size());
        meta.sigma = args.inline_gen->noise_half_width;
        loaded.metadata = std::move(meta);
        if (args.r_override >= 0.0)
            loaded.data = loaded.data.with_declared_bounds(args.r_override, loaded.data.x_max);
        if (args.x_override >= 0.0)
            loaded.data = loaded.data.with_declared_bounds(loaded.data.r, args.x_override);
    } else {
        if (args.dataset_path.empty())
            throw std::invalid_argument("run: need --dataset or an inline dataset config");
        loaded = load_with_metadata(args.dataset_path, args.r_override, args.x_override);
    }
    const Dataset& ds = loaded.data;

    std::optional<ModelState> gamma_star;
    if (loaded.metadata && !loaded.metadata->support.empty())
        gamma_star = ModelState(loaded.metadata->support);
    int s = args.s_flag;
    if (s <= 0 && gamma_star)
        s = gamma_star->size();
    if (s <= 0)
        throw std::invalid_argument("run: sparsity unknown; pass --s or provide metadata");
    if (!gamma_star)
        std::cerr << "warning: no ground-truth support in metadata; "
                     "F-scores omitted (privacy-only mode)\n";

    const long long steps = args.steps >= 0 ? args.steps : 50LL * ds.p;
    const long long record_every =
        args.record_every > 0 ? args.record_every : std::max(1LL, steps / 10000);
    const int threads = resolve_threads(args.threads);

    fs::create_directories(args.output_dir);

    RunSummary summary;
    summary.eta = args.eta;
    summary.base_seed = args.seed;
    bool any_error = false;

    for (double epsilon : args.epsilons) {
        for (double K : args.Ks) {
            CellSummary cell;
            cell.epsilon = epsilon;
            cell.K = K;
            std::cerr << "cell epsilon=" << compact(epsilon) << " K=" << compact(K)
                      << ": " << args.chains << " chains x " << steps << " steps\n";
            try {
                cell.delta = approx_dp_delta(args.eta, epsilon);
                ChainConfig cfg;
                cfg.s = s;
                cfg.steps = steps;
                cfg.epsilon = epsilon;
                cfg.K = K;
                cfg.lazy = args.lazy;
                cfg.record_every = record_every;

                const auto traces =
                    run_parallel_chains(ds, cfg, args.chains, args.seed, threads);

                double fscore_sum = 0.0;
                bool all_scored = gamma_star.has_value();
                for (int i = 0; i < args.chains; ++i) {
                    const ChainTrace& trace = traces[i];
                    const std::string stem = "trace_eps" + compact(epsilon) + "_K" +
                                             compact(K) + "_chain" + std::to_string(i);
                    save_trace_csv(trace, (fs::path(args.output_dir) / (stem + ".csv"))
                                              .string());
                    save_trace_meta_json(
                        trace,
                        (fs::path(args.output_dir) / (stem + ".meta.json")).string());

                    ChainSummary chain;
                    chain.chain = i;
                    chain.accept_rate = trace.accept_rate;
                    chain.steps = steps;
                    chain.seconds = trace.seconds;
                    chain.final_model = trace.final_record().model;
                    if (gamma_star) {
                        chain.final_fscore = f_score(chain.final_model, *gamma_star);
                        fscore_sum += *chain.final_fscore;
                    }
                    cell.chains.push_back(std::move(chain));
                }
                if (all_scored)
                    cell.mean_fscore = fscore_sum / args.chains;
            } catch (const std::exception& err) {
                cell.error = err.what();
                any_error = true;
                std::cerr << "cell failed: " << err.what() << '\n';
            }
            summary.cells.push_back(std::move(cell));
        }
    }

    save_summary_json(summary, (fs::path(args.output_dir) / "summary.json").string());
    save_summary_csv(summary, (fs::path(args.output_dir) / "summary.csv").string());
    std::cerr << "wrote " << args.output_dir << "/summary.{json,csv}\n";
    return any_error ? 1 : 0;
}

// ---- exact -------------------------------------------------------------

struct ExactArgs {
    std::string dataset_path;
    double epsilon = 1.0;
    double K = 1.0;
    int s = 0;
    long long cap = 2'000'000;
    int samples = 0;
    std::uint64_t seed = 0;
    std::string out_prefix = "exact";
    double r_override = -1.0;
    double x_override = -1.0;
};

int cmd_exact(const ExactArgs& args) {
    const LoadedDataset loaded =
        load_with_metadata(args.dataset_path, args.r_override, args.x_override);
    int s = args.s;
    if (s <= 0 && loaded.metadata && !loaded.metadata->support.empty())
        s = static_cast<int>(loaded.metadata->support.size());
    if (s <= 0)
        throw std::invalid_argument("exact: sparsity unknown; pass --s or metadata");

    PrivacyParams pp;
    pp.epsilon = args.epsilon;
    pp.K = args.K;

    ExactDistribution dist;
    try {
        dist = exact_distribution(loaded.data, pp, s, args.cap);
    } catch (const std::runtime_error& err) {
        std::cerr << err.what() << "\n(the `run` subcommand handles large instances)\n";
        return 1;
    }

    save_distribution_json(dist, args.out_prefix + ".dist.json");
    std::cerr << "wrote " << args.out_prefix << ".dist.json (" << dist.models.size()
              << " models)\n";

    if (args.samples > 0) {
        Rng rng(args.seed);
        std::ofstream out(args.out_prefix + ".samples.csv");
        out << "draw,model_indices\n";
        for (int i = 0; i < args.samples; ++i)
            out << i << ',' << format_indices(exact_sample(dist, rng)) << '\n';
        std::cerr << "wrote " << args.out_prefix << ".samples.csv\n";
    }
    return 0;
}

// ---- diagnose ----------------------------------------------------------

struct DiagnoseArgs {
    std::string dataset_path;
    double epsilon = 1.0;
    double K = 1.0;
    double eta = 0.01;
    double c1 = 4.0; // empirical default, not from theory
    double c2 = 1.0; // empirical default, not from theory
    long long matrix_cap = 5000;
    long long enum_cap = 2'000'000;
    long long src_budget = 5000;
    int s = 0;
    std::string output_dir = "diagnostics";
    double r_override = -1.0;
    double x_override = -1.0;
};

int cmd_diagnose(const DiagnoseArgs& args) {
    const LoadedDataset loaded =
        load_with_metadata(args.dataset_path, args.r_override, args.x_override);
    const Dataset& ds = loaded.data;
    if (!loaded.metadata || loaded.metadata->support.empty())
        throw std::invalid_argument("diagnose: metadata with ground-truth support and "
                                    "beta is required");
    const DatasetMetadata& meta = *loaded.metadata;
    const ModelState gamma_star(std::vector<int>(meta.support));
    const int s = args.s > 0 ? args.s : gamma_star.size();
    Eigen::Map<const Eigen::VectorXd> beta(meta.beta.data(),
                                           static_cast<int>(meta.beta.size()));

    fs::create_directories(args.output_dir);
    const auto out_path = [&](const std::string& name) {
        return (fs::path(args.output_dir) / name).string();
    };

    PrivacyParams pp;
    pp.epsilon = args.epsilon;
    pp.K = args.K;
    pp.eta = args.eta;
    const double delta_k = pp.delta_k(ds);

    // Empirical regularity estimates feed the theory-side thresholds.
    Rng src_rng(meta.seed + 1);
    const SrcEstimate src = estimate_src(ds, s, args.src_budget, src_rng);
    RegularityParams reg;
    reg.kappa_minus = std::max(src.kappa_minus, 1e-12);
    reg.kappa_plus = std::max(src.kappa_plus, reg.kappa_minus);
    reg.b_max = std::max(beta.lpNorm<1>(), 1e-12);
    reg.sigma = meta.sigma;

    std::cerr << "margin report ...\n";
    const MarginReport margin =
        identifiability_margin(ds, gamma_star, beta, s, args.enum_cap);
    const MarginConditionCheck condition = check_margin_condition(
        margin.margin, reg.sigma, ds.n, ds.p, args.epsilon, delta_k, args.c1,
        reg.kappa_minus);
    save_margin_report_json(margin, condition, out_path("margin.json"));

    std::cerr << "assumption 4.1 report ...\n";
    const Assumption41Report a41 =
        check_assumption_4_1(ds, gamma_star, reg, args.c1, args.enum_cap);
    save_assumption41_report_json(a41, out_path("assumption_4_1.json"));

    std::cerr << "exact-chain mixing report ...\n";
    const TransitionMatrix lazy_chain =
        build_transition_matrix(ds, pp, s, /*lazy=*/true, args.matrix_cap);
    const ExactDistribution pi = exact_distribution(ds, pp, s, args.matrix_cap);
    const MixingReport mixing = measure_mixing(lazy_chain, pi, args.eta);
    const MixingBound predicted = predicted_mixing_bound(
        ds.n, ds.p, s, args.epsilon, reg, ds.r, ds.x_max, args.eta, args.c2);
    save_mixing_report_json(mixing, predicted, pp.delta(), out_path("mixing.json"));
    save_tv_curve_csv(mixing, out_path("tv_vs_t.csv"));

    std::cerr << "wrote " << args.output_dir
              << "/{margin,assumption_4_1,mixing}.json and tv_vs_t.csv\n";
    return mixing.sandwich_holds ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Differentially private best subset selection toolkit"};
    app.require_subcommand(1);

    GenerateArgs gen;
    CLI::App* generate = app.add_subcommand("generate", "Generate a synthetic dataset");
    generate->add_option("--n", gen.config.n, "sample count")->required();
    generate->add_option("--p", gen.config.p, "feature count")->required();
    generate->add_option("--s", gen.config.s, "sparsity")->required();
    generate->add_option("--signal", gen.signal, "strong | weak | custom");
    generate->add_option("--beta", gen.beta_values, "custom signal values (with --signal custom)")
        ->delimiter(',');
    generate->add_option("--support", gen.support_csv,
                         "comma-separated support indices (default 0..s-1)");
    generate->add_option("--noise", gen.config.noise_half_width,
                         "uniform noise half-width");
    generate->add_option("--seed", gen.config.seed, "RNG seed");
    generate->add_option("--out", gen.out_prefix, "output prefix (.csv/.meta.json)");

    RunArgs run;
    CLI::App* run_cmd = app.add_subcommand("run", "Run MH chains over an (epsilon, K) grid");
    run_cmd->add_option("--dataset", run.dataset_path,
                        "dataset CSV path (or an inline dataset object via --config)");
    run_cmd->add_option("--epsilon", run.epsilons, "privacy budgets")->delimiter(',');
    run_cmd->add_option("--K", run.Ks, "l1 radii")->delimiter(',');
    run_cmd->add_option("--chains", run.chains, "chains per cell");
    run_cmd->add_option("--steps", run.steps, "steps per chain (default 50 p)");
    run_cmd->add_option("--seed", run.seed, "base seed");
    run_cmd->add_option("--eta", run.eta, "mixing target used for delta accounting");
    run_cmd->add_option("--output-dir", run.output_dir, "output directory");
    run_cmd->add_option("--record-every", run.record_every,
                        "trace thinning stride (default steps/10000)");
    run_cmd->add_option("--threads", run.threads,
                        "worker threads (or env DPBSS_THREADS)");
    run_cmd->add_flag("--lazy", run.lazy, "use the lazy chain");
    run_cmd->add_option("--s", run.s_flag, "sparsity (required without metadata)");
    run_cmd->add_option("--r-bound", run.r_override, "declared response bound override");
    run_cmd->add_option("--x-bound", run.x_override, "declared feature bound override");
    run_cmd->add_option("--config", run.config_path, "JSON config overriding flags");

    ExactArgs exact;
    CLI::App* exact_cmd =
        app.add_subcommand("exact", "Exact exponential mechanism at small scale");
    exact_cmd->add_option("--dataset", exact.dataset_path, "dataset CSV path")->required();
    exact_cmd->add_option("--epsilon", exact.epsilon, "privacy budget");
    exact_cmd->add_option("--K", exact.K, "l1 radius");
    exact_cmd->add_option("--s", exact.s, "sparsity (required without metadata)");
    exact_cmd->add_option("--cap", exact.cap, "enumeration cap");
    exact_cmd->add_option("--samples", exact.samples, "draws to write");
    exact_cmd->add_option("--seed", exact.seed, "RNG seed");
    exact_cmd->add_option("--out", exact.out_prefix, "output prefix");
    exact_cmd->add_option("--r-bound", exact.r_override, "declared response bound override");
    exact_cmd->add_option("--x-bound", exact.x_override, "declared feature bound override");

    DiagnoseArgs diag;
    CLI::App* diag_cmd = app.add_subcommand("diagnose", "Margin, assumption, and mixing reports");
    diag_cmd->add_option("--dataset", diag.dataset_path, "dataset CSV path")->required();
    diag_cmd->add_option("--epsilon", diag.epsilon, "privacy budget");
    diag_cmd->add_option("--K", diag.K, "l1 radius");
    diag_cmd->add_option("--eta", diag.eta, "mixing target");
    diag_cmd->add_option("--C1", diag.c1, "margin-condition constant (empirical default 4)");
    diag_cmd->add_option("--C2", diag.c2, "mixing-bound constant (empirical default 1)");
    diag_cmd->add_option("--matrix-cap", diag.matrix_cap, "transition-matrix state cap");
    diag_cmd->add_option("--enum-cap", diag.enum_cap, "enumeration cap");
    diag_cmd->add_option("--src-budget", diag.src_budget, "submatrices examined by the SRC probe");
    diag_cmd->add_option("--s", diag.s, "sparsity override");
    diag_cmd->add_option("--output-dir", diag.output_dir, "output directory");
    diag_cmd->add_option("--r-bound", diag.r_override, "declared response bound override");
    diag_cmd->add_option("--x-bound", diag.x_override, "declared feature bound override");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed())
            return cmd_generate(gen);
        if (run_cmd->parsed())
            return cmd_run(run);
        if (exact_cmd->parsed())
            return cmd_exact(exact);
        if (diag_cmd->parsed())
            return cmd_diagnose(diag);
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
    return 0;
}
