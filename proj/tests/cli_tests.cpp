// End-to-end checks of the dpbss executable: file formats, determinism,
// exit codes. The binary path arrives as argv[1].

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "dpbss/rng.hpp"
#include "dpbss/serialize.hpp"
#include "dpbss/subset_score.hpp"

namespace fs = std::filesystem;
using namespace dpbss;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
    if (ok) {
        std::cout << "[ok] " << what << '\n';
    } else {
        std::cout << "[FAIL] " << what << '\n';
        ++failures;
    }
}

std::string g_binary;

int run_cli(const std::string& args) {
    const std::string command = g_binary + " " + args + " 2>/dev/null";
    return std::system(command.c_str());
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// Summary rows minus the trailing wall-time column, which is a measurement
// rather than a seeded output.
std::string summary_without_seconds(const std::string& path) {
    std::ifstream in(path);
    std::string line, out;
    while (std::getline(in, line)) {
        const auto cut = line.rfind(',');
        out += line.substr(0, cut);
        out += '\n';
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: cli_tests <path-to-dpbss>\n";
        return 2;
    }
    g_binary = argv[1];

    const fs::path work = fs::temp_directory_path() / "dpbss_cli_tests";
    fs::remove_all(work);
    fs::create_directories(work);
    const std::string prefix = (work / "toy").string();

    // generate: deterministic files
    check(run_cli("generate --n 40 --p 8 --s 2 --signal strong --seed 3 --out " + prefix) == 0,
          "generate exits 0");
    check(fs::exists(prefix + ".csv") && fs::exists(prefix + ".meta.json"),
          "generate writes csv and metadata");
    const std::string csv_once = slurp(prefix + ".csv");
    const std::string meta_once = slurp(prefix + ".meta.json");
    check(run_cli("generate --n 40 --p 8 --s 2 --signal strong --seed 3 --out " + prefix) == 0,
          "regenerate exits 0");
    check(slurp(prefix + ".csv") == csv_once && slurp(prefix + ".meta.json") == meta_once,
          "regeneration with the same flags is byte-identical");

    {
        const DatasetMetadata meta = load_dataset_metadata(prefix + ".meta.json");
        check(meta.n == 40 && meta.p == 8, "metadata dimensions");
        check(meta.support == std::vector<int>{0, 1}, "metadata support");
        const double expected = 2.0 * std::sqrt(2.0 * std::log(8.0) / 40.0);
        check(std::abs(meta.beta[0] - expected) < 1e-12, "metadata records the signal value");
    }

    // generate: zero-signal dataset is valid
    check(run_cli("generate --n 10 --p 5 --s 0 --seed 1 --out " + (work / "null").string()) == 0,
          "zero-signal generate exits 0");

    // run: grid, summary, delta accounting, determinism
    const std::string run_dir = (work / "runs").string();
    check(run_cli("run --dataset " + prefix + ".csv --epsilon 0.5,2 --K 1 --chains 3 "
                  "--steps 400 --seed 11 --eta 0.01 --output-dir " + run_dir) == 0,
          "run exits 0");
    check(fs::exists(run_dir + "/summary.json") && fs::exists(run_dir + "/summary.csv"),
          "run writes summaries");
    check(fs::exists(run_dir + "/trace_eps0.5_K1_chain0.csv") &&
              fs::exists(run_dir + "/trace_eps2_K1_chain2.meta.json"),
          "run writes per-chain traces");

    {
        const RunSummary summary = load_summary_json(run_dir + "/summary.json");
        check(summary.cells.size() == 2, "one summary cell per grid point");
        for (const CellSummary& cell : summary.cells) {
            check(cell.error.empty(), "cell ran clean");
            check(cell.chains.size() == 3, "three chains per cell");
            const double expected_delta = approx_dp_delta(0.01, cell.epsilon);
            check(std::abs(cell.delta - expected_delta) < 1e-12,
                  "summary delta matches eta (1 + e^eps)");
            check(cell.mean_fscore.has_value(), "mean F-score present with metadata");
        }
        // Round-trip: rewrite and reload reproduces the parsed structure.
        save_summary_json(summary, run_dir + "/summary_echo.json");
        const RunSummary echo = load_summary_json(run_dir + "/summary_echo.json");
        check(echo.cells.size() == summary.cells.size() &&
                  echo.cells[1].delta == summary.cells[1].delta &&
                  echo.cells[1].chains[2].final_model ==
                      summary.cells[1].chains[2].final_model,
              "summary json round-trips");
    }

    const std::string rerun_dir = (work / "reruns").string();
    check(run_cli("run --dataset " + prefix + ".csv --epsilon 0.5,2 --K 1 --chains 3 "
                  "--steps 400 --seed 11 --eta 0.01 --output-dir " + rerun_dir) == 0,
          "rerun exits 0");
    check(summary_without_seconds(run_dir + "/summary.csv") ==
              summary_without_seconds(rerun_dir + "/summary.csv"),
          "rerun with the same base seed gives an identical summary csv");
    check(slurp(run_dir + "/trace_eps2_K1_chain1.csv") ==
              slurp(rerun_dir + "/trace_eps2_K1_chain1.csv"),
          "rerun traces are byte-identical");

    // run: config file overrides flags
    {
        const std::string cfg_path = (work / "run.json").string();
        std::ofstream cfg(cfg_path);
        cfg << R"({"epsilon":[1.0],"K":[0.5],"chains":2,"steps":100,"seed":5,)"
            << R"("output_dir":")" << (work / "cfg_runs").string() << R"("})";
        cfg.close();
        check(run_cli("run --dataset " + prefix + ".csv --epsilon 9 --K 9 --config " +
                      cfg_path) == 0,
              "run with config file exits 0");
        const RunSummary summary =
            load_summary_json((work / "cfg_runs" / "summary.json").string());
        check(summary.cells.size() == 1 && summary.cells[0].epsilon == 1.0 &&
                  summary.cells[0].K == 0.5,
              "config file overrides the flag grid");
    }

    // run: inline dataset object in the config file (no CSV on disk)
    {
        const std::string cfg_path = (work / "inline.json").string();
        std::ofstream cfg(cfg_path);
        cfg << R"({"dataset":{"n":40,"p":8,"s":2,"signal":"strong","seed":3},)"
            << R"("epsilon":[2.0],"K":[1.0],"chains":2,"steps":300,"seed":12,)"
            << R"("output_dir":")" << (work / "inline_runs").string() << R"("})";
        cfg.close();
        check(run_cli("run --config " + cfg_path) == 0, "inline dataset config exits 0");
        const RunSummary summary =
            load_summary_json((work / "inline_runs" / "summary.json").string());
        check(summary.cells.size() == 1 && summary.cells[0].chains.size() == 2 &&
                  summary.cells[0].mean_fscore.has_value(),
              "inline dataset run produces a scored summary");
    }

    // run: empty grid is a usage error
    check(run_cli("run --dataset " + prefix + ".csv --K 1") != 0,
          "empty epsilon grid exits nonzero");

    // run: DPBSS_THREADS env fallback still yields seeded determinism
    {
        const std::string env_dir = (work / "env_runs").string();
        const std::string cmd = "DPBSS_THREADS=1 " + g_binary + " run --dataset " + prefix +
                                ".csv --epsilon 2 --K 1 --chains 3 --steps 400 --seed 11 "
                                "--eta 0.01 --output-dir " + env_dir + " 2>/dev/null";
        check(std::system(cmd.c_str()) == 0, "run with DPBSS_THREADS exits 0");
        check(slurp(env_dir + "/trace_eps2_K1_chain1.csv") ==
                  slurp(run_dir + "/trace_eps2_K1_chain1.csv"),
              "single-threaded env run reproduces the same traces");
    }

    // run: steps=0 summary is just the initialization
    const std::string init_dir = (work / "init_only").string();
    check(run_cli("run --dataset " + prefix + ".csv --epsilon 1 --K 1 --chains 1 "
                  "--steps 0 --seed 2 --output-dir " + init_dir) == 0,
          "steps=0 run exits 0");
    {
        const RunSummary summary = load_summary_json(init_dir + "/summary.json");
        check(summary.cells.size() == 1 && summary.cells[0].chains.size() == 1 &&
                  summary.cells[0].chains[0].steps == 0,
              "steps=0 summary is just the initialization");
        const auto rows = load_trace_csv(init_dir + "/trace_eps1_K1_chain0.csv");
        check(rows.size() == 1 && rows[0].t == 0, "steps=0 trace has only t=0");
    }

    // exact: distribution dump, uniform at epsilon 0, re-read normalization
    const std::string exact_prefix = (work / "exact").string();
    check(run_cli("exact --dataset " + prefix + ".csv --epsilon 0 --K 1 --samples 50 "
                  "--seed 4 --out " + exact_prefix) == 0,
          "exact exits 0");
    {
        const ExactDistribution dist = load_distribution_json(exact_prefix + ".dist.json");
        check(dist.models.size() == 28, "28 models for p=8, s=2");
        double total = 0.0;
        bool uniform = true;
        for (double prob : dist.probs) {
            total += prob;
            uniform = uniform && std::abs(prob - 1.0 / 28) < 1e-12;
        }
        check(std::abs(total - 1.0) < 1e-12, "re-read distribution renormalizes to 1");
        check(uniform, "epsilon 0 dump is uniform");
        check(fs::exists(exact_prefix + ".samples.csv"), "samples file written");
    }

    // exact: cap exceeded points at the run subcommand
    check(run_cli("exact --dataset " + prefix + ".csv --epsilon 1 --K 1 --cap 10 --out " +
                  (work / "capped").string()) != 0,
          "exact over the cap exits nonzero");

    // diagnose: reports exist and carry the documented delta
    const std::string diag_dir = (work / "diag").string();
    check(run_cli("diagnose --dataset " + prefix + ".csv --epsilon 1 --K 1 --eta 0.01 "
                  "--output-dir " + diag_dir) == 0,
          "diagnose exits 0");
    {
        check(fs::exists(diag_dir + "/margin.json") &&
                  fs::exists(diag_dir + "/assumption_4_1.json") &&
                  fs::exists(diag_dir + "/mixing.json") &&
                  fs::exists(diag_dir + "/tv_vs_t.csv"),
              "diagnose writes all four reports");
        const auto mixing = nlohmann::json::parse(std::ifstream(diag_dir + "/mixing.json"));
        const double delta = mixing.at("delta").get<double>();
        check(std::abs(delta - 0.01 * (1.0 + std::exp(1.0))) < 1e-9,
              "diagnose reports delta ~= 0.037183");
        check(mixing.at("sandwich_holds").get<bool>(), "sandwich assertion holds");
        const auto margin = nlohmann::json::parse(std::ifstream(diag_dir + "/margin.json"));
        check(margin.contains("eq9_threshold") && margin.contains("satisfied_eq9"),
              "margin report carries the condition check");
    }

    // partial grid failure: the bad cell carries an error entry, the good
    // cell still runs, and the exit code is nonzero
    const std::string partial_dir = (work / "partial").string();
    check(run_cli("run --dataset " + prefix + ".csv --epsilon=-1,1 --K 1 --chains 1 "
                  "--steps 50 --seed 6 --output-dir " + partial_dir) != 0,
          "grid with an invalid cell exits nonzero");
    {
        const RunSummary summary = load_summary_json(partial_dir + "/summary.json");
        check(summary.cells.size() == 2, "both cells reported");
        check(!summary.cells[0].error.empty() && summary.cells[0].chains.empty(),
              "failed cell carries its error entry");
        check(summary.cells[1].error.empty() && summary.cells[1].chains.size() == 1,
              "healthy cell still ran");
    }

    // diagnose on an orthonormal design: margin equals the weakest squared signal
    {
        const int n = 32, p = 6;
        Rng rng(777);
        Eigen::MatrixXd raw(n, p);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < p; ++j)
                raw(i, j) = rng.next_symmetric(1.0);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
        Eigen::MatrixXd X = std::sqrt(double(n)) * (qr.householderQ() *
                                                    Eigen::MatrixXd::Identity(n, p));
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
        beta[0] = 0.8;
        beta[1] = -0.3;
        Eigen::VectorXd y = X * beta;
        const Dataset ortho = Dataset::create(X, y, y.cwiseAbs().maxCoeff(),
                                              X.cwiseAbs().maxCoeff());
        const std::string ortho_prefix = (work / "ortho").string();
        save_dataset_csv(ortho, ortho_prefix + ".csv");
        DatasetMetadata meta;
        meta.n = n;
        meta.p = p;
        meta.r = ortho.r;
        meta.x_max = ortho.x_max;
        meta.support = {0, 1};
        meta.beta.assign(beta.data(), beta.data() + p);
        meta.sigma = 0.0;
        save_dataset_metadata(meta, ortho_prefix + ".meta.json");

        const std::string ortho_diag = (work / "ortho_diag").string();
        check(run_cli("diagnose --dataset " + ortho_prefix + ".csv --epsilon 2 --K 2 "
                      "--eta 0.1 --output-dir " + ortho_diag) == 0,
              "diagnose on orthonormal design exits 0");
        const auto margin =
            nlohmann::json::parse(std::ifstream(ortho_diag + "/margin.json"));
        check(std::abs(margin.at("margin").get<double>() - 0.3 * 0.3) < 1e-9,
              "orthonormal margin report equals the weakest squared signal");
    }

    // errors: missing dataset exits nonzero
    check(run_cli("run --dataset " + (work / "missing.csv").string() +
                  " --epsilon 1 --K 1 --s 2") != 0,
          "missing dataset exits nonzero");

    std::cout << (failures == 0 ? "CLI TESTS PASSED\n" : "CLI TESTS FAILED\n");
    return failures == 0 ? 0 : 1;
}
