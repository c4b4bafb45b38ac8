#pragma once

#include <cstdint>
#include <vector>

#include "dpbss/dataset.hpp"
#include "dpbss/model_state.hpp"
#include "dpbss/rng.hpp"
#include "dpbss/subset_score.hpp"

namespace dpbss {

struct ChainInit {
    enum class Kind { UniformRandomModel, Explicit };
    Kind kind = Kind::UniformRandomModel;
    ModelState state; // used when kind == Explicit
};

struct ChainConfig {
    int s = 1;
    long long steps = 0;
    double epsilon = 1.0;
    double K = 1.0;
    bool lazy = false;
    std::uint64_t seed = 0;
    long long record_every = 1;
    ChainInit init;

    void validate() const;
};

struct StepRecord {
    long long t = 0;
    ModelState model;
    double score = 0.0;
    double r_gamma = 0.0;
    ModelState proposed; // equals model at t = 0 and on lazy holds
    bool accepted = false;
    bool held = false; // lazy coin kept the state; no proposal was made
};

struct ChainTrace {
    std::vector<StepRecord> records; // thinned by record_every; t = 0 and the
                                     // final step are always present
    ChainConfig config;
    std::uint64_t seed = 0; // seed actually used (derived for parallel runs)
    long long accepted_count = 0;
    long long proposal_count = 0; // lazy holds are not proposals
    double accept_rate = 0.0;     // accepted_count / proposal_count
    double seconds = 0.0;

    const StepRecord& final_record() const { return records.back(); }
};

// Uniform size-s model via partial Fisher-Yates.
ModelState random_model(int p, int s, Rng& rng);

struct Proposal {
    ModelState state;
    int removed = 0;
    int added = 0;
};

// Double swap: remove an index uniform over gamma, add one uniform over the
// complement, independently. The result always differs from gamma in exactly
// two coordinates.
Proposal propose_double_swap(const ModelState& gamma, int p, Rng& rng);

// epsilon * (u_new - u_old) / delta_K, un-clamped. The caller accepts when
// log(Uniform) <= min(0, ratio). epsilon == 0 short-circuits to 0.
double acceptance_log_ratio(double u_new, double u_old, double epsilon, double delta_k);

// One transition of the chain; mutates `state` and returns the record
// (with t unset). Lazy chains hold with probability 1/2 before proposing.
StepRecord step(const Dataset& ds, ModelState& state, const ChainConfig& cfg,
                ScoreCache& cache, Rng& rng);

ChainTrace run_chain(const Dataset& ds, const ChainConfig& cfg);

// Chain i runs with seed derive_stream_seed(base_seed, i). Results are in
// chain-index order regardless of scheduling; threads <= 0 means hardware
// concurrency. All chains share one synchronized score cache.
std::vector<ChainTrace> run_parallel_chains(const Dataset& ds, const ChainConfig& cfg,
                                            int num_chains, std::uint64_t base_seed,
                                            int threads = 0);

} // namespace dpbss
