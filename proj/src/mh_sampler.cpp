#include "dpbss/mh_sampler.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace dpbss {

void ChainConfig::validate() const {
    if (s < 1)
        throw std::invalid_argument("ChainConfig: need s >= 1");
    if (steps < 0)
        throw std::invalid_argument("ChainConfig: need steps >= 0");
    if (record_every < 1)
        throw std::invalid_argument("ChainConfig: need record_every >= 1");
    if (epsilon < 0.0)
        throw std::invalid_argument("ChainConfig: need epsilon >= 0");
    if (K < 0.0)
        throw std::invalid_argument("ChainConfig: need K >= 0");
    if (init.kind == ChainInit::Kind::Explicit && init.state.size() != s)
        throw std::invalid_argument("ChainConfig: explicit init has wrong size");
}

ModelState random_model(int p, int s, Rng& rng) {
    if (s < 0 || s > p)
        throw std::invalid_argument("random_model: need 0 <= s <= p");
    std::vector<int> pool(p);
    for (int j = 0; j < p; ++j)
        pool[j] = j;
    std::vector<int> picked(s);
    for (int k = 0; k < s; ++k) {
        const auto pick = k + rng.next_index(static_cast<std::uint64_t>(p - k));
        std::swap(pool[k], pool[pick]);
        picked[k] = pool[k];
    }
    return ModelState(std::move(picked));
}

Proposal propose_double_swap(const ModelState& gamma, int p, Rng& rng) {
    const int s = gamma.size();
    if (s == 0 || s >= p)
        throw std::invalid_argument("propose_double_swap: need 0 < |gamma| < p");

    const int removed = gamma.indices[rng.next_index(static_cast<std::uint64_t>(s))];

    // Map a uniform draw over [0, p - s) to the u-th index outside gamma.
    int added = static_cast<int>(rng.next_index(static_cast<std::uint64_t>(p - s)));
    for (int j : gamma.indices) {
        if (j <= added)
            ++added;
        else
            break;
    }

    Proposal out;
    out.removed = removed;
    out.added = added;
    out.state = swap_index(gamma, removed, added);
    return out;
}

double acceptance_log_ratio(double u_new, double u_old, double epsilon, double delta_k) {
    if (epsilon == 0.0)
        return 0.0;
    if (!(delta_k > 0.0))
        throw std::invalid_argument("acceptance_log_ratio: need delta_k > 0");
    return epsilon * (u_new - u_old) / delta_k;
}

StepRecord step(const Dataset& ds, ModelState& state, const ChainConfig& cfg,
                ScoreCache& cache, Rng& rng) {
    const double y_norm2 = ds.y.squaredNorm();
    const double delta_k = sensitivity_bound(ds.r, ds.x_max, cfg.K);

    StepRecord record;
    if (cfg.lazy && rng.next_double() < 0.5) {
        record.model = state;
        record.score = score(ds, state, cfg.K, &cache);
        record.r_gamma = y_norm2 > 0.0 ? 1.0 + record.score / y_norm2 : 0.0;
        record.proposed = state;
        record.held = true;
        return record;
    }

    const Proposal proposal = propose_double_swap(state, ds.p, rng);
    const double u_old = score(ds, state, cfg.K, &cache);
    const double u_new = score(ds, proposal.state, cfg.K, &cache);
    const double log_ratio = acceptance_log_ratio(u_new, u_old, cfg.epsilon, delta_k);
    const double log_u = std::log(rng.next_double());
    const bool accepted = log_u <= std::min(0.0, log_ratio);

    if (accepted)
        state = proposal.state;
    record.model = state;
    record.score = accepted ? u_new : u_old;
    record.r_gamma = y_norm2 > 0.0 ? 1.0 + record.score / y_norm2 : 0.0;
    record.proposed = proposal.state;
    record.accepted = accepted;
    return record;
}

namespace {

ChainTrace run_chain_with_cache(const Dataset& ds, const ChainConfig& cfg, ScoreCache& cache) {
    cfg.validate();
    if (cfg.s >= ds.p && cfg.steps > 0)
        throw std::invalid_argument("run_chain: need s < p to propose swaps");
    if (cfg.epsilon > 0.0 && cfg.steps > 0 &&
        !(sensitivity_bound(ds.r, ds.x_max, cfg.K) > 0.0))
        throw std::invalid_argument("run_chain: sensitivity bound is zero; "
                                    "declare positive data bounds");

    const auto start_time = std::chrono::steady_clock::now();
    Rng rng(cfg.seed);
    ModelState state = cfg.init.kind == ChainInit::Kind::Explicit
                           ? cfg.init.state
                           : random_model(ds.p, cfg.s, rng);

    ChainTrace trace;
    trace.config = cfg;
    trace.seed = cfg.seed;

    const double y_norm2 = ds.y.squaredNorm();
    StepRecord initial;
    initial.t = 0;
    initial.model = state;
    initial.score = score(ds, state, cfg.K, &cache);
    initial.r_gamma = y_norm2 > 0.0 ? 1.0 + initial.score / y_norm2 : 0.0;
    initial.proposed = state;
    trace.records.push_back(std::move(initial));

    for (long long t = 1; t <= cfg.steps; ++t) {
        StepRecord record = step(ds, state, cfg, cache, rng);
        record.t = t;
        if (!record.held) {
            ++trace.proposal_count;
            if (record.accepted)
                ++trace.accepted_count;
        }
        if (t % cfg.record_every == 0 || t == cfg.steps)
            trace.records.push_back(std::move(record));
    }

    trace.accept_rate = trace.proposal_count > 0
                            ? static_cast<double>(trace.accepted_count) / trace.proposal_count
                            : 0.0;
    trace.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
    return trace;
}

} // namespace

ChainTrace run_chain(const Dataset& ds, const ChainConfig& cfg) {
    ScoreCache cache;
    return run_chain_with_cache(ds, cfg, cache);
}

std::vector<ChainTrace> run_parallel_chains(const Dataset& ds, const ChainConfig& cfg,
                                            int num_chains, std::uint64_t base_seed,
                                            int threads) {
    if (num_chains < 1)
        throw std::invalid_argument("run_parallel_chains: need num_chains >= 1");
    if (threads <= 0)
        threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, num_chains));

    std::vector<ChainTrace> traces(num_chains);
    ScoreCache shared_cache;
    std::vector<std::exception_ptr> errors(num_chains);

    auto worker = [&](int first) {
        for (int i = first; i < num_chains; i += threads) {
            try {
                ChainConfig chain_cfg = cfg;
                chain_cfg.seed = derive_stream_seed(base_seed, static_cast<std::uint64_t>(i));
                traces[i] = run_chain_with_cache(ds, chain_cfg, shared_cache);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    if (threads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t)
            pool.emplace_back(worker, t);
        for (auto& th : pool)
            th.join();
    }

    for (auto& err : errors)
        if (err)
            std::rethrow_exception(err);
    return traces;
}

} // namespace dpbss
