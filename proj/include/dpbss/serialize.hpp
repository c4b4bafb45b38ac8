#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dpbss/dataset.hpp"
#include "dpbss/diagnostics.hpp"
#include "dpbss/exp_mechanism.hpp"
#include "dpbss/mh_sampler.hpp"

// File formats. Numbers are written with shortest-round-trip formatting so
// every file parses back to bit-identical values.

namespace dpbss {

// ---- dataset: CSV with header x0,...,x{p-1},y plus a JSON metadata sidecar.

struct DatasetMetadata {
    int n = 0;
    int p = 0;
    double r = 0.0;
    double x_max = 0.0;
    std::uint64_t seed = 0;
    std::vector<int> support;
    std::vector<double> beta; // full length p
    double sigma = 0.0;       // noise half-width used at generation time
};

void save_dataset_csv(const Dataset& ds, const std::string& path);
// Declared bounds of the loaded dataset default to the empirical maxima;
// pass metadata bounds afterwards via with_declared_bounds if needed.
Dataset load_dataset_csv(const std::string& path);

void save_dataset_metadata(const DatasetMetadata& meta, const std::string& path);
DatasetMetadata load_dataset_metadata(const std::string& path);

// ---- exact distribution dump

void save_distribution_json(const ExactDistribution& dist, const std::string& path);
ExactDistribution load_distribution_json(const std::string& path); // renormalizes

// ---- chain traces: CSV t,model_indices,score,r_gamma,accepted plus a JSON
//      sidecar with the config snapshot and seed.

void save_trace_csv(const ChainTrace& trace, const std::string& path);

struct LoadedTraceRow {
    long long t = 0;
    ModelState model;
    double score = 0.0;
    double r_gamma = 0.0;
    bool accepted = false;
};
std::vector<LoadedTraceRow> load_trace_csv(const std::string& path);

void save_trace_meta_json(const ChainTrace& trace, const std::string& path);

// ---- experiment summaries

struct ChainSummary {
    int chain = 0;
    std::optional<double> final_fscore; // absent when no ground truth is known
    double accept_rate = 0.0;
    long long steps = 0;
    double seconds = 0.0;
    ModelState final_model;
};

struct CellSummary {
    double epsilon = 0.0;
    double K = 0.0;
    double delta = 0.0; // eta (1 + e^epsilon) for the run's eta
    std::vector<ChainSummary> chains;
    std::optional<double> mean_fscore;
    std::string error; // empty when the cell ran clean
};

struct RunSummary {
    double eta = 0.0;
    std::uint64_t base_seed = 0;
    std::vector<CellSummary> cells;
};

void save_summary_json(const RunSummary& summary, const std::string& path);
RunSummary load_summary_json(const std::string& path);

// epsilon,K,chain,final_fscore,accept_rate,steps,seconds
void save_summary_csv(const RunSummary& summary, const std::string& path);

// ---- diagnostics reports

void save_margin_report_json(const MarginReport& report,
                             const std::optional<MarginConditionCheck>& condition,
                             const std::string& path);
void save_assumption41_report_json(const Assumption41Report& report, const std::string& path);
void save_mixing_report_json(const MixingReport& report, const MixingBound& predicted,
                             double delta, const std::string& path);
void save_tv_curve_csv(const MixingReport& report, const std::string& path);
void save_audit_json(const DpRatioAudit& audit, const std::string& path);

} // namespace dpbss
