#include "dpbss/serialize.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

using nlohmann::json;

namespace dpbss {

namespace {

std::string format_double(double v) {
    char buffer[32];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), v);
    return std::string(buffer, result.ptr);
}

double parse_double(std::string_view text) {
    double value = 0.0;
    const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
    if (result.ec != std::errc{})
        throw std::runtime_error("parse_double: bad number '" + std::string(text) + "'");
    return value;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open for reading: " + path);
    return in;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep))
        out.push_back(field);
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

json model_to_json(const ModelState& m) { return json(m.indices); }

ModelState model_from_json(const json& j) {
    return ModelState(j.get<std::vector<int>>());
}

} // namespace

void save_dataset_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out = open_out(path);
    for (int j = 0; j < ds.p; ++j)
        out << 'x' << j << ',';
    out << "y\n";
    for (int i = 0; i < ds.n; ++i) {
        for (int j = 0; j < ds.p; ++j)
            out << format_double(ds.X(i, j)) << ',';
        out << format_double(ds.y[i]) << '\n';
    }
}

Dataset load_dataset_csv(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("dataset csv is empty: " + path);
    const auto header = split(line, ',');
    if (header.size() < 2 || header.back() != "y")
        throw std::runtime_error("dataset csv header must be x0,...,y: " + path);
    const int p = static_cast<int>(header.size()) - 1;

    std::vector<double> values;
    int n = 0;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const auto fields = split(line, ',');
        if (static_cast<int>(fields.size()) != p + 1)
            throw std::runtime_error("dataset csv row has wrong arity: " + path);
        for (const auto& field : fields)
            values.push_back(parse_double(field));
        ++n;
    }
    if (n == 0)
        throw std::runtime_error("dataset csv has no rows: " + path);

    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j)
            X(i, j) = values[static_cast<std::size_t>(i) * (p + 1) + j];
        y[i] = values[static_cast<std::size_t>(i) * (p + 1) + p];
    }
    const double r = y.cwiseAbs().maxCoeff();
    const double x_max = X.cwiseAbs().maxCoeff();
    return Dataset::create(std::move(X), std::move(y), r, x_max);
}

void save_dataset_metadata(const DatasetMetadata& meta, const std::string& path) {
    json j{{"n", meta.n},         {"p", meta.p},       {"r", meta.r},
           {"x_max", meta.x_max}, {"seed", meta.seed}, {"support", meta.support},
           {"beta", meta.beta},   {"sigma", meta.sigma}};
    open_out(path) << j.dump(2) << '\n';
}

DatasetMetadata load_dataset_metadata(const std::string& path) {
    json j = json::parse(open_in(path));
    DatasetMetadata meta;
    meta.n = j.at("n").get<int>();
    meta.p = j.at("p").get<int>();
    meta.r = j.at("r").get<double>();
    meta.x_max = j.at("x_max").get<double>();
    meta.seed = j.at("seed").get<std::uint64_t>();
    meta.support = j.at("support").get<std::vector<int>>();
    meta.beta = j.at("beta").get<std::vector<double>>();
    if (j.contains("sigma"))
        meta.sigma = j.at("sigma").get<double>();
    return meta;
}

void save_distribution_json(const ExactDistribution& dist, const std::string& path) {
    json models = json::array();
    for (const ModelState& m : dist.models)
        models.push_back(model_to_json(m));
    json j{{"p", dist.p},
           {"s", dist.s},
           {"epsilon", dist.epsilon},
           {"K", dist.K},
           {"delta_K", dist.delta_k},
           {"models", std::move(models)},
           {"log_weights", dist.log_weights}};
    open_out(path) << j.dump() << '\n';
}

ExactDistribution load_distribution_json(const std::string& path) {
    json j = json::parse(open_in(path));
    ExactDistribution dist;
    dist.p = j.at("p").get<int>();
    dist.s = j.at("s").get<int>();
    dist.epsilon = j.at("epsilon").get<double>();
    dist.K = j.at("K").get<double>();
    dist.delta_k = j.at("delta_K").get<double>();
    for (const json& m : j.at("models"))
        dist.models.push_back(model_from_json(m));
    dist.log_weights = j.at("log_weights").get<std::vector<double>>();
    if (dist.models.size() != dist.log_weights.size())
        throw std::runtime_error("distribution json: models/log_weights mismatch");
    dist.log_z = log_sum_exp(dist.log_weights);
    dist.probs.resize(dist.log_weights.size());
    for (std::size_t i = 0; i < dist.log_weights.size(); ++i)
        dist.probs[i] = std::exp(dist.log_weights[i] - dist.log_z);
    return dist;
}

void save_trace_csv(const ChainTrace& trace, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "t,model_indices,score,r_gamma,accepted\n";
    for (const StepRecord& record : trace.records)
        out << record.t << ',' << format_indices(record.model) << ','
            << format_double(record.score) << ',' << format_double(record.r_gamma) << ','
            << (record.accepted ? 1 : 0) << '\n';
}

std::vector<LoadedTraceRow> load_trace_csv(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || line != "t,model_indices,score,r_gamma,accepted")
        throw std::runtime_error("trace csv header mismatch: " + path);
    std::vector<LoadedTraceRow> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const auto fields = split(line, ',');
        if (fields.size() != 5)
            throw std::runtime_error("trace csv row has wrong arity: " + path);
        LoadedTraceRow row;
        row.t = std::stoll(fields[0]);
        row.model = parse_indices(fields[1]);
        row.score = parse_double(fields[2]);
        row.r_gamma = parse_double(fields[3]);
        row.accepted = fields[4] == "1";
        rows.push_back(std::move(row));
    }
    return rows;
}

void save_trace_meta_json(const ChainTrace& trace, const std::string& path) {
    const ChainConfig& cfg = trace.config;
    json init;
    if (cfg.init.kind == ChainInit::Kind::Explicit)
        init = {{"kind", "explicit"}, {"state", cfg.init.state.indices}};
    else
        init = {{"kind", "uniform_random"}};
    json j{{"seed", trace.seed},
           {"config",
            {{"s", cfg.s},
             {"steps", cfg.steps},
             {"epsilon", cfg.epsilon},
             {"K", cfg.K},
             {"lazy", cfg.lazy},
             {"record_every", cfg.record_every},
             {"init", std::move(init)}}},
           {"accepted", trace.accepted_count},
           {"proposals", trace.proposal_count},
           {"accept_rate", trace.accept_rate},
           {"seconds", trace.seconds}};
    open_out(path) << j.dump(2) << '\n';
}

namespace {

json chain_summary_to_json(const ChainSummary& c) {
    json j{{"chain", c.chain},
           {"accept_rate", c.accept_rate},
           {"steps", c.steps},
           {"seconds", c.seconds},
           {"final_model", c.final_model.indices}};
    if (c.final_fscore)
        j["final_fscore"] = *c.final_fscore;
    return j;
}

ChainSummary chain_summary_from_json(const json& j) {
    ChainSummary c;
    c.chain = j.at("chain").get<int>();
    c.accept_rate = j.at("accept_rate").get<double>();
    c.steps = j.at("steps").get<long long>();
    c.seconds = j.at("seconds").get<double>();
    c.final_model = model_from_json(j.at("final_model"));
    if (j.contains("final_fscore"))
        c.final_fscore = j.at("final_fscore").get<double>();
    return c;
}

} // namespace

void save_summary_json(const RunSummary& summary, const std::string& path) {
    json cells = json::array();
    for (const CellSummary& cell : summary.cells) {
        json chains = json::array();
        for (const ChainSummary& c : cell.chains)
            chains.push_back(chain_summary_to_json(c));
        json jc{{"epsilon", cell.epsilon},
                {"K", cell.K},
                {"delta", cell.delta},
                {"chains", std::move(chains)}};
        if (cell.mean_fscore)
            jc["mean_fscore"] = *cell.mean_fscore;
        if (!cell.error.empty())
            jc["error"] = cell.error;
        cells.push_back(std::move(jc));
    }
    json j{{"eta", summary.eta}, {"base_seed", summary.base_seed}, {"cells", std::move(cells)}};
    open_out(path) << j.dump(2) << '\n';
}

RunSummary load_summary_json(const std::string& path) {
    json j = json::parse(open_in(path));
    RunSummary summary;
    summary.eta = j.at("eta").get<double>();
    summary.base_seed = j.at("base_seed").get<std::uint64_t>();
    for (const json& jc : j.at("cells")) {
        CellSummary cell;
        cell.epsilon = jc.at("epsilon").get<double>();
        cell.K = jc.at("K").get<double>();
        cell.delta = jc.at("delta").get<double>();
        for (const json& c : jc.at("chains"))
            cell.chains.push_back(chain_summary_from_json(c));
        if (jc.contains("mean_fscore"))
            cell.mean_fscore = jc.at("mean_fscore").get<double>();
        if (jc.contains("error"))
            cell.error = jc.at("error").get<std::string>();
        summary.cells.push_back(std::move(cell));
    }
    return summary;
}

void save_summary_csv(const RunSummary& summary, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "epsilon,K,chain,final_fscore,accept_rate,steps,seconds\n";
    for (const CellSummary& cell : summary.cells)
        for (const ChainSummary& c : cell.chains) {
            out << format_double(cell.epsilon) << ',' << format_double(cell.K) << ','
                << c.chain << ',';
            if (c.final_fscore)
                out << format_double(*c.final_fscore);
            out << ',' << format_double(c.accept_rate) << ',' << c.steps << ','
                << format_double(c.seconds) << '\n';
        }
}

void save_margin_report_json(const MarginReport& report,
                             const std::optional<MarginConditionCheck>& condition,
                             const std::string& path) {
    json skipped = json::array();
    for (const ModelState& m : report.skipped_singular)
        skipped.push_back(model_to_json(m));
    json j{{"margin", report.margin},
           {"min_argument", report.min_argument.indices},
           {"examined", report.examined},
           {"skipped_singular", std::move(skipped)}};
    if (condition) {
        j["eq9_threshold"] = condition->eq9_threshold;
        j["eq12_threshold"] = condition->eq12_threshold;
        j["satisfied_eq9"] = condition->satisfied_eq9;
        j["satisfied_eq12"] = condition->satisfied_eq12;
    }
    open_out(path) << j.dump(2) << '\n';
}

void save_assumption41_report_json(const Assumption41Report& report,
                                   const std::string& path) {
    json violations = json::array();
    for (const ModelState& m : report.violations)
        violations.push_back(model_to_json(m));
    json j{{"threshold", report.threshold},
           {"checked", report.checked},
           {"degenerate_skipped", report.degenerate_skipped},
           {"holds", report.holds()},
           {"violations", std::move(violations)}};
    open_out(path) << j.dump(2) << '\n';
}

void save_mixing_report_json(const MixingReport& report, const MixingBound& predicted,
                             double delta, const std::string& path) {
    json j{{"spectral_gap", report.gap},
           {"min_pi", report.min_pi},
           {"eta", report.eta},
           {"delta", delta},
           {"tau_eta_measured", report.tau_eta_measured},
           {"sandwich_lower", report.sandwich_lower},
           {"sandwich_upper",
            std::isfinite(report.sandwich_upper) ? json(report.sandwich_upper)
                                                 : json("inf")},
           {"sandwich_holds", report.sandwich_holds},
           {"truncated", report.truncated},
           {"proxy_starts", report.proxy_starts},
           {"predicted_upper_bound", predicted.bound},
           {"psi", predicted.psi}};
    open_out(path) << j.dump(2) << '\n';
}

void save_tv_curve_csv(const MixingReport& report, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "t,max_start_tv\n";
    for (const auto& [t, tv] : report.tv_curve)
        out << t << ',' << format_double(tv) << '\n';
}

void save_audit_json(const DpRatioAudit& audit, const std::string& path) {
    json trials = json::array();
    for (const auto& trial : audit.trials)
        trials.push_back({{"removed_row", trial.removed_row},
                          {"row", trial.row},
                          {"max_log_ratio", trial.max_log_ratio}});
    json j{{"epsilon", audit.epsilon},
           {"worst", audit.worst},
           {"passed", audit.passed()},
           {"trials", std::move(trials)}};
    open_out(path) << j.dump(2) << '\n';
}

} // namespace dpbss
