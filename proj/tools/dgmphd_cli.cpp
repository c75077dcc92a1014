// Command-line front end: Monte Carlo runs, algorithm comparisons, and
// truth/measurement stream generation and replay.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dgmphd/dgmphd.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Overrides {
    std::string config_path;
    std::optional<std::string> algorithm;
    std::vector<std::size_t> alphas;
    std::optional<std::size_t> bandwidth;
    std::optional<std::size_t> runs;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output;
    std::optional<std::size_t> jobs;
};

void add_common_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("-c,--config", o.config_path, "JSON experiment config (default: reference scenario)")
        ->check(CLI::ExistingFile);
    cmd->add_option("-B,--bandwidth", o.bandwidth, "components per transmission");
    cmd->add_option("-n,--runs", o.runs, "Monte Carlo runs");
    cmd->add_option("-s,--seed", o.seed, "master seed");
    cmd->add_option("-o,--output", o.output, "output directory");
    cmd->add_option("-j,--jobs", o.jobs, "concurrent runs");
}

json load_config(const Overrides& o) {
    json j = json::object();
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in) throw std::runtime_error("cannot open " + o.config_path);
        j = json::parse(in, nullptr, true, true);
        if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    }
    if (o.algorithm) j["algorithm"] = *o.algorithm;
    if (!o.alphas.empty()) j["alpha"] = o.alphas;
    if (o.bandwidth) j["bandwidth"] = *o.bandwidth;
    if (o.runs) j["mc_runs"] = *o.runs;
    if (o.seed) j["master_seed"] = *o.seed;
    if (o.output) j["output_path"] = *o.output;
    if (o.jobs) j["jobs"] = *o.jobs;
    return j;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::string runs_file_name(const dgmphd::ExperimentConfig& cfg) {
    return std::string("runs_") + dgmphd::to_string(cfg.algorithm) + "_alpha" + std::to_string(cfg.rounds()) + ".csv";
}

std::size_t report_failures(const dgmphd::ExperimentResult& r) {
    std::size_t failed = 0;
    for (const auto& run : r.runs) {
        if (!run.failed) continue;
        ++failed;
        std::cerr << "run " << run.run << " (" << dgmphd::to_string(r.config.algorithm) << ", alpha "
                  << r.config.rounds() << ") failed: " << run.error << '\n';
    }
    return failed;
}

void print_summary(const dgmphd::ExperimentResult& r) {
    const auto& s = r.summary;
    std::printf("%-22s alpha=%zu B=%zu runs=%zu ospa=%.4f +- %.4f floats/run=%.1f\n",
                dgmphd::to_string(r.config.algorithm), r.config.rounds(), r.config.bandwidth, s.completed_runs,
                s.mean_time_averaged_ospa, s.se_time_averaged_ospa, s.mean_tx_floats);
}

/// Runs and writes every config; returns the number of failed runs.
std::size_t write_campaign(const std::vector<dgmphd::ExperimentConfig>& configs,
                           const std::vector<dgmphd::ExperimentResult>& results, const fs::path& dir,
                           const dgmphd::Comparison* comparison) {
    fs::create_directories(dir);
    std::vector<std::string> files;
    std::size_t failed = 0;
    json manifests = json::array();
    for (const auto& r : results) {
        const auto name = runs_file_name(r.config);
        auto out = open_output(dir / name);
        dgmphd::write_runs_csv(out, r);
        files.push_back(name);
        manifests.push_back(dgmphd::run_manifest(r, {name}));
        failed += report_failures(r);
        print_summary(r);
    }
    {
        auto out = open_output(dir / "summary.csv");
        dgmphd::write_summary_csv(out, results);
        files.emplace_back("summary.csv");
    }
    if (comparison != nullptr) {
        auto out = open_output(dir / "comparison.csv");
        dgmphd::write_comparison_csv(out, *comparison);
        files.emplace_back("comparison.csv");
    }
    json manifest = {{"schema_version", dgmphd::kOutputSchemaVersion},
                     {"tool", "dgmphd"},
                     {"master_seed", configs.front().master_seed},
                     {"files", files},
                     {"experiments", manifests}};
    auto out = open_output(dir / "manifest.json");
    out << manifest.dump(2) << '\n';
    return failed;
}

int cmd_run(const Overrides& o) {
    const json j = load_config(o);
    const auto base = dgmphd::experiment_from_json(j);
    std::vector<dgmphd::ExperimentConfig> configs;
    for (auto a : dgmphd::alpha_sweep(j, base.alpha)) {
        auto c = base;
        c.alpha = a;
        c.validate();
        configs.push_back(c);
    }
    std::vector<dgmphd::ExperimentResult> results;
    for (const auto& c : configs) results.push_back(dgmphd::run_experiment(c));
    return write_campaign(configs, results, base.output_path, nullptr) == 0 ? 0 : 3;
}

int cmd_compare(const Overrides& o, const std::vector<std::string>& algorithms) {
    const json j = load_config(o);
    const auto base = dgmphd::experiment_from_json(j);
    std::vector<dgmphd::ExperimentConfig> configs;
    for (const auto& name : algorithms) {
        for (auto a : dgmphd::alpha_sweep(j, base.alpha)) {
            auto c = base;
            c.algorithm = dgmphd::parse_algorithm(name);
            c.alpha = a;
            c.validate();
            configs.push_back(c);
        }
    }
    const auto comparison = dgmphd::compare_algorithms(configs);
    const std::size_t failed = write_campaign(configs, comparison.results, base.output_path, &comparison);
    for (const auto& row : comparison.rows) {
        std::printf("alpha=%zu %s - %s: %+.4f +- %.4f (cost ratio %.3f)\n", row.alpha, row.candidate.c_str(),
                    row.baseline.c_str(), row.ospa_difference.mean, row.ospa_difference.standard_error,
                    row.cost_ratio);
    }
    return failed == 0 ? 0 : 3;
}

int cmd_generate(const Overrides& o, std::size_t run, const std::string& stream_path) {
    const auto cfg = dgmphd::experiment_from_json(load_config(o));
    const dgmphd::Scenario scenario{cfg.scenario, dgmphd::build_models(cfg.scenario)};
    const auto stream = dgmphd::simulate(scenario, dgmphd::run_seed(cfg.master_seed, run));
    if (stream_path == "-") {
        dgmphd::write_stream(std::cout, stream);
    } else {
        auto out = open_output(stream_path);
        dgmphd::write_stream(out, stream);
    }
    return 0;
}

int cmd_replay(const Overrides& o, const std::string& stream_path) {
    const auto cfg = dgmphd::experiment_from_json(load_config(o));
    const dgmphd::Scenario scenario{cfg.scenario, dgmphd::build_models(cfg.scenario)};
    std::ifstream in(stream_path);
    if (!in) throw std::runtime_error("cannot open " + stream_path);
    const auto stream = dgmphd::read_stream(in);

    dgmphd::ExperimentResult result;
    result.config = cfg;
    result.config.mc_runs = 1;
    result.runs.push_back(dgmphd::run_stream(cfg, scenario, stream, 0, dgmphd::run_seed(cfg.master_seed, 0)));
    result.summary = dgmphd::summarize(result.runs);
    return write_campaign({result.config}, {result}, cfg.output_path, nullptr) == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed GM-PHD filtering with bandwidth-limited consensus"};
    app.require_subcommand(1);

    Overrides run_opts;
    auto* run = app.add_subcommand("run", "Monte Carlo runs of one algorithm over one or more alpha values");
    add_common_flags(run, run_opts);
    run->add_option("-a,--algorithm", run_opts.algorithm, "no_consensus|full|partial_rank|partial_threshold|"
                                                          "sample_replacement|sample_no_replacement");
    run->add_option("--alpha", run_opts.alphas, "consensus rounds per timestep (repeatable)");

    Overrides cmp_opts;
    std::vector<std::string> algorithms{"no_consensus", "full", "partial_rank", "sample_replacement"};
    auto* cmp = app.add_subcommand("compare", "paired comparison of algorithms on shared seeds");
    add_common_flags(cmp, cmp_opts);
    cmp->add_option("--algorithms", algorithms, "algorithms to compare")->delimiter(',');
    cmp->add_option("--alpha", cmp_opts.alphas, "consensus rounds per timestep (repeatable)");

    Overrides gen_opts;
    std::size_t gen_run = 0;
    std::string gen_path = "-";
    auto* gen = app.add_subcommand("generate", "write a truth and measurement stream");
    gen->add_option("-c,--config", gen_opts.config_path, "JSON experiment config")->check(CLI::ExistingFile);
    gen->add_option("-s,--seed", gen_opts.seed, "master seed");
    gen->add_option("-r,--run", gen_run, "run index used to derive the stream seed");
    gen->add_option("-o,--output", gen_path, "stream file, '-' for stdout");

    Overrides rep_opts;
    std::string rep_path;
    auto* rep = app.add_subcommand("replay", "filter and fuse a recorded stream");
    add_common_flags(rep, rep_opts);
    rep->add_option("-a,--algorithm", rep_opts.algorithm, "fusion algorithm");
    rep->add_option("--alpha", rep_opts.alphas, "consensus rounds per timestep")->expected(1);
    rep->add_option("stream", rep_path, "stream file")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help exits 0; any other usage error is a config error
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*run) return cmd_run(run_opts);
        if (*cmp) return cmd_compare(cmp_opts, algorithms);
        if (*gen) return cmd_generate(gen_opts, gen_run, gen_path);
        if (*rep) return cmd_replay(rep_opts, rep_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
