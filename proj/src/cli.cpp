// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <streamlab/cli.hpp>
#include <streamlab/config.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

namespace streamlab::cli {

namespace fs = std::filesystem;
using harness::BenchmarkConfig;

int exit_code_for(Errc code) noexcept {
    switch (code) {
    case Errc::Config:
    case Errc::InvalidSpec:
    case Errc::InvalidPolicy:
    case Errc::InvalidCombination:
        return kConfigError;
    case Errc::Io:
        return kIoError;
    default:
        return kRunFailure;
    }
}

namespace {

// Extra spellings accepted for some keys.
const std::map<std::string, std::string>& aliases() {
    static const std::map<std::string, std::string> table = {
        {"corpus.n_records", "--n-records"},
        {"corpus.grep_needle", "--needle"},
        {"corpus.rng_seed", "--seed"},
        {"runs_per_setup", "--runs"},
        {"api_kinds", "--api-kinds"},
        {"batch_policy.max_batch_size", "--max-batch-size"},
        {"batch_policy.max_batch_delay_ms", "--max-batch-delay"},
        {"output_dir", "--output-dir"},
        {"ingest_rate", "--rate"},
    };
    return table;
}

struct ConfigFlags {
    std::string config_file;
    bool paper_scale = false;
    std::map<std::string, std::string> values;

    void attach(CLI::App* app) {
        app->add_option("--config", config_file, "JSON config file with flat keys")->check(CLI::ExistingFile);
        app->add_flag("--paper-scale", paper_scale, "Use the full 1,000,001-record corpus");
        for (const auto& key : config::known_keys()) {
            std::string names = "--" + key;
            if (auto it = aliases().find(key); it != aliases().end()) names += "," + it->second;
            app->add_option(names, values[key], "Overrides config key '" + key + "'");
        }
    }

    BenchmarkConfig resolve(CLI::App* app) const {
        BenchmarkConfig c;
        if (!config_file.empty()) c = config::load_file(config_file, c);
        if (paper_scale) c.corpus.n_records = corpus::kReferenceRecords;
        if (const char* env = std::getenv(config::kOutputDirEnv); env && *env) c.output_dir = env;
        nlohmann::json overrides = nlohmann::json::object();
        for (const auto& key : config::known_keys()) {
            if (app->count("--" + key) > 0) overrides[key] = config::parse_flag_value(key, values.at(key));
        }
        c = config::from_json(overrides, c);
        c.validate();
        return c;
    }
};

std::map<std::string, std::string> metadata_for(const BenchmarkConfig& c) {
    return {
        {"config_hash", config::fingerprint(c)},
        {"corpus_seed", std::to_string(c.corpus.rng_seed)},
        {"query_seed", std::to_string(c.query_seed)},
        {"clock", "steady_clock, millisecond append timestamps"},
        {"effective_config", config::to_json(c).dump()},
    };
}

void write_config(const BenchmarkConfig& c, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream out(dir / "config.json");
    if (!out) throw Error(Errc::Io, "cannot write " + (dir / "config.json").string());
    out << config::to_json(c).dump(2) << '\n';
}

int print_failures(const std::vector<harness::SetupFailure>& failures, std::ostream& err) {
    if (failures.empty()) return kSuccess;
    err << "setup failures:\n";
    for (const auto& f : failures) err << "  " << f.setup.label() << "  " << f.message << '\n';
    return kRunFailure;
}

int cmd_ingest(const BenchmarkConfig& c, std::ostream& out) {
    minilog::Broker broker;
    const auto summary = harness::phase_ingest(c, broker);
    const fs::path dir(c.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream f(dir / "ingest.csv");
    if (!f) throw Error(Errc::Io, "cannot write " + (dir / "ingest.csv").string());
    f << "count,first_ts,last_ts\n" << summary.count << ',' << summary.first_ts << ',' << summary.last_ts << '\n';
    out << "ingested " << summary.count << " records in " << (summary.last_ts - summary.first_ts) << " ms\n";
    return kSuccess;
}

int cmd_bench(const BenchmarkConfig& c, std::ostream& out, std::ostream& err) {
    minilog::Broker broker;
    const auto summary = harness::phase_ingest(c, broker);
    out << "ingested " << summary.count << " records\n";
    const auto outcome = harness::phase_execute(c, broker, [&](const harness::Setup& s, std::uint32_t run) {
        if (run == 0) out << "running " << s.label() << '\n';
    });
    const fs::path dir(c.output_dir);
    write_config(c, dir);
    auto report = harness::build_report(outcome.results, metadata_for(c));
    report.metadata["failed_setups"] = std::to_string(outcome.failures.size());
    harness::emit_report(report, outcome.results, outcome.plans, dir);
    out << outcome.results.size() << " runs written to " << (dir / "results.csv").string() << '\n';
    return print_failures(outcome.failures, err);
}

int cmd_report(const fs::path& dir, std::ostream& out) {
    const auto results = harness::read_results_csv(dir / "results.csv");
    BenchmarkConfig c;
    std::map<std::string, std::string> metadata;
    if (fs::exists(dir / "config.json")) {
        c = config::load_file(dir / "config.json");
        metadata = metadata_for(c);
    }
    std::set<harness::Setup> seen;
    std::vector<std::pair<harness::Setup, dataflow::ExecutionPlan>> plans;
    for (const auto& r : results) {
        if (seen.insert(r.setup).second) plans.emplace_back(r.setup, harness::plan_for(r.setup, c));
    }
    const auto report = harness::build_report(results, metadata);
    harness::emit_report(report, results, plans, dir);
    for (const auto& row : report.slowdowns) {
        out << to_string(row.engine) << ' ' << queries::to_string(row.query) << " sf="
            << (row.sf ? std::to_string(*row.sf) : "n/a") << '\n';
    }
    return kSuccess;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Stream-processing abstraction-overhead benchmark"};
    app.require_subcommand(1);

    ConfigFlags ingest_flags, bench_flags, all_flags;
    auto* ingest = app.add_subcommand("ingest", "Generate the corpus and load it into a fresh broker");
    ingest_flags.attach(ingest);
    auto* bench = app.add_subcommand("bench", "Ingest, then run every setup and write results");
    bench_flags.attach(bench);
    auto* all = app.add_subcommand("all", "Ingest, bench and report in one go");
    all_flags.attach(all);

    auto* report = app.add_subcommand("report", "Recompute statistics from a results directory");
    std::string report_dir;
    report->add_option("--dir", report_dir, "Directory holding results.csv");

    auto* plan = app.add_subcommand("plan", "Print the execution plan of one setup");
    std::string plan_query, plan_api, plan_engine;
    std::uint32_t plan_p = 1;
    std::uint64_t plan_batch = microbatch_engine::BatchPolicy{}.max_batch_size;
    plan->add_option("query", plan_query, "identity|sample|projection|grep")->required();
    plan->add_option("api_kind", plan_api, "native|unified")->required();
    plan->add_option("engine", plan_engine, "tuple|microbatch")->required();
    plan->add_option("parallelism", plan_p, "Parallelism")->required();
    plan->add_option("--max-batch-size", plan_batch, "Micro-batch size");

    auto* corpus_cmd = app.add_subcommand("corpus", "Corpus utilities");
    corpus_cmd->require_subcommand(1);
    auto* exporter = corpus_cmd->add_subcommand("export", "Write the corpus as tab-separated lines");
    std::string spec_file, out_path;
    exporter->add_option("--spec", spec_file, "Config file with corpus.* keys")->required()->check(CLI::ExistingFile);
    exporter->add_option("--out", out_path, "Output path")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kConfigError;
    }

    try {
        if (ingest->parsed()) return cmd_ingest(ingest_flags.resolve(ingest), out);
        if (bench->parsed()) return cmd_bench(bench_flags.resolve(bench), out, err);
        if (all->parsed()) {
            const auto c = all_flags.resolve(all);
            const int bench_code = cmd_bench(c, out, err);
            cmd_report(c.output_dir, out);
            return bench_code;
        }
        if (report->parsed()) {
            fs::path dir = report_dir;
            if (dir.empty()) {
                const char* env = std::getenv(config::kOutputDirEnv);
                dir = env && *env ? env : BenchmarkConfig{}.output_dir;
            }
            return cmd_report(dir, out);
        }
        if (plan->parsed()) {
            BenchmarkConfig c;
            c.batch_policy.max_batch_size = plan_batch;
            harness::Setup s{parse_engine_kind(plan_engine), queries::parse_api_kind(plan_api),
                             queries::parse_query_kind(plan_query), plan_p};
            if (plan_p == 0) throw Error(Errc::Config, "parallelism must be at least 1");
            out << harness::dump_plan(harness::plan_for(s, c));
            return kSuccess;
        }
        if (exporter->parsed()) {
            const auto c = config::load_file(spec_file);
            const auto records = corpus::generate_corpus(c.corpus);
            std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
            if (!f) throw Error(Errc::Io, "cannot write " + out_path);
            corpus::export_corpus(records, f);
            if (!f) throw Error(Errc::Io, "write failed for " + out_path);
            out << "wrote " << records.size() << " records to " << out_path << '\n';
            return kSuccess;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRunFailure;
    }
    return kConfigError;
}

} // namespace streamlab::cli
