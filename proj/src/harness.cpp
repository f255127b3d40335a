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

#include <streamlab/harness.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace streamlab::harness {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

template <typename T>
T parse_number(std::string_view text, const char* what) {
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw Error(Errc::Io, std::string("cannot parse ") + what + " from '" + std::string(text) + "'");
    }
    return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) return out;
        start = pos + 1;
    }
}

std::vector<std::vector<std::string_view>> read_csv_rows(const std::string& text, std::string_view header,
                                                         const fs::path& path) {
    std::vector<std::vector<std::string_view>> rows;
    std::string_view rest(text);
    bool first = true;
    while (!rest.empty()) {
        const auto nl = rest.find('\n');
        std::string_view line = rest.substr(0, nl);
        rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
        if (first) {
            if (line != header) {
                throw Error(Errc::Io, path.string() + ": unexpected header '" + std::string(line) + "'");
            }
            first = false;
            continue;
        }
        if (line.empty()) continue;
        rows.push_back(split(line, ','));
    }
    if (first) {
        throw Error(Errc::Io, path.string() + ": missing header");
    }
    return rows;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::Io, "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(Errc::Io, "cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw Error(Errc::Io, "write failed for " + path.string());
    }
}

constexpr std::string_view kResultsHeader = "engine,api_kind,query,parallelism,run_index,exec_time_ms,records_out";
constexpr std::string_view kStatsHeader = "engine,api_kind,query,parallelism,mean_ms,stddev_ms,rel_stddev";
constexpr std::string_view kSlowdownHeader = "engine,query,sf";

} // namespace

std::string Setup::label() const {
    return std::string(to_string(engine)) + "-" + std::string(queries::to_string(api)) + "-" +
           std::string(queries::to_string(query)) + "-p" + std::to_string(parallelism);
}

void BenchmarkConfig::validate() const {
    corpus.validate();
    if (runs_per_setup == 0) throw Error(Errc::Config, "runs_per_setup must be at least 1");
    if (parallelisms.empty()) throw Error(Errc::Config, "parallelisms must not be empty");
    if (engines.empty()) throw Error(Errc::Config, "engines must not be empty");
    if (api_kinds.empty()) throw Error(Errc::Config, "api_kinds must not be empty");
    if (queries.empty()) throw Error(Errc::Config, "queries must not be empty");
    for (auto p : parallelisms) {
        if (p == 0) throw Error(Errc::Config, "parallelisms must be positive");
    }
    if (ingest_rate && !(*ingest_rate > 0)) throw Error(Errc::Config, "ingest rate must be positive");
    try {
        batch_policy.validate();
        query_spec(QueryKind::Sample).validate();
    } catch (const Error& e) {
        throw Error(Errc::Config, e.what());
    }
}

std::vector<Setup> BenchmarkConfig::setups() const {
    std::set<Setup> unique;
    for (auto e : engines)
        for (auto a : api_kinds)
            for (auto q : queries)
                for (auto p : parallelisms) unique.insert(Setup{e, a, q, p});
    return {unique.begin(), unique.end()};
}

queries::QuerySpec BenchmarkConfig::query_spec(QueryKind kind) const {
    queries::QuerySpec spec;
    spec.kind = kind;
    spec.sample_probability = sample_probability;
    spec.grep_needle = corpus.grep_needle;
    spec.rng_seed = query_seed;
    return spec;
}

corpus::IngestSummary phase_ingest(const BenchmarkConfig& config, minilog::Broker& broker) {
    config.validate();
    minilog::TopicHandle input;
    if (broker.has_topic(kInputTopic)) {
        input = broker.topic(kInputTopic);
    } else {
        input = broker.create_topic({kInputTopic, 1, minilog::AckMode::Confirmed});
    }
    const auto records = corpus::generate_corpus(config.corpus);
    return corpus::send(records, broker, input, config.ingest_rate);
}

std::int64_t compute_execution_time(const minilog::Broker& broker, const std::string& output_topic) {
    const auto topic = broker.topic(output_topic);
    if (broker.high_water_mark(topic, 0) == 0) {
        throw Error(Errc::EmptyOutput, "output topic '" + output_topic + "' is empty");
    }
    const auto [first, last] = broker.boundary_timestamps(topic, 0);
    return last - first;
}

ExecuteOutcome phase_execute(const BenchmarkConfig& config, minilog::Broker& broker, const ProgressFn& progress) {
    config.validate();
    const auto input = broker.topic(kInputTopic);
    const auto end = broker.high_water_mark(input, 0);
    if (end == 0) {
        throw Error(Errc::EmptyInput, "input topic is empty; run the ingest phase first");
    }

    ExecuteOutcome outcome;
    for (const auto& setup : config.setups()) {
        const auto spec = config.query_spec(setup.query);
        std::vector<RunResult> runs;
        try {
            const std::uint32_t total = config.warmup + config.runs_per_setup;
            for (std::uint32_t i = 0; i < total; ++i) {
                const bool warmup = i < config.warmup;
                const std::uint32_t run_index = warmup ? i : i - config.warmup;
                const std::string topic = "out-" + setup.label() + "-" +
                                          (warmup ? "w" + std::to_string(i) : std::to_string(run_index));
                if (broker.has_topic(topic)) broker.delete_topic(topic);
                broker.create_topic({topic, 1, minilog::AckMode::Confirmed});

                const auto job = queries::build_query(spec, setup.api, setup.engine, setup.parallelism,
                                                      {kInputTopic, end, topic}, config.batch_policy);
                if (i == 0) {
                    outcome.plans.emplace_back(setup, job.plan());
                }
                if (progress && !warmup) progress(setup, run_index);
                const auto report = job.execute(broker);

                if (!warmup) {
                    RunResult r;
                    r.setup = setup;
                    r.run_index = run_index;
                    r.exec_time_ms = compute_execution_time(broker, topic);
                    r.records_in = report.records_in;
                    r.records_out = report.records_out;
                    r.operator_invocations = report.operator_invocations;
                    r.output_topic = topic;
                    r.degenerate = report.records_out == 1;
                    runs.push_back(std::move(r));
                }
                if (warmup || !config.retain_outputs) {
                    broker.delete_topic(topic);
                }
            }
            outcome.results.insert(outcome.results.end(), runs.begin(), runs.end());
        } catch (const Error& e) {
            outcome.failures.push_back({setup, e.what()});
        }
    }
    return outcome;
}

double mean_time(std::span<const double> times) {
    if (times.empty()) {
        throw Error(Errc::EmptyInput, "mean of an empty list");
    }
    return std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
}

double stddev_time(std::span<const double> times) {
    const double mean = mean_time(times);
    double ss = 0;
    for (double t : times) ss += (t - mean) * (t - mean);
    return std::sqrt(ss / static_cast<double>(times.size()));
}

double slowdown_factor(const std::map<std::uint32_t, double>& unified_means,
                       const std::map<std::uint32_t, double>& native_means) {
    if (unified_means.empty()) {
        throw Error(Errc::EmptyInput, "no parallelisms to average over");
    }
    if (unified_means.size() != native_means.size() ||
        !std::equal(unified_means.begin(), unified_means.end(), native_means.begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; })) {
        throw Error(Errc::MismatchedParallelisms, "unified and native means cover different parallelisms");
    }
    double sum = 0;
    for (const auto& [p, native] : native_means) {
        if (!(native > 0)) {
            throw Error(Errc::DivisionByZero, "native mean at parallelism " + std::to_string(p) + " is not positive");
        }
        sum += unified_means.at(p) / native;
    }
    return sum / static_cast<double>(native_means.size());
}

AggregateStats aggregate_stats(std::span<const RunResult> results) {
    std::map<Setup, std::vector<double>> times;
    for (const auto& r : results) {
        times[r.setup].push_back(static_cast<double>(r.exec_time_ms));
    }

    AggregateStats out;
    std::map<std::tuple<EngineKind, ApiKind, QueryKind>, std::vector<double>> rel;
    for (const auto& [setup, ts] : times) {
        SetupStats s;
        s.setup = setup;
        s.runs = ts.size();
        s.mean_ms = mean_time(ts);
        s.stddev_ms = stddev_time(ts);
        s.rel_stddev = s.mean_ms > 0 ? s.stddev_ms / s.mean_ms : 0.0;
        s.insufficient_runs = ts.size() < 2;
        out.setups.push_back(s);
        rel[{setup.engine, setup.api, setup.query}].push_back(s.rel_stddev);
    }
    for (const auto& [key, values] : rel) {
        const auto& [engine, api, query] = key;
        out.deviations.push_back({engine, api, query, mean_time(values)});
    }
    return out;
}

std::vector<SlowdownRow> compute_slowdowns(const AggregateStats& stats) {
    std::map<std::pair<EngineKind, QueryKind>, std::pair<std::map<std::uint32_t, double>, std::map<std::uint32_t, double>>>
        means;
    for (const auto& s : stats.setups) {
        auto& [unified, native] = means[{s.setup.engine, s.setup.query}];
        (s.setup.api == ApiKind::Unified ? unified : native)[s.setup.parallelism] = s.mean_ms;
    }
    std::vector<SlowdownRow> rows;
    for (const auto& [key, pair] : means) {
        const auto& [unified, native] = pair;
        if (unified.empty() || native.empty()) continue;
        SlowdownRow row;
        row.engine = key.first;
        row.query = key.second;
        try {
            row.sf = slowdown_factor(unified, native);
        } catch (const Error& e) {
            row.note = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Report build_report(std::span<const RunResult> results, std::map<std::string, std::string> metadata) {
    Report report;
    report.stats = aggregate_stats(results);
    report.slowdowns = compute_slowdowns(report.stats);
    report.metadata = std::move(metadata);
    return report;
}

void emit_report(const Report& report, std::span<const RunResult> results,
                 std::span<const std::pair<Setup, dataflow::ExecutionPlan>> plans, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir / "plans", ec);
    if (ec) {
        throw Error(Errc::Io, "cannot create " + (dir / "plans").string() + ": " + ec.message());
    }

    std::string csv(kResultsHeader);
    csv += '\n';
    for (const auto& r : results) {
        csv += std::string(to_string(r.setup.engine)) + ',' + std::string(queries::to_string(r.setup.api)) + ',' +
               std::string(queries::to_string(r.setup.query)) + ',' + std::to_string(r.setup.parallelism) + ',' +
               std::to_string(r.run_index) + ',' + std::to_string(r.exec_time_ms) + ',' +
               std::to_string(r.records_out) + '\n';
    }
    write_file(dir / "results.csv", csv);

    csv = std::string(kStatsHeader) + '\n';
    for (const auto& s : report.stats.setups) {
        csv += std::string(to_string(s.setup.engine)) + ',' + std::string(queries::to_string(s.setup.api)) + ',' +
               std::string(queries::to_string(s.setup.query)) + ',' + std::to_string(s.setup.parallelism) + ',' +
               format_double(s.mean_ms) + ',' + format_double(s.stddev_ms) + ',' + format_double(s.rel_stddev) +
               '\n';
    }
    write_file(dir / "stats.csv", csv);

    csv = std::string(kSlowdownHeader) + '\n';
    for (const auto& row : report.slowdowns) {
        csv += std::string(to_string(row.engine)) + ',' + std::string(queries::to_string(row.query)) + ',' +
               (row.sf ? format_double(*row.sf) : "nan") + '\n';
    }
    write_file(dir / "slowdown.csv", csv);

    std::ostringstream md;
    md << "# Benchmark report\n\n## Metadata\n\n";
    for (const auto& [k, v] : report.metadata) md << "- " << k << ": " << v << '\n';
    md << "\n## Mean execution time per setup (ms)\n\n"
       << "| engine | api | query | p | runs | mean | stddev | rel. stddev |\n"
       << "|---|---|---|---|---|---|---|---|\n";
    for (const auto& s : report.stats.setups) {
        md << "| " << to_string(s.setup.engine) << " | " << queries::to_string(s.setup.api) << " | "
           << queries::to_string(s.setup.query) << " | " << s.setup.parallelism << " | " << s.runs << " | "
           << format_double(s.mean_ms) << " | " << format_double(s.stddev_ms) << " | "
           << format_double(s.rel_stddev) << (s.insufficient_runs ? " (insufficient runs)" : "") << " |\n";
    }
    md << "\n## Relative standard deviation averaged over parallelisms\n\n"
       << "| engine | api | query | rel. stddev |\n|---|---|---|---|\n";
    for (const auto& d : report.stats.deviations) {
        md << "| " << to_string(d.engine) << " | " << queries::to_string(d.api) << " | "
           << queries::to_string(d.query) << " | " << format_double(d.mean_rel_stddev) << " |\n";
    }
    md << "\n## Slowdown factor (unified / native)\n\n| engine | query | sf | note |\n|---|---|---|---|\n";
    for (const auto& row : report.slowdowns) {
        md << "| " << to_string(row.engine) << " | " << queries::to_string(row.query) << " | "
           << (row.sf ? format_double(*row.sf) : "n/a") << " | " << row.note << " |\n";
    }
    std::size_t degenerate = 0;
    for (const auto& r : results) degenerate += r.degenerate;
    if (degenerate > 0) {
        md << "\n" << degenerate << " run(s) produced a single output record and report 0 ms.\n";
    }
    write_file(dir / "report.md", md.str());

    for (const auto& [setup, plan] : plans) {
        dump_plan(plan, dir / "plans" / (setup.label() + ".plan"));
    }
}

std::vector<RunResult> read_results_csv(const fs::path& path) {
    const std::string text = slurp(path);
    std::vector<RunResult> out;
    for (const auto& cols : read_csv_rows(text, kResultsHeader, path)) {
        if (cols.size() != 7) {
            throw Error(Errc::Io, path.string() + ": expected 7 columns, found " + std::to_string(cols.size()));
        }
        RunResult r;
        try {
            r.setup.engine = parse_engine_kind(cols[0]);
            r.setup.api = queries::parse_api_kind(cols[1]);
            r.setup.query = queries::parse_query_kind(cols[2]);
        } catch (const Error& e) {
            throw Error(Errc::Io, path.string() + ": " + e.what());
        }
        r.setup.parallelism = parse_number<std::uint32_t>(cols[3], "parallelism");
        r.run_index = parse_number<std::uint32_t>(cols[4], "run_index");
        r.exec_time_ms = parse_number<std::int64_t>(cols[5], "exec_time_ms");
        r.records_out = parse_number<std::uint64_t>(cols[6], "records_out");
        r.degenerate = r.records_out == 1;
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<SlowdownRow> read_slowdown_csv(const fs::path& path) {
    const std::string text = slurp(path);
    std::vector<SlowdownRow> out;
    for (const auto& cols : read_csv_rows(text, kSlowdownHeader, path)) {
        if (cols.size() != 3) throw Error(Errc::Io, path.string() + ": expected 3 columns");
        SlowdownRow row;
        row.engine = parse_engine_kind(cols[0]);
        row.query = queries::parse_query_kind(cols[1]);
        if (cols[2] != "nan") row.sf = parse_number<double>(cols[2], "sf");
        out.push_back(row);
    }
    return out;
}

std::vector<SetupStats> read_stats_csv(const fs::path& path) {
    const std::string text = slurp(path);
    std::vector<SetupStats> out;
    for (const auto& cols : read_csv_rows(text, kStatsHeader, path)) {
        if (cols.size() != 7) throw Error(Errc::Io, path.string() + ": expected 7 columns");
        SetupStats s;
        s.setup.engine = parse_engine_kind(cols[0]);
        s.setup.api = queries::parse_api_kind(cols[1]);
        s.setup.query = queries::parse_query_kind(cols[2]);
        s.setup.parallelism = parse_number<std::uint32_t>(cols[3], "parallelism");
        s.mean_ms = parse_number<double>(cols[4], "mean_ms");
        s.stddev_ms = parse_number<double>(cols[5], "stddev_ms");
        s.rel_stddev = parse_number<double>(cols[6], "rel_stddev");
        out.push_back(s);
    }
    return out;
}

std::string dump_plan(const dataflow::ExecutionPlan& plan) {
    std::string out;
    for (const auto& node : plan.nodes) {
        out += "node " + std::to_string(node.index) + ' ' + node.name;
        if (!node.annotation.empty()) out += '[' + node.annotation + ']';
        out += " parallelism=" + std::to_string(node.parallelism) + '\n';
    }
    for (const auto& [from, to] : plan.edges) {
        out += "edge " + std::to_string(from) + ' ' + std::to_string(to) + '\n';
    }
    return out;
}

void dump_plan(const dataflow::ExecutionPlan& plan, const fs::path& path) {
    write_file(path, dump_plan(plan));
}

dataflow::ExecutionPlan parse_plan(std::string_view text) {
    dataflow::ExecutionPlan plan;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split(line, ' ');
        const auto bad = [&] {
            return Error(Errc::Io, "plan line " + std::to_string(line_no) + " is malformed: '" + std::string(line) + "'");
        };
        if (fields[0] == "node" && fields.size() == 4 && fields[3].starts_with("parallelism=")) {
            dataflow::PlanNode node;
            node.index = parse_number<std::size_t>(fields[1], "node index");
            std::string_view name = fields[2];
            if (name.ends_with(']')) {
                const auto open = name.find('[');
                if (open == std::string_view::npos) throw bad();
                node.annotation = name.substr(open + 1, name.size() - open - 2);
                name = name.substr(0, open);
            }
            node.name = name;
            node.is_source = node.index == 0;
            node.parallelism = parse_number<std::uint32_t>(fields[3].substr(12), "parallelism");
            if (node.index != plan.nodes.size()) throw bad();
            plan.nodes.push_back(std::move(node));
        } else if (fields[0] == "edge" && fields.size() == 3) {
            const auto from = parse_number<std::size_t>(fields[1], "edge source");
            const auto to = parse_number<std::size_t>(fields[2], "edge target");
            if (from >= plan.nodes.size() || to >= plan.nodes.size() || from >= to) throw bad();
            plan.edges.emplace_back(from, to);
        } else {
            throw bad();
        }
    }
    return plan;
}

dataflow::ExecutionPlan plan_for(const Setup& setup, const BenchmarkConfig& config) {
    const queries::JobIo io{kInputTopic, 0, "out-" + setup.label()};
    return queries::build_query(config.query_spec(setup.query), setup.api, setup.engine, setup.parallelism, io,
                                config.batch_policy)
        .plan();
}

} // namespace streamlab::harness
