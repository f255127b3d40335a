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

#pragma once

// Benchmark orchestration: ingest the corpus, run every setup a fixed number
// of times against fresh output topics, time each run from the output
// topic's first and last append timestamps, and aggregate.

#include <streamlab/corpus.hpp>
#include <streamlab/queries.hpp>

#include <compare>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace streamlab::harness {

using queries::ApiKind;
using queries::QueryKind;

inline constexpr const char* kInputTopic = "input";

struct Setup {
    EngineKind engine = EngineKind::Tuple;
    ApiKind api = ApiKind::Native;
    QueryKind query = QueryKind::Identity;
    std::uint32_t parallelism = 1;

    /// "<engine>-<api>-<query>-p<parallelism>"
    std::string label() const;
    auto operator<=>(const Setup&) const = default;
};

struct BenchmarkConfig {
    corpus::CorpusSpec corpus;
    std::uint32_t runs_per_setup = 10;
    std::vector<std::uint32_t> parallelisms{1, 2};
    std::vector<EngineKind> engines{EngineKind::Tuple, EngineKind::Microbatch};
    std::vector<ApiKind> api_kinds{ApiKind::Native, ApiKind::Unified};
    std::vector<QueryKind> queries{queries::kAllQueries.begin(), queries::kAllQueries.end()};
    microbatch_engine::BatchPolicy batch_policy;
    std::string output_dir = "streamlab-out";
    double sample_probability = 0.4;
    std::uint64_t query_seed = 7;
    std::uint32_t warmup = 0;
    std::optional<double> ingest_rate; // records per second; empty = unlimited
    bool retain_outputs = false;       // keep each run's output topic in the broker

    void validate() const;
    /// Cross product in (engine, api_kind, query, parallelism) order.
    std::vector<Setup> setups() const;
    queries::QuerySpec query_spec(QueryKind kind) const;
};

struct RunResult {
    Setup setup;
    std::uint32_t run_index = 0;
    std::int64_t exec_time_ms = 0;
    std::uint64_t records_in = 0;
    std::uint64_t records_out = 0;
    std::map<std::string, std::uint64_t> operator_invocations;
    std::string output_topic;
    /// One output record: the time span is zero by construction.
    bool degenerate = false;
};

struct SetupFailure {
    Setup setup;
    std::string message;
};

struct ExecuteOutcome {
    std::vector<RunResult> results;
    std::vector<SetupFailure> failures;
    std::vector<std::pair<Setup, dataflow::ExecutionPlan>> plans;
};

using ProgressFn = std::function<void(const Setup&, std::uint32_t run_index)>;

corpus::IngestSummary phase_ingest(const BenchmarkConfig& config, minilog::Broker& broker);
ExecuteOutcome phase_execute(const BenchmarkConfig& config, minilog::Broker& broker,
                             const ProgressFn& progress = {});

/// Last minus first append timestamp of the output topic's partition 0.
std::int64_t compute_execution_time(const minilog::Broker& broker, const std::string& output_topic);

double mean_time(std::span<const double> times);
/// Population standard deviation.
double stddev_time(std::span<const double> times);

/// (1/N) * sum over parallelisms of unified_mean[p] / native_mean[p].
double slowdown_factor(const std::map<std::uint32_t, double>& unified_means,
                       const std::map<std::uint32_t, double>& native_means);

struct SetupStats {
    Setup setup;
    std::size_t runs = 0;
    double mean_ms = 0;
    double stddev_ms = 0;
    double rel_stddev = 0;
    bool insufficient_runs = false; // fewer than two runs
};

/// rel_stddev averaged over the parallelisms of one (engine, api, query).
struct DeviationSummary {
    EngineKind engine = EngineKind::Tuple;
    ApiKind api = ApiKind::Native;
    QueryKind query = QueryKind::Identity;
    double mean_rel_stddev = 0;
};

struct AggregateStats {
    std::vector<SetupStats> setups;
    std::vector<DeviationSummary> deviations;
};

AggregateStats aggregate_stats(std::span<const RunResult> results);

struct SlowdownRow {
    EngineKind engine = EngineKind::Tuple;
    QueryKind query = QueryKind::Identity;
    std::optional<double> sf; // empty when undefined for the measured data
    std::string note;
};

std::vector<SlowdownRow> compute_slowdowns(const AggregateStats& stats);

struct Report {
    AggregateStats stats;
    std::vector<SlowdownRow> slowdowns;
    std::map<std::string, std::string> metadata;
};

Report build_report(std::span<const RunResult> results, std::map<std::string, std::string> metadata = {});

/// Writes results.csv, stats.csv, slowdown.csv, report.md and plans/<setup>.plan.
void emit_report(const Report& report, std::span<const RunResult> results,
                 std::span<const std::pair<Setup, dataflow::ExecutionPlan>> plans,
                 const std::filesystem::path& dir);

std::vector<RunResult> read_results_csv(const std::filesystem::path& path);
std::vector<SlowdownRow> read_slowdown_csv(const std::filesystem::path& path);
std::vector<SetupStats> read_stats_csv(const std::filesystem::path& path);

/// `node <index> <name> parallelism=<p>` lines then `edge <from> <to>` lines.
/// An annotated node renders its name as `<name>[<annotation>]`.
std::string dump_plan(const dataflow::ExecutionPlan& plan);
void dump_plan(const dataflow::ExecutionPlan& plan, const std::filesystem::path& path);
dataflow::ExecutionPlan parse_plan(std::string_view text);

/// Plan of the job a setup would run; independent of corpus contents.
dataflow::ExecutionPlan plan_for(const Setup& setup, const BenchmarkConfig& config);

} // namespace streamlab::harness
