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

// Acceptance suite. Each criterion prints one PASS/FAIL line; the process
// exits non-zero if any criterion fails.

#include "test_support.hpp"

#include <streamlab/harness.hpp>
#include <streamlab/queries.hpp>
#include <streamlab/unified.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <unistd.h>

namespace {

using namespace streamlab;
using harness::ApiKind;
using harness::QueryKind;
namespace fs = std::filesystem;

struct Outcome {
    bool ok = true;
    std::string detail;

    void check(bool condition, const std::string& what) {
        if (!condition && ok) {
            ok = false;
            detail = what;
        }
    }
};

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(12);
    s << v;
    return s.str();
}

// --- 1 ----------------------------------------------------------------------

Outcome table_arithmetic() {
    const std::vector<double> p1{6.25, 21.56, 3.42, 3.31, 3.73, 12.69, 3.90, 3.96, 3.42, 3.01};
    const std::vector<double> p2{4.15, 3.77, 2.71, 5.29, 3.00, 3.93, 2.90, 3.66, 3.57, 4.45};
    Outcome o;
    const double m1 = harness::mean_time(p1);
    const double m2 = harness::mean_time(p2);
    o.check(rel_err(m1, 6.525) <= 1e-9, "p=1 mean " + fmt(m1));
    o.check(rel_err(m2, 3.743) <= 1e-9, "p=2 mean " + fmt(m2));
    const double r1 = harness::stddev_time(p1) / m1;
    const double r2 = harness::stddev_time(p2) / m2;
    o.check(r1 > 2 * r2, "rel_stddev p1 " + fmt(r1) + " vs p2 " + fmt(r2));
    if (o.ok) o.detail = "means 6.525 / 3.743, rel_stddev " + fmt(r1) + " > 2 x " + fmt(r2);
    return o;
}

// --- 2 ----------------------------------------------------------------------

Outcome slowdown_formula() {
    Outcome o;
    const double sf = harness::slowdown_factor({{1, 10}, {2, 20}}, {{1, 5}, {2, 5}});
    o.check(sf == 3.0, "example gives " + fmt(sf));
    o.check(harness::slowdown_factor({{1, 5}, {2, 9}}, {{1, 5}, {2, 9}}) == 1.0, "equal means");

    std::mt19937_64 rng(2718);
    std::uniform_real_distribution<double> t(0.01, 500.0);
    for (int trial = 0; trial < 1000 && o.ok; ++trial) {
        std::map<std::uint32_t, double> u, n;
        const int np = 1 + static_cast<int>(rng() % 3);
        for (int i = 0; i < np; ++i) {
            u[1u << i] = t(rng);
            n[1u << i] = t(rng);
        }
        double brute = 0;
        for (const auto& [p, v] : u) brute += v / n[p];
        brute /= np;
        const double got = harness::slowdown_factor(u, n);
        o.check(rel_err(got, brute) <= 1e-9, "random table " + std::to_string(trial));
        const double c = t(rng);
        for (auto& [p, v] : u) v *= c;
        for (auto& [p, v] : n) v *= c;
        o.check(rel_err(harness::slowdown_factor(u, n), got) <= 1e-9, "scaling on table " + std::to_string(trial));
    }
    if (o.ok) o.detail = "3.0, 1.0, scale invariant, 1000 random tables within 1e-9";
    return o;
}

// --- shared corpus ------------------------------------------------------------

struct Corpus {
    std::vector<Bytes> lines;
    std::vector<Bytes> oracle(QueryKind q) const {
        std::vector<Bytes> out;
        switch (q) {
        case QueryKind::Identity: out = lines; break;
        case QueryKind::Projection:
            for (const auto& l : lines) out.push_back(testing::first_column(l));
            break;
        case QueryKind::Grep:
            for (const auto& l : lines) {
                if (testing::contains(l, "test")) out.push_back(l);
            }
            break;
        case QueryKind::Sample:
            for (auto i : testing::reference_sample_offsets(lines.size(), 7, 0.4)) out.push_back(lines[i]);
            break;
        }
        return out;
    }
};

const Corpus& desk_corpus() {
    static const Corpus c{testing::serialize_all(corpus::generate_corpus(corpus::CorpusSpec{}))};
    return c;
}

// --- 3 ----------------------------------------------------------------------

Outcome query_oracles() {
    Outcome o;
    const auto& c = desk_corpus();
    o.check(c.lines.size() == 10001, "corpus size");
    o.check(std::set<Bytes>(c.lines.begin(), c.lines.end()).size() == c.lines.size(),
            "corpus lines are not unique, offsets cannot be recovered from payloads");

    minilog::Broker broker;
    testing::load_topic(broker, "input", c.lines);
    int topic = 0;
    std::size_t sample_count = 0;
    for (auto q : queries::kAllQueries) {
        const auto expected = c.oracle(q);
        for (auto api : queries::kAllApis) {
            for (auto engine : {EngineKind::Tuple, EngineKind::Microbatch}) {
                const std::string out = "oracle-" + std::to_string(topic++);
                broker.create_topic({out, 1});
                queries::build_query(queries::QuerySpec{q}, api, engine, 1, {"input", c.lines.size(), out})
                    .execute(broker);
                // At parallelism 1 output order is source order, so equality of the
                // sequences means equality of the retained offsets.
                const auto got = testing::payloads(testing::read_all(broker, out));
                o.check(got == expected, std::string(queries::to_string(q)) + " " +
                                             std::string(queries::to_string(api)) + " " +
                                             std::string(to_string(engine)) + " differs from the scan oracle");
                if (q == QueryKind::Sample) sample_count = got.size();
            }
        }
    }
    o.check(c.oracle(QueryKind::Grep).size() == 30, "grep oracle size " + std::to_string(c.oracle(QueryKind::Grep).size()));
    o.check(sample_count >= 4000 - 147 && sample_count <= 4000 + 147, "sample count " + std::to_string(sample_count));
    if (o.ok) {
        o.detail = "identity 10001, projection 10001, grep 30, sample " + std::to_string(sample_count) +
                   " (reference RNG offsets)";
    }
    return o;
}

// --- 4 and 7 ------------------------------------------------------------------

struct GridRun {
    harness::ExecuteOutcome outcome;
    std::map<std::string, std::int64_t> recomputed; // output topic -> boundary difference
    std::map<std::string, std::vector<Bytes>> outputs;
};

const GridRun& equivalence_grid() {
    static const GridRun grid = [] {
        GridRun g;
        harness::BenchmarkConfig c;
        c.runs_per_setup = 1;
        c.retain_outputs = true;
        minilog::Broker broker;
        harness::phase_ingest(c, broker);
        g.outcome = harness::phase_execute(c, broker);
        for (const auto& r : g.outcome.results) {
            const auto handle = broker.topic(r.output_topic);
            const auto [first, last] = broker.boundary_timestamps(handle, 0);
            g.recomputed[r.output_topic] = last - first;
            g.outputs[r.output_topic] = testing::sorted(testing::payloads(testing::read_all(broker, r.output_topic)));
        }
        return g;
    }();
    return grid;
}

Outcome cross_equivalence() {
    Outcome o;
    const auto& g = equivalence_grid();
    o.check(g.outcome.failures.empty(),
            g.outcome.failures.empty() ? "" : "setup failed: " + g.outcome.failures.front().message);
    o.check(g.outcome.results.size() == 32, "expected 32 runs, got " + std::to_string(g.outcome.results.size()));
    std::map<QueryKind, std::vector<const harness::RunResult*>> by_query;
    for (const auto& r : g.outcome.results) by_query[r.setup.query].push_back(&r);
    std::size_t comparisons = 0;
    for (const auto& [q, runs] : by_query) {
        o.check(runs.size() == 8, std::string(queries::to_string(q)) + " has " + std::to_string(runs.size()) + " runs");
        const auto expected = testing::sorted(desk_corpus().oracle(q));
        for (const auto* a : runs) {
            o.check(g.outputs.at(a->output_topic) == expected, a->setup.label() + " differs from the oracle");
            for (const auto* b : runs) {
                o.check(g.outputs.at(a->output_topic) == g.outputs.at(b->output_topic),
                        a->setup.label() + " vs " + b->setup.label());
                ++comparisons;
            }
        }
    }
    if (o.ok) o.detail = std::to_string(comparisons) + " pairwise multiset comparisons equal";
    return o;
}

Outcome broker_metrology() {
    Outcome o;
    minilog::Broker broker;
    auto t = broker.create_topic({"stress", 1});
    {
        std::vector<std::jthread> producers;
        for (int p = 0; p < 4; ++p) {
            producers.emplace_back([&] {
                for (int i = 0; i < 2500; ++i) broker.append(t, 0, "x");
            });
        }
    }
    const auto entries = broker.read(t, 0, 0, 1'000'000);
    o.check(entries.size() == 10000, "stress length " + std::to_string(entries.size()));
    for (std::size_t i = 0; i < entries.size() && o.ok; ++i) {
        o.check(entries[i].offset == i, "gap at " + std::to_string(i));
        if (i > 0) o.check(entries[i - 1].append_ts <= entries[i].append_ts, "timestamp decreases at " + std::to_string(i));
    }
    const auto& g = equivalence_grid();
    for (const auto& r : g.outcome.results) {
        o.check(r.exec_time_ms == g.recomputed.at(r.output_topic),
                r.setup.label() + ": reported " + std::to_string(r.exec_time_ms) + " ms, log says " +
                    std::to_string(g.recomputed.at(r.output_topic)));
    }
    if (o.ok) {
        o.detail = "10000 dense offsets, non-decreasing timestamps; " + std::to_string(g.outcome.results.size()) +
                   " runs recomputed from the log";
    }
    return o;
}

// --- 5 ----------------------------------------------------------------------

Outcome plan_shapes() {
    Outcome o;
    harness::BenchmarkConfig c;
    using harness::Setup;
    const auto native_grep = harness::plan_for({EngineKind::Tuple, ApiKind::Native, QueryKind::Grep, 1}, c);
    const auto unified_grep = harness::plan_for({EngineKind::Tuple, ApiKind::Unified, QueryKind::Grep, 1}, c);
    o.check(native_grep.nodes.size() == 3, "native grep has " + std::to_string(native_grep.nodes.size()) + " nodes");
    o.check(unified_grep.nodes.size() == 7, "unified grep has " + std::to_string(unified_grep.nodes.size()) + " nodes");
    for (auto engine : {EngineKind::Tuple, EngineKind::Microbatch}) {
        for (auto q : queries::kAllQueries) {
            for (std::uint32_t p : {1u, 2u}) {
                const auto n = harness::plan_for({engine, ApiKind::Native, q, p}, c);
                const auto u = harness::plan_for({engine, ApiKind::Unified, q, p}, c);
                o.check(u.nodes.size() >= n.nodes.size() + 3,
                        "unified " + std::string(queries::to_string(q)) + " is not 3 nodes larger");
                o.check(harness::dump_plan(n) == harness::dump_plan(harness::plan_for({engine, ApiKind::Native, q, p}, c)),
                        "native dump differs between calls");
                o.check(harness::dump_plan(u) == harness::dump_plan(harness::plan_for({engine, ApiKind::Unified, q, p}, c)),
                        "unified dump differs between calls");
            }
        }
    }
    if (o.ok) o.detail = "native grep 3 nodes, unified grep 7 nodes, +3 or more for every query, dumps stable";
    return o;
}

// --- 6 ----------------------------------------------------------------------

std::size_t csv_rows(const fs::path& path) {
    std::ifstream in(path);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n == 0 ? 0 : n - 1;
}

Outcome overhead_direction() {
    Outcome o;
    harness::BenchmarkConfig c;
    c.output_dir = (fs::temp_directory_path() / ("streamlab-acceptance-" + std::to_string(::getpid()))).string();
    fs::remove_all(c.output_dir);

    const auto start = std::chrono::steady_clock::now();
    minilog::Broker broker;
    harness::phase_ingest(c, broker);
    const auto outcome = harness::phase_execute(c, broker);
    const auto report = harness::build_report(outcome.results);
    harness::emit_report(report, outcome.results, outcome.plans, c.output_dir);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    o.check(outcome.failures.empty(), outcome.failures.empty() ? "" : outcome.failures.front().message);
    o.check(outcome.results.size() == 320, "runs " + std::to_string(outcome.results.size()));
    o.check(seconds < 15 * 60, "suite took " + fmt(seconds) + " s");

    std::map<std::tuple<EngineKind, QueryKind, std::uint32_t, std::uint32_t>, std::map<ApiKind, std::uint64_t>> totals;
    for (const auto& r : outcome.results) {
        std::uint64_t sum = 0;
        for (const auto& [name, n] : r.operator_invocations) sum += n;
        totals[{r.setup.engine, r.setup.query, r.setup.parallelism, r.run_index}][r.setup.api] = sum;
    }
    for (const auto& [key, by_api] : totals) {
        o.check(by_api.size() == 2 && by_api.at(ApiKind::Unified) > by_api.at(ApiKind::Native),
                "unified invocations do not exceed native");
    }
    o.check(csv_rows(fs::path(c.output_dir) / "results.csv") == 320, "results.csv rows");
    o.check(csv_rows(fs::path(c.output_dir) / "stats.csv") == 32, "stats.csv rows");
    o.check(csv_rows(fs::path(c.output_dir) / "slowdown.csv") == 8, "slowdown.csv rows");

    std::ostringstream sfs;
    std::size_t defined = 0;
    for (const auto& row : report.slowdowns) {
        if (row.sf) ++defined;
        sfs << ' ' << to_string(row.engine) << '/' << queries::to_string(row.query) << '='
            << (row.sf ? fmt(std::round(*row.sf * 100) / 100) : "n/a");
    }
    fs::remove_all(c.output_dir);
    if (o.ok) {
        o.detail = "320 runs in " + fmt(std::round(seconds * 10) / 10) + " s, " + std::to_string(totals.size()) +
                   " run pairs with more unified invocations, sf defined for " + std::to_string(defined) + "/8:" +
                   sfs.str();
    }
    return o;
}

// --- 8 ----------------------------------------------------------------------

Outcome grouping_and_flatten() {
    using namespace unified;
    Outcome o;
    std::mt19937_64 rng(1001);
    for (int trial = 0; trial < 1000 && o.ok; ++trial) {
        const std::size_t size = 1 + rng() % 200;
        const std::size_t keys = 1 + rng() % 25;
        std::vector<KV> window;
        for (std::size_t i = 0; i < size; ++i) {
            window.push_back({"k" + std::to_string(rng() % keys), std::to_string(rng())});
        }
        std::unordered_map<Bytes, std::vector<Bytes>> oracle;
        for (const auto& kv : window) oracle[kv.key].push_back(kv.value);
        const auto groups = group_by_key_semantics(window);
        o.check(groups.size() == oracle.size(), "group count on window " + std::to_string(trial));
        std::size_t total = 0;
        for (const auto& g : groups) {
            auto it = oracle.find(g.key);
            o.check(it != oracle.end() && it->second == g.values, "values of key " + g.key);
            total += g.values.size();
        }
        o.check(total == size, "values lost in window " + std::to_string(trial));
    }

    for (int trial = 0; trial < 200 && o.ok; ++trial) {
        std::vector<Bytes> input(rng() % 60);
        for (auto& l : input) l = std::to_string(rng() % 1000) + "\tq\tt\t\t";
        Pipeline p;
        auto in = p.apply(p.root(), ReadFromLog{"input", std::nullopt});
        std::vector<PCollection> branches;
        const std::size_t k = 1 + rng() % 4;
        for (std::size_t i = 0; i < k; ++i) {
            const std::uint64_t mod = 1 + rng() % 3;
            branches.push_back(p.apply(in, ParDo{"keep" + std::to_string(i),
                                                 [mod](const Value& v, const ElementContext&, const Emit& emit) {
                                                     const auto& line = std::get<Bytes>(v);
                                                     if (std::stoul(testing::first_column(line)) % mod == 0) {
                                                         emit(KV{testing::first_column(line), line});
                                                     }
                                                 },
                                                 ElementKind::KeyValue}));
        }
        auto merged = p.apply(branches, Flatten{});
        const auto m = evaluate(p, {{"input", input}});
        std::size_t sum = 0;
        for (const auto& b : branches) sum += m.collections.at(b.id).size();
        o.check(m.collections.at(merged.id).size() == sum, "flatten case " + std::to_string(trial));
    }
    if (o.ok) o.detail = "1000 random windows match the hash-map oracle; 200 Flatten cases additive";
    return o;
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"1 table arithmetic", table_arithmetic},
        {"2 slowdown formula", slowdown_formula},
        {"3 query oracles", query_oracles},
        {"4 cross-implementation equivalence", cross_equivalence},
        {"5 plan shapes", plan_shapes},
        {"6 overhead direction", overhead_direction},
        {"7 broker metrology", broker_metrology},
        {"8 GroupByKey/Flatten", grouping_and_flatten},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.ok = false;
            o.detail = std::string("exception: ") + e.what();
        }
        std::cout << (o.ok ? "PASS" : "FAIL") << " criterion " << name << ": " << o.detail << std::endl;
        failed += o.ok ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
