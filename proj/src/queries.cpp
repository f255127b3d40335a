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

#include <streamlab/queries.hpp>

namespace streamlab::queries {

std::string_view to_string(QueryKind kind) noexcept {
    switch (kind) {
    case QueryKind::Identity: return "identity";
    case QueryKind::Sample: return "sample";
    case QueryKind::Projection: return "projection";
    case QueryKind::Grep: return "grep";
    }
    return "unknown";
}

std::string_view to_string(ApiKind kind) noexcept {
    return kind == ApiKind::Native ? "native" : "unified";
}

QueryKind parse_query_kind(std::string_view text) {
    for (auto kind : kAllQueries) {
        if (to_string(kind) == text) return kind;
    }
    throw Error(Errc::Config, "unknown query '" + std::string(text) +
                                  "' (expected identity|sample|projection|grep)");
}

ApiKind parse_api_kind(std::string_view text) {
    for (auto kind : kAllApis) {
        if (to_string(kind) == text) return kind;
    }
    throw Error(Errc::Config, "unknown api kind '" + std::string(text) + "' (expected native|unified)");
}

void QuerySpec::validate() const {
    if (!(sample_probability > 0.0 && sample_probability <= 1.0)) {
        throw Error(Errc::InvalidCombination, "sample probability must be in (0, 1]");
    }
    if (grep_needle.empty()) {
        throw Error(Errc::InvalidCombination, "grep needle must not be empty");
    }
}

Bytes identity_fn(std::string_view payload) {
    return Bytes(payload);
}

double sample_draw(std::uint64_t seed, std::uint64_t index) noexcept {
    // splitmix64 finalizer over the (seed, index) counter.
    std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

std::optional<Bytes> sample_fn(std::string_view payload, std::uint64_t index, std::uint64_t seed,
                               double probability) {
    if (sample_draw(seed, index) < probability) {
        return Bytes(payload);
    }
    return std::nullopt;
}

Bytes projection_fn(std::string_view payload) {
    std::size_t tabs = 0;
    for (char c : payload) tabs += c == '\t';
    if (tabs != 4) {
        throw Error(Errc::MalformedRecord, "expected 5 tab-separated columns, found " + std::to_string(tabs + 1));
    }
    return Bytes(payload.substr(0, payload.find('\t')));
}

std::optional<Bytes> grep_fn(std::string_view payload, std::string_view needle) {
    if (payload.find(needle) != std::string_view::npos) {
        return Bytes(payload);
    }
    return std::nullopt;
}

dataflow::Topology native_topology(const QuerySpec& spec, const JobIo& io) {
    dataflow::TopologyBuilder builder(io.input_topic, io.end_offset);
    switch (spec.kind) {
    case QueryKind::Identity:
        break;
    case QueryKind::Sample:
        builder.filter("sample", [seed = spec.rng_seed, p = spec.sample_probability](const dataflow::Element& e) {
            return sample_draw(seed, e.origin) < p;
        });
        break;
    case QueryKind::Projection:
        builder.map("projection", [](const dataflow::Element& e) { return projection_fn(e.payload); });
        break;
    case QueryKind::Grep:
        builder.filter("filter", [needle = spec.grep_needle](const dataflow::Element& e) {
            return e.payload.find(needle) != std::string::npos;
        });
        break;
    }
    builder.sink_write(io.output_topic, "sink");
    return builder.finalize();
}

unified::Pipeline unified_pipeline(const QuerySpec& spec, const JobIo& io) {
    using unified::ElementContext;
    using unified::Emit;
    using unified::Value;

    unified::Pipeline pipeline;
    auto records = pipeline.apply(pipeline.root(), unified::ReadFromLog{io.input_topic, io.end_offset});
    switch (spec.kind) {
    case QueryKind::Identity:
        break;
    case QueryKind::Sample:
        records = pipeline.apply(
            records, unified::ParDo{"sample",
                                    [seed = spec.rng_seed, p = spec.sample_probability](
                                        const Value& v, const ElementContext& ctx, const Emit& emit) {
                                        if (auto out = sample_fn(std::get<Bytes>(v), ctx.origin, seed, p)) {
                                            emit(std::move(*out));
                                        }
                                    }});
        break;
    case QueryKind::Projection:
        records = pipeline.apply(records, unified::ParDo{"projection", [](const Value& v, const ElementContext&,
                                                                          const Emit& emit) {
                                     emit(projection_fn(std::get<Bytes>(v)));
                                 }});
        break;
    case QueryKind::Grep:
        records = pipeline.apply(
            records, unified::ParDo{"grep", [needle = spec.grep_needle](const Value& v, const ElementContext&,
                                                                        const Emit& emit) {
                                        if (auto out = grep_fn(std::get<Bytes>(v), needle)) {
                                            emit(std::move(*out));
                                        }
                                    }});
        break;
    }
    pipeline.apply(records, unified::WriteToLog{io.output_topic});
    return pipeline;
}

NativeJob build_query(const QuerySpec& spec, ApiKind api, EngineKind engine, std::uint32_t parallelism,
                      const JobIo& io, const microbatch_engine::BatchPolicy& policy) {
    spec.validate();
    if (parallelism == 0) {
        throw Error(Errc::InvalidCombination, "parallelism must be at least 1");
    }
    if (engine == EngineKind::Microbatch) {
        policy.validate();
    }
    if (api == ApiKind::Unified) {
        return unified::translate(unified_pipeline(spec, io), engine, parallelism, policy);
    }
    NativeJob job;
    job.engine = engine;
    job.topology = native_topology(spec, io);
    job.parallelism = parallelism;
    job.batch_policy = policy;
    return job;
}

} // namespace streamlab::queries
