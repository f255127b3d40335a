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

#include <streamlab/unified.hpp>

#include <cstring>
#include <memory>
#include <set>
#include <unordered_map>

namespace streamlab::unified {

std::string_view to_string(ElementKind kind) noexcept {
    switch (kind) {
    case ElementKind::Bytes: return "bytes";
    case ElementKind::KeyValue: return "key-value";
    case ElementKind::KeyedGroup: return "keyed-group";
    }
    return "unknown";
}

ElementKind kind_of(const Value& value) noexcept {
    return static_cast<ElementKind>(value.index());
}

// ---------------------------------------------------------------------------
// coder

namespace coder {

namespace {

template <typename T>
void put(Bytes& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

void put_str(Bytes& out, std::string_view s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.append(s);
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    std::string_view get_str() {
        const auto n = get<std::uint32_t>();
        need(n);
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    std::string_view rest() {
        auto s = bytes_.substr(pos_);
        pos_ = bytes_.size();
        return s;
    }

    void expect_end() const {
        if (pos_ != bytes_.size()) {
            throw Error(Errc::MalformedRecord, "trailing bytes in encoded element");
        }
    }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) {
            throw Error(Errc::MalformedRecord, "truncated encoded element");
        }
    }

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

} // namespace

Bytes encode_envelope(const Envelope& e) {
    Bytes out;
    out.reserve(e.topic.size() + e.key.size() + e.value.size() + 28);
    put_str(out, e.topic);
    put<std::uint64_t>(out, e.offset);
    put<std::int64_t>(out, e.timestamp);
    put_str(out, e.key);
    put_str(out, e.value);
    return out;
}

Envelope decode_envelope(std::string_view bytes) {
    Reader r(bytes);
    Envelope e;
    e.topic = r.get_str();
    e.offset = r.get<std::uint64_t>();
    e.timestamp = r.get<std::int64_t>();
    e.key = r.get_str();
    e.value = r.get_str();
    r.expect_end();
    return e;
}

Bytes encode_value(const Value& value) {
    switch (kind_of(value)) {
    case ElementKind::Bytes:
        return std::get<Bytes>(value);
    case ElementKind::KeyValue: {
        const auto& kv = std::get<KV>(value);
        Bytes out;
        out.reserve(kv.key.size() + kv.value.size() + 4);
        put_str(out, kv.key);
        out.append(kv.value);
        return out;
    }
    case ElementKind::KeyedGroup: {
        const auto& g = std::get<KeyedGroup>(value);
        Bytes out;
        put_str(out, g.key);
        put<std::uint32_t>(out, static_cast<std::uint32_t>(g.values.size()));
        for (const auto& v : g.values) put_str(out, v);
        return out;
    }
    }
    return {};
}

Value decode_value(ElementKind kind, std::string_view bytes) {
    switch (kind) {
    case ElementKind::Bytes:
        return Bytes(bytes);
    case ElementKind::KeyValue: {
        Reader r(bytes);
        KV kv;
        kv.key = r.get_str();
        kv.value = r.rest();
        return kv;
    }
    case ElementKind::KeyedGroup: {
        Reader r(bytes);
        KeyedGroup g;
        g.key = r.get_str();
        const auto n = r.get<std::uint32_t>();
        g.values.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i) g.values.emplace_back(r.get_str());
        r.expect_end();
        return g;
    }
    }
    return Bytes{};
}

} // namespace coder

// ---------------------------------------------------------------------------
// pipeline construction

Pipeline::Pipeline() {
    CollectionInfo root;
    root.collection = PCollection{0, ElementKind::Bytes, false};
    collections_.push_back(root);
}

const Pipeline::CollectionInfo& Pipeline::info(const PCollection& collection) const {
    if (collection.id >= collections_.size() || collections_[collection.id].collection != collection) {
        throw Error(Errc::TypeMismatch, "PCollection " + std::to_string(collection.id) +
                                            " does not belong to this pipeline");
    }
    return collections_[collection.id];
}

PCollection Pipeline::apply(const PCollection& input, PTransform transform) {
    return apply(std::span<const PCollection>(&input, 1), std::move(transform));
}

PCollection Pipeline::apply(std::span<const PCollection> inputs, PTransform transform) {
    if (inputs.empty()) {
        throw Error(Errc::TypeMismatch, "a transform needs at least one input");
    }
    for (const auto& in : inputs) {
        if (info(in).terminal) {
            throw Error(Errc::TypeMismatch, "WriteToLog output cannot be consumed");
        }
    }
    const bool at_root = inputs.size() == 1 && inputs.front().id == 0;
    const bool is_read = std::holds_alternative<ReadFromLog>(transform);
    if (is_read != at_root) {
        throw Error(Errc::TypeMismatch, is_read ? "ReadFromLog must be applied to the pipeline root"
                                                : "only ReadFromLog may be applied to the pipeline root");
    }
    if (!std::holds_alternative<Flatten>(transform) && inputs.size() != 1) {
        throw Error(Errc::TypeMismatch, "only Flatten accepts multiple inputs");
    }

    const ElementKind in_kind = inputs.front().element_kind;
    ElementKind out_kind = in_kind;
    bool terminal = false;
    std::visit(
        [&](const auto& t) {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, ReadFromLog>) {
                if (t.topic.empty()) throw Error(Errc::InvalidSpec, "ReadFromLog needs a topic");
                out_kind = ElementKind::Bytes;
            } else if constexpr (std::is_same_v<T, ParDo>) {
                if (!t.fn) throw Error(Errc::InvalidSpec, "ParDo '" + t.name + "' has no function");
                out_kind = t.output_kind;
            } else if constexpr (std::is_same_v<T, GroupByKey>) {
                if (in_kind != ElementKind::KeyValue) {
                    throw Error(Errc::UnkeyedGroupByKey,
                                "GroupByKey input holds " + std::string(to_string(in_kind)) + " elements");
                }
                if (!t.window || t.window->count == 0) {
                    throw Error(Errc::UnwindowedGroupByKey, "GroupByKey requires a non-empty tumbling window");
                }
                out_kind = ElementKind::KeyedGroup;
            } else if constexpr (std::is_same_v<T, Flatten>) {
                for (const auto& in : inputs) {
                    if (in.element_kind != in_kind) {
                        throw Error(Errc::TypeMismatch, "Flatten inputs differ in element kind");
                    }
                }
            } else if constexpr (std::is_same_v<T, WriteToLog>) {
                if (t.topic.empty()) throw Error(Errc::InvalidSpec, "WriteToLog needs a topic");
                if (in_kind != ElementKind::Bytes) {
                    throw Error(Errc::TypeMismatch,
                                "WriteToLog needs bytes, got " + std::string(to_string(in_kind)));
                }
                terminal = true;
            }
        },
        transform);

    CollectionInfo out;
    out.collection = PCollection{collections_.size(), out_kind, false};
    out.producer = applications_.size();
    out.terminal = terminal;
    collections_.push_back(out);

    Application app;
    app.transform = std::move(transform);
    for (const auto& in : inputs) app.inputs.push_back(in.id);
    app.output = out.collection.id;
    applications_.push_back(std::move(app));
    return out.collection;
}

// ---------------------------------------------------------------------------
// semantics

std::vector<KeyedGroup> group_by_key_semantics(std::span<const KV> window) {
    std::vector<KeyedGroup> groups;
    std::unordered_map<std::string_view, std::size_t> slot;
    for (const auto& kv : window) {
        auto [it, inserted] = slot.try_emplace(kv.key, groups.size());
        if (inserted) {
            groups.push_back(KeyedGroup{kv.key, {}});
        }
        groups[it->second].values.push_back(kv.value);
    }
    return groups;
}

namespace {

struct Item {
    ElementContext ctx;
    Value value;
};

void check_kind(const Value& v, ElementKind expected, const std::string& producer) {
    if (kind_of(v) != expected) {
        throw Error(Errc::TypeMismatch, "'" + producer + "' emitted " + std::string(to_string(kind_of(v))) +
                                            " where " + std::string(to_string(expected)) + " was declared");
    }
}

} // namespace

Materialized evaluate(const Pipeline& pipeline, const std::map<std::string, std::vector<Bytes>>& topics) {
    std::vector<std::vector<Item>> items(pipeline.collections().size());
    Materialized result;

    for (const auto& app : pipeline.applications()) {
        auto& out = items[app.output];
        std::visit(
            [&](const auto& t) {
                using T = std::decay_t<decltype(t)>;
                if constexpr (std::is_same_v<T, ReadFromLog>) {
                    auto it = topics.find(t.topic);
                    if (it == topics.end()) throw Error(Errc::UnknownTopic, "no input for '" + t.topic + "'");
                    const auto n = std::min<std::uint64_t>(t.end_offset.value_or(it->second.size()),
                                                           it->second.size());
                    for (std::uint64_t i = 0; i < n; ++i) {
                        out.push_back({ElementContext{i, 0}, it->second[i]});
                    }
                } else if constexpr (std::is_same_v<T, ParDo>) {
                    for (const auto& item : items[app.inputs.front()]) {
                        t.fn(item.value, item.ctx, [&](Value v) {
                            check_kind(v, t.output_kind, t.name);
                            out.push_back({item.ctx, std::move(v)});
                        });
                    }
                } else if constexpr (std::is_same_v<T, GroupByKey>) {
                    const auto& in = items[app.inputs.front()];
                    const std::uint64_t size = t.window->count;
                    for (std::size_t start = 0; start < in.size(); start += size) {
                        const std::size_t stop = std::min<std::size_t>(start + size, in.size());
                        std::vector<KV> window;
                        for (std::size_t i = start; i < stop; ++i) window.push_back(std::get<KV>(in[i].value));
                        for (auto& g : group_by_key_semantics(window)) {
                            out.push_back({in[start].ctx, std::move(g)});
                        }
                    }
                } else if constexpr (std::is_same_v<T, Flatten>) {
                    for (auto id : app.inputs) {
                        out.insert(out.end(), items[id].begin(), items[id].end());
                    }
                } else if constexpr (std::is_same_v<T, WriteToLog>) {
                    auto& written = result.written[t.topic];
                    for (const auto& item : items[app.inputs.front()]) {
                        written.push_back(std::get<Bytes>(item.value));
                    }
                }
            },
            app.transform);
    }

    for (std::size_t id = 1; id < items.size(); ++id) {
        auto& values = result.collections[id];
        for (auto& item : items[id]) values.push_back(std::move(item.value));
    }
    return result;
}

// ---------------------------------------------------------------------------
// translation

namespace {

using dataflow::Collector;
using dataflow::Element;

class NameAllocator {
public:
    explicit NameAllocator(std::initializer_list<std::string> reserved) : used_(reserved) {}

    std::string reserve(const std::string& base) {
        std::string name = base;
        for (int i = 2; used_.contains(name); ++i) name = base + std::to_string(i);
        used_.insert(name);
        return name;
    }

private:
    std::set<std::string> used_;
};

std::vector<const Pipeline::Application*> linear_path(const Pipeline& pipeline) {
    const auto& apps = pipeline.applications();
    std::vector<std::vector<std::size_t>> consumers(pipeline.collections().size());
    for (std::size_t i = 0; i < apps.size(); ++i) {
        if (std::holds_alternative<Flatten>(apps[i].transform) && apps[i].inputs.size() > 1) {
            throw Error(Errc::UnsupportedConstruct,
                        "multi-input Flatten needs several sources; translated jobs read one log");
        }
        for (auto in : apps[i].inputs) consumers[in].push_back(i);
    }

    std::vector<const Pipeline::Application*> path;
    std::size_t current = 0; // root
    for (;;) {
        const auto& next = consumers[current];
        if (next.empty()) break;
        if (next.size() > 1) {
            throw Error(Errc::UnsupportedConstruct, "PCollection " + std::to_string(current) +
                                                        " feeds several transforms; runners translate one path");
        }
        path.push_back(&apps[next.front()]);
        current = apps[next.front()].output;
    }
    if (path.size() != apps.size()) {
        throw Error(Errc::UnsupportedConstruct, "pipeline has transforms outside the read-to-write path");
    }
    if (path.empty() || !std::holds_alternative<ReadFromLog>(path.front()->transform)) {
        throw Error(Errc::InvalidTopology, "pipeline has no ReadFromLog");
    }
    if (!std::holds_alternative<WriteToLog>(path.back()->transform)) {
        throw Error(Errc::MissingSink, "pipeline does not end in WriteToLog");
    }
    return path;
}

dataflow::FlatMapFn user_pardo(const ParDo& pardo, ElementKind in_kind) {
    return [fn = pardo.fn, out_kind = pardo.output_kind, name = pardo.name, in_kind](
               const Element& e, Collector& out) {
        const Value in = coder::decode_value(in_kind, e.payload);
        fn(in, ElementContext{e.origin, e.timestamp}, [&](Value v) {
            check_kind(v, out_kind, name);
            out.emit({e.origin, e.timestamp, coder::encode_value(v)});
        });
    };
}

dataflow::FlatMapFactory group_by_key_lane(std::uint64_t window) {
    return [window] {
        struct State {
            std::vector<KV> buffer;
            std::uint64_t origin = 0;
            minilog::TimestampMs timestamp = 0;
        };
        auto state = std::make_shared<State>();
        auto flush = [state](Collector& out) {
            for (auto& g : group_by_key_semantics(state->buffer)) {
                out.emit({state->origin, state->timestamp, coder::encode_value(g)});
            }
            state->buffer.clear();
        };
        dataflow::FlatMapLane lane;
        lane.process = [state, window, flush](const Element& e, Collector& out) {
            if (state->buffer.empty()) {
                state->origin = e.origin;
                state->timestamp = e.timestamp;
            }
            state->buffer.push_back(std::get<KV>(coder::decode_value(ElementKind::KeyValue, e.payload)));
            if (state->buffer.size() == window) flush(out);
        };
        lane.finish = [state, flush](Collector& out) {
            if (!state->buffer.empty()) flush(out);
        };
        return lane;
    };
}

} // namespace

NativeJob translate(const Pipeline& pipeline, EngineKind runner, std::uint32_t parallelism,
                    const microbatch_engine::BatchPolicy& policy) {
    if (parallelism == 0) {
        throw Error(Errc::InvalidTopology, "parallelism must be at least 1");
    }
    if (runner == EngineKind::Microbatch) {
        policy.validate();
    }
    const auto path = linear_path(pipeline);
    const auto& read = std::get<ReadFromLog>(path.front()->transform);
    if (!read.end_offset) {
        throw Error(Errc::InvalidSpec, "ReadFromLog on '" + read.topic + "' needs an end offset to translate");
    }

    dataflow::TopologyBuilder builder(read.topic, *read.end_offset, "UnknownRawPTransform");
    NameAllocator names{"UnknownRawPTransform", "FlatMap", "withoutMetadata", "Values", "Serialize",
                        "WriteToLog"};

    builder.flat_map("FlatMap", [topic = read.topic](const Element& e, Collector& out) {
        coder::Envelope env{topic, e.origin, e.timestamp, Bytes{}, e.payload};
        out.emit({e.origin, e.timestamp, coder::encode_envelope(env)});
    });
    builder.map("withoutMetadata", [](const Element& e) {
        auto env = coder::decode_envelope(e.payload);
        return coder::encode_value(KV{std::move(env.key), std::move(env.value)});
    });
    builder.map("Values", [](const Element& e) {
        return std::get<KV>(coder::decode_value(ElementKind::KeyValue, e.payload)).value;
    });

    for (std::size_t i = 1; i + 1 < path.size(); ++i) {
        const auto& app = *path[i];
        const ElementKind in_kind = pipeline.collections()[app.inputs.front()].collection.element_kind;
        if (const auto* pardo = std::get_if<ParDo>(&app.transform)) {
            builder.flat_map(names.reserve(pardo->name.empty() ? "ParDo" : pardo->name),
                             user_pardo(*pardo, in_kind));
        } else if (const auto* gbk = std::get_if<GroupByKey>(&app.transform)) {
            if (runner == EngineKind::Microbatch && gbk->window->count > policy.max_batch_size) {
                throw Error(Errc::UnsupportedConstruct,
                            "GroupByKey window of " + std::to_string(gbk->window->count) +
                                " exceeds the micro-batch size " + std::to_string(policy.max_batch_size));
            }
            builder.stateful_flat_map(names.reserve("GroupByKey"), group_by_key_lane(gbk->window->count));
        } else if (std::holds_alternative<Flatten>(app.transform)) {
            builder.flat_map(names.reserve("Flatten"), [](const Element& e, Collector& out) { out.emit(e); });
        } else {
            throw Error(Errc::UnsupportedConstruct, "read or write in the middle of a pipeline");
        }
    }

    builder.map("Serialize", [](const Element& e) {
        return Bytes(std::get<Bytes>(coder::decode_value(ElementKind::Bytes, e.payload)));
    });
    builder.sink_write(std::get<WriteToLog>(path.back()->transform).topic, "WriteToLog");

    NativeJob job;
    job.engine = runner;
    job.topology = builder.finalize();
    job.parallelism = parallelism;
    job.batch_policy = policy;
    return job;
}

} // namespace streamlab::unified
