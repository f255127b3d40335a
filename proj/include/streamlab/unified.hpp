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

// Engine-independent pipeline model and its runners.
//
// A Pipeline is a DAG of transform applications over PCollections. It is
// either evaluated directly in memory (the reference semantics) or
// translated by a runner into a native topology for one of the two engines.
// Translation always wraps user transforms in the log-connector chain
//
//   UnknownRawPTransform -> FlatMap -> withoutMetadata -> Values
//     -> <user transforms> -> Serialize -> WriteToLog
//
// and never fuses adjacent wrapper stages: each is its own operator node
// with its own per-element encode/decode.

#include <streamlab/job.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace streamlab::unified {

enum class ElementKind { Bytes, KeyValue, KeyedGroup };

std::string_view to_string(ElementKind kind) noexcept;

struct KV {
    Bytes key;
    Bytes value;
    bool operator==(const KV&) const = default;
};

struct KeyedGroup {
    Bytes key;
    std::vector<Bytes> values;
    bool operator==(const KeyedGroup&) const = default;
};

using Value = std::variant<Bytes, KV, KeyedGroup>;

ElementKind kind_of(const Value& value) noexcept;

/// Per-element metadata visible to a DoFn: the source offset the element
/// descends from and its source timestamp.
struct ElementContext {
    std::uint64_t origin = 0;
    minilog::TimestampMs timestamp = 0;
};

using Emit = std::function<void(Value)>;
using DoFn = std::function<void(const Value&, const ElementContext&, const Emit&)>;

struct WindowSpec {
    std::uint64_t count = 1; // tumbling window of `count` elements

    static WindowSpec tumbling_count(std::uint64_t n) { return WindowSpec{n}; }
};

struct ReadFromLog {
    std::string topic;
    std::optional<minilog::Offset> end_offset;
};

struct ParDo {
    std::string name;
    DoFn fn;
    ElementKind output_kind = ElementKind::Bytes;
};

struct GroupByKey {
    std::optional<WindowSpec> window;
};

struct Flatten {};

struct WriteToLog {
    std::string topic;
};

using PTransform = std::variant<ReadFromLog, ParDo, GroupByKey, Flatten, WriteToLog>;

struct PCollection {
    std::size_t id = 0;
    ElementKind element_kind = ElementKind::Bytes;
    bool bounded = false;

    bool operator==(const PCollection&) const = default;
};

class Pipeline {
public:
    struct Application {
        PTransform transform;
        std::vector<std::size_t> inputs;
        std::size_t output = 0;
    };

    struct CollectionInfo {
        PCollection collection;
        std::optional<std::size_t> producer; // empty for the root
        bool terminal = false;               // output of WriteToLog
    };

    Pipeline();

    /// Pseudo-collection that only ReadFromLog may consume.
    PCollection root() const { return collections_.front().collection; }

    PCollection apply(const PCollection& input, PTransform transform);
    /// Multi-input form, used by Flatten.
    PCollection apply(std::span<const PCollection> inputs, PTransform transform);

    const std::vector<Application>& applications() const noexcept { return applications_; }
    const std::vector<CollectionInfo>& collections() const noexcept { return collections_; }

private:
    const CollectionInfo& info(const PCollection& collection) const;

    std::vector<Application> applications_;
    std::vector<CollectionInfo> collections_;
};

/// One output per distinct key, in order of first appearance; each value
/// list keeps that key's values in arrival order.
std::vector<KeyedGroup> group_by_key_semantics(std::span<const KV> window);

struct Materialized {
    std::map<std::size_t, std::vector<Value>> collections;
    std::map<std::string, std::vector<Bytes>> written;
};

/// Reference in-memory evaluation. `topics` supplies the contents each
/// ReadFromLog sees; element i of a topic has origin i.
Materialized evaluate(const Pipeline& pipeline, const std::map<std::string, std::vector<Bytes>>& topics);

/// Runner translation into a native job. Supports a single path from
/// ReadFromLog to WriteToLog; GroupByKey windows on the micro-batch runner
/// may not exceed the batch size.
NativeJob translate(const Pipeline& pipeline, EngineKind runner, std::uint32_t parallelism,
                    const microbatch_engine::BatchPolicy& policy = {});

/// Binary element encodings used between translated stages.
namespace coder {

struct Envelope {
    std::string topic;
    std::uint64_t offset = 0;
    minilog::TimestampMs timestamp = 0;
    Bytes key;
    Bytes value;
    bool operator==(const Envelope&) const = default;
};

Bytes encode_envelope(const Envelope& envelope);
Envelope decode_envelope(std::string_view bytes);

Bytes encode_value(const Value& value);
Value decode_value(ElementKind kind, std::string_view bytes);

} // namespace coder

} // namespace streamlab::unified
