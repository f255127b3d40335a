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

#include <streamlab/config.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>

namespace streamlab::config {

using nlohmann::json;
using harness::BenchmarkConfig;

namespace {

enum class KeyType { UInt, Double, String, Bool, UIntList, StringList, OptionalUInt, OptionalDouble };

const std::vector<std::pair<std::string, KeyType>>& key_table() {
    static const std::vector<std::pair<std::string, KeyType>> table = {
        {"corpus.n_records", KeyType::UInt},
        {"corpus.grep_needle", KeyType::String},
        {"corpus.grep_match_count", KeyType::OptionalUInt},
        {"corpus.rng_seed", KeyType::UInt},
        {"runs_per_setup", KeyType::UInt},
        {"parallelisms", KeyType::UIntList},
        {"engines", KeyType::StringList},
        {"api_kinds", KeyType::StringList},
        {"queries", KeyType::StringList},
        {"batch_policy.max_batch_size", KeyType::UInt},
        {"batch_policy.max_batch_delay_ms", KeyType::UInt},
        {"output_dir", KeyType::String},
        {"sample_probability", KeyType::Double},
        {"query_seed", KeyType::UInt},
        {"warmup", KeyType::UInt},
        {"ingest_rate", KeyType::OptionalDouble},
        {"retain_outputs", KeyType::Bool},
    };
    return table;
}

KeyType type_of(std::string_view key) {
    for (const auto& [k, t] : key_table()) {
        if (k == key) return t;
    }
    throw Error(Errc::Config, "unknown config key '" + std::string(key) + "'");
}

std::uint64_t as_uint(const json& v, const std::string& key) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        throw Error(Errc::Config, "key '" + key + "' expects a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

std::uint32_t as_u32(const json& v, const std::string& key) {
    const auto n = as_uint(v, key);
    if (n > UINT32_MAX) throw Error(Errc::Config, "key '" + key + "' is out of range");
    return static_cast<std::uint32_t>(n);
}

std::vector<std::string> as_string_list(const json& v, const std::string& key) {
    if (!v.is_array()) throw Error(Errc::Config, "key '" + key + "' expects a list of strings");
    std::vector<std::string> out;
    for (const auto& item : v) {
        if (!item.is_string()) throw Error(Errc::Config, "key '" + key + "' expects a list of strings");
        out.push_back(item.get<std::string>());
    }
    return out;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const json& v, const std::string& key, Parse parse) {
    std::vector<T> out;
    for (const auto& s : as_string_list(v, key)) {
        try {
            out.push_back(parse(s));
        } catch (const Error& e) {
            throw Error(Errc::Config, "key '" + key + "': " + e.what());
        }
    }
    return out;
}

} // namespace

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> out;
        for (const auto& [k, t] : key_table()) out.push_back(k);
        return out;
    }();
    return keys;
}

json to_json(const BenchmarkConfig& c) {
    json doc = json::object();
    doc["corpus.n_records"] = c.corpus.n_records;
    doc["corpus.grep_needle"] = c.corpus.grep_needle;
    doc["corpus.grep_match_count"] = c.corpus.effective_match_count();
    doc["corpus.rng_seed"] = c.corpus.rng_seed;
    doc["runs_per_setup"] = c.runs_per_setup;
    doc["parallelisms"] = c.parallelisms;
    json engines = json::array();
    for (auto e : c.engines) engines.push_back(std::string(to_string(e)));
    doc["engines"] = engines;
    json apis = json::array();
    for (auto a : c.api_kinds) apis.push_back(std::string(queries::to_string(a)));
    doc["api_kinds"] = apis;
    json qs = json::array();
    for (auto q : c.queries) qs.push_back(std::string(queries::to_string(q)));
    doc["queries"] = qs;
    doc["batch_policy.max_batch_size"] = c.batch_policy.max_batch_size;
    doc["batch_policy.max_batch_delay_ms"] = c.batch_policy.max_batch_delay_ms;
    doc["output_dir"] = c.output_dir;
    doc["sample_probability"] = c.sample_probability;
    doc["query_seed"] = c.query_seed;
    doc["warmup"] = c.warmup;
    doc["ingest_rate"] = c.ingest_rate ? json(*c.ingest_rate) : json(nullptr);
    doc["retain_outputs"] = c.retain_outputs;
    return doc;
}

BenchmarkConfig from_json(const json& doc, BenchmarkConfig c) {
    if (!doc.is_object()) {
        throw Error(Errc::Config, "config must be a JSON object of flat keys");
    }
    for (const auto& [key, v] : doc.items()) {
        type_of(key); // rejects unknown keys
        if (key == "corpus.n_records") {
            c.corpus.n_records = as_uint(v, key);
        } else if (key == "corpus.grep_needle") {
            if (!v.is_string()) throw Error(Errc::Config, "key '" + key + "' expects a string");
            c.corpus.grep_needle = v.get<std::string>();
        } else if (key == "corpus.grep_match_count") {
            c.corpus.grep_match_count = v.is_null() ? std::nullopt : std::optional(as_uint(v, key));
        } else if (key == "corpus.rng_seed") {
            c.corpus.rng_seed = as_uint(v, key);
        } else if (key == "runs_per_setup") {
            c.runs_per_setup = as_u32(v, key);
        } else if (key == "parallelisms") {
            if (!v.is_array()) throw Error(Errc::Config, "key '" + key + "' expects a list of integers");
            c.parallelisms.clear();
            for (const auto& p : v) c.parallelisms.push_back(as_u32(p, key));
        } else if (key == "engines") {
            c.engines = parse_list<EngineKind>(v, key, parse_engine_kind);
        } else if (key == "api_kinds") {
            c.api_kinds = parse_list<queries::ApiKind>(v, key, queries::parse_api_kind);
        } else if (key == "queries") {
            c.queries = parse_list<queries::QueryKind>(v, key, queries::parse_query_kind);
        } else if (key == "batch_policy.max_batch_size") {
            c.batch_policy.max_batch_size = as_uint(v, key);
        } else if (key == "batch_policy.max_batch_delay_ms") {
            c.batch_policy.max_batch_delay_ms = static_cast<minilog::TimestampMs>(as_uint(v, key));
        } else if (key == "output_dir") {
            if (!v.is_string()) throw Error(Errc::Config, "key '" + key + "' expects a string");
            c.output_dir = v.get<std::string>();
        } else if (key == "sample_probability") {
            if (!v.is_number()) throw Error(Errc::Config, "key '" + key + "' expects a number");
            c.sample_probability = v.get<double>();
        } else if (key == "query_seed") {
            c.query_seed = as_uint(v, key);
        } else if (key == "warmup") {
            c.warmup = as_u32(v, key);
        } else if (key == "ingest_rate") {
            if (v.is_null()) {
                c.ingest_rate.reset();
            } else if (v.is_number()) {
                c.ingest_rate = v.get<double>();
            } else {
                throw Error(Errc::Config, "key '" + key + "' expects a number or null");
            }
        } else if (key == "retain_outputs") {
            if (!v.is_boolean()) throw Error(Errc::Config, "key '" + key + "' expects a boolean");
            c.retain_outputs = v.get<bool>();
        }
    }
    return c;
}

BenchmarkConfig load_file(const std::filesystem::path& path, BenchmarkConfig base) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::Io, "cannot open config file " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(Errc::Config, path.string() + ": " + e.what());
    }
    return from_json(doc, std::move(base));
}

json parse_flag_value(std::string_view key, std::string_view text) {
    const auto fail = [&](const char* expected) {
        return Error(Errc::Config, "flag --" + std::string(key) + " expects " + expected + ", got '" +
                                       std::string(text) + "'");
    };
    const auto parse_uint = [&](std::string_view s) {
        std::uint64_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size()) throw fail("a non-negative integer");
        return v;
    };
    const auto parse_double = [&](std::string_view s) {
        double v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size()) throw fail("a number");
        return v;
    };
    const auto items = [&] {
        std::vector<std::string_view> out;
        std::size_t start = 0;
        for (;;) {
            const auto comma = text.find(',', start);
            out.push_back(text.substr(start, comma == std::string_view::npos ? comma : comma - start));
            if (comma == std::string_view::npos) return out;
            start = comma + 1;
        }
    };

    switch (type_of(key)) {
    case KeyType::UInt:
        return parse_uint(text);
    case KeyType::Double:
        return parse_double(text);
    case KeyType::String:
        return std::string(text);
    case KeyType::Bool:
        if (text == "true" || text == "1") return true;
        if (text == "false" || text == "0") return false;
        throw fail("true or false");
    case KeyType::OptionalUInt:
        if (text == "default" || text.empty()) return nullptr;
        return parse_uint(text);
    case KeyType::OptionalDouble:
        if (text == "unlimited" || text.empty()) return nullptr;
        return parse_double(text);
    case KeyType::UIntList: {
        json list = json::array();
        for (auto s : items()) list.push_back(parse_uint(s));
        return list;
    }
    case KeyType::StringList: {
        json list = json::array();
        for (auto s : items()) list.push_back(std::string(s));
        return list;
    }
    }
    return nullptr;
}

std::string fingerprint(const BenchmarkConfig& config) {
    const std::string dump = to_json(config).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace streamlab::config
