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

// Synthetic search-log workload and the data sender that loads it into a
// broker topic.

#include <streamlab/minilog.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace streamlab::corpus {

/// One row of a search query log: user, query, issue time and, when the user
/// clicked a result, the result's rank and URL.
struct SearchLogRecord {
    std::string user_id;
    std::string query_text;
    std::string query_time; // "YYYY-MM-DD HH:MM:SS"
    std::optional<std::uint32_t> click_rank;
    std::optional<std::string> click_url;

    bool operator==(const SearchLogRecord&) const = default;
};

inline constexpr std::uint64_t kReferenceRecords = 1'000'001;
inline constexpr std::uint64_t kReferenceGrepMatches = 3'003;
inline constexpr std::uint64_t kDeskScaleRecords = 10'001;

/// round(n_records * 3003 / 1000001), halves rounded up.
std::uint64_t default_grep_match_count(std::uint64_t n_records);

struct CorpusSpec {
    std::uint64_t n_records = kDeskScaleRecords;
    std::string grep_needle = "test";
    std::optional<std::uint64_t> grep_match_count; // empty: default_grep_match_count
    std::uint64_t rng_seed = 42;

    std::uint64_t effective_match_count() const;
    void validate() const;
};

/// Pure function of `spec`. Exactly effective_match_count() rows carry the
/// needle in their query text; no other row contains it in any column.
std::vector<SearchLogRecord> generate_corpus(const CorpusSpec& spec);

/// Five tab-separated columns; absent optionals are empty columns.
Bytes serialize_record(const SearchLogRecord& record);

/// Inverse of serialize_record. Throws MalformedRecord naming the column count.
SearchLogRecord parse_record(std::string_view line);

struct IngestSummary {
    std::uint64_t count = 0;
    minilog::TimestampMs first_ts = 0;
    minilog::TimestampMs last_ts = 0;
};

/// Appends every record in corpus order to partition 0 of `topic`.
/// `records_per_second` empty means unlimited. The topic must be empty.
IngestSummary send(std::span<const SearchLogRecord> corpus, minilog::Broker& broker,
                   const minilog::TopicHandle& topic, std::optional<double> records_per_second,
                   minilog::AckMode ack = minilog::AckMode::Confirmed);

/// Newline-delimited serialized records, byte-identical to the payloads `send` appends.
void export_corpus(std::span<const SearchLogRecord> corpus, std::ostream& out);

} // namespace streamlab::corpus
