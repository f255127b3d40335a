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

#include "test_support.hpp"

#include <streamlab/corpus.hpp>

#include <gtest/gtest.h>

#include <functional>
#include <random>
#include <sstream>

namespace streamlab::corpus {
namespace {

using testing::contains;

std::size_t count_matches(const std::vector<SearchLogRecord>& records, std::string_view needle) {
    std::size_t n = 0;
    for (const auto& r : records) n += contains(r.query_text, needle) ? 1 : 0;
    return n;
}

TEST(CorpusTest, DefaultMatchCountScalesReferenceRatio) {
    EXPECT_EQ(default_grep_match_count(1'000'001), 3003u);
    EXPECT_EQ(default_grep_match_count(10'001), 30u); // 30.03 rounds down
    EXPECT_EQ(default_grep_match_count(1), 0u);
    // round(n * 3003 / 1000001) evaluated in floating point.
    for (std::uint64_t n : {0ull, 166ull, 167ull, 500'000ull, 2'000'000ull}) {
        EXPECT_EQ(default_grep_match_count(n),
                  static_cast<std::uint64_t>(std::llround(static_cast<double>(n) * 3003.0 / 1000001.0)))
            << n;
    }
}

TEST(CorpusTest, ReferenceScaleHas3003Matches) {
    CorpusSpec spec;
    spec.n_records = kReferenceRecords;
    const auto records = generate_corpus(spec);
    ASSERT_EQ(records.size(), kReferenceRecords);
    EXPECT_EQ(count_matches(records, "test"), 3003u);
}

TEST(CorpusTest, DeskScaleDefaultHas30Matches) {
    const auto records = generate_corpus(CorpusSpec{});
    ASSERT_EQ(records.size(), 10001u);
    EXPECT_EQ(count_matches(records, "test"), 30u);
}

TEST(CorpusTest, SingleRecordNoMatches) {
    CorpusSpec spec;
    spec.n_records = 1;
    spec.grep_match_count = 0;
    const auto records = generate_corpus(spec);
    ASSERT_EQ(records.size(), 1u);
    EXPECT_EQ(count_matches(records, "test"), 0u);
}

TEST(CorpusTest, ExplicitMatchCountAndNeedle) {
    CorpusSpec spec;
    spec.n_records = 500;
    spec.grep_needle = "car";
    spec.grep_match_count = 77;
    EXPECT_EQ(count_matches(generate_corpus(spec), "car"), 77u);
    spec.grep_match_count = 500;
    EXPECT_EQ(count_matches(generate_corpus(spec), "car"), 500u);
}

TEST(CorpusTest, InvalidSpecsRejected) {
    CorpusSpec spec;
    spec.n_records = 0;
    EXPECT_THROW(generate_corpus(spec), Error);
    spec = {};
    spec.grep_match_count = spec.n_records + 1;
    EXPECT_THROW(generate_corpus(spec), Error);
    spec = {};
    spec.grep_needle = "";
    EXPECT_THROW(generate_corpus(spec), Error);
}

TEST(CorpusTest, GenerationIsDeterministic) {
    auto hash_of = [](const CorpusSpec& spec) {
        std::ostringstream out;
        export_corpus(generate_corpus(spec), out);
        return std::hash<std::string>{}(out.str());
    };
    CorpusSpec spec;
    EXPECT_EQ(hash_of(spec), hash_of(spec));
    CorpusSpec other = spec;
    other.rng_seed = 43;
    EXPECT_NE(hash_of(spec), hash_of(other));
}

// Every non-planted row is free of the needle anywhere in the serialized line,
// checked for several needles and seeds.
TEST(CorpusPropertyTest, NeedleIsolation) {
    for (const std::string needle : {"test", "a", "com", "zz"}) {
        for (std::uint64_t seed : {1, 2, 3}) {
            CorpusSpec spec;
            spec.n_records = 3000;
            spec.grep_needle = needle;
            spec.grep_match_count = 25;
            spec.rng_seed = seed;
            const auto records = generate_corpus(spec);
            std::size_t lines_with_needle = 0;
            for (const auto& r : records) {
                if (contains(serialize_record(r), needle)) ++lines_with_needle;
            }
            EXPECT_EQ(lines_with_needle, 25u) << needle << " seed " << seed;
        }
    }
}

TEST(CorpusTest, SchemaShape) {
    const auto records = generate_corpus(CorpusSpec{});
    std::size_t with_rank = 0;
    for (const auto& r : records) {
        ASSERT_FALSE(r.user_id.empty());
        ASSERT_TRUE(std::all_of(r.user_id.begin(), r.user_id.end(), ::isdigit));
        ASSERT_EQ(r.query_time.size(), 19u);
        ASSERT_EQ(r.query_text.find_first_of("\t\n"), std::string::npos);
        ASSERT_EQ(r.click_rank.has_value(), r.click_url.has_value());
        if (r.click_rank) {
            ASSERT_GT(*r.click_rank, 0u);
            ++with_rank;
        }
        const auto line = serialize_record(r);
        ASSERT_EQ(std::count(line.begin(), line.end(), '\t'), 4);
    }
    // About half the rows carry the optional columns.
    EXPECT_GT(with_rank, 4000u);
    EXPECT_LT(with_rank, 6000u);
}

TEST(SerializeTest, OptionalColumnsEmpty) {
    SearchLogRecord r{"100", "flowers", "2006-03-01 10:00:00", std::nullopt, std::nullopt};
    EXPECT_EQ(serialize_record(r), "100\tflowers\t2006-03-01 10:00:00\t\t");
    EXPECT_EQ(parse_record("100\tflowers\t2006-03-01 10:00:00\t\t"), r);
}

TEST(SerializeTest, AllColumnsPresent) {
    SearchLogRecord r{"7", "cheap flights", "2006-04-02 08:15:00", 2u, std::string("u.com")};
    const auto line = serialize_record(r);
    EXPECT_EQ(line, "7\tcheap flights\t2006-04-02 08:15:00\t2\tu.com");
    EXPECT_EQ(std::count(line.begin(), line.end(), '\t'), 4);
    EXPECT_EQ(parse_record(line), r);
}

TEST(ParseTest, MalformedLinesReportColumnCount) {
    try {
        parse_record("a\tb\tc");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::MalformedRecord);
        EXPECT_NE(std::string(e.what()).find('3'), std::string::npos);
    }
    EXPECT_THROW(parse_record("a\tb\tc\td\te\tf"), Error);
    EXPECT_THROW(parse_record("1\tq\t2006-03-01 00:00:00\tx\tu"), Error);
    EXPECT_THROW(parse_record("1\tq\t2006-03-01 00:00:00\t0\tu"), Error);
}

TEST(SerializePropertyTest, RoundTripRandomRecords) {
    std::mt19937_64 rng(2024);
    auto random_text = [&](std::size_t min_len, std::size_t max_len) {
        static const std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789 .-_/:?&=%";
        std::string s(min_len + rng() % (max_len - min_len + 1), ' ');
        for (auto& c : s) c = alphabet[rng() % alphabet.size()];
        return s;
    };
    for (int i = 0; i < 100'000; ++i) {
        SearchLogRecord r;
        r.user_id = std::to_string(rng() % 10'000'000);
        r.query_text = random_text(0, 40);
        r.query_time = "2006-05-" + std::to_string(10 + rng() % 20) + " 12:34:56";
        if (rng() % 2) {
            r.click_rank = static_cast<std::uint32_t>(1 + rng() % 500);
            // An empty URL column reads back as absent, so present URLs are non-empty.
            r.click_url = random_text(1, 30);
        }
        ASSERT_EQ(parse_record(serialize_record(r)), r) << serialize_record(r);
    }
}

TEST(SendTest, UnlimitedRateAppendsEverythingInOrder) {
    const auto records = generate_corpus(CorpusSpec{});
    minilog::Broker broker;
    auto t = broker.create_topic({"input", 1});
    const auto summary = send(records, broker, t, std::nullopt);
    EXPECT_EQ(summary.count, 10001u);
    const auto entries = testing::read_all(broker, "input");
    ASSERT_EQ(entries.size(), 10001u);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        ASSERT_EQ(entries[i].offset, i);
        ASSERT_EQ(entries[i].payload, serialize_record(records[i]));
    }
    EXPECT_EQ(summary.first_ts, entries.front().append_ts);
    EXPECT_EQ(summary.last_ts, entries.back().append_ts);
}

TEST(SendTest, FireAndForgetIsFlushedBeforeReturn) {
    CorpusSpec spec;
    spec.n_records = 3000;
    const auto records = generate_corpus(spec);
    minilog::Broker broker;
    auto t = broker.create_topic({"input", 1});
    const auto summary = send(records, broker, t, std::nullopt, minilog::AckMode::FireAndForget);
    EXPECT_EQ(summary.count, 3000u);
    EXPECT_EQ(broker.high_water_mark(t, 0), 3000u);
}

TEST(SendTest, RateLimitIsHonored) {
    CorpusSpec spec;
    spec.n_records = 2000;
    const auto records = generate_corpus(spec);
    minilog::Broker broker;
    auto t = broker.create_topic({"input", 1});
    const auto summary = send(records, broker, t, 1000.0);
    const auto span = summary.last_ts - summary.first_ts;
    EXPECT_GE(span, 1800);
    EXPECT_LE(span, 2200);

    // No one-second window holds more than 10% above the target rate.
    const auto entries = testing::read_all(broker, "input");
    std::size_t lo = 0;
    for (std::size_t hi = 0; hi < entries.size(); ++hi) {
        while (entries[hi].append_ts - entries[lo].append_ts >= 1000) ++lo;
        ASSERT_LE(hi - lo + 1, 1100u);
    }
}

TEST(SendTest, NonEmptyTopicRejected) {
    const auto records = generate_corpus(CorpusSpec{.n_records = 10, .grep_needle = "test", .grep_match_count = 0, .rng_seed = 1});
    minilog::Broker broker;
    auto t = broker.create_topic({"input", 1});
    broker.append(t, 0, "existing");
    try {
        send(records, broker, t, std::nullopt);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NonEmptyTopic);
    }
}

TEST(ExportTest, LinesMatchBrokerPayloads) {
    CorpusSpec spec;
    spec.n_records = 50;
    const auto records = generate_corpus(spec);
    std::ostringstream out;
    export_corpus(records, out);
    std::istringstream in(out.str());
    std::string line;
    std::size_t i = 0;
    while (std::getline(in, line)) {
        ASSERT_LT(i, records.size());
        EXPECT_EQ(line, serialize_record(records[i++]));
    }
    EXPECT_EQ(i, records.size());
}

} // namespace
} // namespace streamlab::corpus
