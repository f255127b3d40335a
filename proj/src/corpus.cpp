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

#include <streamlab/corpus.hpp>

#include <array>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

namespace streamlab::corpus {

namespace {

constexpr std::array<std::string_view, 120> kVocabulary = {
    "flowers",  "weather",  "recipes",  "cheap",    "flights",  "hotels",   "games",    "music",
    "lyrics",   "movies",   "news",     "sports",   "football", "scores",   "maps",     "directions",
    "bank",     "online",   "credit",   "card",     "jobs",     "careers",  "school",   "college",
    "state",    "county",   "city",     "florida",  "texas",    "ohio",     "california", "york",
    "pictures", "photos",   "free",     "download", "software", "windows",  "computer", "laptop",
    "dogs",     "cats",     "puppies",  "horse",    "garden",   "home",     "depot",    "furniture",
    "cars",     "used",     "ford",     "honda",    "toyota",   "parts",    "auto",     "insurance",
    "health",   "medical",  "doctor",   "hospital", "diet",     "weight",   "loss",     "fitness",
    "wedding",  "dress",    "shoes",    "jewelry",  "gifts",    "birthday", "party",    "ideas",
    "history",  "war",      "civil",    "american", "airlines", "travel",   "vacation", "beach",
    "rental",   "apartment", "real",    "estate",   "mortgage", "rates",    "loan",     "tax",
    "forms",    "irs",      "library",  "public",   "records",  "court",    "police",   "fire",
    "church",   "baptist",  "university", "ebay",    "tickets", "concert",  "tour",     "dates",
    "baseball", "basketball", "golf",   "fishing",  "hunting",  "camping",  "lake",     "river",
    "mountain", "park",     "zoo",      "museum",   "art",      "craft",    "quilt",    "paint",
};

constexpr std::array<std::string_view, 4> kNeedleSuffixes = {"", "ing", "s", "er"};
constexpr int kMaxAttempts = 1000;

// Bounded draw from the raw 64-bit stream. std::uniform_int_distribution is
// implementation-defined, so it cannot back a bit-reproducible corpus.
std::uint64_t draw(std::mt19937_64& rng, std::uint64_t bound) {
    return rng() % bound;
}

std::vector<std::string_view> usable_vocabulary(std::string_view needle) {
    std::vector<std::string_view> words;
    for (auto w : kVocabulary) {
        if (w.find(needle) == std::string_view::npos) {
            words.push_back(w);
        }
    }
    return words;
}

std::string make_query_time(std::mt19937_64& rng) {
    // 2006-03-01 00:00:00 through 2006-05-31 23:59:59.
    constexpr std::array<std::pair<int, int>, 3> kMonths = {{{3, 31}, {4, 30}, {5, 31}}};
    std::uint64_t day = draw(rng, 92);
    const std::uint64_t second_of_day = draw(rng, 86400);
    int month = 0;
    for (auto [m, days] : kMonths) {
        if (day < static_cast<std::uint64_t>(days)) {
            month = m;
            break;
        }
        day -= days;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "2006-%02d-%02d %02d:%02d:%02d", month, static_cast<int>(day + 1),
                  static_cast<int>(second_of_day / 3600), static_cast<int>(second_of_day / 60 % 60),
                  static_cast<int>(second_of_day % 60));
    return buf;
}

std::string make_query_text(std::mt19937_64& rng, std::span<const std::string_view> words,
                            std::string_view needle, bool plant) {
    const std::uint64_t n_words = 1 + draw(rng, 4);
    const std::uint64_t needle_pos = plant ? draw(rng, n_words + 1) : n_words + 1;
    std::string text;
    for (std::uint64_t i = 0; i <= n_words; ++i) {
        if (i == needle_pos) {
            if (!text.empty()) text += ' ';
            text += needle;
            text += kNeedleSuffixes[draw(rng, kNeedleSuffixes.size())];
        }
        if (i == n_words) break;
        if (!text.empty()) text += ' ';
        text += words[draw(rng, words.size())];
    }
    return text;
}

SearchLogRecord make_record(std::mt19937_64& rng, std::span<const std::string_view> words,
                            std::string_view needle, bool plant) {
    SearchLogRecord r;
    r.user_id = std::to_string(100 + draw(rng, 25'000'000));
    r.query_text = make_query_text(rng, words, needle, plant);
    r.query_time = make_query_time(rng);
    if (draw(rng, 2) == 0) {
        r.click_rank = static_cast<std::uint32_t>(1 + draw(rng, 10));
        r.click_url = "http://www." + std::string(words[draw(rng, words.size())]) + ".com";
    }
    return r;
}

bool contains(std::string_view hay, std::string_view needle) {
    return hay.find(needle) != std::string_view::npos;
}

bool other_columns_clean(const SearchLogRecord& r, std::string_view needle) {
    return !contains(r.user_id, needle) && !contains(r.query_time, needle) &&
           !contains(r.click_url.value_or(""), needle) &&
           !contains(r.click_rank ? std::to_string(*r.click_rank) : "", needle);
}

} // namespace

std::uint64_t default_grep_match_count(std::uint64_t n_records) {
    return (2 * n_records * kReferenceGrepMatches + kReferenceRecords) / (2 * kReferenceRecords);
}

std::uint64_t CorpusSpec::effective_match_count() const {
    return grep_match_count.value_or(default_grep_match_count(n_records));
}

void CorpusSpec::validate() const {
    if (n_records == 0) {
        throw Error(Errc::InvalidSpec, "n_records must be positive");
    }
    if (grep_needle.empty()) {
        throw Error(Errc::InvalidSpec, "grep_needle must not be empty");
    }
    if (grep_needle.find_first_of("\t\n") != std::string::npos) {
        throw Error(Errc::InvalidSpec, "grep_needle must not contain tabs or newlines");
    }
    if (effective_match_count() > n_records) {
        throw Error(Errc::InvalidSpec, "grep_match_count " + std::to_string(effective_match_count()) +
                                           " exceeds n_records " + std::to_string(n_records));
    }
}

std::vector<SearchLogRecord> generate_corpus(const CorpusSpec& spec) {
    spec.validate();
    const auto words = usable_vocabulary(spec.grep_needle);
    if (words.empty()) {
        throw Error(Errc::InvalidSpec, "needle '" + spec.grep_needle + "' occurs in every vocabulary word");
    }
    std::mt19937_64 rng(spec.rng_seed);

    // Planted rows: the first m entries of a seeded Fisher-Yates shuffle.
    std::vector<std::uint64_t> rows(spec.n_records);
    std::iota(rows.begin(), rows.end(), 0);
    for (std::uint64_t i = spec.n_records - 1; i > 0; --i) {
        std::swap(rows[i], rows[draw(rng, i + 1)]);
    }
    std::vector<bool> planted(spec.n_records, false);
    for (std::uint64_t i = 0; i < spec.effective_match_count(); ++i) {
        planted[rows[i]] = true;
    }

    std::vector<SearchLogRecord> out;
    out.reserve(spec.n_records);
    for (std::uint64_t i = 0; i < spec.n_records; ++i) {
        int attempt = 0;
        for (;; ++attempt) {
            if (attempt == kMaxAttempts) {
                throw Error(Errc::InvalidSpec,
                            "cannot generate rows free of needle '" + spec.grep_needle + "'");
            }
            SearchLogRecord r = make_record(rng, words, spec.grep_needle, planted[i]);
            const bool clean_rest = other_columns_clean(r, spec.grep_needle);
            const bool query_ok = planted[i] || !contains(r.query_text, spec.grep_needle);
            // The needle could also straddle a column boundary.
            if (clean_rest && query_ok &&
                (planted[i] || !contains(serialize_record(r), spec.grep_needle))) {
                out.push_back(std::move(r));
                break;
            }
        }
    }
    return out;
}

Bytes serialize_record(const SearchLogRecord& r) {
    Bytes line;
    line.reserve(r.user_id.size() + r.query_text.size() + r.query_time.size() + 48);
    line += r.user_id;
    line += '\t';
    line += r.query_text;
    line += '\t';
    line += r.query_time;
    line += '\t';
    if (r.click_rank) line += std::to_string(*r.click_rank);
    line += '\t';
    if (r.click_url) line += *r.click_url;
    return line;
}

SearchLogRecord parse_record(std::string_view line) {
    std::array<std::string_view, 5> cols;
    std::size_t n = 0;
    std::size_t start = 0;
    for (;;) {
        const std::size_t tab = line.find('\t', start);
        const std::string_view col = line.substr(start, tab == std::string_view::npos ? tab : tab - start);
        if (n < cols.size()) cols[n] = col;
        ++n;
        if (tab == std::string_view::npos) break;
        start = tab + 1;
    }
    if (n != cols.size()) {
        throw Error(Errc::MalformedRecord, "expected 5 tab-separated columns, found " + std::to_string(n));
    }
    if (line.find('\n') != std::string_view::npos) {
        throw Error(Errc::MalformedRecord, "record contains a newline");
    }

    SearchLogRecord r;
    r.user_id = cols[0];
    r.query_text = cols[1];
    r.query_time = cols[2];
    if (!cols[3].empty()) {
        std::uint32_t rank = 0;
        auto [ptr, ec] = std::from_chars(cols[3].data(), cols[3].data() + cols[3].size(), rank);
        if (ec != std::errc{} || ptr != cols[3].data() + cols[3].size() || rank == 0) {
            throw Error(Errc::MalformedRecord, "click rank '" + std::string(cols[3]) + "' is not a positive integer");
        }
        r.click_rank = rank;
    }
    if (!cols[4].empty()) {
        r.click_url = std::string(cols[4]);
    }
    return r;
}

IngestSummary send(std::span<const SearchLogRecord> corpus, minilog::Broker& broker,
                   const minilog::TopicHandle& topic, std::optional<double> records_per_second,
                   minilog::AckMode ack) {
    if (broker.high_water_mark(topic, 0) != 0) {
        throw Error(Errc::NonEmptyTopic, "input topic '" + topic.name() + "' already holds records");
    }
    if (records_per_second && !(*records_per_second > 0.0)) {
        throw Error(Errc::InvalidSpec, "ingest rate must be positive");
    }

    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    std::uint64_t i = 0;
    for (const auto& record : corpus) {
        if (records_per_second) {
            const auto due = start + std::chrono::duration_cast<Clock::duration>(
                                         std::chrono::duration<double>(i / *records_per_second));
            std::this_thread::sleep_until(due);
        }
        broker.append(topic, 0, serialize_record(record), ack);
        ++i;
    }
    broker.flush();

    IngestSummary summary;
    summary.count = broker.high_water_mark(topic, 0);
    if (summary.count > 0) {
        std::tie(summary.first_ts, summary.last_ts) = broker.boundary_timestamps(topic, 0);
    }
    return summary;
}

void export_corpus(std::span<const SearchLogRecord> corpus, std::ostream& out) {
    for (const auto& record : corpus) {
        out << serialize_record(record) << '\n';
    }
}

} // namespace streamlab::corpus
