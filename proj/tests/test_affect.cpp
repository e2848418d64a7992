#include "cryptomove/affect.hpp"
#include "cryptomove/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

using namespace cryptomove;

namespace {

AffectRecord record(Timestamp t, std::string channel, double anger = 0, int sentiment = 0) {
    AffectRecord r;
    r.timestamp = t;
    r.source = Source::reddit;
    r.channel = std::move(channel);
    r.anger = anger;
    r.sentiment = sentiment;
    return r;
}

std::vector<Timestamp> hours(Timestamp start, std::size_t n) {
    std::vector<Timestamp> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(start + 3600 * static_cast<Timestamp>(i));
    return out;
}

AffectRecordSet random_records(std::mt19937_64& rng, std::size_t n, Timestamp start, Timestamp span) {
    std::uniform_int_distribution<Timestamp> when(start, start + span - 1);
    std::uniform_int_distribution<int> sent(-1, 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> which(0, 2);
    const char* channels[] = {"btc", "ethtrader", "cryptomarkets"};
    AffectRecordSet set;
    for (std::size_t i = 0; i < n; ++i) {
        AffectRecord r;
        r.timestamp = when(rng);
        r.source = which(rng) == 0 ? Source::github : Source::reddit;
        r.channel = channels[which(rng)];
        r.sentiment = sent(rng);
        r.love = u(rng) < 0.2;
        r.joy = u(rng) < 0.2;
        r.anger = u(rng) < 0.2;
        r.sadness = u(rng) < 0.2;
        r.valence = 1 + 8 * u(rng);
        r.arousal = 1 + 8 * u(rng);
        r.dominance = 1 + 8 * u(rng);
        set.records.push_back(r);
    }
    std::stable_sort(set.records.begin(), set.records.end(),
                     [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    return set;
}

}  // namespace

TEST_CASE("score_vad") {
    VadLexicon lex;
    lex.insert("good", {3, 2, 2.5});
    CHECK(score_vad("good good", lex) == Vad{3, 2, 2.5});
    CHECK(score_vad("nothing here", lex) == Vad{0, 0, 0});
    CHECK(score_vad("", lex) == Vad{0, 0, 0});

    VadLexicon two;
    two.insert("good", {3, 2, 2});
    two.insert("bad", {1, 2, 4});
    CHECK(score_vad("good bad", two) == Vad{2, 2, 3});
    CHECK(score_vad("GOOD!!bad...", two) == Vad{2, 2, 3});
    CHECK(score_vad("goodbad", two) == Vad{0, 0, 0});
}

TEST_CASE("raw comments fill VAD columns in record order") {
    std::istringstream comments(
        "timestamp,source,channel,text\n"
        "7200,reddit,btc,\"bad, \"\"really\"\" bad\"\n"
        "3600,github,ethereum,good code\n");
    auto raw = parse_raw_comments(comments);
    REQUIRE(raw.size() == 2);
    CHECK(raw[0].text == "good code");
    CHECK(raw[1].text == "bad, \"really\" bad");

    std::istringstream affect(
        "timestamp,source,channel,sentiment,love,joy,anger,sadness,valence,arousal,dominance\n"
        "7200,reddit,btc,-1,0,0,1,0,0,0,0\n"
        "3600,github,ethereum,1,0,1,0,0,0,0,0\n");
    auto set = parse_affect_records(affect);
    VadLexicon lex;
    lex.insert("good", {3, 2, 2});
    lex.insert("bad", {1, 2, 4});
    fill_vad(set, raw, lex);
    CHECK(set.records[0].valence == 3);
    CHECK(set.records[1].dominance == 4);

    raw.pop_back();
    CHECK_THROWS_AS(fill_vad(set, raw, lex), ValidationError);
}

TEST_CASE("aggregate_affect examples") {
    AffectRecordSet set;
    for (double a : {0.0, 1.0, 2.0}) set.records.push_back(record(3600 + 10, "btc", a));
    auto s = aggregate_affect(set, Frequency::hourly, hours(0, 3));
    CHECK(s.channels == std::vector<std::string>{"reddit.btc"});
    CHECK(s.columns.size() == 9);
    CHECK(s.column("reddit.btc", "anger")[1] == 1.0);
    CHECK(s.column("reddit.btc", "comment_count")[1] == 3.0);
    for (const auto& c : s.columns) {
        CHECK(c.values[0] == 0.0);
        CHECK(c.values[2] == 0.0);
    }

    AffectRecordSet day;
    int i = 0;
    for (int v : {1, -1, 0, 1}) day.records.push_back(record(86400 + 3600 * (i++) * 5, "btc", 0, v));
    auto d = aggregate_affect(day, Frequency::daily, {86400});
    CHECK(d.column("reddit.btc", "sentiment")[0] == 0.25);
    CHECK(d.column("reddit.btc", "comment_count")[0] == 4.0);
}

TEST_CASE("aggregate_affect: out-of-span records are counted and excluded") {
    AffectRecordSet set;
    set.records = {record(0, "btc", 1), record(3600 * 5, "btc", 1), record(3600 * 50, "btc", 1)};
    auto axis = hours(3600, 10);
    axis.erase(axis.begin() + 4);  // no bucket at hour 5
    auto s = aggregate_affect(set, Frequency::hourly, axis);
    CHECK(s.dropped == 3);
    for (double v : s.column("reddit.btc", "comment_count")) CHECK(v == 0.0);
}

TEST_CASE("aggregate_affect: requested channel set") {
    AffectRecordSet set;
    set.records = {record(0, "btc", 1), record(0, "other", 1)};
    auto s = aggregate_affect(set, Frequency::hourly, {0}, {"reddit.btc", "github.ethereum"});
    REQUIRE(s.channels == std::vector<std::string>{"github.ethereum", "reddit.btc"});
    CHECK(s.columns[0].name == "github.ethereum.sentiment");
    CHECK(s.column("github.ethereum", "comment_count")[0] == 0.0);
    CHECK(s.column("reddit.btc", "anger")[0] == 1.0);
    CHECK(s.dropped == 0);
}

TEST_CASE("aggregate_affect: axis validation") {
    AffectRecordSet set;
    CHECK_THROWS_AS(aggregate_affect(set, Frequency::hourly, {0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(aggregate_affect(set, Frequency::hourly, {10}), std::invalid_argument);
    CHECK(aggregate_affect(set, Frequency::hourly, {}).columns.empty());
}

TEST_CASE("aggregate_affect properties") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const Timestamp start = 86400 * 100;
        const std::size_t n_hours = 24 * 6;
        auto set = random_records(rng, 400, start - 3600 * 3, static_cast<Timestamp>(n_hours + 6) * 3600);
        const auto axis = hours(start, n_hours);
        auto s = aggregate_affect(set, Frequency::hourly, axis);

        std::size_t in_span = 0;
        for (const auto& r : set.records)
            if (r.timestamp >= axis.front() && r.timestamp < axis.back() + 3600) ++in_span;
        double total = 0.0;
        for (const auto& ch : s.channels)
            for (double v : s.column(ch, "comment_count")) total += v;
        CHECK(total == static_cast<double>(in_span));
        CHECK(s.dropped == set.records.size() - in_span);

        // Bucket values lie within the contributing records' range.
        for (const auto& ch : s.channels) {
            const auto& val = s.column(ch, "valence");
            for (std::size_t b = 0; b < axis.size(); ++b) {
                double lo = 1e300, hi = -1e300;
                for (const auto& r : set.records)
                    if (r.channel_key() == ch && r.timestamp >= axis[b] && r.timestamp < axis[b] + 3600) {
                        lo = std::min(lo, r.valence);
                        hi = std::max(hi, r.valence);
                    }
                if (lo <= hi) {
                    CHECK(val[b] >= lo);
                    CHECK(val[b] <= hi);
                } else {
                    CHECK(val[b] == 0.0);
                }
            }
        }

        // Permutation invariance: bit-identical output.
        auto shuffled = set;
        std::shuffle(shuffled.records.begin(), shuffled.records.end(), rng);
        auto s2 = aggregate_affect(shuffled, Frequency::hourly, axis);
        REQUIRE(s2.columns.size() == s.columns.size());
        for (std::size_t c = 0; c < s.columns.size(); ++c) CHECK(s2.columns[c].values == s.columns[c].values);

        // Refinement: the daily mean is the count-weighted mean of hourly means.
        std::vector<Timestamp> days;
        for (int d = 0; d < 6; ++d) days.push_back(start + 86400 * d);
        auto daily = aggregate_affect(set, Frequency::daily, days, s.channels);
        for (const auto& ch : s.channels) {
            for (auto metric : kAffectMetrics) {
                if (metric == "comment_count") continue;
                const auto& h = s.column(ch, metric);
                const auto& hc = s.column(ch, "comment_count");
                for (std::size_t d = 0; d < days.size(); ++d) {
                    double num = 0.0, den = 0.0;
                    for (std::size_t k = 24 * d; k < 24 * (d + 1); ++k) {
                        num += h[k] * hc[k];
                        den += hc[k];
                    }
                    const double want = den > 0 ? num / den : 0.0;
                    CHECK(std::abs(daily.column(ch, metric)[d] - want) <= 1e-12);
                    CHECK(daily.column(ch, "comment_count")[d] == den);
                }
            }
        }
    }
}

TEST_CASE("write_affect_series wide layout") {
    AffectRecordSet set;
    set.records = {record(3600, "btc", 2)};
    auto s = aggregate_affect(set, Frequency::hourly, {0, 3600});
    std::ostringstream out;
    write_affect_series(out, s);
    CHECK(out.str() ==
          "timestamp,reddit.btc.sentiment,reddit.btc.love,reddit.btc.joy,reddit.btc.anger,reddit.btc.sadness,"
          "reddit.btc.valence,reddit.btc.arousal,reddit.btc.dominance,reddit.btc.comment_count\n"
          "0,0,0,0,0,0,0,0,0,0\n"
          "3600,0,0,0,2,0,0,0,0,1\n");
}
