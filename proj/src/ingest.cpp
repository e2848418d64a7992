#include "cryptomove/ingest.hpp"

#include "cryptomove/error.hpp"
#include "csv.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>

namespace cryptomove {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return in;
}

std::string describe(const Bar& b) {
    return "bar at timestamp " + std::to_string(b.timestamp);
}

// Floor division for possibly negative timestamps.
std::int64_t floor_to(std::int64_t t, std::int64_t step) {
    auto q = t / step;
    if (t % step != 0 && t < 0) --q;
    return q * step;
}

std::optional<std::int64_t> parse_datetime(std::string_view s) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    std::string buf(s);
    int n = std::sscanf(buf.c_str(), "%d-%d-%d %d:%d:%d", &y, &mo, &d, &h, &mi, &sec);
    if (n < 3) return std::nullopt;
    using namespace std::chrono;
    auto ymd = year{y} / month{static_cast<unsigned>(mo)} / day{static_cast<unsigned>(d)};
    if (!ymd.ok()) return std::nullopt;
    auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<std::int64_t>(days) * 86400 + h * 3600 + mi * 60 + sec;
}

}  // namespace

std::string_view to_string(Frequency f) noexcept {
    return f == Frequency::hourly ? "hourly" : "daily";
}

Frequency parse_frequency(std::string_view s) {
    if (s == "hourly") return Frequency::hourly;
    if (s == "daily") return Frequency::daily;
    throw std::invalid_argument("unknown frequency '" + std::string(s) + "'");
}

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
    });
    return out;
}

CandleSeries::CandleSeries(Frequency frequency, std::vector<Bar> bars)
    : frequency_(frequency), bars_(std::move(bars)) {
    const auto step = step_seconds(frequency_);
    for (std::size_t i = 0; i < bars_.size(); ++i) {
        const Bar& b = bars_[i];
        if (!(std::isfinite(b.open) && std::isfinite(b.high) && std::isfinite(b.low) &&
              std::isfinite(b.close) && std::isfinite(b.volume)))
            throw ValidationError(describe(b) + ": non-finite field");
        if (floor_to(b.timestamp, step) != b.timestamp)
            throw ValidationError(describe(b) + ": not aligned to the " +
                                  std::string(to_string(frequency_)) + " grid");
        if (b.low > std::min(b.open, b.close) || b.high < std::max(b.open, b.close) || b.high < b.low)
            throw ValidationError(describe(b) + ": OHLC violation (need low <= open,close <= high)");
        if (b.volume < 0.0) throw ValidationError(describe(b) + ": negative volume");
        if (i > 0 && b.timestamp <= bars_[i - 1].timestamp) {
            if (b.timestamp == bars_[i - 1].timestamp)
                throw ValidationError(describe(b) + ": duplicate timestamp");
            throw ValidationError(describe(b) + ": timestamps not increasing");
        }
    }
}

std::vector<Timestamp> CandleSeries::timestamps() const {
    std::vector<Timestamp> out;
    out.reserve(bars_.size());
    for (const auto& b : bars_) out.push_back(b.timestamp);
    return out;
}

#define CRYPTOMOVE_COLUMN(fn, field)                         \
    std::vector<double> CandleSeries::fn() const {           \
        std::vector<double> out;                             \
        out.reserve(bars_.size());                           \
        for (const auto& b : bars_) out.push_back(b.field);  \
        return out;                                          \
    }
CRYPTOMOVE_COLUMN(opens, open)
CRYPTOMOVE_COLUMN(highs, high)
CRYPTOMOVE_COLUMN(lows, low)
CRYPTOMOVE_COLUMN(closes, close)
CRYPTOMOVE_COLUMN(volumes, volume)
#undef CRYPTOMOVE_COLUMN

CandleSeries parse_candles(std::istream& in, CandleFormat format, Frequency frequency,
                           const std::string& source_name) {
    std::string line;
    std::size_t line_no = 0;

    // Column positions, resolved from the header.
    int c_ts = -1, c_date = -1, c_open = -1, c_high = -1, c_low = -1, c_close = -1, c_vol = -1;
    std::size_t width = 0;
    bool have_header = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (csv::is_blank(line)) continue;
        auto fields = csv::split(line);
        if (format == CandleFormat::canonical_csv) {
            static constexpr std::string_view expected[] = {"timestamp", "open", "high",
                                                            "low",       "close", "volume"};
            if (fields.size() != 6 || !std::equal(fields.begin(), fields.end(), std::begin(expected)))
                throw ParseError(source_name, line_no,
                                 "expected header timestamp,open,high,low,close,volume");
            c_ts = 0, c_open = 1, c_high = 2, c_low = 3, c_close = 4, c_vol = 5;
            width = 6;
            have_header = true;
            break;
        }
        // Exchange exports sometimes carry a banner line before the header.
        std::vector<std::string> lowered;
        for (auto f : fields) lowered.push_back(to_lower_ascii(f));
        auto find = [&](auto pred) -> int {
            for (std::size_t i = 0; i < lowered.size(); ++i)
                if (pred(lowered[i])) return static_cast<int>(i);
            return -1;
        };
        c_open = find([](const std::string& s) { return s == "open"; });
        c_close = find([](const std::string& s) { return s == "close"; });
        if (c_open < 0 || c_close < 0) continue;
        c_high = find([](const std::string& s) { return s == "high"; });
        c_low = find([](const std::string& s) { return s == "low"; });
        c_ts = find([](const std::string& s) { return s == "unix" || s == "timestamp" || s == "time" || s == "mts"; });
        c_date = find([](const std::string& s) { return s == "date" || s == "datetime"; });
        // First volume column is the base-asset volume.
        c_vol = find([](const std::string& s) { return s.rfind("volume", 0) == 0; });
        if (c_high < 0 || c_low < 0 || c_vol < 0 || (c_ts < 0 && c_date < 0))
            throw ParseError(source_name, line_no, "exchange header lacks required columns");
        width = fields.size();
        have_header = true;
        break;
    }
    if (!have_header) throw ParseError(source_name, line_no, "missing header row");

    std::vector<Bar> bars;
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::is_blank(line)) continue;
        auto f = csv::split(line);
        if (f.size() != width)
            throw ParseError(source_name, line_no,
                             "expected " + std::to_string(width) + " columns, got " + std::to_string(f.size()));
        Bar b;
        if (c_ts >= 0) {
            auto raw = csv::to_double(f[c_ts], source_name, line_no, "timestamp");
            // Millisecond epochs are normalised to seconds.
            if (std::abs(raw) > 1e11) raw /= 1000.0;
            b.timestamp = static_cast<Timestamp>(std::llround(raw));
        } else {
            auto ts = parse_datetime(f[c_date]);
            if (!ts) throw ParseError(source_name, line_no, "unparseable date '" + std::string(f[c_date]) + "'");
            b.timestamp = *ts;
        }
        b.open = csv::to_double(f[c_open], source_name, line_no, "open");
        b.high = csv::to_double(f[c_high], source_name, line_no, "high");
        b.low = csv::to_double(f[c_low], source_name, line_no, "low");
        b.close = csv::to_double(f[c_close], source_name, line_no, "close");
        b.volume = csv::to_double(f[c_vol], source_name, line_no, "volume");
        if (b.low > std::min(b.open, b.close) || b.high < std::max(b.open, b.close) || b.high < b.low)
            throw ValidationError(source_name + ":" + std::to_string(line_no) +
                                  ": OHLC violation (need low <= open,close <= high)");
        bars.push_back(b);
    }
    std::stable_sort(bars.begin(), bars.end(),
                     [](const Bar& a, const Bar& b) { return a.timestamp < b.timestamp; });
    for (std::size_t i = 1; i < bars.size(); ++i)
        if (bars[i].timestamp == bars[i - 1].timestamp)
            throw ValidationError(source_name + ": duplicate timestamp " + std::to_string(bars[i].timestamp));
    return CandleSeries(frequency, std::move(bars));
}

CandleSeries read_candles(const std::filesystem::path& path, CandleFormat format, Frequency frequency) {
    auto in = open_input(path);
    return parse_candles(in, format, frequency, path.string());
}

void write_candles(std::ostream& out, const CandleSeries& candles) {
    out << "timestamp,open,high,low,close,volume\n";
    for (const auto& b : candles.bars()) {
        out << b.timestamp << ',' << csv::format_double(b.open) << ',' << csv::format_double(b.high) << ','
            << csv::format_double(b.low) << ',' << csv::format_double(b.close) << ','
            << csv::format_double(b.volume) << '\n';
    }
}

void write_candles(const std::filesystem::path& path, const CandleSeries& candles) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    write_candles(out, candles);
    if (!out) throw IoError("write failed for " + path.string());
}

CandleSeries resample(const CandleSeries& candles, Frequency target) {
    if (target != Frequency::daily || candles.frequency() != Frequency::hourly)
        throw std::invalid_argument("resample: only hourly -> daily is supported");
    constexpr std::int64_t day = 86400;
    std::vector<Bar> out;
    for (const auto& b : candles.bars()) {
        const auto bucket = floor_to(b.timestamp, day);
        if (out.empty() || out.back().timestamp != bucket) {
            out.push_back(Bar{bucket, b.open, b.high, b.low, b.close, b.volume});
            continue;
        }
        Bar& d = out.back();
        d.high = std::max(d.high, b.high);
        d.low = std::min(d.low, b.low);
        d.close = b.close;
        d.volume += b.volume;
    }
    return CandleSeries(Frequency::daily, std::move(out));
}

// ---------------------------------------------------------------------------
// Affect records

std::string_view to_string(Source s) noexcept {
    return s == Source::github ? "github" : "reddit";
}

std::string AffectRecord::channel_key() const {
    return std::string(to_string(source)) + "." + channel;
}

void validate(const AffectRecord& r) {
    if (r.sentiment < -1 || r.sentiment > 1)
        throw ValidationError("sentiment " + std::to_string(r.sentiment) + " outside {-1,0,1}");
    for (double v : {r.love, r.joy, r.anger, r.sadness})
        if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("emotion count must be finite and >= 0");
    for (double v : {r.valence, r.arousal, r.dominance})
        if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("VAD score must be finite and >= 0");
}

AffectRecordSet parse_affect_records(std::istream& in, const std::string& source_name) {
    static constexpr std::string_view header[] = {"timestamp", "source", "channel", "sentiment",
                                                  "love",      "joy",    "anger",   "sadness",
                                                  "valence",   "arousal", "dominance"};
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::is_blank(line)) continue;
        auto f = csv::split(line);
        if (f.size() != std::size(header) || !std::equal(f.begin(), f.end(), std::begin(header)))
            throw ParseError(source_name, line_no, "unexpected affect CSV header");
        have_header = true;
        break;
    }
    if (!have_header) throw ParseError(source_name, line_no, "missing header row");

    AffectRecordSet set;
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::is_blank(line)) continue;
        auto f = csv::split(line);
        if (f.size() != std::size(header))
            throw ParseError(source_name, line_no,
                             "expected 11 columns, got " + std::to_string(f.size()));
        AffectRecord r;
        r.timestamp = csv::to_int(f[0], source_name, line_no, "timestamp");
        if (f[1] == "github") {
            r.source = Source::github;
        } else if (f[1] == "reddit") {
            r.source = Source::reddit;
        } else {
            throw ValidationError(source_name + ":" + std::to_string(line_no) + ": unknown source '" +
                                  std::string(f[1]) + "'");
        }
        r.channel = std::string(f[2]);
        auto sentiment = csv::to_int(f[3], source_name, line_no, "sentiment");
        if (sentiment < -1 || sentiment > 1)
            throw ValidationError(source_name + ":" + std::to_string(line_no) + ": sentiment " +
                                  std::to_string(sentiment) + " outside {-1,0,1}");
        r.sentiment = static_cast<int>(sentiment);
        r.love = csv::to_double(f[4], source_name, line_no, "love");
        r.joy = csv::to_double(f[5], source_name, line_no, "joy");
        r.anger = csv::to_double(f[6], source_name, line_no, "anger");
        r.sadness = csv::to_double(f[7], source_name, line_no, "sadness");
        r.valence = csv::to_double(f[8], source_name, line_no, "valence");
        r.arousal = csv::to_double(f[9], source_name, line_no, "arousal");
        r.dominance = csv::to_double(f[10], source_name, line_no, "dominance");
        try {
            validate(r);
        } catch (const ValidationError& e) {
            throw ValidationError(source_name + ":" + std::to_string(line_no) + ": " + e.what());
        }
        set.records.push_back(std::move(r));
    }
    std::stable_sort(set.records.begin(), set.records.end(),
                     [](const AffectRecord& a, const AffectRecord& b) { return a.timestamp < b.timestamp; });
    return set;
}

AffectRecordSet read_affect_records(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_affect_records(in, path.string());
}

void write_affect_records(std::ostream& out, const AffectRecordSet& set) {
    out << "timestamp,source,channel,sentiment,love,joy,anger,sadness,valence,arousal,dominance\n";
    for (const auto& r : set.records) {
        out << r.timestamp << ',' << to_string(r.source) << ',' << r.channel << ',' << r.sentiment << ','
            << csv::format_double(r.love) << ',' << csv::format_double(r.joy) << ','
            << csv::format_double(r.anger) << ',' << csv::format_double(r.sadness) << ','
            << csv::format_double(r.valence) << ',' << csv::format_double(r.arousal) << ','
            << csv::format_double(r.dominance) << '\n';
    }
}

// ---------------------------------------------------------------------------
// VAD lexicon

void VadLexicon::insert(std::string_view token, Vad scores) {
    auto key = to_lower_ascii(token);
    if (!std::isfinite(scores.valence) || !std::isfinite(scores.arousal) || !std::isfinite(scores.dominance))
        throw ValidationError("lexicon entry '" + key + "' has a non-finite score");
    auto [it, inserted] = entries_.emplace(std::move(key), scores);
    if (!inserted) throw ValidationError("duplicate lexicon token '" + it->first + "'");
}

const Vad* VadLexicon::find(std::string_view lowercase_token) const {
    auto it = entries_.find(lowercase_token);
    return it == entries_.end() ? nullptr : &it->second;
}

VadLexicon parse_vad_lexicon(std::istream& in, const std::string& source_name) {
    VadLexicon lex;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::is_blank(line)) continue;
        auto f = csv::split(line);
        if (!header_seen) {
            header_seen = true;
            if (to_lower_ascii(f[0]) == "token" || to_lower_ascii(f[0]) == "word") continue;
        }
        if (f.size() < 4)
            throw ParseError(source_name, line_no, "expected token,valence,arousal,dominance");
        Vad v{csv::to_double(f[1], source_name, line_no, "valence"),
              csv::to_double(f[2], source_name, line_no, "arousal"),
              csv::to_double(f[3], source_name, line_no, "dominance")};
        try {
            lex.insert(f[0], v);
        } catch (const ValidationError& e) {
            throw ValidationError(source_name + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return lex;
}

VadLexicon read_vad_lexicon(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_vad_lexicon(in, path.string());
}

}  // namespace cryptomove
