#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace cryptomove {

using Timestamp = std::int64_t;  // unix seconds, UTC

enum class Frequency { hourly, daily };

constexpr std::int64_t step_seconds(Frequency f) noexcept {
    return f == Frequency::hourly ? 3600 : 86400;
}

std::string_view to_string(Frequency f) noexcept;
Frequency parse_frequency(std::string_view s);

struct Bar {
    Timestamp timestamp = 0;
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    double volume = 0.0;

    friend bool operator==(const Bar&, const Bar&) = default;
};

/// OHLCV bars on a fixed frequency grid. Gaps are allowed; timestamps are
/// strictly increasing and multiples of the grid step.
class CandleSeries {
public:
    CandleSeries() = default;
    /// Validates every invariant; throws ValidationError on the first violation.
    CandleSeries(Frequency frequency, std::vector<Bar> bars);

    Frequency frequency() const noexcept { return frequency_; }
    const std::vector<Bar>& bars() const noexcept { return bars_; }
    std::size_t size() const noexcept { return bars_.size(); }
    bool empty() const noexcept { return bars_.empty(); }
    const Bar& operator[](std::size_t i) const { return bars_[i]; }

    std::vector<Timestamp> timestamps() const;
    std::vector<double> opens() const;
    std::vector<double> highs() const;
    std::vector<double> lows() const;
    std::vector<double> closes() const;
    std::vector<double> volumes() const;

    friend bool operator==(const CandleSeries&, const CandleSeries&) = default;

private:
    Frequency frequency_ = Frequency::hourly;
    std::vector<Bar> bars_;
};

enum class CandleFormat {
    canonical_csv,  // timestamp,open,high,low,close,volume
    exchange_csv,   // exchange export: any column order, extra columns, ms or s times
};

CandleSeries read_candles(const std::filesystem::path& path, CandleFormat format,
                          Frequency frequency = Frequency::hourly);
CandleSeries parse_candles(std::istream& in, CandleFormat format, Frequency frequency,
                           const std::string& source_name = "<stream>");
void write_candles(std::ostream& out, const CandleSeries& candles);
void write_candles(const std::filesystem::path& path, const CandleSeries& candles);

/// Aggregates hourly bars into UTC calendar days. Empty days are omitted.
CandleSeries resample(const CandleSeries& candles, Frequency target);

enum class Source { github, reddit };

std::string_view to_string(Source s) noexcept;

struct AffectRecord {
    Timestamp timestamp = 0;
    Source source = Source::github;
    std::string channel;
    int sentiment = 0;  // -1, 0, 1
    double love = 0.0;
    double joy = 0.0;
    double anger = 0.0;
    double sadness = 0.0;
    double valence = 0.0;
    double arousal = 0.0;
    double dominance = 0.0;

    /// "<source>.<channel>", the column-group key used downstream.
    std::string channel_key() const;

    friend bool operator==(const AffectRecord&, const AffectRecord&) = default;
};

void validate(const AffectRecord& r);

struct AffectRecordSet {
    std::vector<AffectRecord> records;  // timestamp order (stable)
};

AffectRecordSet read_affect_records(const std::filesystem::path& path);
AffectRecordSet parse_affect_records(std::istream& in, const std::string& source_name = "<stream>");
void write_affect_records(std::ostream& out, const AffectRecordSet& set);

struct Vad {
    double valence = 0.0;
    double arousal = 0.0;
    double dominance = 0.0;

    friend bool operator==(const Vad&, const Vad&) = default;
};

class VadLexicon {
public:
    /// Inserts a lowercased token; throws ValidationError if it already exists.
    void insert(std::string_view token, Vad scores);
    const Vad* find(std::string_view lowercase_token) const;
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

private:
    std::map<std::string, Vad, std::less<>> entries_;
};

VadLexicon read_vad_lexicon(const std::filesystem::path& path);
VadLexicon parse_vad_lexicon(std::istream& in, const std::string& source_name = "<stream>");

std::string to_lower_ascii(std::string_view s);

}  // namespace cryptomove
