#pragma once

#include "cryptomove/ingest.hpp"
#include "cryptomove/series.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace cryptomove {

/// Mean (V, A, D) over the tokens of `text` found in the lexicon. Tokens are
/// maximal ASCII-alphanumeric runs, lowercased. Returns (0, 0, 0) on no match.
Vad score_vad(std::string_view text, const VadLexicon& lexicon);

/// One row of a raw comment file: `timestamp,source,channel,text`.
struct RawComment {
    Timestamp timestamp = 0;
    Source source = Source::github;
    std::string channel;
    std::string text;
};

/// Rows come back stable-sorted by timestamp, the same order as
/// parse_affect_records, so row i of each describes the same comment.
std::vector<RawComment> read_raw_comments(const std::filesystem::path& path);
std::vector<RawComment> parse_raw_comments(std::istream& in, const std::string& source_name = "<stream>");

/// Overwrites the VAD columns of each record with the lexicon score of the
/// matching comment. Throws ValidationError if the two files disagree.
void fill_vad(AffectRecordSet& records, const std::vector<RawComment>& comments, const VadLexicon& lexicon);

inline constexpr std::array<std::string_view, 9> kAffectMetrics = {
    "sentiment", "love", "joy", "anger", "sadness", "valence", "arousal", "dominance", "comment_count"};

struct AffectColumn {
    std::string name;  // "<channel>.<metric>"
    Series values;
};

/// Per-bucket affect means on a candle axis. Columns are grouped by channel
/// (sorted by key), with the metrics of each channel in kAffectMetrics order.
struct AffectSeries {
    Frequency frequency = Frequency::hourly;
    std::vector<Timestamp> timestamps;
    std::vector<std::string> channels;
    std::vector<AffectColumn> columns;
    std::size_t dropped = 0;  // records outside the axis or on a missing bucket

    const Series& column(std::string_view channel, std::string_view metric) const;
};

/// Buckets records onto `axis` (strictly increasing, on the frequency grid).
/// Empty buckets are 0 with comment_count 0. If `channels` is empty the
/// channel set is taken from the records; otherwise records on other channels
/// are ignored and listed channels without records are all-zero.
AffectSeries aggregate_affect(const AffectRecordSet& records, Frequency frequency,
                              const std::vector<Timestamp>& axis, std::vector<std::string> channels = {});

void write_affect_series(std::ostream& out, const AffectSeries& series);

}  // namespace cryptomove
