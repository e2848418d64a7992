#include "cryptomove/affect.hpp"

#include "cryptomove/error.hpp"
#include "csv.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>

namespace cryptomove {

namespace {

bool is_token_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

std::int64_t floor_to(std::int64_t t, std::int64_t step) {
    auto q = t / step;
    if (t % step != 0 && t < 0) --q;
    return q * step;
}

std::string unquote(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
    if (s.size() < 2 || s.front() != '"' || s.back() != '"') return std::string(s);
    s = s.substr(1, s.size() - 2);
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        out.push_back(s[i]);
        if (s[i] == '"' && i + 1 < s.size() && s[i + 1] == '"') ++i;
    }
    return out;
}

double metric_value(const AffectRecord& r, std::size_t m) {
    switch (m) {
        case 0: return r.sentiment;
        case 1: return r.love;
        case 2: return r.joy;
        case 3: return r.anger;
        case 4: return r.sadness;
        case 5: return r.valence;
        case 6: return r.arousal;
        case 7: return r.dominance;
        default: throw std::logic_error("metric index out of range");
    }
}

}  // namespace

Vad score_vad(std::string_view text, const VadLexicon& lexicon) {
    Vad sum;
    std::size_t hits = 0;
    std::string token;
    auto flush = [&] {
        if (token.empty()) return;
        if (const Vad* v = lexicon.find(token)) {
            sum.valence += v->valence;
            sum.arousal += v->arousal;
            sum.dominance += v->dominance;
            ++hits;
        }
        token.clear();
    };
    for (char c : text) {
        if (is_token_char(c))
            token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        else
            flush();
    }
    flush();
    if (hits == 0) return {};
    const double n = static_cast<double>(hits);
    return {sum.valence / n, sum.arousal / n, sum.dominance / n};
}

std::vector<RawComment> parse_raw_comments(std::istream& in, const std::string& source_name) {
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::is_blank(line)) continue;
        auto f = csv::split(line);
        if (f.size() != 4 || f[0] != "timestamp" || f[1] != "source" || f[2] != "channel" || f[3] != "text")
            throw ParseError(source_name, line_no, "unexpected comment file header");
        have_header = true;
        break;
    }
    if (!have_header) throw ParseError(source_name, line_no, "missing header row");

    std::vector<RawComment> out;
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::is_blank(line)) continue;
        // The text column is last and may itself contain commas.
        std::size_t cut[3];
        std::size_t pos = 0;
        for (auto& c : cut) {
            c = line.find(',', pos);
            if (c == std::string::npos) throw ParseError(source_name, line_no, "expected 4 columns");
            pos = c + 1;
        }
        RawComment c;
        c.timestamp = csv::to_int(csv::trim(std::string_view(line).substr(0, cut[0])), source_name, line_no,
                                  "timestamp");
        const auto src = csv::trim(std::string_view(line).substr(cut[0] + 1, cut[1] - cut[0] - 1));
        if (src == "github") {
            c.source = Source::github;
        } else if (src == "reddit") {
            c.source = Source::reddit;
        } else {
            throw ValidationError(source_name + ":" + std::to_string(line_no) + ": unknown source '" +
                                  std::string(src) + "'");
        }
        c.channel = std::string(csv::trim(std::string_view(line).substr(cut[1] + 1, cut[2] - cut[1] - 1)));
        c.text = unquote(std::string_view(line).substr(cut[2] + 1));
        out.push_back(std::move(c));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const RawComment& a, const RawComment& b) { return a.timestamp < b.timestamp; });
    return out;
}

std::vector<RawComment> read_raw_comments(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return parse_raw_comments(in, path.string());
}

void fill_vad(AffectRecordSet& records, const std::vector<RawComment>& comments, const VadLexicon& lexicon) {
    if (records.records.size() != comments.size())
        throw ValidationError("comment file has " + std::to_string(comments.size()) + " rows, affect file has " +
                              std::to_string(records.records.size()));
    for (std::size_t i = 0; i < comments.size(); ++i) {
        auto& r = records.records[i];
        const auto& c = comments[i];
        if (r.timestamp != c.timestamp || r.source != c.source || r.channel != c.channel)
            throw ValidationError("comment row " + std::to_string(i) + " does not match affect record at timestamp " +
                                  std::to_string(r.timestamp));
        const Vad v = score_vad(c.text, lexicon);
        r.valence = v.valence;
        r.arousal = v.arousal;
        r.dominance = v.dominance;
    }
}

const Series& AffectSeries::column(std::string_view channel, std::string_view metric) const {
    const std::string name = std::string(channel) + "." + std::string(metric);
    for (const auto& c : columns)
        if (c.name == name) return c.values;
    throw std::out_of_range("no affect column " + name);
}

AffectSeries aggregate_affect(const AffectRecordSet& records, Frequency frequency,
                              const std::vector<Timestamp>& axis, std::vector<std::string> channels) {
    const auto step = step_seconds(frequency);
    for (std::size_t i = 0; i < axis.size(); ++i) {
        if (axis[i] % step != 0) throw std::invalid_argument("axis timestamp off the frequency grid");
        if (i > 0 && axis[i] <= axis[i - 1]) throw std::invalid_argument("axis must be strictly increasing");
    }
    if (channels.empty())
        for (const auto& r : records.records) channels.push_back(r.channel_key());
    std::sort(channels.begin(), channels.end());
    channels.erase(std::unique(channels.begin(), channels.end()), channels.end());

    std::map<std::string, std::size_t, std::less<>> channel_index;
    for (std::size_t c = 0; c < channels.size(); ++c) channel_index.emplace(channels[c], c);

    AffectSeries out;
    out.frequency = frequency;
    out.timestamps = axis;
    out.channels = channels;

    // members[c][b]: indices of records in channel c, bucket b
    std::vector<std::vector<std::vector<std::size_t>>> members(
        channels.size(), std::vector<std::vector<std::size_t>>(axis.size()));
    for (std::size_t i = 0; i < records.records.size(); ++i) {
        const auto& r = records.records[i];
        auto ch = channel_index.find(r.channel_key());
        if (ch == channel_index.end()) continue;
        const auto bucket = floor_to(r.timestamp, step);
        auto it = std::lower_bound(axis.begin(), axis.end(), bucket);
        if (it == axis.end() || *it != bucket) {
            ++out.dropped;
            continue;
        }
        members[ch->second][static_cast<std::size_t>(it - axis.begin())].push_back(i);
    }

    std::vector<double> values;
    for (std::size_t c = 0; c < channels.size(); ++c) {
        for (std::size_t m = 0; m < kAffectMetrics.size(); ++m) {
            AffectColumn col{channels[c] + "." + std::string(kAffectMetrics[m]), Series(axis.size(), 0.0)};
            for (std::size_t b = 0; b < axis.size(); ++b) {
                const auto& idx = members[c][b];
                if (idx.empty()) continue;
                if (m == kAffectMetrics.size() - 1) {
                    col.values[b] = static_cast<double>(idx.size());
                    continue;
                }
                values.clear();
                for (auto i : idx) values.push_back(metric_value(records.records[i], m));
                // Sum in sorted order.
                std::sort(values.begin(), values.end());
                double sum = 0.0;
                for (double v : values) sum += v;
                const double mean = sum / static_cast<double>(values.size());
                col.values[b] = std::clamp(mean, values.front(), values.back());
            }
            out.columns.push_back(std::move(col));
        }
    }
    return out;
}

void write_affect_series(std::ostream& out, const AffectSeries& series) {
    out << "timestamp";
    for (const auto& c : series.columns) out << ',' << c.name;
    out << '\n';
    for (std::size_t t = 0; t < series.timestamps.size(); ++t) {
        out << series.timestamps[t];
        for (const auto& c : series.columns) out << ',' << csv::format_double(c.values[t]);
        out << '\n';
    }
}

}  // namespace cryptomove
