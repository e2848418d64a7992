#include "cryptomove/dataset.hpp"

#include "cryptomove/error.hpp"
#include "csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace cryptomove {

namespace {

struct Column {
    std::string name;
    const Series* values;
};

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += csv::format_double(v[i]);
    }
    return out;
}

std::vector<double> split_doubles(std::string_view s, const std::string& source, std::size_t line,
                                  std::string_view key) {
    std::vector<double> out;
    if (s.empty()) return out;
    for (auto f : csv::split(s)) out.push_back(csv::to_double(f, source, line, key));
    return out;
}

LabeledDataset empty_like(const LabeledDataset& ds) {
    LabeledDataset out;
    out.feature_names = ds.feature_names;
    out.feature_set = ds.feature_set;
    out.frequency = ds.frequency;
    out.lag = ds.lag;
    out.normalization = ds.normalization;
    return out;
}

}  // namespace

std::string_view to_string(FeatureSet f) noexcept {
    switch (f) {
        case FeatureSet::restricted: return "restricted";
        case FeatureSet::technical_social: return "technical_social";
        case FeatureSet::unrestricted: return "unrestricted";
    }
    return "restricted";
}

FeatureSet parse_feature_set(std::string_view s) {
    if (s == "restricted") return FeatureSet::restricted;
    if (s == "technical_social") return FeatureSet::technical_social;
    if (s == "unrestricted") return FeatureSet::unrestricted;
    throw std::invalid_argument("unknown feature set '" + std::string(s) + "'");
}

Labels label_movements(const CandleSeries& candles, LabelSign sign) {
    if (candles.size() < 2) throw std::invalid_argument("labelling needs at least 2 bars");
    Labels out(candles.size() - 1);
    for (std::size_t t = 0; t + 1 < candles.size(); ++t) {
        double delta = candles[t + 1].open - candles[t].close;
        if (sign == LabelSign::inverted) delta = -delta;
        out[t] = delta > 0.0 ? 1 : 0;
    }
    return out;
}

LabeledDataset build_dataset(const CandleSeries& candles, const indicators::IndicatorFrame& frame,
                             const std::vector<AffectSeries>& affect, FeatureSet feature_set, int lag,
                             LabelSign sign) {
    if (lag < 1) throw std::invalid_argument("lag must be >= 1");
    const auto ts = candles.timestamps();
    const bool uses_trading = feature_set == FeatureSet::unrestricted;
    const bool uses_affect = feature_set != FeatureSet::restricted;

    const Series open = candles.opens(), high = candles.highs(), low = candles.lows(), close = candles.closes(),
                 volume = candles.volumes();
    std::vector<Column> cols = {
        {"open", &open}, {"high", &high}, {"low", &low}, {"close", &close}, {"volume", &volume}};

    if (uses_trading) {
        if (frame.columns.empty()) throw std::invalid_argument("feature set needs trading indicators, none given");
        if (frame.timestamps != ts) throw std::invalid_argument("indicator frame axis differs from candle axis");
        for (const auto& c : frame.columns) cols.push_back({c.name, &c.values});
    }
    if (uses_affect) {
        std::size_t n_affect = 0;
        for (const auto& a : affect) {
            if (a.frequency != candles.frequency()) throw std::invalid_argument("affect frequency differs from candles");
            if (a.timestamps != ts) throw std::invalid_argument("affect axis differs from candle axis");
            for (const auto& c : a.columns) cols.push_back({c.name, &c.values});
            n_affect += a.columns.size();
        }
        if (n_affect == 0) throw std::invalid_argument("feature set needs affect columns, none given");
    }
    for (std::size_t i = 0; i < cols.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (cols[i].name == cols[j].name) throw std::invalid_argument("duplicate column " + cols[i].name);

    LabeledDataset ds;
    ds.feature_set = feature_set;
    ds.frequency = candles.frequency();
    ds.lag = lag;
    const auto L = static_cast<std::size_t>(lag);
    for (std::size_t k = L; k-- > 0;)
        for (const auto& c : cols) ds.feature_names.push_back(k == 0 ? c.name : c.name + "_lag" + std::to_string(k));

    const auto n = candles.size();
    const auto d = ds.feature_names.size();
    const auto step = step_seconds(candles.frequency());
    std::vector<std::size_t> keep;
    Labels labels = n >= 2 ? label_movements(candles, sign) : Labels{};
    for (std::size_t t = L - 1; t + 1 < n; ++t) {
        if (ts[t + 1] - ts[t] != step) continue;
        if (ts[t] - ts[t + 1 - L] != static_cast<Timestamp>(L - 1) * step) continue;
        bool defined = true;
        for (std::size_t k = 0; k < L && defined; ++k)
            for (const auto& c : cols)
                if (!is_defined((*c.values)[t - k])) {
                    defined = false;
                    break;
                }
        if (defined) keep.push_back(t);
    }

    ds.X.resize(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(d));
    ds.y.reserve(keep.size());
    ds.timestamps.reserve(keep.size());
    for (std::size_t r = 0; r < keep.size(); ++r) {
        const auto t = keep[r];
        std::size_t j = 0;
        for (std::size_t k = L; k-- > 0;)
            for (const auto& c : cols) ds.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j++)) = (*c.values)[t - k];
        ds.y.push_back(labels[t]);
        ds.timestamps.push_back(ts[t]);
    }
    return ds;
}

LabeledDataset take_rows(const LabeledDataset& ds, std::span<const std::size_t> rows) {
    LabeledDataset out = empty_like(ds);
    out.X.resize(static_cast<Eigen::Index>(rows.size()), ds.X.cols());
    out.y.reserve(rows.size());
    out.timestamps.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= ds.rows()) throw std::out_of_range("row index out of range");
        out.X.row(static_cast<Eigen::Index>(i)) = ds.X.row(static_cast<Eigen::Index>(rows[i]));
        out.y.push_back(ds.y[rows[i]]);
        out.timestamps.push_back(ds.timestamps[rows[i]]);
    }
    return out;
}

std::array<LabeledDataset, 3> split(const LabeledDataset& ds, std::array<double, 3> fractions) {
    double sum = 0.0;
    for (double f : fractions) {
        if (!(f > 0.0)) throw std::invalid_argument("split fractions must be positive");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("split fractions must sum to 1");
    const auto n = ds.rows();
    const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fractions[1] + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fractions[2] + 1e-9));
    if (n_val == 0 || n_test == 0 || n_val + n_test >= n)
        throw std::invalid_argument("split of " + std::to_string(n) + " rows leaves an empty partition");
    const auto n_train = n - n_val - n_test;

    std::array<LabeledDataset, 3> out;
    std::size_t begin = 0;
    const std::size_t sizes[] = {n_train, n_val, n_test};
    for (int p = 0; p < 3; ++p) {
        std::vector<std::size_t> idx(sizes[p]);
        for (std::size_t i = 0; i < sizes[p]; ++i) idx[i] = begin + i;
        out[p] = take_rows(ds, idx);
        begin += sizes[p];
    }
    return out;
}

Normalization fit_normalization(const LabeledDataset& train) {
    if (train.rows() == 0) throw std::invalid_argument("cannot fit normalization on an empty dataset");
    const auto d = train.dims();
    Normalization n;
    n.mean.resize(d);
    n.std.resize(d);
    n.passthrough.resize(d);
    const double rows = static_cast<double>(train.rows());
    for (std::size_t j = 0; j < d; ++j) {
        const auto col = train.X.col(static_cast<Eigen::Index>(j));
        const double mean = col.sum() / rows;
        const double var = (col.array() - mean).square().sum() / rows;
        const double sd = std::sqrt(var);
        n.mean[j] = mean;
        n.std[j] = sd;
        n.passthrough[j] = !(sd > 1e-12 * std::max(1.0, std::abs(mean)));
    }
    return n;
}

void apply_normalization(LabeledDataset& ds, const Normalization& n) {
    if (n.mean.size() != ds.dims()) throw std::invalid_argument("normalization width differs from dataset");
    for (std::size_t j = 0; j < ds.dims(); ++j) {
        if (n.passthrough[j]) continue;
        auto col = ds.X.col(static_cast<Eigen::Index>(j));
        col = (col.array() - n.mean[j]) / n.std[j];
    }
    ds.normalization = n;
}

Normalization normalize(LabeledDataset& train, std::span<LabeledDataset> others) {
    auto n = fit_normalization(train);
    apply_normalization(train, n);
    for (auto& o : others) apply_normalization(o, n);
    return n;
}

double ClassDistribution::down_percent_rounded() const {
    return std::round(down_percent * 10.0) / 10.0;
}

double ClassDistribution::up_percent_rounded() const {
    return std::round(up_percent * 10.0) / 10.0;
}

ClassDistribution class_distribution(const Labels& y) {
    if (y.empty()) throw std::invalid_argument("class distribution of an empty label set");
    ClassDistribution c;
    for (int v : y) {
        if (v == 1)
            ++c.up;
        else if (v == 0)
            ++c.down;
        else
            throw std::invalid_argument("label outside {0,1}");
    }
    const double n = static_cast<double>(y.size());
    c.down_percent = static_cast<double>(c.down) / n * 100.0;
    c.up_percent = static_cast<double>(c.up) / n * 100.0;
    return c;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
    auto p = csv_path;
    p.replace_extension(".meta");
    return p;
}

void export_dataset(const LabeledDataset& ds, const std::filesystem::path& csv_path) {
    {
        std::ofstream out(csv_path, std::ios::binary);
        if (!out) throw IoError("cannot write " + csv_path.string());
        out << "timestamp";
        for (const auto& f : ds.feature_names) out << ',' << f;
        out << ",label\n";
        for (std::size_t r = 0; r < ds.rows(); ++r) {
            out << ds.timestamps[r];
            for (std::size_t j = 0; j < ds.dims(); ++j)
                out << ',' << csv::format_double(ds.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)));
            out << ',' << ds.y[r] << '\n';
        }
        if (!out) throw IoError("failed writing " + csv_path.string());
    }
    std::ofstream meta(sidecar_path(csv_path), std::ios::binary);
    if (!meta) throw IoError("cannot write " + sidecar_path(csv_path).string());
    meta << "feature_set=" << to_string(ds.feature_set) << '\n'
         << "frequency=" << to_string(ds.frequency) << '\n'
         << "lag=" << ds.lag << '\n'
         << "rows=" << ds.rows() << '\n'
         << "features=" << ds.dims() << '\n';
    if (ds.normalization) {
        const auto& n = *ds.normalization;
        std::vector<double> flags(n.passthrough.begin(), n.passthrough.end());
        meta << "normalization=zscore\n"
             << "normalization.mean=" << join_doubles(n.mean) << '\n'
             << "normalization.std=" << join_doubles(n.std) << '\n'
             << "normalization.passthrough=" << join_doubles(flags) << '\n';
    } else {
        meta << "normalization=none\n";
    }
    if (!meta) throw IoError("failed writing " + sidecar_path(csv_path).string());
}

LabeledDataset import_dataset(const std::filesystem::path& csv_path) {
    const auto meta_path = sidecar_path(csv_path);
    std::ifstream meta(meta_path);
    if (!meta) throw IoError("cannot open " + meta_path.string());
    std::map<std::string, std::string, std::less<>> kv;
    std::map<std::string, std::size_t, std::less<>> kv_line;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(meta, line)) {
        ++line_no;
        if (csv::is_blank(line)) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(meta_path.string(), line_no, "expected key=value");
        auto value = line.substr(eq + 1);
        if (!value.empty() && value.back() == '\r') value.pop_back();
        kv[line.substr(0, eq)] = value;
        kv_line[line.substr(0, eq)] = line_no;
    }
    auto get = [&](std::string_view key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw ValidationError(meta_path.string() + ": missing key " + std::string(key));
        return it->second;
    };

    LabeledDataset ds;
    try {
        ds.feature_set = parse_feature_set(get("feature_set"));
        ds.frequency = parse_frequency(get("frequency"));
    } catch (const std::invalid_argument& e) {
        throw ValidationError(meta_path.string() + ": " + e.what());
    }
    ds.lag = static_cast<int>(csv::to_int(get("lag"), meta_path.string(), kv_line["lag"], "lag"));
    const auto rows = static_cast<std::size_t>(csv::to_int(get("rows"), meta_path.string(), kv_line["rows"], "rows"));
    const auto d =
        static_cast<std::size_t>(csv::to_int(get("features"), meta_path.string(), kv_line["features"], "features"));

    std::ifstream in(csv_path);
    if (!in) throw IoError("cannot open " + csv_path.string());
    const auto src = csv_path.string();
    line_no = 0;
    if (!std::getline(in, line)) throw ParseError(src, 1, "missing header row");
    ++line_no;
    auto header = csv::split(line);
    if (header.size() != d + 2 || header.front() != "timestamp" || header.back() != "label")
        throw ParseError(src, line_no, "header does not match sidecar feature count");
    for (std::size_t j = 0; j < d; ++j) ds.feature_names.emplace_back(header[j + 1]);

    ds.X.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));
    std::size_t r = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::is_blank(line)) continue;
        auto f = csv::split(line);
        if (f.size() != d + 2) throw ParseError(src, line_no, "expected " + std::to_string(d + 2) + " columns");
        if (r >= rows) throw ParseError(src, line_no, "more rows than the sidecar declares");
        ds.timestamps.push_back(csv::to_int(f[0], src, line_no, "timestamp"));
        for (std::size_t j = 0; j < d; ++j)
            ds.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
                csv::to_double(f[j + 1], src, line_no, ds.feature_names[j]);
        const auto label = csv::to_int(f.back(), src, line_no, "label");
        if (label != 0 && label != 1) throw ValidationError(src + ":" + std::to_string(line_no) + ": label outside {0,1}");
        ds.y.push_back(static_cast<int>(label));
        ++r;
    }
    if (r != rows) throw ValidationError(src + ": sidecar declares " + std::to_string(rows) + " rows, found " + std::to_string(r));

    if (get("normalization") == "zscore") {
        Normalization n;
        n.mean = split_doubles(get("normalization.mean"), meta_path.string(), kv_line["normalization.mean"], "mean");
        n.std = split_doubles(get("normalization.std"), meta_path.string(), kv_line["normalization.std"], "std");
        for (double v : split_doubles(get("normalization.passthrough"), meta_path.string(),
                                      kv_line["normalization.passthrough"], "passthrough"))
            n.passthrough.push_back(v != 0.0);
        if (n.mean.size() != d || n.std.size() != d || n.passthrough.size() != d)
            throw ValidationError(meta_path.string() + ": normalization width differs from feature count");
        ds.normalization = std::move(n);
    }
    return ds;
}

}  // namespace cryptomove
