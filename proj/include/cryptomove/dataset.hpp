#pragma once

#include "cryptomove/affect.hpp"
#include "cryptomove/indicators.hpp"
#include "cryptomove/ingest.hpp"

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cryptomove {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Labels = std::vector<int>;

/// restricted: OHLCV only. technical_social: OHLCV + affect.
/// unrestricted: OHLCV + trading indicators + affect.
enum class FeatureSet { restricted, technical_social, unrestricted };

std::string_view to_string(FeatureSet f) noexcept;
FeatureSet parse_feature_set(std::string_view s);

/// rising: up iff open[t+1] - close[t] > 0. inverted flips the sign of the
/// difference (ties stay down under both).
enum class LabelSign { rising, inverted };

/// Per-feature z-score parameters fitted on a training partition.
struct Normalization {
    std::vector<double> mean;
    std::vector<double> std;
    std::vector<bool> passthrough;  // zero-variance features left unscaled
};

struct LabeledDataset {
    std::vector<std::string> feature_names;
    Matrix X;
    Labels y;
    std::vector<Timestamp> timestamps;  // time t of each row
    FeatureSet feature_set = FeatureSet::restricted;
    Frequency frequency = Frequency::hourly;
    int lag = 1;
    std::optional<Normalization> normalization;

    std::size_t rows() const noexcept { return y.size(); }
    std::size_t dims() const noexcept { return feature_names.size(); }
};

/// label[t] for t in [0, n-2]; bars are taken as consecutive.
Labels label_movements(const CandleSeries& candles, LabelSign sign = LabelSign::rising);

/// Row t holds the selected columns at t-lag+1 .. t, oldest block first.
/// Names are plain for time t and `<name>_lag<k>` for time t-k. Rows are
/// dropped if any entry is undefined, the window is not contiguous on the
/// grid, or bar t+1 is missing. All frames must share the candle axis.
LabeledDataset build_dataset(const CandleSeries& candles, const indicators::IndicatorFrame& frame,
                             const std::vector<AffectSeries>& affect, FeatureSet feature_set, int lag,
                             LabelSign sign = LabelSign::rising);

/// Chronological split; floor allocation for val and test, remainder to train.
std::array<LabeledDataset, 3> split(const LabeledDataset& ds, std::array<double, 3> fractions);

LabeledDataset take_rows(const LabeledDataset& ds, std::span<const std::size_t> rows);

Normalization fit_normalization(const LabeledDataset& train);
void apply_normalization(LabeledDataset& ds, const Normalization& n);

/// Fits on `train`, then transforms `train` and every dataset in `others`.
Normalization normalize(LabeledDataset& train, std::span<LabeledDataset> others = {});

struct ClassDistribution {
    std::size_t down = 0;
    std::size_t up = 0;
    double down_percent = 0.0;  // exact
    double up_percent = 0.0;

    std::size_t total() const noexcept { return down + up; }
    /// Percentages rounded to one decimal place.
    double down_percent_rounded() const;
    double up_percent_rounded() const;
};

ClassDistribution class_distribution(const Labels& y);

/// `<stem>.csv` holds `timestamp,<features...>,label`; `<stem>.meta` holds
/// key=value metadata including normalization statistics.
void export_dataset(const LabeledDataset& ds, const std::filesystem::path& csv_path);
LabeledDataset import_dataset(const std::filesystem::path& csv_path);

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

}  // namespace cryptomove
