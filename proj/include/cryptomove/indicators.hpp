#pragma once

// Trading indicators computed from candle data.
//
// Conventions shared by every function here:
//  * outputs have the input length; leading warm-up entries are kUndefined;
//  * windows are counted in bars and must be >= 1 (>= 2 for dispersion
//    measures, which use the sample standard deviation);
//  * a window longer than the series yields an all-undefined output;
//  * recursive smoothers (EMA, Wilder) seed with the simple mean of their
//    first `window` defined inputs.

#include "cryptomove/ingest.hpp"
#include "cryptomove/series.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cryptomove::indicators {

using Prices = std::span<const double>;

Series sma(Prices x, int window);
/// Linear weights 1..window, newest bar weighted `window`.
Series wma(Prices x, int window);
/// alpha = 2 / (window + 1).
Series ema(Prices x, int window);
/// Wilder smoothing, alpha = 1 / window.
Series wilder(Prices x, int window);
/// Wilder-smoothed gains over losses. 50 when both averages are zero.
Series rsi(Prices close, int window);
/// Fractional change over `window` bars; undefined where the base price is 0.
Series roc(Prices close, int window);
Series momentum(Prices close, int window);
Series obv(Prices close, Prices volume);

Series mstd(Prices x, int window);
Series mvar(Prices x, int window);

Series middle(Prices high, Prices low, Prices close);
Series log_return(Prices close);
Series max_in_range(Prices x, int window);
Series min_in_range(Prices x, int window);
/// Zero-based rank of x[t] among x[t-window+1..t] (count of strictly smaller values).
Series permutation(Prices x, int window);

enum class CompareOp { le, ge, lt, gt, eq, ne };
/// 1 where x[t] <op> x[t-shift], else 0.
Series compare(Prices x, CompareOp op, int shift);
/// Number of rising bars (x[k] > x[k-1]) among the last `window` bars.
Series count_rising(Prices x, int window);

/// 100 * (close - lowest low) / (highest high - lowest low); 50 on a flat range.
Series rsv(Prices high, Prices low, Prices close, int window);

struct Kdj {
    Series k, d, j;
};
/// K and D start from 50 and follow X_t = 2/3 X_{t-1} + 1/3 input_t.
Kdj kdj(Prices high, Prices low, Prices close, int window);

struct Bollinger {
    Series middle, upper, lower;
};
Bollinger bollinger(Prices close, int window, double width = 2.0);

struct Macd {
    Series line, signal, histogram;
};
Macd macd(Prices close, int fast = 12, int slow = 26, int signal = 5);

/// Energy index: 100 * sum(max(high - mid_{t-1}, 0)) / sum(max(mid_{t-1} - low, 0)).
Series cr(Prices high, Prices low, Prices close, int window);
/// Williams %R in [-100, 0]; -50 on a flat range.
Series wr(Prices high, Prices low, Prices close, int window);
/// (tp - sma(tp)) / (0.015 * mean absolute deviation); 0 when the deviation is 0.
Series cci(Prices high, Prices low, Prices close, int window);
/// max(high - low, |high - close_{t-1}|, |low - close_{t-1}|); high - low on the first bar.
Series true_range(Prices high, Prices low, Prices close);
Series atr(Prices high, Prices low, Prices close, int window);
/// +1 when close crosses above sma(close, window), -1 when it crosses below, else 0.
Series cross(Prices close, int window);
Series dma(Prices close, int fast = 10, int slow = 50);

struct Dmi {
    Series plus_di, minus_di, dx;
};
Dmi dmi(Prices high, Prices low, Prices close, int window);
Series adx(Prices high, Prices low, Prices close, int di_window, int window);
Series adxr(Prices high, Prices low, Prices close, int di_window, int adx_window, int window);

/// 100 * one-bar fractional change of the triple-smoothed EMA.
Series trix(Prices close, int window);
/// 3*ema1 - 3*ema2 + ema3.
Series tema(Prices close, int window);
/// 100 * (up volume + half flat volume) / (down volume + half flat volume).
Series vr(Prices close, Prices volume, int window);

/// Shifts a series `lag` bars into the future (out[t] = in[t-lag]).
Series apply_lag(const Series& s, int lag);

// ---------------------------------------------------------------------------

class UnsupportedIndicator : public std::invalid_argument {
public:
    explicit UnsupportedIndicator(const std::string& name);
};

struct IndicatorSpec {
    std::string name;
    std::optional<int> window;
    int lag = 0;
    std::map<std::string, double> params;

    /// `name` or `name_<window>`; used as the frame column name.
    std::string column_name() const;
};

/// All indicator names accepted by compute_indicator.
const std::vector<std::string>& supported_indicators();

/// The 36-column default catalogue, with default windows and lags.
std::vector<IndicatorSpec> default_catalogue();

Series compute_indicator(const IndicatorSpec& spec, const CandleSeries& candles);

struct IndicatorColumn {
    std::string name;
    Series values;
    std::size_t warmup = 0;
};

struct IndicatorFrame {
    std::vector<Timestamp> timestamps;
    std::vector<IndicatorColumn> columns;

    const IndicatorColumn& column(std::string_view name) const;
    /// Largest warm-up over all columns.
    std::size_t warmup() const noexcept;
};

IndicatorFrame indicator_frame(const CandleSeries& candles, const std::vector<IndicatorSpec>& specs);

/// `timestamp,<name1>,...` with empty cells for undefined entries.
void write_frame_csv(std::ostream& out, const IndicatorFrame& frame);

}  // namespace cryptomove::indicators
