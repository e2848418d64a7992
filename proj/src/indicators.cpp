#include "cryptomove/indicators.hpp"

#include "csv.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>
#include <set>

namespace cryptomove::indicators {

namespace {

void require_window(int window, int minimum = 1) {
    if (window < minimum)
        throw std::invalid_argument("window must be >= " + std::to_string(minimum) + ", got " +
                                    std::to_string(window));
}

void require_same_length(Prices a, Prices b) {
    if (a.size() != b.size()) throw std::invalid_argument("input series have different lengths");
}

void require_same_length(Prices a, Prices b, Prices c) {
    require_same_length(a, b);
    require_same_length(a, c);
}

std::size_t as_size(int w) { return static_cast<std::size_t>(w); }

// Exponential smoothing with the given alpha. Seeds with the mean of the first
// `window` consecutive defined inputs and restarts after an undefined input.
Series smooth(Prices x, int window, double alpha) {
    require_window(window);
    const auto w = as_size(window);
    Series out = undefined_series(x.size());
    std::size_t run = 0;
    double run_sum = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        if (!is_defined(x[t])) {
            run = 0;
            run_sum = 0.0;
            continue;
        }
        ++run;
        if (run < w) {
            run_sum += x[t];
        } else if (run == w) {
            run_sum += x[t];
            out[t] = run_sum / static_cast<double>(w);
        } else {
            out[t] = out[t - 1] + alpha * (x[t] - out[t - 1]);
        }
    }
    return out;
}

// Sliding extreme over `window` bars via a monotonic deque.
template <typename Better>
Series rolling_extreme(Prices x, int window, Better better) {
    require_window(window);
    const auto w = as_size(window);
    Series out = undefined_series(x.size());
    std::deque<std::size_t> idx;
    for (std::size_t t = 0; t < x.size(); ++t) {
        while (!idx.empty() && !better(x[idx.back()], x[t])) idx.pop_back();
        idx.push_back(t);
        if (idx.front() + w <= t) idx.pop_front();
        if (t + 1 >= w) out[t] = x[idx.front()];
    }
    return out;
}

// Sliding sum of a series whose entries from `first` on are defined.
Series rolling_sum(const Series& x, std::size_t first, int window) {
    const auto w = as_size(window);
    Series out = undefined_series(x.size());
    double sum = 0.0;
    for (std::size_t t = first; t < x.size(); ++t) {
        sum += x[t];
        if (t >= first + w) sum -= x[t - w];
        if (t + 1 >= first + w) out[t] = sum;
    }
    return out;
}

}  // namespace

Series sma(Prices x, int window) {
    require_window(window);
    const auto w = as_size(window);
    Series out = undefined_series(x.size());
    if (x.empty()) return out;
    // Offsetting by the first value keeps the running sum small.
    const double ref = x[0];
    double sum = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        sum += x[t] - ref;
        if (t >= w) sum -= x[t - w] - ref;
        if (t + 1 >= w) out[t] = ref + sum / static_cast<double>(w);
    }
    return out;
}

Series wma(Prices x, int window) {
    require_window(window);
    const auto w = as_size(window);
    Series out = undefined_series(x.size());
    if (x.size() < w) return out;
    const double ref = x[0];
    const double norm = static_cast<double>(w) * static_cast<double>(w + 1) / 2.0;
    double plain = 0.0;     // sum of (x - ref) over the window
    double weighted = 0.0;  // sum of k * (x - ref), k = 1..w
    for (std::size_t k = 0; k < w; ++k) {
        plain += x[k] - ref;
        weighted += static_cast<double>(k + 1) * (x[k] - ref);
    }
    out[w - 1] = ref + weighted / norm;
    for (std::size_t t = w; t < x.size(); ++t) {
        weighted += static_cast<double>(w) * (x[t] - ref) - plain;
        plain += (x[t] - ref) - (x[t - w] - ref);
        out[t] = ref + weighted / norm;
    }
    return out;
}

Series ema(Prices x, int window) {
    require_window(window);
    return smooth(x, window, 2.0 / (window + 1.0));
}

Series wilder(Prices x, int window) {
    require_window(window);
    return smooth(x, window, 1.0 / window);
}

Series rsi(Prices close, int window) {
    require_window(window);
    const auto n = close.size();
    Series gain = undefined_series(n), loss = undefined_series(n);
    for (std::size_t t = 1; t < n; ++t) {
        const double d = close[t] - close[t - 1];
        gain[t] = d > 0 ? d : 0.0;
        loss[t] = d < 0 ? -d : 0.0;
    }
    const auto g = wilder(gain, window);
    const auto l = wilder(loss, window);
    Series out = undefined_series(n);
    for (std::size_t t = 0; t < n; ++t) {
        if (!is_defined(g[t])) continue;
        const double total = g[t] + l[t];
        out[t] = total == 0.0 ? 50.0 : 100.0 * g[t] / total;
    }
    return out;
}

Series roc(Prices close, int window) {
    require_window(window);
    const auto w = as_size(window);
    Series out = undefined_series(close.size());
    for (std::size_t t = w; t < close.size(); ++t) {
        const double base = close[t - w];
        if (base != 0.0) out[t] = (close[t] - base) / base;
    }
    return out;
}

Series momentum(Prices close, int window) {
    require_window(window);
    const auto w = as_size(window);
    Series out = undefined_series(close.size());
    for (std::size_t t = w; t < close.size(); ++t) out[t] = close[t] - close[t - w];
    return out;
}

Series obv(Prices close, Prices volume) {
    require_same_length(close, volume);
    Series out(close.size());
    for (std::size_t t = 0; t < close.size(); ++t) {
        if (t == 0) {
            out[t] = volume[0];
        } else if (close[t] > close[t - 1]) {
            out[t] = out[t - 1] + volume[t];
        } else if (close[t] < close[t - 1]) {
            out[t] = out[t - 1] - volume[t];
        } else {
            out[t] = out[t - 1];
        }
    }
    return out;
}

Series mvar(Prices x, int window) {
    require_window(window, 2);
    const auto w = as_size(window);
    Series out = undefined_series(x.size());
    if (x.empty()) return out;
    const double ref = x[0];
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        const double d = x[t] - ref;
        s1 += d;
        s2 += d * d;
        if (t >= w) {
            const double old = x[t - w] - ref;
            s1 -= old;
            s2 -= old * old;
        }
        if (t + 1 >= w) {
            const double var = (s2 - s1 * s1 / static_cast<double>(w)) / static_cast<double>(w - 1);
            out[t] = std::max(var, 0.0);
        }
    }
    return out;
}

Series mstd(Prices x, int window) {
    auto out = mvar(x, window);
    for (auto& v : out)
        if (is_defined(v)) v = std::sqrt(v);
    return out;
}

Series middle(Prices high, Prices low, Prices close) {
    require_same_length(high, low, close);
    Series out(close.size());
    for (std::size_t t = 0; t < close.size(); ++t) out[t] = (close[t] + high[t] + low[t]) / 3.0;
    return out;
}

Series log_return(Prices close) {
    Series out = undefined_series(close.size());
    for (std::size_t t = 1; t < close.size(); ++t)
        if (close[t] > 0.0 && close[t - 1] > 0.0) out[t] = std::log(close[t] / close[t - 1]);
    return out;
}

Series max_in_range(Prices x, int window) {
    return rolling_extreme(x, window, [](double kept, double incoming) { return kept > incoming; });
}

Series min_in_range(Prices x, int window) {
    return rolling_extreme(x, window, [](double kept, double incoming) { return kept < incoming; });
}

Series permutation(Prices x, int window) {
    require_window(window);
    const auto w = as_size(window);
    Series out = undefined_series(x.size());
    for (std::size_t t = w - 1; t < x.size(); ++t) {
        int rank = 0;
        for (std::size_t k = t + 1 - w; k < t; ++k)
            if (x[k] < x[t]) ++rank;
        out[t] = rank;
    }
    return out;
}

Series compare(Prices x, CompareOp op, int shift) {
    require_window(shift);
    const auto s = as_size(shift);
    Series out = undefined_series(x.size());
    for (std::size_t t = s; t < x.size(); ++t) {
        const double a = x[t], b = x[t - s];
        bool r = false;
        switch (op) {
            case CompareOp::le: r = a <= b; break;
            case CompareOp::ge: r = a >= b; break;
            case CompareOp::lt: r = a < b; break;
            case CompareOp::gt: r = a > b; break;
            case CompareOp::eq: r = a == b; break;
            case CompareOp::ne: r = a != b; break;
        }
        out[t] = r ? 1.0 : 0.0;
    }
    return out;
}

Series count_rising(Prices x, int window) {
    require_window(window);
    Series rising = undefined_series(x.size());
    for (std::size_t t = 1; t < x.size(); ++t) rising[t] = x[t] > x[t - 1] ? 1.0 : 0.0;
    return rolling_sum(rising, 1, window);
}

Series rsv(Prices high, Prices low, Prices close, int window) {
    require_same_length(high, low, close);
    const auto hh = max_in_range(high, window);
    const auto ll = min_in_range(low, window);
    Series out = undefined_series(close.size());
    for (std::size_t t = 0; t < close.size(); ++t) {
        if (!is_defined(hh[t])) continue;
        const double range = hh[t] - ll[t];
        out[t] = range == 0.0 ? 50.0 : 100.0 * (close[t] - ll[t]) / range;
    }
    return out;
}

Kdj kdj(Prices high, Prices low, Prices close, int window) {
    const auto raw = rsv(high, low, close, window);
    const auto n = close.size();
    Kdj out{undefined_series(n), undefined_series(n), undefined_series(n)};
    double k = 50.0, d = 50.0;
    for (std::size_t t = 0; t < n; ++t) {
        if (!is_defined(raw[t])) continue;
        k = 2.0 / 3.0 * k + raw[t] / 3.0;
        d = 2.0 / 3.0 * d + k / 3.0;
        out.k[t] = k;
        out.d[t] = d;
        out.j[t] = 3.0 * k - 2.0 * d;
    }
    return out;
}

Bollinger bollinger(Prices close, int window, double width) {
    Bollinger b{sma(close, window), undefined_series(close.size()), undefined_series(close.size())};
    const auto sd = mstd(close, window);
    for (std::size_t t = 0; t < close.size(); ++t) {
        if (!is_defined(sd[t])) continue;
        b.upper[t] = b.middle[t] + width * sd[t];
        b.lower[t] = b.middle[t] - width * sd[t];
    }
    return b;
}

Macd macd(Prices close, int fast, int slow, int signal) {
    require_window(fast);
    require_window(slow);
    require_window(signal);
    if (fast >= slow) throw std::invalid_argument("macd: fast window must be shorter than slow window");
    const auto f = ema(close, fast);
    const auto s = ema(close, slow);
    Macd out{undefined_series(close.size()), {}, undefined_series(close.size())};
    for (std::size_t t = 0; t < close.size(); ++t)
        if (is_defined(s[t])) out.line[t] = f[t] - s[t];
    out.signal = ema(out.line, signal);
    for (std::size_t t = 0; t < close.size(); ++t)
        if (is_defined(out.signal[t])) out.histogram[t] = out.line[t] - out.signal[t];
    return out;
}

Series cr(Prices high, Prices low, Prices close, int window) {
    require_window(window);
    const auto mid = middle(high, low, close);
    const auto n = close.size();
    Series up = undefined_series(n), down = undefined_series(n);
    for (std::size_t t = 1; t < n; ++t) {
        up[t] = std::max(high[t] - mid[t - 1], 0.0);
        down[t] = std::max(mid[t - 1] - low[t], 0.0);
    }
    const auto su = rolling_sum(up, 1, window);
    const auto sd = rolling_sum(down, 1, window);
    Series out = undefined_series(n);
    for (std::size_t t = 0; t < n; ++t)
        if (is_defined(sd[t]) && sd[t] != 0.0) out[t] = 100.0 * su[t] / sd[t];
    return out;
}

Series wr(Prices high, Prices low, Prices close, int window) {
    require_same_length(high, low, close);
    const auto hh = max_in_range(high, window);
    const auto ll = min_in_range(low, window);
    Series out = undefined_series(close.size());
    for (std::size_t t = 0; t < close.size(); ++t) {
        if (!is_defined(hh[t])) continue;
        const double range = hh[t] - ll[t];
        out[t] = range == 0.0 ? -50.0 : 100.0 * (close[t] - hh[t]) / range;
    }
    return out;
}

Series cci(Prices high, Prices low, Prices close, int window) {
    require_window(window);
    const auto w = as_size(window);
    const auto tp = middle(high, low, close);
    const auto mean = sma(tp, window);
    Series out = undefined_series(close.size());
    for (std::size_t t = 0; t < close.size(); ++t) {
        if (!is_defined(mean[t])) continue;
        double dev = 0.0;
        for (std::size_t k = t + 1 - w; k <= t; ++k) dev += std::abs(tp[k] - mean[t]);
        dev /= static_cast<double>(w);
        out[t] = dev == 0.0 ? 0.0 : (tp[t] - mean[t]) / (0.015 * dev);
    }
    return out;
}

Series true_range(Prices high, Prices low, Prices close) {
    require_same_length(high, low, close);
    Series out(close.size());
    for (std::size_t t = 0; t < close.size(); ++t) {
        double r = high[t] - low[t];
        if (t > 0) {
            r = std::max({r, std::abs(high[t] - close[t - 1]), std::abs(low[t] - close[t - 1])});
        }
        out[t] = r;
    }
    return out;
}

Series atr(Prices high, Prices low, Prices close, int window) {
    return wilder(true_range(high, low, close), window);
}

Series cross(Prices close, int window) {
    const auto avg = sma(close, window);
    Series out = undefined_series(close.size());
    for (std::size_t t = 1; t < close.size(); ++t) {
        if (!is_defined(avg[t - 1])) continue;
        const double before = close[t - 1] - avg[t - 1];
        const double now = close[t] - avg[t];
        out[t] = (before <= 0.0 && now > 0.0) ? 1.0 : (before >= 0.0 && now < 0.0) ? -1.0 : 0.0;
    }
    return out;
}

Series dma(Prices close, int fast, int slow) {
    require_window(fast);
    require_window(slow);
    const auto a = sma(close, fast);
    const auto b = sma(close, slow);
    Series out = undefined_series(close.size());
    for (std::size_t t = 0; t < close.size(); ++t)
        if (is_defined(a[t]) && is_defined(b[t])) out[t] = a[t] - b[t];
    return out;
}

Dmi dmi(Prices high, Prices low, Prices close, int window) {
    require_same_length(high, low, close);
    require_window(window);
    const auto n = close.size();
    const auto tr = true_range(high, low, close);
    Series plus = undefined_series(n), minus = undefined_series(n), range = undefined_series(n);
    for (std::size_t t = 1; t < n; ++t) {
        const double up = high[t] - high[t - 1];
        const double down = low[t - 1] - low[t];
        plus[t] = (up > down && up > 0.0) ? up : 0.0;
        minus[t] = (down > up && down > 0.0) ? down : 0.0;
        range[t] = tr[t];
    }
    const auto sp = wilder(plus, window);
    const auto sm = wilder(minus, window);
    const auto sr = wilder(range, window);
    Dmi out{undefined_series(n), undefined_series(n), undefined_series(n)};
    for (std::size_t t = 0; t < n; ++t) {
        if (!is_defined(sr[t])) continue;
        const double p = sr[t] == 0.0 ? 0.0 : 100.0 * sp[t] / sr[t];
        const double m = sr[t] == 0.0 ? 0.0 : 100.0 * sm[t] / sr[t];
        out.plus_di[t] = p;
        out.minus_di[t] = m;
        out.dx[t] = (p + m) == 0.0 ? 0.0 : 100.0 * std::abs(p - m) / (p + m);
    }
    return out;
}

Series adx(Prices high, Prices low, Prices close, int di_window, int window) {
    return wilder(dmi(high, low, close, di_window).dx, window);
}

Series adxr(Prices high, Prices low, Prices close, int di_window, int adx_window, int window) {
    return wilder(adx(high, low, close, di_window, adx_window), window);
}

Series trix(Prices close, int window) {
    const auto e3 = ema(ema(ema(close, window), window), window);
    Series out = undefined_series(close.size());
    for (std::size_t t = 1; t < close.size(); ++t)
        if (is_defined(e3[t - 1]) && e3[t - 1] != 0.0) out[t] = 100.0 * (e3[t] - e3[t - 1]) / e3[t - 1];
    return out;
}

Series tema(Prices close, int window) {
    const auto e1 = ema(close, window);
    const auto e2 = ema(e1, window);
    const auto e3 = ema(e2, window);
    Series out = undefined_series(close.size());
    for (std::size_t t = 0; t < close.size(); ++t)
        if (is_defined(e3[t])) out[t] = 3.0 * e1[t] - 3.0 * e2[t] + e3[t];
    return out;
}

Series vr(Prices close, Prices volume, int window) {
    require_same_length(close, volume);
    require_window(window);
    const auto n = close.size();
    const auto w = as_size(window);
    Series out = undefined_series(n);
    for (std::size_t t = w; t < n; ++t) {
        double up = 0.0, down = 0.0, flat = 0.0;
        for (std::size_t k = t + 1 - w; k <= t; ++k) {
            if (close[k] > close[k - 1]) up += volume[k];
            else if (close[k] < close[k - 1]) down += volume[k];
            else flat += volume[k];
        }
        const double den = down + flat / 2.0;
        if (den != 0.0) out[t] = 100.0 * (up + flat / 2.0) / den;
    }
    return out;
}

Series apply_lag(const Series& s, int lag) {
    if (lag < 0) throw std::invalid_argument("lag must be >= 0");
    const auto l = as_size(lag);
    Series out = undefined_series(s.size());
    for (std::size_t t = l; t < s.size(); ++t) out[t] = s[t - l];
    return out;
}

// ---------------------------------------------------------------------------
// Catalogue and dispatch

namespace {

const std::vector<std::string> kSupported = {
    "sma",   "wma",    "ema",         "rsi",      "roc",   "mom",   "obv",   "permutation", "log_return",
    "max",   "min",    "middle",      "compare",  "count", "mstd",  "mvar",  "rsv",         "kdj_k",
    "kdj_d", "kdj_j",  "boll",        "boll_ub",  "boll_lb", "macd", "macd_signal", "macd_hist", "cr",
    "wr",    "cci",    "tr",          "atr",      "cross", "dma",   "pdi",   "mdi",         "dx",
    "adx",   "adxr",   "trix",        "tema",     "vr"};

// Indicators that take no window at all.
const std::set<std::string, std::less<>> kWindowless = {"obv", "log_return", "middle", "compare", "tr", "dma"};

std::string join_catalogue() {
    std::string s;
    for (const auto& n : kSupported) s += (s.empty() ? "" : ", ") + n;
    return s;
}

int default_window(std::string_view name) {
    if (name == "macd" || name == "macd_signal" || name == "macd_hist" || name == "adx") return 5;
    return 10;
}

double param(const IndicatorSpec& spec, const std::string& key, double fallback) {
    auto it = spec.params.find(key);
    return it == spec.params.end() ? fallback : it->second;
}

int int_param(const IndicatorSpec& spec, const std::string& key, int fallback) {
    const double v = param(spec, key, fallback);
    if (v != std::floor(v)) throw std::invalid_argument(spec.name + ": parameter " + key + " must be integral");
    return static_cast<int>(v);
}

Series dispatch(const IndicatorSpec& spec, const CandleSeries& candles) {
    const auto& name = spec.name;
    const int w = spec.window.value_or(default_window(name));
    const auto h = candles.highs();
    const auto l = candles.lows();
    const auto c = candles.closes();
    const auto v = candles.volumes();

    if (name == "sma") return sma(c, w);
    if (name == "wma") return wma(c, w);
    if (name == "ema") return ema(c, w);
    if (name == "rsi") return rsi(c, w);
    if (name == "roc") return roc(c, w);
    if (name == "mom") return momentum(c, w);
    if (name == "obv") return obv(c, v);
    if (name == "permutation") return permutation(c, w);
    if (name == "log_return") return log_return(c);
    if (name == "max") return max_in_range(c, w);
    if (name == "min") return min_in_range(c, w);
    if (name == "middle") return middle(h, l, c);
    if (name == "compare") {
        const int op = int_param(spec, "op", static_cast<int>(CompareOp::gt));
        if (op < 0 || op > 5) throw std::invalid_argument("compare: op code must be in 0..5");
        return compare(c, static_cast<CompareOp>(op), int_param(spec, "shift", 1));
    }
    if (name == "count") return count_rising(c, w);
    if (name == "mstd") return mstd(c, w);
    if (name == "mvar") return mvar(c, w);
    if (name == "rsv") return rsv(h, l, c, w);
    if (name == "kdj_k") return kdj(h, l, c, w).k;
    if (name == "kdj_d") return kdj(h, l, c, w).d;
    if (name == "kdj_j") return kdj(h, l, c, w).j;
    if (name == "boll") return bollinger(c, w, param(spec, "width", 2.0)).middle;
    if (name == "boll_ub") return bollinger(c, w, param(spec, "width", 2.0)).upper;
    if (name == "boll_lb") return bollinger(c, w, param(spec, "width", 2.0)).lower;
    if (name == "macd" || name == "macd_signal" || name == "macd_hist") {
        auto m = macd(c, int_param(spec, "fast", 12), int_param(spec, "slow", 26), w);
        if (name == "macd") return m.line;
        if (name == "macd_signal") return m.signal;
        return m.histogram;
    }
    if (name == "cr") return cr(h, l, c, w);
    if (name == "wr") return wr(h, l, c, w);
    if (name == "cci") return cci(h, l, c, w);
    if (name == "tr") return true_range(h, l, c);
    if (name == "atr") return atr(h, l, c, w);
    if (name == "cross") return cross(c, w);
    if (name == "dma") return dma(c, int_param(spec, "fast", 10), int_param(spec, "slow", 50));
    if (name == "pdi") return dmi(h, l, c, w).plus_di;
    if (name == "mdi") return dmi(h, l, c, w).minus_di;
    if (name == "dx") return dmi(h, l, c, w).dx;
    if (name == "adx") return adx(h, l, c, int_param(spec, "di_window", 10), w);
    if (name == "adxr")
        return adxr(h, l, c, int_param(spec, "di_window", 10), int_param(spec, "adx_window", 5), w);
    if (name == "trix") return trix(c, w);
    if (name == "tema") return tema(c, w);
    if (name == "vr") return vr(c, v, w);
    throw UnsupportedIndicator(name);
}

}  // namespace

UnsupportedIndicator::UnsupportedIndicator(const std::string& name)
    : std::invalid_argument("unsupported indicator '" + name + "'; supported: " + join_catalogue()) {}

std::string IndicatorSpec::column_name() const {
    return window ? name + "_" + std::to_string(*window) : name;
}

const std::vector<std::string>& supported_indicators() {
    return kSupported;
}

std::vector<IndicatorSpec> default_catalogue() {
    // Windowed rows carry lag 0; rows without a window enter lagged one bar.
    auto windowed = [](std::string name, int w) { return IndicatorSpec{std::move(name), w, 0, {}}; };
    auto lagged = [](std::string name, std::optional<int> w = std::nullopt) {
        return IndicatorSpec{std::move(name), w, 1, {}};
    };
    return {
        windowed("sma", 10),
        windowed("wma", 10),
        windowed("rsi", 10),
        windowed("roc", 10),
        windowed("mom", 10),
        lagged("obv"),
        lagged("permutation", 10),
        lagged("log_return"),
        lagged("max", 10),
        lagged("min", 10),
        lagged("middle"),
        IndicatorSpec{"compare", std::nullopt, 1, {{"op", static_cast<double>(CompareOp::gt)}, {"shift", 1.0}}},
        lagged("count", 10),
        windowed("ema", 10),
        windowed("mstd", 10),
        windowed("mvar", 10),
        windowed("rsv", 10),
        windowed("kdj_k", 10),
        windowed("kdj_d", 10),
        lagged("boll_ub", 10),
        lagged("boll_lb", 10),
        windowed("macd", 5),
        lagged("cr", 10),
        lagged("wr", 10),
        lagged("cci", 10),
        lagged("tr"),
        lagged("atr", 10),
        lagged("cross", 10),
        IndicatorSpec{"dma", std::nullopt, 1, {{"fast", 10.0}, {"slow", 50.0}}},
        lagged("pdi", 10),
        lagged("mdi", 10),
        windowed("adx", 5),
        windowed("adxr", 10),
        windowed("trix", 10),
        windowed("tema", 10),
        lagged("vr", 10),
    };
}

Series compute_indicator(const IndicatorSpec& spec, const CandleSeries& candles) {
    if (std::find(kSupported.begin(), kSupported.end(), spec.name) == kSupported.end())
        throw UnsupportedIndicator(spec.name);
    if (spec.window && *spec.window < 1)
        throw std::invalid_argument(spec.name + ": window must be >= 1");
    if (spec.window && kWindowless.contains(spec.name))
        throw std::invalid_argument(spec.name + " takes no window");
    return apply_lag(dispatch(spec, candles), spec.lag);
}

const IndicatorColumn& IndicatorFrame::column(std::string_view name) const {
    for (const auto& col : columns)
        if (col.name == name) return col;
    throw std::out_of_range("no indicator column '" + std::string(name) + "'");
}

std::size_t IndicatorFrame::warmup() const noexcept {
    std::size_t w = 0;
    for (const auto& col : columns) w = std::max(w, col.warmup);
    return w;
}

IndicatorFrame indicator_frame(const CandleSeries& candles, const std::vector<IndicatorSpec>& specs) {
    if (specs.empty()) throw std::invalid_argument("indicator_frame: empty spec list");
    std::set<std::string> names;
    for (const auto& s : specs)
        if (!names.insert(s.column_name()).second)
            throw std::invalid_argument("indicator_frame: duplicate column '" + s.column_name() + "'");

    IndicatorFrame frame;
    frame.timestamps = candles.timestamps();
    frame.columns.reserve(specs.size());
    for (const auto& s : specs) {
        IndicatorColumn col{s.column_name(), compute_indicator(s, candles), 0};
        col.warmup = leading_undefined(col.values);
        frame.columns.push_back(std::move(col));
    }
    return frame;
}

void write_frame_csv(std::ostream& out, const IndicatorFrame& frame) {
    out << "timestamp";
    for (const auto& col : frame.columns) out << ',' << col.name;
    out << '\n';
    for (std::size_t t = 0; t < frame.timestamps.size(); ++t) {
        out << frame.timestamps[t];
        for (const auto& col : frame.columns) {
            out << ',';
            if (is_defined(col.values[t])) out << csv::format_double(col.values[t]);
        }
        out << '\n';
    }
}

}  // namespace cryptomove::indicators
