#pragma once

// Naive reference implementations of every catalogue indicator. Windows are
// rescanned from scratch at each index and recursive smoothers are expanded
// into their explicit weighted sums, so nothing here shares a code path with
// the streaming implementations under test.

#include "cryptomove/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

using cryptomove::CandleSeries;
using cryptomove::is_defined;
using cryptomove::kUndefined;
using cryptomove::Series;
using Vec = std::vector<double>;

inline Series undef(std::size_t n) { return Series(n, kUndefined); }

inline double window_mean(const Vec& x, std::size_t t, std::size_t w) {
    double s = 0;
    for (std::size_t k = t + 1 - w; k <= t; ++k) s += x[k];
    return s / static_cast<double>(w);
}

inline Series naive_sma(const Vec& x, int window) {
    const auto w = static_cast<std::size_t>(window);
    Series out = undef(x.size());
    for (std::size_t t = 0; t < x.size(); ++t)
        if (t + 1 >= w) out[t] = window_mean(x, t, w);
    return out;
}

inline Series naive_wma(const Vec& x, int window) {
    const auto w = static_cast<std::size_t>(window);
    Series out = undef(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) {
        if (t + 1 < w) continue;
        double num = 0;
        for (std::size_t k = 1; k <= w; ++k) num += static_cast<double>(k) * x[t + k - w];
        out[t] = num / (static_cast<double>(w) * (w + 1) / 2.0);
    }
    return out;
}

/// Explicit expansion of an exponential smoother seeded by the mean of the
/// first `window` defined inputs. Requires the defined region to be contiguous.
inline Series naive_smooth(const Series& x, int window, double alpha) {
    const auto w = static_cast<std::size_t>(window);
    Series out = undef(x.size());
    std::size_t first = 0;
    while (first < x.size() && !is_defined(x[first])) ++first;
    for (std::size_t k = first; k < x.size(); ++k)
        if (!is_defined(x[k])) throw std::logic_error("oracle smoother needs a contiguous defined region");
    if (first + w > x.size()) return out;
    const std::size_t seed_at = first + w - 1;
    double seed = 0;
    for (std::size_t k = first; k <= seed_at; ++k) seed += x[k];
    seed /= static_cast<double>(w);
    for (std::size_t t = seed_at; t < x.size(); ++t) {
        double v = std::pow(1.0 - alpha, static_cast<double>(t - seed_at)) * seed;
        for (std::size_t j = seed_at + 1; j <= t; ++j)
            v += alpha * std::pow(1.0 - alpha, static_cast<double>(t - j)) * x[j];
        out[t] = v;
    }
    return out;
}

inline Series naive_ema(const Series& x, int w) { return naive_smooth(x, w, 2.0 / (w + 1.0)); }
inline Series naive_wilder(const Series& x, int w) { return naive_smooth(x, w, 1.0 / w); }

inline Series naive_rsi(const Vec& c, int w) {
    const auto n = c.size();
    Series g = undef(n), l = undef(n);
    for (std::size_t t = 1; t < n; ++t) {
        g[t] = std::max(c[t] - c[t - 1], 0.0);
        l[t] = std::max(c[t - 1] - c[t], 0.0);
    }
    auto ag = naive_wilder(g, w), al = naive_wilder(l, w);
    Series out = undef(n);
    for (std::size_t t = 0; t < n; ++t) {
        if (!is_defined(ag[t])) continue;
        if (al[t] == 0.0)
            out[t] = ag[t] == 0.0 ? 50.0 : 100.0;
        else
            out[t] = 100.0 - 100.0 / (1.0 + ag[t] / al[t]);
    }
    return out;
}

inline Series naive_var(const Vec& x, int window) {
    const auto w = static_cast<std::size_t>(window);
    Series out = undef(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) {
        if (t + 1 < w) continue;
        const double m = window_mean(x, t, w);
        double ss = 0;
        for (std::size_t k = t + 1 - w; k <= t; ++k) ss += (x[k] - m) * (x[k] - m);
        out[t] = ss / static_cast<double>(w - 1);
    }
    return out;
}

inline Series naive_std(const Vec& x, int w) {
    auto v = naive_var(x, w);
    for (auto& e : v)
        if (is_defined(e)) e = std::sqrt(e);
    return v;
}

inline double scan_max(const Vec& x, std::size_t t, std::size_t w) {
    return *std::max_element(x.begin() + static_cast<long>(t + 1 - w), x.begin() + static_cast<long>(t + 1));
}
inline double scan_min(const Vec& x, std::size_t t, std::size_t w) {
    return *std::min_element(x.begin() + static_cast<long>(t + 1 - w), x.begin() + static_cast<long>(t + 1));
}

inline Vec typical(const CandleSeries& s) {
    Vec tp;
    for (const auto& b : s.bars()) tp.push_back((b.close + b.high + b.low) / 3.0);
    return tp;
}

inline Vec naive_tr(const CandleSeries& s) {
    Vec tr;
    for (std::size_t t = 0; t < s.size(); ++t) {
        const auto& b = s[t];
        if (t == 0) {
            tr.push_back(b.high - b.low);
            continue;
        }
        const double pc = s[t - 1].close;
        tr.push_back(std::max({b.high - b.low, std::abs(b.high - pc), std::abs(b.low - pc)}));
    }
    return tr;
}

struct NaiveDmi {
    Series plus, minus, dx;
};

inline NaiveDmi naive_dmi(const CandleSeries& s, int w) {
    const auto n = s.size();
    const auto tr = naive_tr(s);
    Series p = undef(n), m = undef(n), r = undef(n);
    for (std::size_t t = 1; t < n; ++t) {
        const double up = s[t].high - s[t - 1].high;
        const double down = s[t - 1].low - s[t].low;
        p[t] = (up > 0 && up > down) ? up : 0.0;
        m[t] = (down > 0 && down > up) ? down : 0.0;
        r[t] = tr[t];
    }
    auto sp = naive_wilder(p, w), sm = naive_wilder(m, w), sr = naive_wilder(r, w);
    NaiveDmi out{undef(n), undef(n), undef(n)};
    for (std::size_t t = 0; t < n; ++t) {
        if (!is_defined(sr[t])) continue;
        out.plus[t] = sr[t] > 0 ? 100.0 * sp[t] / sr[t] : 0.0;
        out.minus[t] = sr[t] > 0 ? 100.0 * sm[t] / sr[t] : 0.0;
        const double tot = out.plus[t] + out.minus[t];
        out.dx[t] = tot > 0 ? 100.0 * std::abs(out.plus[t] - out.minus[t]) / tot : 0.0;
    }
    return out;
}

/// K_t = (2/3)^(t-s+1) * 50 + sum_j (1/3)(2/3)^(t-j) rsv_j, and D likewise from K.
inline std::pair<Series, Series> naive_kdj(const CandleSeries& s, int window) {
    const auto n = s.size();
    const auto w = static_cast<std::size_t>(window);
    Series rsv = undef(n);
    Vec hi, lo;
    for (const auto& b : s.bars()) hi.push_back(b.high), lo.push_back(b.low);
    for (std::size_t t = 0; t < n; ++t) {
        if (t + 1 < w) continue;
        const double hh = scan_max(hi, t, w), ll = scan_min(lo, t, w);
        rsv[t] = hh == ll ? 50.0 : 100.0 * (s[t].close - ll) / (hh - ll);
    }
    auto expand = [&](const Series& in) {
        Series out = undef(n);
        for (std::size_t t = 0; t < n; ++t) {
            if (t + 1 < w) continue;
            const std::size_t s0 = w - 1;
            double v = std::pow(2.0 / 3.0, static_cast<double>(t - s0 + 1)) * 50.0;
            for (std::size_t j = s0; j <= t; ++j) v += std::pow(2.0 / 3.0, static_cast<double>(t - j)) * in[j] / 3.0;
            out[t] = v;
        }
        return out;
    };
    auto k = expand(rsv);
    auto d = expand(k);
    return {k, d};
}

inline Series shift(const Series& s, int lag) {
    Series out = undef(s.size());
    for (std::size_t t = static_cast<std::size_t>(lag); t < s.size(); ++t) out[t] = s[t - static_cast<std::size_t>(lag)];
    return out;
}

inline double get(const cryptomove::indicators::IndicatorSpec& spec, const char* key, double fallback) {
    auto it = spec.params.find(key);
    return it == spec.params.end() ? fallback : it->second;
}

/// Reference value of any catalogue indicator.
inline Series naive_indicator(const cryptomove::indicators::IndicatorSpec& spec, const CandleSeries& s) {
    const auto& name = spec.name;
    const bool five = name == "macd" || name == "adx";
    const int window = spec.window.value_or(five ? 5 : 10);
    const auto w = static_cast<std::size_t>(window);
    const auto n = s.size();
    const Vec c = s.closes(), h = s.highs(), l = s.lows(), v = s.volumes();
    Series out = undef(n);

    if (name == "sma") {
        out = naive_sma(c, window);
    } else if (name == "wma") {
        out = naive_wma(c, window);
    } else if (name == "ema") {
        out = naive_ema(c, window);
    } else if (name == "rsi") {
        out = naive_rsi(c, window);
    } else if (name == "roc") {
        for (std::size_t t = w; t < n; ++t)
            if (c[t - w] != 0) out[t] = c[t] / c[t - w] - 1.0;
    } else if (name == "mom") {
        for (std::size_t t = w; t < n; ++t) out[t] = c[t] - c[t - w];
    } else if (name == "obv") {
        for (std::size_t t = 0; t < n; ++t) {
            double acc = v[0];
            for (std::size_t k = 1; k <= t; ++k) acc += (c[k] > c[k - 1] ? v[k] : c[k] < c[k - 1] ? -v[k] : 0.0);
            out[t] = acc;
        }
    } else if (name == "permutation") {
        for (std::size_t t = 0; t < n; ++t) {
            if (t + 1 < w) continue;
            Vec win(c.begin() + static_cast<long>(t + 1 - w), c.begin() + static_cast<long>(t));
            std::sort(win.begin(), win.end());
            out[t] = static_cast<double>(std::lower_bound(win.begin(), win.end(), c[t]) - win.begin());
        }
    } else if (name == "log_return") {
        for (std::size_t t = 1; t < n; ++t) out[t] = std::log(c[t]) - std::log(c[t - 1]);
    } else if (name == "max" || name == "min") {
        for (std::size_t t = 0; t < n; ++t)
            if (t + 1 >= w) out[t] = name == "max" ? scan_max(c, t, w) : scan_min(c, t, w);
    } else if (name == "middle") {
        out = typical(s);
    } else if (name == "compare") {
        const int op = static_cast<int>(get(spec, "op", 3));
        const auto sh = static_cast<std::size_t>(get(spec, "shift", 1));
        for (std::size_t t = sh; t < n; ++t) {
            const double a = c[t], b = c[t - sh];
            const bool r[] = {a <= b, a >= b, a < b, a > b, a == b, a != b};
            out[t] = r[op] ? 1.0 : 0.0;
        }
    } else if (name == "count") {
        for (std::size_t t = w; t < n; ++t) {
            int k = 0;
            for (std::size_t j = t + 1 - w; j <= t; ++j) k += c[j] > c[j - 1];
            out[t] = k;
        }
    } else if (name == "mstd") {
        out = naive_std(c, window);
    } else if (name == "mvar") {
        out = naive_var(c, window);
    } else if (name == "rsv") {
        for (std::size_t t = 0; t < n; ++t) {
            if (t + 1 < w) continue;
            const double hh = scan_max(h, t, w), ll = scan_min(l, t, w);
            out[t] = hh == ll ? 50.0 : 100.0 * (c[t] - ll) / (hh - ll);
        }
    } else if (name == "kdj_k") {
        out = naive_kdj(s, window).first;
    } else if (name == "kdj_d") {
        out = naive_kdj(s, window).second;
    } else if (name == "boll_ub" || name == "boll_lb" || name == "boll") {
        const double width = get(spec, "width", 2.0);
        auto m = naive_sma(c, window);
        auto sd = naive_std(c, window);
        for (std::size_t t = 0; t < n; ++t) {
            if (!is_defined(m[t])) continue;
            out[t] = name == "boll" ? m[t] : name == "boll_ub" ? m[t] + width * sd[t] : m[t] - width * sd[t];
        }
    } else if (name == "macd") {
        auto f = naive_ema(c, static_cast<int>(get(spec, "fast", 12)));
        auto sl = naive_ema(c, static_cast<int>(get(spec, "slow", 26)));
        for (std::size_t t = 0; t < n; ++t)
            if (is_defined(sl[t])) out[t] = f[t] - sl[t];
    } else if (name == "cr") {
        const auto tp = typical(s);
        for (std::size_t t = w; t < n; ++t) {
            double up = 0, dn = 0;
            for (std::size_t k = t + 1 - w; k <= t; ++k) {
                up += std::max(0.0, h[k] - tp[k - 1]);
                dn += std::max(0.0, tp[k - 1] - l[k]);
            }
            if (dn != 0) out[t] = up / dn * 100.0;
        }
    } else if (name == "wr") {
        for (std::size_t t = 0; t < n; ++t) {
            if (t + 1 < w) continue;
            const double hh = scan_max(h, t, w), ll = scan_min(l, t, w);
            out[t] = hh == ll ? -50.0 : -100.0 * (hh - c[t]) / (hh - ll);
        }
    } else if (name == "cci") {
        const auto tp = typical(s);
        for (std::size_t t = 0; t < n; ++t) {
            if (t + 1 < w) continue;
            const double m = window_mean(tp, t, w);
            double mad = 0;
            for (std::size_t k = t + 1 - w; k <= t; ++k) mad += std::abs(tp[k] - m);
            mad /= static_cast<double>(w);
            out[t] = mad == 0 ? 0.0 : (tp[t] - m) / (0.015 * mad);
        }
    } else if (name == "tr") {
        out = naive_tr(s);
    } else if (name == "atr") {
        out = naive_wilder(naive_tr(s), window);
    } else if (name == "cross") {
        auto m = naive_sma(c, window);
        for (std::size_t t = w; t < n; ++t) {
            const bool above_before = c[t - 1] > m[t - 1], below_before = c[t - 1] < m[t - 1];
            const bool above_now = c[t] > m[t], below_now = c[t] < m[t];
            out[t] = (!above_before && above_now) ? 1.0 : (!below_before && below_now) ? -1.0 : 0.0;
        }
    } else if (name == "dma") {
        auto a = naive_sma(c, static_cast<int>(get(spec, "fast", 10)));
        auto b = naive_sma(c, static_cast<int>(get(spec, "slow", 50)));
        for (std::size_t t = 0; t < n; ++t)
            if (is_defined(b[t]) && is_defined(a[t])) out[t] = a[t] - b[t];
    } else if (name == "pdi") {
        out = naive_dmi(s, window).plus;
    } else if (name == "mdi") {
        out = naive_dmi(s, window).minus;
    } else if (name == "adx") {
        out = naive_wilder(naive_dmi(s, static_cast<int>(get(spec, "di_window", 10))).dx, window);
    } else if (name == "adxr") {
        auto adx = naive_wilder(naive_dmi(s, static_cast<int>(get(spec, "di_window", 10))).dx,
                                static_cast<int>(get(spec, "adx_window", 5)));
        out = naive_wilder(adx, window);
    } else if (name == "trix") {
        auto e3 = naive_ema(naive_ema(naive_ema(c, window), window), window);
        for (std::size_t t = 1; t < n; ++t)
            if (is_defined(e3[t - 1]) && e3[t - 1] != 0) out[t] = (e3[t] / e3[t - 1] - 1.0) * 100.0;
    } else if (name == "tema") {
        auto e1 = naive_ema(c, window);
        auto e2 = naive_ema(e1, window);
        auto e3 = naive_ema(e2, window);
        for (std::size_t t = 0; t < n; ++t)
            if (is_defined(e3[t])) out[t] = 3 * (e1[t] - e2[t]) + e3[t];
    } else if (name == "vr") {
        for (std::size_t t = w; t < n; ++t) {
            double up = 0, down = 0, flat = 0;
            for (std::size_t k = t + 1 - w; k <= t; ++k) {
                if (c[k] > c[k - 1]) up += v[k];
                else if (c[k] < c[k - 1]) down += v[k];
                else flat += v[k];
            }
            if (down + flat / 2 != 0) out[t] = (up + flat / 2) / (down + flat / 2) * 100.0;
        }
    } else {
        throw std::invalid_argument("oracle has no reference for " + name);
    }
    return shift(out, spec.lag);
}

/// Random-walk candles with positive prices; `ties` injects repeated closes.
inline CandleSeries random_candles(std::mt19937_64& rng, std::size_t n, bool ties = true) {
    std::normal_distribution<double> step(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<cryptomove::Bar> bars;
    double price = 50.0 + 100.0 * u(rng);
    for (std::size_t i = 0; i < n; ++i) {
        const double open = price;
        if (!(ties && u(rng) < 0.05)) price = std::max(1.0, price + step(rng));
        const double close = price;
        const double hi = std::max(open, close) + std::abs(step(rng)) * 0.5;
        const double lo = std::max(0.5, std::min(open, close) - std::abs(step(rng)) * 0.5);
        bars.push_back({static_cast<std::int64_t>(3600 * (i + 1)), open, hi, std::min(lo, std::min(open, close)), close,
                        1000.0 * u(rng)});
    }
    return CandleSeries(cryptomove::Frequency::hourly, std::move(bars));
}

/// |a - b| / max(|a|, |b|, 1): relative error with a unit floor so that
/// values crossing zero (momentum, dma) are compared absolutely.
inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0});
}

}  // namespace oracle
