#include "cryptomove/indicators.hpp"
#include "oracle/indicator_oracle.hpp"

#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

using namespace cryptomove;
using namespace cryptomove::indicators;

namespace {

CandleSeries closes_only(const std::vector<double>& close) {
    std::vector<Bar> bars;
    for (std::size_t i = 0; i < close.size(); ++i)
        bars.push_back({static_cast<Timestamp>(3600 * i), close[i], close[i], close[i], close[i], 1.0});
    return CandleSeries(Frequency::hourly, bars);
}

std::vector<double> linear(std::size_t n, double start, double slope) {
    std::vector<double> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back(start + slope * static_cast<double>(i));
    return v;
}

}  // namespace

TEST_CASE("sma") {
    CHECK(sma(std::vector<double>{1, 2, 3, 4, 5}, 5)[4] == doctest::Approx(3.0));
    auto s = sma(std::vector<double>{2, 4, 6}, 2);
    CHECK_FALSE(is_defined(s[0]));
    CHECK(s[1] == doctest::Approx(3.0));
    CHECK(s[2] == doctest::Approx(5.0));
    for (int w : {1, 3, 7}) {
        auto c = sma(std::vector<double>(20, 4.25), w);
        for (std::size_t t = static_cast<std::size_t>(w) - 1; t < 20; ++t) CHECK(c[t] == 4.25);
    }
    auto longer = sma(std::vector<double>{1, 2}, 5);
    CHECK(leading_undefined(longer) == 2);
    CHECK_THROWS_AS(sma(std::vector<double>{1}, 0), std::invalid_argument);
}

TEST_CASE("wma") {
    CHECK(wma(std::vector<double>{1, 2, 3}, 3)[2] == doctest::Approx(14.0 / 6.0));
    auto c = wma(std::vector<double>(12, 7.0), 4);
    for (std::size_t t = 3; t < 12; ++t) CHECK(c[t] == doctest::Approx(7.0));
    auto up = linear(40, 10, 0.5);
    auto w = wma(up, 6), s = sma(up, 6);
    for (std::size_t t = 5; t < up.size(); ++t) CHECK(w[t] > s[t]);
}

TEST_CASE("rsi") {
    auto inc = rsi(linear(30, 1, 1), 10);
    auto dec = rsi(linear(30, 100, -1), 10);
    auto flat = rsi(std::vector<double>(30, 3.0), 10);
    CHECK(leading_undefined(inc) == 10);
    for (std::size_t t = 10; t < 30; ++t) {
        CHECK(inc[t] == 100.0);
        CHECK(dec[t] == 0.0);
        CHECK(flat[t] == 50.0);
    }
}

TEST_CASE("roc and momentum") {
    std::vector<double> c{100, 105, 110};
    CHECK(roc(c, 2)[2] == doctest::Approx(0.10));
    CHECK(momentum(c, 2)[2] == doctest::Approx(10.0));
    auto flat = std::vector<double>(10, 2.0);
    CHECK(roc(flat, 3)[9] == 0.0);
    CHECK(momentum(flat, 3)[9] == 0.0);
    CHECK_FALSE(is_defined(roc(std::vector<double>{0, 1, 2}, 1)[1]));
    CHECK(is_defined(roc(std::vector<double>{0, 1, 2}, 1)[2]));
    auto lin = linear(50, 3, 0.25);
    auto m = momentum(lin, 7);
    for (std::size_t t = 7; t < 50; ++t) CHECK(m[t] == doctest::Approx(0.25 * 7));
}

TEST_CASE("obv") {
    auto o = obv(std::vector<double>{1, 2, 2, 1}, std::vector<double>{5, 3, 7, 2});
    CHECK(o == std::vector<double>{5, 8, 8, 6});
    auto flat = obv(std::vector<double>(5, 1.0), std::vector<double>{1, 2, 3, 4, 5});
    for (double v : flat) CHECK(v == 1.0);
    CHECK_THROWS_AS(obv(std::vector<double>{1, 2}, std::vector<double>{1}), std::invalid_argument);

    std::mt19937_64 rng(5);
    auto s = oracle::random_candles(rng, 200);
    auto c = s.closes(), v = s.volumes();
    auto series = obv(c, v);
    for (std::size_t t = 1; t < series.size(); ++t) {
        const double d = std::abs(series[t] - series[t - 1]);
        CHECK((d == 0.0 || d == doctest::Approx(v[t])));
    }
}

TEST_CASE("compute_indicator examples") {
    CandleSeries bar(Frequency::hourly, {{0, 3, 4, 2, 3, 1}});
    CHECK(compute_indicator({"middle", std::nullopt, 0, {}}, bar)[0] == doctest::Approx(3.0));

    // Bar fully inside the prior close range: TR = high - low.
    CandleSeries inside(Frequency::hourly, {{0, 10, 12, 8, 10, 1}, {3600, 10, 10.5, 9.5, 10.2, 1}});
    CHECK(compute_indicator({"tr", std::nullopt, 0, {}}, inside)[1] == doctest::Approx(1.0));

    auto flat = closes_only(std::vector<double>(30, 9.0));
    auto ub = compute_indicator({"boll_ub", 10, 0, {}}, flat);
    auto mid = compute_indicator({"boll", 10, 0, {}}, flat);
    auto lb = compute_indicator({"boll_lb", 10, 0, {}}, flat);
    for (std::size_t t = 9; t < 30; ++t) {
        CHECK(ub[t] == 9.0);
        CHECK(mid[t] == 9.0);
        CHECK(lb[t] == 9.0);
    }

    try {
        compute_indicator({"ichimoku", 10, 0, {}}, flat);
        FAIL("expected UnsupportedIndicator");
    } catch (const UnsupportedIndicator& e) {
        CHECK(std::string(e.what()).find("sma") != std::string::npos);
    }
    CHECK_THROWS_AS(compute_indicator({"obv", 3, 0, {}}, flat), std::invalid_argument);
    CHECK_THROWS_AS(compute_indicator({"sma", 0, 0, {}}, flat), std::invalid_argument);
}

TEST_CASE("lag shifts output forward") {
    std::mt19937_64 rng(2);
    auto s = oracle::random_candles(rng, 60);
    auto base = compute_indicator({"sma", 5, 0, {}}, s);
    auto lagged = compute_indicator({"sma", 5, 3, {}}, s);
    CHECK(leading_undefined(lagged) == leading_undefined(base) + 3);
    for (std::size_t t = 3; t < 60; ++t)
        if (is_defined(base[t - 3])) CHECK(lagged[t] == base[t - 3]);
}

TEST_CASE("default catalogue matches the naive oracle") {
    const auto catalogue = default_catalogue();
    REQUIRE(catalogue.size() == 36);
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 25; ++trial) {
        auto s = oracle::random_candles(rng, 300);
        for (const auto& spec : catalogue) {
            CAPTURE(spec.name);
            const auto got = compute_indicator(spec, s);
            const auto want = oracle::naive_indicator(spec, s);
            REQUIRE(got.size() == want.size());
            double worst = 0.0;
            bool same_defined = true;
            for (std::size_t t = 0; t < got.size(); ++t) {
                if (is_defined(got[t]) != is_defined(want[t])) same_defined = false;
                if (is_defined(got[t]) && is_defined(want[t])) worst = std::max(worst, oracle::rel_err(got[t], want[t]));
            }
            CHECK(same_defined);
            CHECK(worst <= 1e-9);
        }
    }
}

TEST_CASE("extra catalogue names match the oracle") {
    std::mt19937_64 rng(8);
    auto s = oracle::random_candles(rng, 200);
    for (IndicatorSpec spec : {IndicatorSpec{"boll", 12, 0, {}}, IndicatorSpec{"ema", 4, 2, {}},
                               IndicatorSpec{"compare", std::nullopt, 0, {{"op", 4.0}, {"shift", 2.0}}},
                               IndicatorSpec{"adx", 7, 0, {{"di_window", 6.0}}}}) {
        CAPTURE(spec.name);
        const auto got = compute_indicator(spec, s);
        const auto want = oracle::naive_indicator(spec, s);
        for (std::size_t t = 0; t < got.size(); ++t) {
            REQUIRE(is_defined(got[t]) == is_defined(want[t]));
            if (is_defined(got[t])) CHECK(oracle::rel_err(got[t], want[t]) <= 1e-9);
        }
    }
}

TEST_CASE("range and ordering invariants") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        auto s = oracle::random_candles(rng, 400);
        auto c = s.closes(), h = s.highs(), l = s.lows();
        auto r = rsi(c, 10);
        auto tr = true_range(h, l, c);
        auto a = atr(h, l, c, 10);
        auto sd = mstd(c, 10);
        auto var = mvar(c, 10);
        auto b = bollinger(c, 10);
        for (std::size_t t = 0; t < c.size(); ++t) {
            if (is_defined(r[t])) CHECK((r[t] >= 0.0 && r[t] <= 100.0));
            CHECK(tr[t] >= 0.0);
            if (is_defined(a[t])) CHECK(a[t] >= 0.0);
            if (is_defined(sd[t])) {
                CHECK(sd[t] >= 0.0);
                CHECK(std::abs(var[t] - sd[t] * sd[t]) <= 1e-12 * std::max(1.0, var[t]));
            }
            if (is_defined(b.middle[t]) && is_defined(b.upper[t])) {
                CHECK(b.upper[t] >= b.middle[t]);
                CHECK(b.middle[t] >= b.lower[t]);
            }
        }
    }
}

TEST_CASE("shift equivariance: prepending bars keeps values at shared timestamps") {
    std::mt19937_64 rng(13);
    auto tail = oracle::random_candles(rng, 250);
    // Prepend k bars, re-timestamp so the original bars keep their timestamps.
    const std::size_t k = 17;
    auto head = oracle::random_candles(rng, k);
    std::vector<Bar> bars;
    for (std::size_t i = 0; i < k; ++i) {
        Bar b = head[i];
        b.timestamp = tail[0].timestamp - static_cast<Timestamp>(3600 * (k - i));
        bars.push_back(b);
    }
    for (const auto& b : tail.bars()) bars.push_back(b);
    CandleSeries longer(Frequency::hourly, bars);
    // Window-local indicators are exactly equivariant once both sides are defined.
    for (std::string name : {"sma", "wma", "roc", "mom", "mstd", "max", "min", "rsv", "wr", "cci", "cr", "vr",
                             "permutation", "count", "middle", "tr", "log_return", "compare", "cross"}) {
        CAPTURE(name);
        IndicatorSpec spec{name, std::nullopt, 0, {}};
        if (!(spec.name == "middle" || spec.name == "tr" || spec.name == "log_return" || spec.name == "compare"))
            spec.window = 10;
        auto a = compute_indicator(spec, tail);
        auto b = compute_indicator(spec, longer);
        // The first true range has no previous close to compare against.
        const std::size_t start = name == "tr" ? 1 : 0;
        for (std::size_t t = start; t < tail.size(); ++t) {
            if (!is_defined(a[t])) continue;
            REQUIRE(is_defined(b[t + k]));
            CHECK(oracle::rel_err(a[t], b[t + k]) <= 1e-9);
        }
    }
}

TEST_CASE("scale covariance and invariance") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> scale_dist(0.1, 50.0);
    for (int trial = 0; trial < 20; ++trial) {
        auto s = oracle::random_candles(rng, 200);
        auto c = s.closes();
        const double k = scale_dist(rng);
        std::vector<double> scaled;
        for (double v : c) scaled.push_back(v * k);
        for (auto fn : {&sma, &wma, &ema}) {
            auto a = fn(c, 10), b = fn(scaled, 10);
            for (std::size_t t = 9; t < c.size(); ++t) CHECK(b[t] == doctest::Approx(k * a[t]).epsilon(1e-10));
        }
        for (auto fn : {&roc, &rsi}) {
            auto a = fn(c, 10), b = fn(scaled, 10);
            for (std::size_t t = 10; t < c.size(); ++t)
                CHECK(oracle::rel_err(a[t], b[t]) <= 1e-9);
        }
    }
}

TEST_CASE("indicator_frame") {
    std::mt19937_64 rng(31);
    auto s = oracle::random_candles(rng, 500);
    auto frame = indicator_frame(s, default_catalogue());
    CHECK(frame.columns.size() == 36);
    CHECK(frame.timestamps.size() == 500);
    std::set<std::string> names;
    for (const auto& col : frame.columns) {
        names.insert(col.name);
        CHECK(col.values.size() == 500);
        for (std::size_t t = 0; t < col.warmup; ++t) CHECK_FALSE(is_defined(col.values[t]));
        for (std::size_t t = col.warmup; t < 500; ++t)
            if (is_defined(col.values[t])) CHECK(std::isfinite(col.values[t]));
    }
    CHECK(names.size() == 36);
    CHECK(frame.warmup() == frame.column("dma").warmup);
    CHECK(frame.column("dma").warmup == 50);

    CHECK_THROWS_AS(indicator_frame(s, {}), std::invalid_argument);
    CHECK_THROWS_AS(indicator_frame(s, {{"sma", 10, 0, {}}, {"sma", 10, 1, {}}}), std::invalid_argument);

    std::ostringstream out;
    write_frame_csv(out, indicator_frame(closes_only({1, 2, 3}), {{"sma", 2, 0, {}}}));
    CHECK(out.str() == "timestamp,sma_2\n0,\n3600,1.5\n7200,2.5\n");
}
