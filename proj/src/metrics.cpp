#include "cryptomove/metrics.hpp"

#include "cryptomove/error.hpp"
#include "csv.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace cryptomove {

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred) {
    if (y_true.size() != y_pred.size())
        throw std::invalid_argument("confusion: " + std::to_string(y_true.size()) + " labels vs " +
                                    std::to_string(y_pred.size()) + " predictions");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const bool t = y_true[i] != 0, p = y_pred[i] != 0;
        if (t && p) ++cm.tp;
        else if (!t && p) ++cm.fp;
        else if (!t && !p) ++cm.tn;
        else ++cm.fn;
    }
    return cm;
}

namespace {

double ratio(std::size_t num, std::size_t den, bool& undefined) {
    undefined = den == 0;
    return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

ClassMetrics class_metrics(std::size_t hit, std::size_t false_alarm, std::size_t miss) {
    ClassMetrics m;
    m.precision = ratio(hit, hit + false_alarm, m.precision_undefined);
    m.recall = ratio(hit, hit + miss, m.recall_undefined);
    m.f1_undefined = m.precision + m.recall == 0.0;
    m.f1 = m.f1_undefined ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    m.support = hit + miss;
    return m;
}

ClassMetrics combine(const ClassMetrics& a, const ClassMetrics& b, double wa, double wb) {
    ClassMetrics m;
    m.precision = wa * a.precision + wb * b.precision;
    m.recall = wa * a.recall + wb * b.recall;
    m.f1 = wa * a.f1 + wb * b.f1;
    m.support = a.support + b.support;
    m.precision_undefined = a.precision_undefined || b.precision_undefined;
    m.recall_undefined = a.recall_undefined || b.recall_undefined;
    m.f1_undefined = a.f1_undefined || b.f1_undefined;
    return m;
}

}  // namespace

ClassificationReport classification_report(const ConfusionMatrix& cm) {
    const auto total = cm.total();
    if (total == 0) throw std::invalid_argument("classification_report: empty confusion matrix");
    ClassificationReport r;
    r.up = class_metrics(cm.tp, cm.fp, cm.fn);
    r.down = class_metrics(cm.tn, cm.fn, cm.fp);
    r.macro = combine(r.down, r.up, 0.5, 0.5);
    const double n = static_cast<double>(total);
    r.weighted = combine(r.down, r.up, static_cast<double>(r.down.support) / n, static_cast<double>(r.up.support) / n);
    r.accuracy = static_cast<double>(cm.tp + cm.tn) / n;
    return r;
}

std::string_view to_string(ReportClass c) noexcept {
    switch (c) {
        case ReportClass::down: return "down";
        case ReportClass::up: return "up";
        case ReportClass::macro: return "macro";
        case ReportClass::weighted: return "weighted";
    }
    return "";
}

ReportClass parse_report_class(std::string_view s) {
    for (auto c : kReportClasses)
        if (to_string(c) == s) return c;
    throw std::invalid_argument("unknown report class '" + std::string(s) + "'");
}

std::string_view to_string(Metric m) noexcept {
    switch (m) {
        case Metric::accuracy: return "accuracy";
        case Metric::precision: return "precision";
        case Metric::recall: return "recall";
        case Metric::f1: return "f1";
    }
    return "";
}

Metric parse_metric(std::string_view s) {
    for (auto m : {Metric::accuracy, Metric::precision, Metric::recall, Metric::f1})
        if (to_string(m) == s) return m;
    throw std::invalid_argument("unknown metric '" + std::string(s) + "'");
}

double Scores::get(Metric m) const noexcept {
    switch (m) {
        case Metric::accuracy: return accuracy;
        case Metric::precision: return precision;
        case Metric::recall: return recall;
        case Metric::f1: return f1;
    }
    return 0.0;
}

Scores scores(const ClassificationReport& report, ReportClass c) noexcept {
    const ClassMetrics* m = &report.weighted;
    switch (c) {
        case ReportClass::down: m = &report.down; break;
        case ReportClass::up: m = &report.up; break;
        case ReportClass::macro: m = &report.macro; break;
        case ReportClass::weighted: break;
    }
    return {report.accuracy, m->precision, m->recall, m->f1};
}

Summary summarize(std::span<const double> values) {
    Summary s;
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(values.size()));
    return s;
}

const Summary& ScoreSummary::get(Metric m) const noexcept {
    switch (m) {
        case Metric::accuracy: return accuracy;
        case Metric::precision: return precision;
        case Metric::recall: return recall;
        case Metric::f1: return f1;
    }
    return accuracy;
}

std::string spec_csv_fields(const nn::NetworkSpec& spec) {
    const bool fixed = spec.architecture == nn::Architecture::malstm_fcn;
    return fmt::format("{},{},{},{},{},{},{}", nn::to_string(spec.architecture), spec.epochs,
                       fixed ? "-" : std::to_string(spec.hidden_layers), spec.batch_size, nn::to_string(spec.optimizer),
                       fixed ? "-" : std::string(nn::to_string(spec.activation)),
                       fixed ? "-" : std::to_string(spec.neurons));
}

std::string score_csv_fields(const ScoreSummary& s, int iterations, int failures) {
    using csv::format_double;
    return fmt::format("{},{},{},{},{},{},{},{},{},{}", format_double(s.accuracy.mean), format_double(s.accuracy.std),
                       format_double(s.precision.mean), format_double(s.precision.std), format_double(s.recall.mean),
                       format_double(s.recall.std), format_double(s.f1.mean), format_double(s.f1.std), iterations,
                       failures);
}

namespace {

int model_rank(const std::string& model) {
    if (model == "restricted") return 0;
    if (model == "technical_social") return 1;
    if (model == "unrestricted") return 2;
    return 3;
}

void sort_rows(std::vector<ReportRow>& rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        return std::forward_as_tuple(model_rank(a.model), a.model, a.spec.architecture, a.asset, a.report_class) <
               std::forward_as_tuple(model_rank(b.model), b.model, b.spec.architecture, b.asset, b.report_class);
    });
}

}  // namespace

void write_report_csv(std::ostream& out, std::vector<ReportRow> rows) {
    sort_rows(rows);
    out << "model,asset," << kSpecCsvHeader << ",class," << kScoreCsvHeader << '\n';
    for (const auto& r : rows)
        out << r.model << ',' << r.asset << ',' << spec_csv_fields(r.spec) << ',' << to_string(r.report_class) << ','
            << score_csv_fields(r.scores, r.iterations, r.failures) << '\n';
}

void write_report_text(std::ostream& out, std::vector<ReportRow> rows) {
    sort_rows(rows);
    const auto cell = [](const Summary& s) { return fmt::format("{:.2f} ± {:.2f}", s.mean, s.std); };
    // Pads by code points; "±" is two bytes.
    const auto pad = [](const std::string& s, std::size_t width) {
        const std::size_t shown = s.size() - static_cast<std::size_t>(std::count(s.begin(), s.end(), '\xC2'));
        return s + std::string(width > shown ? width - shown : 0, ' ');
    };
    out << fmt::format("{:<18}{:<12}{:<8}{:<10}{:<14}{:<14}{:<14}{}\n", "model", "algorithm", "asset", "class",
                       "accuracy", "precision", "recall", "f1");
    const ReportRow* prev = nullptr;
    for (const auto& r : rows) {
        const bool same_model = prev && prev->model == r.model;
        const bool same_algo = same_model && prev->spec.architecture == r.spec.architecture;
        const bool same_asset = same_algo && prev->asset == r.asset;
        if (prev && !same_model) out << '\n';
        out << fmt::format("{:<18}{:<12}{:<8}{:<10}", same_model ? "" : r.model,
                           same_algo ? "" : std::string(nn::to_string(r.spec.architecture)),
                           same_asset ? "" : r.asset, to_string(r.report_class))
            << pad(cell(r.scores.accuracy), 14) << pad(cell(r.scores.precision), 14)
            << pad(cell(r.scores.recall), 14) << cell(r.scores.f1) << '\n';
        prev = &r;
    }
}

void emit_report(const std::vector<ReportRow>& rows, const std::filesystem::path& stem) {
    if (rows.empty()) throw std::invalid_argument("emit_report: no rows");
    auto write = [](const std::filesystem::path& path, const std::string& content) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write " + path.string());
        out << content;
        if (!out) throw IoError("failed writing " + path.string());
    };
    std::ostringstream csv_text, table;
    write_report_csv(csv_text, rows);
    write_report_text(table, rows);
    auto csv_path = stem;
    csv_path += ".csv";
    auto txt_path = stem;
    txt_path += ".txt";
    write(csv_path, csv_text.str());
    write(txt_path, table.str());
}

}  // namespace cryptomove
