#pragma once

#include "cryptomove/nn/network.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cryptomove {

/// Up (label 1) is the positive class.
struct ConfusionMatrix {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred);

/// Zero denominators yield 0 with the matching flag set.
struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
    bool precision_undefined = false;
    bool recall_undefined = false;
    bool f1_undefined = false;
};

struct ClassificationReport {
    ClassMetrics down, up;
    ClassMetrics macro;     // unweighted mean of down and up
    ClassMetrics weighted;  // support-weighted mean
    double accuracy = 0.0;
};

ClassificationReport classification_report(const ConfusionMatrix& cm);

enum class ReportClass { down, up, macro, weighted };
inline constexpr std::array<ReportClass, 4> kReportClasses = {ReportClass::down, ReportClass::up, ReportClass::macro,
                                                             ReportClass::weighted};

std::string_view to_string(ReportClass c) noexcept;
ReportClass parse_report_class(std::string_view s);

enum class Metric { accuracy, precision, recall, f1 };

std::string_view to_string(Metric m) noexcept;
Metric parse_metric(std::string_view s);

/// Accuracy plus the precision/recall/f1 of one report row.
struct Scores {
    double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;

    double get(Metric m) const noexcept;
};

Scores scores(const ClassificationReport& report, ReportClass c) noexcept;

struct Summary {
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
};

Summary summarize(std::span<const double> values);

struct ScoreSummary {
    Summary accuracy, precision, recall, f1;

    const Summary& get(Metric m) const noexcept;
};

/// One line of the experiment report: a summarised configuration for one class row.
struct ReportRow {
    std::string model;  // feature set name
    std::string asset;
    nn::NetworkSpec spec;
    ReportClass report_class = ReportClass::weighted;
    ScoreSummary scores;
    int iterations = 0;
    int failures = 0;
};

/// `architecture,...,neurons` fields shared by the tune and report tables.
/// Fields an architecture ignores render as "-".
std::string spec_csv_fields(const nn::NetworkSpec& spec);
inline constexpr std::string_view kSpecCsvHeader = "architecture,epochs,hidden_layers,batch_size,optimizer,activation,neurons";
inline constexpr std::string_view kScoreCsvHeader =
    "acc_mean,acc_std,prec_mean,prec_std,rec_mean,rec_std,f1_mean,f1_std,iterations,failures";
std::string score_csv_fields(const ScoreSummary& s, int iterations, int failures);

/// Rows are sorted by model, architecture, asset and class before rendering.
void write_report_csv(std::ostream& out, std::vector<ReportRow> rows);
void write_report_text(std::ostream& out, std::vector<ReportRow> rows);

/// Writes `<stem>.csv` and `<stem>.txt`; throws IoError when either cannot be written.
void emit_report(const std::vector<ReportRow>& rows, const std::filesystem::path& stem);

}  // namespace cryptomove
