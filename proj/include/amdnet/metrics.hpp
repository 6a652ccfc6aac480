#pragma once

#include <array>
#include <string>
#include <vector>

namespace amdnet {

/// 4x4 count matrix; rows are actual classes, columns predicted.
struct ConfusionMatrix {
    std::array<std::array<long long, 4>, 4> counts{};

    void add(int actual, int predicted);
    long long total() const;
    long long trace() const;

    static ConfusionMatrix from_labels(const std::vector<int>& actual,
                                       const std::vector<int>& predicted);
};

struct ClassMetrics {
    long long tp = 0, fp = 0, fn = 0, tn = 0;
    double precision = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double f1 = 0.0;
};

struct MetricsReport {
    std::array<ClassMetrics, 4> per_class;
    double macro_precision = 0.0;
    double macro_sensitivity = 0.0;
    double macro_specificity = 0.0;
    double macro_f1 = 0.0;
    double accuracy = 0.0;
    /// Zero-denominator rates are reported as 0 and named here
    /// ("<Class>.precision" etc.) instead of producing NaN.
    std::vector<std::string> degenerate_flags;
};

/// One-vs-rest per-class metrics, unweighted macro averages and
/// accuracy = trace/total.
MetricsReport compute_metrics(const ConfusionMatrix& cm);

/// Fixed column order: class,tp,fp,fn,tn,precision,sensitivity,specificity,f1
/// with macro and accuracy footer rows. Rates printed to 4 decimals.
std::string format_report_csv(const MetricsReport& report);
std::string format_report_text(const MetricsReport& report);
std::string format_confusion_csv(const ConfusionMatrix& cm);

}  // namespace amdnet
