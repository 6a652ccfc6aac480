#include "amdnet/metrics.hpp"

#include <cstdio>

#include "amdnet/errors.hpp"

namespace amdnet {

namespace {
constexpr const char* kNames[4] = {"AMD", "Cataract", "Diabetes", "Normal"};

std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}
}  // namespace

void ConfusionMatrix::add(int actual, int predicted) {
    if (actual < 0 || actual >= 4 || predicted < 0 || predicted >= 4) {
        throw ValidationError("label outside the 4-class set: actual=" + std::to_string(actual) +
                              " predicted=" + std::to_string(predicted));
    }
    ++counts[static_cast<std::size_t>(actual)][static_cast<std::size_t>(predicted)];
}

long long ConfusionMatrix::total() const {
    long long t = 0;
    for (const auto& row : counts) {
        for (long long v : row) t += v;
    }
    return t;
}

long long ConfusionMatrix::trace() const {
    long long t = 0;
    for (int i = 0; i < 4; ++i) t += counts[i][i];
    return t;
}

ConfusionMatrix ConfusionMatrix::from_labels(const std::vector<int>& actual,
                                             const std::vector<int>& predicted) {
    if (actual.size() != predicted.size()) {
        throw ValidationError("actual and predicted label sequences differ in length");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < actual.size(); ++i) cm.add(actual[i], predicted[i]);
    return cm;
}

MetricsReport compute_metrics(const ConfusionMatrix& cm) {
    const long long total = cm.total();
    if (total <= 0) throw PreconditionError("confusion matrix is empty");

    MetricsReport r;
    for (int c = 0; c < 4; ++c) {
        ClassMetrics& m = r.per_class[static_cast<std::size_t>(c)];
        m.tp = cm.counts[c][c];
        long long row = 0, col = 0;
        for (int j = 0; j < 4; ++j) {
            row += cm.counts[c][j];
            col += cm.counts[j][c];
        }
        m.fp = col - m.tp;
        m.fn = row - m.tp;
        m.tn = total - m.tp - m.fp - m.fn;

        auto rate = [&](double num, double den, const char* name) {
            if (den == 0.0) {
                r.degenerate_flags.push_back(std::string(kNames[c]) + "." + name);
                return 0.0;
            }
            return num / den;
        };
        m.precision = rate(static_cast<double>(m.tp), static_cast<double>(m.tp + m.fp), "precision");
        m.sensitivity =
            rate(static_cast<double>(m.tp), static_cast<double>(m.tp + m.fn), "sensitivity");
        m.specificity =
            rate(static_cast<double>(m.tn), static_cast<double>(m.tn + m.fp), "specificity");
        m.f1 = rate(static_cast<double>(m.tp),
                    static_cast<double>(m.tp) + 0.5 * static_cast<double>(m.fp + m.fn), "f1");

        r.macro_precision += m.precision / 4.0;
        r.macro_sensitivity += m.sensitivity / 4.0;
        r.macro_specificity += m.specificity / 4.0;
        r.macro_f1 += m.f1 / 4.0;
    }
    r.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
    return r;
}

std::string format_report_csv(const MetricsReport& r) {
    std::string out = "class,tp,fp,fn,tn,precision,sensitivity,specificity,f1\n";
    for (int c = 0; c < 4; ++c) {
        const ClassMetrics& m = r.per_class[static_cast<std::size_t>(c)];
        out += std::string(kNames[c]) + ',' + std::to_string(m.tp) + ',' + std::to_string(m.fp) +
               ',' + std::to_string(m.fn) + ',' + std::to_string(m.tn) + ',' + fmt4(m.precision) +
               ',' + fmt4(m.sensitivity) + ',' + fmt4(m.specificity) + ',' + fmt4(m.f1) + '\n';
    }
    out += "macro,,,,," + fmt4(r.macro_precision) + ',' + fmt4(r.macro_sensitivity) + ',' +
           fmt4(r.macro_specificity) + ',' + fmt4(r.macro_f1) + '\n';
    out += "accuracy," + fmt4(r.accuracy) + '\n';
    for (const auto& flag : r.degenerate_flags) out += "degenerate," + flag + '\n';
    return out;
}

std::string format_report_text(const MetricsReport& r) {
    char buf[160];
    std::string out;
    std::snprintf(buf, sizeof buf, "%-10s %5s %5s %5s %5s %10s %12s %12s %8s\n", "class", "tp",
                  "fp", "fn", "tn", "precision", "sensitivity", "specificity", "f1");
    out += buf;
    for (int c = 0; c < 4; ++c) {
        const ClassMetrics& m = r.per_class[static_cast<std::size_t>(c)];
        std::snprintf(buf, sizeof buf, "%-10s %5lld %5lld %5lld %5lld %10.4f %12.4f %12.4f %8.4f\n",
                      kNames[c], m.tp, m.fp, m.fn, m.tn, m.precision, m.sensitivity, m.specificity,
                      m.f1);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "%-10s %5s %5s %5s %5s %10.4f %12.4f %12.4f %8.4f\n", "macro",
                  "", "", "", "", r.macro_precision, r.macro_sensitivity, r.macro_specificity,
                  r.macro_f1);
    out += buf;
    std::snprintf(buf, sizeof buf, "accuracy   %.4f\n", r.accuracy);
    out += buf;
    for (const auto& flag : r.degenerate_flags) out += "degenerate " + flag + "\n";
    return out;
}

std::string format_confusion_csv(const ConfusionMatrix& cm) {
    std::string out = "actual\\predicted,AMD,Cataract,Diabetes,Normal\n";
    for (int i = 0; i < 4; ++i) {
        out += kNames[i];
        for (int j = 0; j < 4; ++j) out += ',' + std::to_string(cm.counts[i][j]);
        out += '\n';
    }
    return out;
}

}  // namespace amdnet
