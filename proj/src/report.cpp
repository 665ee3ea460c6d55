#include "mve/report.hpp"

#include <cstdio>
#include <fstream>

#include "mve/errors.hpp"

namespace mve::report {

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    return out;
}

void write_metric_row(std::ofstream& out, const std::string& head, const MetricsReport& metrics) {
    const MeanStd acc1 = metrics.acc_at_1();
    const MeanStd acc3 = metrics.acc_at_3();
    const MeanStd macro = metrics.macro_f1();
    out << head << ',' << format_percent(acc1.mean) << ',' << format_percent(acc1.stddev) << ','
        << format_percent(acc3.mean) << ',' << format_percent(acc3.stddev) << ','
        << format_percent(macro.mean) << ',' << format_percent(macro.stddev) << '\n';
}

} // namespace

std::string format_percent(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", value);
    return buf;
}

std::string format_rate(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", value);
    return buf;
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const KindReport> reports) {
    auto out = open_csv(path);
    out << "kind,acc1_mean,acc1_std,acc3_mean,acc3_std,macro_f1_mean,macro_f1_std\n";
    for (const auto& report : reports)
        write_metric_row(out, ensemble_kind_name(report.kind), report.metrics);
}

void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& matrix,
                         std::span<const std::string> class_names) {
    auto out = open_csv(path);
    out << "actual\\predicted";
    for (const auto& name : class_names) out << ',' << name;
    out << '\n';
    for (int a = 0; a < matrix.class_count; ++a) {
        out << class_names[static_cast<std::size_t>(a)];
        for (int p = 0; p < matrix.class_count; ++p) out << ',' << matrix.at(a, p);
        out << '\n';
    }
}

void write_sweep_csv(const std::filesystem::path& path, std::span<const RatioPoint> points) {
    auto out = open_csv(path);
    out << "train_ratio,kind,acc1_mean,acc1_std,acc3_mean,acc3_std,macro_f1_mean,macro_f1_std\n";
    for (const auto& point : points) {
        char ratio[16];
        std::snprintf(ratio, sizeof(ratio), "%.1f", point.train_ratio);
        for (const auto& report : point.reports)
            write_metric_row(out, std::string(ratio) + "," + ensemble_kind_name(report.kind),
                             report.metrics);
    }
}

void write_grid_csv(const std::filesystem::path& path, const GridSearchResult& result) {
    auto out = open_csv(path);
    out << "learning_rate,batch_size,mean_val_acc1,run_accs,selected\n";
    for (const auto& cell : result.cells) {
        char lr[32];
        std::snprintf(lr, sizeof(lr), "%g", cell.learning_rate);
        out << lr << ',' << cell.batch_size << ',' << format_percent(cell.mean_acc()) << ',';
        for (std::size_t r = 0; r < cell.run_accs.size(); ++r) {
            if (r) out << ';';
            out << format_percent(cell.run_accs[r]);
        }
        const bool selected = cell.learning_rate == result.best.learning_rate &&
                              cell.batch_size == result.best.batch_size;
        out << ',' << (selected ? 1 : 0) << '\n';
    }
}

void write_consistency_csv(const std::filesystem::path& path, const ConsistencyMatrix& matrix) {
    auto out = open_csv(path);
    out << "source";
    for (const auto& name : matrix.sources) out << ',' << name;
    out << '\n';
    for (std::size_t a = 0; a < matrix.sources.size(); ++a) {
        out << matrix.sources[a];
        for (std::size_t b = 0; b < matrix.sources.size(); ++b)
            out << ',' << format_rate(matrix.at(a, b));
        out << '\n';
    }
}

void write_cross_label_csv(const std::filesystem::path& path, const CrossLabelResult& result) {
    auto out = open_csv(path);
    out << "trained_on";
    for (const auto& source : result.sources) out << ',' << source << "_mean," << source << "_std";
    out << '\n';
    for (std::size_t s = 0; s < result.sources.size(); ++s) {
        out << result.sources[s];
        for (std::size_t t = 0; t < result.sources.size(); ++t)
            out << ',' << format_percent(result.table[s][t].mean) << ','
                << format_percent(result.table[s][t].stddev);
        out << '\n';
    }
}

void write_agreement_csv(const std::filesystem::path& path, const AgreementMatrix& matrix,
                         std::span<const std::string> class_names) {
    auto out = open_csv(path);
    out << "prior\\assigned";
    for (const auto& name : class_names) out << ',' << name;
    out << ",flagged\n";
    for (int i = 0; i < matrix.class_count; ++i) {
        out << class_names[static_cast<std::size_t>(i)];
        for (int j = 0; j < matrix.class_count; ++j) out << ',' << format_rate(matrix.at(i, j));
        out << ',' << (matrix.row_flagged[static_cast<std::size_t>(i)] ? 1 : 0) << '\n';
    }
}

} // namespace mve::report
