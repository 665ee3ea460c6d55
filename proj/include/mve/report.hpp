#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "mve/consistency.hpp"
#include "mve/eval.hpp"

namespace mve::report {

// 2-decimal percentages, '.' decimal separator
std::string format_percent(double value);
// 4-decimal rates in [0, 1]
std::string format_rate(double value);

void write_metrics_csv(const std::filesystem::path& path, std::span<const KindReport> reports);

void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& matrix,
                         std::span<const std::string> class_names);

void write_sweep_csv(const std::filesystem::path& path, std::span<const RatioPoint> points);

void write_grid_csv(const std::filesystem::path& path, const GridSearchResult& result);

void write_consistency_csv(const std::filesystem::path& path, const ConsistencyMatrix& matrix);

void write_cross_label_csv(const std::filesystem::path& path, const CrossLabelResult& result);

void write_agreement_csv(const std::filesystem::path& path, const AgreementMatrix& matrix,
                         std::span<const std::string> class_names);

} // namespace mve::report
