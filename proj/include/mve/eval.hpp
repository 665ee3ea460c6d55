#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mve/classifier.hpp"
#include "mve/dataset.hpp"
#include "mve/ensemble.hpp"

namespace mve {

// rows = actual class, columns = predicted class
struct ConfusionMatrix {
    int class_count = 0;
    std::vector<std::int64_t> counts;

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(int k)
        : class_count(k), counts(static_cast<std::size_t>(k) * k, 0) {}

    std::int64_t& at(int actual, int predicted) {
        return counts[static_cast<std::size_t>(actual) * class_count + predicted];
    }
    std::int64_t at(int actual, int predicted) const {
        return counts[static_cast<std::size_t>(actual) * class_count + predicted];
    }
    std::int64_t total() const;
    std::int64_t diagonal() const;
};

ConfusionMatrix confusion_matrix(std::span<const LabelId> preds, std::span<const LabelId> truths,
                                 int class_count);

// Percentage of samples whose true class is among the k_top highest
// probabilities; probability ties resolved by class index ascending.
double acc_at_k(std::span<const ProbVector> outputs, std::span<const LabelId> truths, int k_top);

double macro_f1(std::span<const LabelId> preds, std::span<const LabelId> truths, int class_count);

// Globally pooled F1; equals Acc@1 for single-label multiclass input.
double micro_f1(std::span<const LabelId> preds, std::span<const LabelId> truths, int class_count);

struct RunMetrics {
    double acc_at_1 = 0;
    double acc_at_3 = 0;
    double macro_f1 = 0;
    double micro_f1 = 0;
};

struct MeanStd {
    double mean = 0;
    double stddev = 0;
};

// Per-run metric values plus mean and sample standard deviation (0 when a
// single run was made).
struct MetricsReport {
    std::vector<RunMetrics> runs;

    MeanStd acc_at_1() const;
    MeanStd acc_at_3() const;
    MeanStd macro_f1() const;
    MeanStd micro_f1() const;
};

MeanStd mean_stddev(std::span<const double> values);

struct SplitCounts {
    int train = 110;
    int val = 20;
    int test = 20;
};

struct SplitRatios {
    double train = 0.0;
    double val = 0.1;
    double test = 0.0; // informational; per-class test count = N - train - val
};

// Seeded per-class shuffle, then contiguous train/val/test assignment.
SplitSpec stratified_split(const DatasetManifest& manifest, const SplitCounts& counts,
                           std::uint64_t seed);
// Ratio form: per class, train = floor(train*N), val = floor(val*N),
// test = N - train - val.
SplitSpec stratified_split(const DatasetManifest& manifest, const SplitRatios& ratios,
                           std::uint64_t seed);

// Stratified partition into `folds` disjoint folds; spec i validates on fold
// i, trains on the rest, and has an empty test list.
std::vector<SplitSpec> kfold_split(const DatasetManifest& manifest, int folds,
                                   std::uint64_t seed);

struct ExperimentConfig {
    std::vector<EnsembleKind> kinds;
    int runs = 20;
    TrainConfig train_cfg;
    ViewConfig view_cfg;
    std::uint64_t master_seed = 0;
    int jobs = 1;
};

struct KindReport {
    EnsembleKind kind = EnsembleKind::O;
    MetricsReport metrics;
    ConfusionMatrix confusion; // from the first run's test predictions
};

// For each kind, `runs` independently seeded train+test cycles on a fixed
// split; only the training randomness varies between runs.
std::vector<KindReport> run_experiment(const Dataset& dataset, const SplitSpec& split,
                                       const ExperimentConfig& cfg);

struct GridCell {
    double learning_rate = 0;
    int batch_size = 0;
    std::vector<double> run_accs; // validation Acc@1 of each run
    double mean_acc() const;
};

struct GridSearchResult {
    TrainConfig best;
    std::vector<GridCell> cells;
};

// Evaluates every (learning rate, batch size) combination with
// `runs_per_cell` seeded runs on the validation split; picks the highest
// mean validation Acc@1, ties by lower learning rate then lower batch size.
GridSearchResult grid_search(const Dataset& dataset, const SplitSpec& split, ViewKind view,
                             std::span<const double> learning_rates,
                             std::span<const int> batch_sizes, const TrainConfig& base,
                             const ViewConfig& view_cfg, std::uint64_t master_seed,
                             int runs_per_cell = 2, int jobs = 1);

struct RatioPoint {
    double train_ratio = 0;
    std::vector<KindReport> reports;
};

// Eight split points with train ratio 0.1..0.8 (step 0.1), validation ratio
// 0.1, test taking the rest.
std::vector<RatioPoint> ratio_sweep(const Dataset& dataset, const ExperimentConfig& cfg);

} // namespace mve
