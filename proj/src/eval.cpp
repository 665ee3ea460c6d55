#include "mve/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "mve/errors.hpp"
#include "mve/parallel.hpp"
#include "mve/rng.hpp"

namespace mve {

namespace {

void check_pair_lengths(std::size_t a, std::size_t b) {
    if (a != b)
        throw LengthMismatch("prediction/truth length mismatch: " + std::to_string(a) + " vs " +
                             std::to_string(b));
}

void check_label(LabelId label, int class_count) {
    if (label < 0 || label >= class_count)
        throw LabelOutOfRange("label " + std::to_string(label) + " not in [0, " +
                              std::to_string(class_count) + ")");
}

} // namespace

std::int64_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::diagonal() const {
    std::int64_t sum = 0;
    for (int c = 0; c < class_count; ++c) sum += at(c, c);
    return sum;
}

ConfusionMatrix confusion_matrix(std::span<const LabelId> preds, std::span<const LabelId> truths,
                                 int class_count) {
    check_pair_lengths(preds.size(), truths.size());
    ConfusionMatrix cm(class_count);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        check_label(preds[i], class_count);
        check_label(truths[i], class_count);
        ++cm.at(truths[i], preds[i]);
    }
    return cm;
}

double acc_at_k(std::span<const ProbVector> outputs, std::span<const LabelId> truths, int k_top) {
    check_pair_lengths(outputs.size(), truths.size());
    if (outputs.empty()) return 0.0;
    std::size_t hits = 0;
    std::vector<int> order;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        const ProbVector& probs = outputs[i];
        order.resize(probs.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (probs[static_cast<std::size_t>(a)] != probs[static_cast<std::size_t>(b)])
                return probs[static_cast<std::size_t>(a)] > probs[static_cast<std::size_t>(b)];
            return a < b;
        });
        const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(k_top), order.size());
        for (std::size_t r = 0; r < top; ++r) {
            if (order[r] == truths[i]) {
                ++hits;
                break;
            }
        }
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(outputs.size());
}

double macro_f1(std::span<const LabelId> preds, std::span<const LabelId> truths, int class_count) {
    check_pair_lengths(preds.size(), truths.size());
    const ConfusionMatrix cm = confusion_matrix(preds, truths, class_count);
    double f1_sum = 0.0;
    for (int c = 0; c < class_count; ++c) {
        std::int64_t tp = cm.at(c, c), fp = 0, fn = 0;
        for (int o = 0; o < class_count; ++o) {
            if (o == c) continue;
            fp += cm.at(o, c);
            fn += cm.at(c, o);
        }
        const double precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
        const double recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
        const double f1 =
            (precision + recall) > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        f1_sum += f1;
    }
    return 100.0 * f1_sum / static_cast<double>(class_count);
}

double micro_f1(std::span<const LabelId> preds, std::span<const LabelId> truths, int class_count) {
    check_pair_lengths(preds.size(), truths.size());
    const ConfusionMatrix cm = confusion_matrix(preds, truths, class_count);
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (int c = 0; c < class_count; ++c) {
        tp += cm.at(c, c);
        for (int o = 0; o < class_count; ++o) {
            if (o == c) continue;
            fp += cm.at(o, c);
            fn += cm.at(c, o);
        }
    }
    const double precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    const double recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    if (precision + recall == 0) return 0.0;
    return 100.0 * 2.0 * precision * recall / (precision + recall);
}

MeanStd mean_stddev(std::span<const double> values) {
    MeanStd result;
    if (values.empty()) return result;
    result.mean = std::accumulate(values.begin(), values.end(), 0.0) /
                  static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - result.mean) * (v - result.mean);
        result.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return result;
}

namespace {

MeanStd metric_stat(const std::vector<RunMetrics>& runs, double RunMetrics::* field) {
    std::vector<double> values;
    values.reserve(runs.size());
    for (const auto& run : runs) values.push_back(run.*field);
    return mean_stddev(values);
}

} // namespace

MeanStd MetricsReport::acc_at_1() const { return metric_stat(runs, &RunMetrics::acc_at_1); }
MeanStd MetricsReport::acc_at_3() const { return metric_stat(runs, &RunMetrics::acc_at_3); }
MeanStd MetricsReport::macro_f1() const { return metric_stat(runs, &RunMetrics::macro_f1); }
MeanStd MetricsReport::micro_f1() const { return metric_stat(runs, &RunMetrics::micro_f1); }

namespace {

// seeded per-class shuffle shared by both split forms and kfold
std::vector<std::vector<std::size_t>> shuffled_per_class(const DatasetManifest& manifest,
                                                         std::uint64_t seed) {
    auto per_class = manifest.per_class_indices();
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        Rng rng(derive_seed(seed, c, 0x73706c69ULL));
        rng.shuffle(std::span<std::size_t>(per_class[c]));
    }
    return per_class;
}

SplitSpec assign_contiguous(const std::vector<std::vector<std::size_t>>& shuffled,
                            const std::vector<std::array<std::size_t, 3>>& wanted,
                            std::uint64_t seed) {
    SplitSpec split;
    split.seed = seed;
    split.train.resize(shuffled.size());
    split.val.resize(shuffled.size());
    split.test.resize(shuffled.size());
    for (std::size_t c = 0; c < shuffled.size(); ++c) {
        const auto& pool = shuffled[c];
        const auto [n_train, n_val, n_test] = wanted[c];
        if (n_train + n_val + n_test > pool.size())
            throw InsufficientSamples("class " + std::to_string(c) + " has " +
                                      std::to_string(pool.size()) + " samples, need " +
                                      std::to_string(n_train + n_val + n_test));
        std::size_t pos = 0;
        for (std::size_t i = 0; i < n_train; ++i) split.train[c].push_back(pool[pos++]);
        for (std::size_t i = 0; i < n_val; ++i) split.val[c].push_back(pool[pos++]);
        for (std::size_t i = 0; i < n_test; ++i) split.test[c].push_back(pool[pos++]);
    }
    return split;
}

} // namespace

SplitSpec stratified_split(const DatasetManifest& manifest, const SplitCounts& counts,
                           std::uint64_t seed) {
    if (counts.train < 0 || counts.val < 0 || counts.test < 0)
        throw InsufficientSamples("split counts must be nonnegative");
    const auto shuffled = shuffled_per_class(manifest, seed);
    std::vector<std::array<std::size_t, 3>> wanted(shuffled.size(),
                                                   {static_cast<std::size_t>(counts.train),
                                                    static_cast<std::size_t>(counts.val),
                                                    static_cast<std::size_t>(counts.test)});
    return assign_contiguous(shuffled, wanted, seed);
}

SplitSpec stratified_split(const DatasetManifest& manifest, const SplitRatios& ratios,
                           std::uint64_t seed) {
    if (ratios.train < 0 || ratios.val < 0 || ratios.train + ratios.val > 1.0 + 1e-12)
        throw InsufficientSamples("split ratios must be nonnegative and sum to at most 1");
    const auto shuffled = shuffled_per_class(manifest, seed);
    std::vector<std::array<std::size_t, 3>> wanted(shuffled.size());
    for (std::size_t c = 0; c < shuffled.size(); ++c) {
        const std::size_t n = shuffled[c].size();
        const std::size_t n_train =
            static_cast<std::size_t>(std::floor(ratios.train * static_cast<double>(n)));
        const std::size_t n_val =
            static_cast<std::size_t>(std::floor(ratios.val * static_cast<double>(n)));
        wanted[c] = {n_train, n_val, n - n_train - n_val};
    }
    return assign_contiguous(shuffled, wanted, seed);
}

std::vector<SplitSpec> kfold_split(const DatasetManifest& manifest, int folds,
                                   std::uint64_t seed) {
    if (folds < 2) throw InsufficientSamples("need at least 2 folds");
    const auto shuffled = shuffled_per_class(manifest, seed);
    for (std::size_t c = 0; c < shuffled.size(); ++c)
        if (shuffled[c].size() < static_cast<std::size_t>(folds))
            throw InsufficientSamples("class " + std::to_string(c) + " has fewer samples than folds");

    std::vector<SplitSpec> specs(static_cast<std::size_t>(folds));
    for (int f = 0; f < folds; ++f) {
        auto& spec = specs[static_cast<std::size_t>(f)];
        spec.seed = seed;
        spec.train.resize(shuffled.size());
        spec.val.resize(shuffled.size());
        spec.test.resize(shuffled.size()); // empty per fold
        for (std::size_t c = 0; c < shuffled.size(); ++c) {
            const auto& pool = shuffled[c];
            const std::size_t n = pool.size();
            const std::size_t begin = n * static_cast<std::size_t>(f) / static_cast<std::size_t>(folds);
            const std::size_t end =
                n * static_cast<std::size_t>(f + 1) / static_cast<std::size_t>(folds);
            for (std::size_t i = 0; i < n; ++i) {
                if (i >= begin && i < end)
                    spec.val[c].push_back(pool[i]);
                else
                    spec.train[c].push_back(pool[i]);
            }
        }
    }
    return specs;
}

namespace {

RunMetrics score_predictions(const std::vector<ProbVector>& outputs,
                             const std::vector<LabelId>& truths, int class_count,
                             ConfusionMatrix* confusion_out) {
    std::vector<LabelId> preds;
    preds.reserve(outputs.size());
    for (const auto& probs : outputs) preds.push_back(decide(probs));

    RunMetrics metrics;
    metrics.acc_at_1 = acc_at_k(outputs, truths, 1);
    metrics.acc_at_3 = acc_at_k(outputs, truths, 3);
    metrics.macro_f1 = mve::macro_f1(preds, truths, class_count);
    metrics.micro_f1 = mve::micro_f1(preds, truths, class_count);
    if (confusion_out) *confusion_out = confusion_matrix(preds, truths, class_count);
    return metrics;
}

} // namespace

std::vector<KindReport> run_experiment(const Dataset& dataset, const SplitSpec& split,
                                       const ExperimentConfig& cfg) {
    ViewInputCache cache(dataset, cfg.view_cfg);
    for (EnsembleKind kind : cfg.kinds)
        for (ViewKind view : kind_views(kind)) cache.view(view);

    const std::vector<std::size_t> train_indices = split.all_train();
    const std::vector<std::size_t> test_indices = split.all_test();
    std::vector<LabelId> test_truths;
    test_truths.reserve(test_indices.size());
    for (std::size_t i : test_indices) test_truths.push_back(dataset.label(i));

    struct Task {
        std::size_t kind_index;
        int run;
    };
    std::vector<Task> tasks;
    for (std::size_t ki = 0; ki < cfg.kinds.size(); ++ki)
        for (int r = 0; r < cfg.runs; ++r) tasks.push_back({ki, r});

    std::vector<std::vector<RunMetrics>> metrics(cfg.kinds.size(),
                                                 std::vector<RunMetrics>(
                                                     static_cast<std::size_t>(cfg.runs)));
    std::vector<ConfusionMatrix> confusions(cfg.kinds.size());

    parallel_for(tasks.size(), cfg.jobs, [&](std::size_t t) {
        const auto [ki, run] = tasks[t];
        const EnsembleKind kind = cfg.kinds[ki];
        const std::size_t member_count = kind_views(kind).size();

        std::vector<TrainConfig> member_cfgs(member_count, cfg.train_cfg);
        for (std::size_t m = 0; m < member_count; ++m)
            member_cfgs[m].seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(kind),
                                              static_cast<std::uint64_t>(run), m);

        const EnsembleModel model = build_multiview(cache, train_indices, kind, member_cfgs);

        std::vector<ProbVector> outputs;
        outputs.reserve(test_indices.size());
        for (std::size_t idx : test_indices)
            outputs.push_back(ensemble_predict_cached(model, cache, idx));

        ConfusionMatrix confusion;
        metrics[ki][static_cast<std::size_t>(run)] =
            score_predictions(outputs, test_truths, dataset.class_count(), &confusion);
        if (run == 0) confusions[ki] = std::move(confusion);
    });

    std::vector<KindReport> reports;
    for (std::size_t ki = 0; ki < cfg.kinds.size(); ++ki) {
        KindReport report;
        report.kind = cfg.kinds[ki];
        report.metrics.runs = std::move(metrics[ki]);
        report.confusion = std::move(confusions[ki]);
        reports.push_back(std::move(report));
    }
    return reports;
}

double GridCell::mean_acc() const {
    return mean_stddev(run_accs).mean;
}

GridSearchResult grid_search(const Dataset& dataset, const SplitSpec& split, ViewKind view,
                             std::span<const double> learning_rates,
                             std::span<const int> batch_sizes, const TrainConfig& base,
                             const ViewConfig& view_cfg, std::uint64_t master_seed,
                             int runs_per_cell, int jobs) {
    ViewInputCache cache(dataset, view_cfg);
    cache.view(view);

    const std::vector<std::size_t> train_indices = split.all_train();
    const std::vector<std::size_t> val_indices = split.all_val();
    std::vector<LabelId> val_truths;
    for (std::size_t i : val_indices) val_truths.push_back(dataset.label(i));
    std::vector<LabelId> train_labels;
    for (std::size_t i : train_indices) train_labels.push_back(dataset.label(i));

    GridSearchResult result;
    for (double lr : learning_rates)
        for (int batch : batch_sizes) {
            GridCell cell;
            cell.learning_rate = lr;
            cell.batch_size = batch;
            cell.run_accs.assign(static_cast<std::size_t>(runs_per_cell), 0.0);
            result.cells.push_back(std::move(cell));
        }

    struct Task {
        std::size_t cell;
        int run;
    };
    std::vector<Task> tasks;
    for (std::size_t c = 0; c < result.cells.size(); ++c)
        for (int r = 0; r < runs_per_cell; ++r) tasks.push_back({c, r});

    const auto& all_inputs = cache.view(view);
    std::vector<ModelInput> train_inputs;
    train_inputs.reserve(train_indices.size());
    for (std::size_t i : train_indices) train_inputs.push_back(all_inputs[i]);

    parallel_for(tasks.size(), jobs, [&](std::size_t t) {
        const auto [c, run] = tasks[t];
        GridCell& cell = result.cells[c];
        TrainConfig cfg = base;
        cfg.learning_rate = cell.learning_rate;
        cfg.batch_size = cell.batch_size;
        cfg.seed = derive_seed(master_seed, c, static_cast<std::uint64_t>(run), 0x67726964ULL);

        const TrainedClassifier model =
            train(train_inputs, train_labels, cfg, dataset.class_count());
        std::vector<ProbVector> outputs;
        outputs.reserve(val_indices.size());
        for (std::size_t idx : val_indices) outputs.push_back(predict(model, all_inputs[idx]));
        cell.run_accs[static_cast<std::size_t>(run)] = acc_at_k(outputs, val_truths, 1);
    });

    std::size_t best = 0;
    for (std::size_t c = 1; c < result.cells.size(); ++c) {
        const GridCell& cand = result.cells[c];
        const GridCell& cur = result.cells[best];
        if (cand.mean_acc() > cur.mean_acc()) {
            best = c;
        } else if (cand.mean_acc() == cur.mean_acc()) {
            if (cand.learning_rate < cur.learning_rate ||
                (cand.learning_rate == cur.learning_rate && cand.batch_size < cur.batch_size))
                best = c;
        }
    }
    result.best = base;
    result.best.learning_rate = result.cells[best].learning_rate;
    result.best.batch_size = result.cells[best].batch_size;
    return result;
}

std::vector<RatioPoint> ratio_sweep(const Dataset& dataset, const ExperimentConfig& cfg) {
    std::vector<RatioPoint> points;
    for (int step = 1; step <= 8; ++step) {
        const double train_ratio = 0.1 * step;
        SplitRatios ratios;
        ratios.train = train_ratio;
        ratios.val = 0.1;
        ratios.test = 1.0 - train_ratio - 0.1;
        const SplitSpec split =
            stratified_split(dataset.manifest(), ratios,
                             derive_seed(cfg.master_seed, static_cast<std::uint64_t>(step),
                                         0x726174696fULL));
        ExperimentConfig point_cfg = cfg;
        point_cfg.master_seed =
            derive_seed(cfg.master_seed, static_cast<std::uint64_t>(step), 0x7377656570ULL);

        RatioPoint point;
        point.train_ratio = train_ratio;
        point.reports = run_experiment(dataset, split, point_cfg);
        points.push_back(std::move(point));
    }
    return points;
}

} // namespace mve
