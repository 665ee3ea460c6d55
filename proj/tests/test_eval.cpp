#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "mve/errors.hpp"
#include "mve/eval.hpp"
#include "mve/rng.hpp"
#include "fixtures.hpp"

using namespace mve;

namespace {

// independent counting oracles for the metric checks
namespace metric_oracle {

double accuracy_percent(const std::vector<LabelId>& preds, const std::vector<LabelId>& truths) {
    if (preds.empty()) return 0;
    int hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == truths[i];
    return 100.0 * hits / static_cast<double>(preds.size());
}

double macro_f1_percent(const std::vector<LabelId>& preds, const std::vector<LabelId>& truths,
                        int k) {
    double total = 0;
    for (int c = 0; c < k; ++c) {
        int tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            if (preds[i] == c && truths[i] == c) ++tp;
            if (preds[i] == c && truths[i] != c) ++fp;
            if (preds[i] != c && truths[i] == c) ++fn;
        }
        const double p = tp + fp > 0 ? double(tp) / (tp + fp) : 0.0;
        const double r = tp + fn > 0 ? double(tp) / (tp + fn) : 0.0;
        total += p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    }
    return 100.0 * total / k;
}

double top_k_percent(const std::vector<ProbVector>& outputs, const std::vector<LabelId>& truths,
                     int k_top) {
    if (outputs.empty()) return 0;
    int hits = 0;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        // count classes strictly better than truth, and ties with lower index
        const LabelId t = truths[i];
        int before = 0;
        for (std::size_t c = 0; c < outputs[i].size(); ++c) {
            if (static_cast<LabelId>(c) == t) continue;
            if (outputs[i][c] > outputs[i][static_cast<std::size_t>(t)] ||
                (outputs[i][c] == outputs[i][static_cast<std::size_t>(t)] &&
                 static_cast<LabelId>(c) < t))
                ++before;
        }
        if (before < k_top) ++hits;
    }
    return 100.0 * hits / static_cast<double>(outputs.size());
}

} // namespace metric_oracle

std::vector<LabelId> random_labels(std::size_t n, int k, Rng& rng) {
    std::vector<LabelId> labels(n);
    for (auto& l : labels) l = static_cast<LabelId>(rng.bounded(static_cast<std::uint64_t>(k)));
    return labels;
}

std::vector<ProbVector> random_outputs(std::size_t n, int k, Rng& rng) {
    std::vector<ProbVector> outputs(n);
    for (auto& probs : outputs) {
        probs.resize(static_cast<std::size_t>(k));
        double sum = 0;
        for (auto& p : probs) {
            p = rng.real01() + 1e-9;
            sum += p;
        }
        for (auto& p : probs) p /= sum;
    }
    return outputs;
}

} // namespace

TEST_CASE("confusion_matrix counts (truth, prediction) pairs") {
    {
        const std::vector<LabelId> same{0, 1, 2, 1, 0};
        const ConfusionMatrix cm = confusion_matrix(same, same, 3);
        CHECK(cm.diagonal() == 5);
        CHECK(cm.total() == 5);
    }
    {
        const std::vector<LabelId> preds{1, 1};
        const std::vector<LabelId> truths{0, 1};
        const ConfusionMatrix cm = confusion_matrix(preds, truths, 2);
        CHECK(cm.at(0, 0) == 0);
        CHECK(cm.at(0, 1) == 1);
        CHECK(cm.at(1, 0) == 0);
        CHECK(cm.at(1, 1) == 1);
    }
    {
        const std::vector<LabelId> none;
        const ConfusionMatrix cm = confusion_matrix(none, none, 4);
        CHECK(cm.total() == 0);
    }
    CHECK_THROWS_AS(confusion_matrix(std::vector<LabelId>{0}, std::vector<LabelId>{0, 1}, 2),
                    LengthMismatch);
    CHECK_THROWS_AS(confusion_matrix(std::vector<LabelId>{7}, std::vector<LabelId>{0}, 2),
                    LabelOutOfRange);
}

TEST_CASE("acc_at_k examples") {
    Rng rng(31);
    const auto outputs = random_outputs(40, 6, rng);
    const auto truths = random_labels(40, 6, rng);
    CHECK(acc_at_k(outputs, truths, 6) == 100.0);

    {
        // first sample: top-1 hit; second: truth ranked second
        std::vector<ProbVector> two{{0.7, 0.2, 0.1}, {0.5, 0.4, 0.1}};
        std::vector<LabelId> t{0, 1};
        CHECK(acc_at_k(two, t, 1) == 50.0);
        CHECK(acc_at_k(two, t, 3) == 100.0);
    }
    {
        // uniform probabilities: ties resolved by class index
        std::vector<ProbVector> uniform{ProbVector(16, 1.0 / 16)};
        CHECK(acc_at_k(uniform, std::vector<LabelId>{0}, 1) == 100.0);
        CHECK(acc_at_k(uniform, std::vector<LabelId>{1}, 1) == 0.0);
    }
}

TEST_CASE("metrics match brute-force counting oracles on random instances") {
    Rng rng(32);
    for (const int k : {2, 3, 16}) {
        for (int rep = 0; rep < 60; ++rep) {
            const std::size_t n = 1 + rng.bounded(60);
            const auto truths = random_labels(n, k, rng);
            const auto outputs = random_outputs(n, k, rng);
            std::vector<LabelId> preds;
            for (const auto& probs : outputs) preds.push_back(decide(probs));

            CHECK(macro_f1(preds, truths, k) ==
                  doctest::Approx(metric_oracle::macro_f1_percent(preds, truths, k)).epsilon(1e-12));
            CHECK(acc_at_k(outputs, truths, 1) ==
                  doctest::Approx(metric_oracle::top_k_percent(outputs, truths, 1)).epsilon(1e-12));
            CHECK(acc_at_k(outputs, truths, 3) ==
                  doctest::Approx(metric_oracle::top_k_percent(outputs, truths, 3)).epsilon(1e-12));

            // Acc@1 = Micro-F1 for single-label multiclass
            const double acc1 = acc_at_k(outputs, truths, 1);
            CHECK(micro_f1(preds, truths, k) == doctest::Approx(acc1).epsilon(1e-12));
            CHECK(metric_oracle::accuracy_percent(preds, truths) ==
                  doctest::Approx(acc1).epsilon(1e-12));

            // Acc@k non-decreasing in k
            double last = 0;
            for (int kt = 1; kt <= k; ++kt) {
                const double acc = acc_at_k(outputs, truths, kt);
                CHECK(acc >= last);
                last = acc;
            }

            // confusion diagonal reproduces Acc@1
            const ConfusionMatrix cm = confusion_matrix(preds, truths, k);
            CHECK(100.0 * static_cast<double>(cm.diagonal()) / static_cast<double>(cm.total()) ==
                  doctest::Approx(acc1).epsilon(1e-12));
        }
    }
}

TEST_CASE("macro_f1 hand-counted example") {
    const std::vector<LabelId> truths{0, 0, 1, 1};
    const std::vector<LabelId> preds{0, 1, 1, 1};
    // class 0: P=1, R=.5, F1=2/3; class 1: P=2/3, R=1, F1=0.8
    CHECK(macro_f1(preds, truths, 2) == doctest::Approx(100.0 * (2.0 / 3 + 0.8) / 2).epsilon(1e-12));

    CHECK(macro_f1(truths, truths, 2) == 100.0);
    CHECK(micro_f1(truths, truths, 2) == 100.0);
    const std::vector<LabelId> wrong{2, 2, 2, 2};
    CHECK(micro_f1(wrong, std::vector<LabelId>{0, 0, 1, 1}, 3) == 0.0);
}

TEST_CASE("stratified_split by counts") {
    const DatasetManifest manifest = fixtures::fake_manifest(3, 150);
    const SplitSpec split = stratified_split(manifest, SplitCounts{110, 20, 20}, 9);
    REQUIRE(split.train.size() == 3);
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(split.train[c].size() == 110);
        CHECK(split.val[c].size() == 20);
        CHECK(split.test[c].size() == 20);
        std::set<std::size_t> all;
        all.insert(split.train[c].begin(), split.train[c].end());
        all.insert(split.val[c].begin(), split.val[c].end());
        all.insert(split.test[c].begin(), split.test[c].end());
        CHECK(all.size() == 150); // disjoint
        for (std::size_t idx : all) CHECK(manifest.entries[idx].label == static_cast<int>(c));
    }
    CHECK(stratified_split(manifest, SplitCounts{110, 20, 20}, 9) == split);
    CHECK(stratified_split(manifest, SplitCounts{110, 20, 20}, 10) != split);
    CHECK_THROWS_AS(stratified_split(manifest, SplitCounts{140, 20, 20}, 9), InsufficientSamples);
}

TEST_CASE("stratified_split by ratios uses floor/remainder") {
    const DatasetManifest manifest = fixtures::fake_manifest(2, 150);
    const SplitSpec split = stratified_split(manifest, SplitRatios{0.1, 0.1, 0.8}, 3);
    for (std::size_t c = 0; c < 2; ++c) {
        CHECK(split.train[c].size() == 15);
        CHECK(split.val[c].size() == 15);
        CHECK(split.test[c].size() == 120);
    }
    const SplitSpec wide = stratified_split(manifest, SplitRatios{0.8, 0.1, 0.1}, 3);
    CHECK(wide.train[0].size() == 120);
    CHECK(wide.val[0].size() == 15);
    CHECK(wide.test[0].size() == 15);
}

TEST_CASE("kfold_split partitions every class") {
    const DatasetManifest manifest = fixtures::fake_manifest(3, 20);
    const auto folds = kfold_split(manifest, 5, 21);
    REQUIRE(folds.size() == 5);
    std::multiset<std::size_t> seen;
    for (const auto& fold : folds) {
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(fold.val[c].size() == 4);
            CHECK(fold.train[c].size() == 16);
            CHECK(fold.test[c].empty());
            seen.insert(fold.val[c].begin(), fold.val[c].end());
        }
    }
    CHECK(seen.size() == manifest.entries.size());
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) CHECK(seen.count(i) == 1);

    CHECK(kfold_split(manifest, 5, 21) == folds);
    CHECK_THROWS_AS(kfold_split(fixtures::fake_manifest(2, 3), 5, 1), InsufficientSamples);
}

TEST_CASE("mean_stddev of a single value has zero deviation") {
    const MeanStd one = mean_stddev(std::vector<double>{42.0});
    CHECK(one.mean == 42.0);
    CHECK(one.stddev == 0.0);
}

TEST_CASE("run_experiment produces a stable, well-formed table") {
    const Dataset ds = Dataset::synthetic(fixtures::tiny_spec(2, 10));
    const SplitSpec split = stratified_split(ds.manifest(), SplitCounts{6, 2, 2}, 5);

    ExperimentConfig cfg;
    cfg.kinds = {EnsembleKind::O, EnsembleKind::OGS};
    cfg.runs = 2;
    cfg.train_cfg = fixtures::tiny_train(4);
    cfg.view_cfg = fixtures::tiny_view();
    cfg.master_seed = 3;

    const auto reports = run_experiment(ds, split, cfg);
    REQUIRE(reports.size() == 2);
    for (const auto& report : reports) {
        REQUIRE(report.metrics.runs.size() == 2);
        for (const auto& run : report.metrics.runs) {
            CHECK(run.acc_at_1 >= 0.0);
            CHECK(run.acc_at_1 <= 100.0);
            CHECK(run.acc_at_3 >= run.acc_at_1);
            CHECK(std::abs(run.acc_at_1 - run.micro_f1) < 1e-9);
        }
        CHECK(report.confusion.total() == 4); // 2 test images x 2 classes
    }

    // determinism across repeated invocations and job counts
    const auto again = run_experiment(ds, split, cfg);
    ExperimentConfig threaded = cfg;
    threaded.jobs = 4;
    const auto parallel = run_experiment(ds, split, threaded);
    for (std::size_t k = 0; k < reports.size(); ++k)
        for (std::size_t r = 0; r < reports[k].metrics.runs.size(); ++r) {
            CHECK(reports[k].metrics.runs[r].acc_at_1 == again[k].metrics.runs[r].acc_at_1);
            CHECK(reports[k].metrics.runs[r].acc_at_1 == parallel[k].metrics.runs[r].acc_at_1);
            CHECK(reports[k].metrics.runs[r].macro_f1 == parallel[k].metrics.runs[r].macro_f1);
        }

    // a single run reports zero deviation
    ExperimentConfig single = cfg;
    single.runs = 1;
    const auto once = run_experiment(ds, split, single);
    CHECK(once[0].metrics.acc_at_1().stddev == 0.0);
}

TEST_CASE("grid_search evaluates every cell twice and breaks ties low") {
    const Dataset ds = Dataset::synthetic(fixtures::tiny_spec(2, 8, 13, /*noise=*/0));
    const SplitSpec split = stratified_split(ds.manifest(), SplitCounts{4, 2, 2}, 6);

    const double lrs[] = {0.001, 0.01, 0.1};
    const int batches[] = {32, 64, 128};
    const auto result = grid_search(ds, split, ViewKind::Grey, lrs, batches,
                                    fixtures::tiny_train(12), fixtures::tiny_view(), 5);
    REQUIRE(result.cells.size() == 9);
    std::size_t total_runs = 0;
    for (const auto& cell : result.cells) total_runs += cell.run_accs.size();
    CHECK(total_runs == 18);

    // the noise-free tiny problem is separable: every cell that converges
    // ties at 100 and the tie must resolve to the lowest (lr, batch)
    double best_acc = 0;
    for (const auto& cell : result.cells) best_acc = std::max(best_acc, cell.mean_acc());
    std::vector<const GridCell*> top;
    for (const auto& cell : result.cells)
        if (cell.mean_acc() == best_acc) top.push_back(&cell);
    REQUIRE(!top.empty());
    const GridCell* expected = top.front();
    for (const GridCell* cell : top)
        if (cell->learning_rate < expected->learning_rate ||
            (cell->learning_rate == expected->learning_rate &&
             cell->batch_size < expected->batch_size))
            expected = cell;
    CHECK(result.best.learning_rate == expected->learning_rate);
    CHECK(result.best.batch_size == expected->batch_size);

    // single-cell grid returns that cell
    const double one_lr[] = {0.05};
    const int one_batch[] = {16};
    const auto single = grid_search(ds, split, ViewKind::Grey, one_lr, one_batch,
                                    fixtures::tiny_train(2), fixtures::tiny_view(), 5);
    CHECK(single.best.learning_rate == 0.05);
    CHECK(single.best.batch_size == 16);
}

TEST_CASE("ratio_sweep emits eight points with the documented split rule") {
    const Dataset ds = Dataset::synthetic(fixtures::tiny_spec(2, 10));
    ExperimentConfig cfg;
    cfg.kinds = {EnsembleKind::O};
    cfg.runs = 1;
    cfg.train_cfg = fixtures::tiny_train(2);
    cfg.view_cfg = fixtures::tiny_view();
    cfg.master_seed = 8;

    const auto points = ratio_sweep(ds, cfg);
    REQUIRE(points.size() == 8);
    for (std::size_t p = 0; p < points.size(); ++p) {
        CHECK(points[p].train_ratio == doctest::Approx(0.1 * (p + 1)).epsilon(1e-12));
        REQUIRE(points[p].reports.size() == 1);
        CHECK(points[p].reports[0].metrics.runs.size() == 1);
    }
}
