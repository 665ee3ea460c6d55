#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mve/eval.hpp"

namespace mve {

// One source's labels over a shared image list; entries kept sorted by
// image id so identical lists compare positionally.
struct LabelSet {
    std::string source_name;
    std::vector<std::string> image_ids;
    std::vector<LabelId> labels;

    static LabelSet from_pairs(std::string source,
                               std::vector<std::pair<std::string, LabelId>> assignments);
    bool same_images(const LabelSet& other) const { return image_ids == other.image_ids; }
};

struct ConsistencyMatrix {
    std::vector<std::string> sources;
    std::vector<double> rates; // symmetric, unit diagonal, row-major

    double at(std::size_t a, std::size_t b) const { return rates[a * sources.size() + b]; }
};

struct AgreementMatrix {
    int class_count = 0;
    std::vector<double> values;     // k x k row-stochastic, row-major
    std::vector<bool> row_flagged;  // true where no mass was observed (row set uniform)

    double at(int i, int j) const {
        return values[static_cast<std::size_t>(i) * class_count + j];
    }
};

// n_con / n: fraction of images with equal labels.
double consistency_rate(const LabelSet& a, const LabelSet& b);

ConsistencyMatrix consistency_matrix(std::span<const LabelSet> sets);

// Pairwise-counting agreement: over every ordered pair of distinct systems
// (a, b), N(i, j) counts images a assigns i and b assigns j; rows are
// normalized, zero-mass rows become uniform and are flagged.
AgreementMatrix agreement_matrix(std::span<const std::vector<LabelId>> prediction_sets,
                                 int class_count);

// CSV ingestion, columns image_id,label,source. When class_names is given,
// labels must be members; otherwise the class universe is the sorted set of
// distinct label strings.
struct LabelCsv {
    std::vector<LabelSet> sets;            // sorted by source name
    std::vector<std::string> class_names;
};
LabelCsv load_label_sets_csv(const std::filesystem::path& path,
                             const std::vector<std::string>* class_names = nullptr);

// Returns the label of `set` for each manifest entry, in entry order.
// Throws ImageListMismatch unless the set covers exactly the manifest paths.
std::vector<LabelId> aligned_labels(const LabelSet& set, const DatasetManifest& manifest);

struct CrossLabelResult {
    std::vector<std::string> sources;
    // [trained set][ground-truth set] Acc@1 over all (fold, repeat) values
    std::vector<std::vector<MeanStd>> table;
    // one prediction per image per training label set, from the
    // best-validation repeat of each fold
    std::vector<std::vector<LabelId>> system_predictions;
    AgreementMatrix agreement;
};

// Fivefold cross-validation (folds shared across label sets), `repeats`
// seeded runs per fold; every trained model's validation predictions are
// scored against every label set as ground truth.
CrossLabelResult cross_label_eval(const Dataset& dataset, std::span<const LabelSet> label_sets,
                                  int folds, int repeats, EnsembleKind kind,
                                  const TrainConfig& base, const ViewConfig& view_cfg,
                                  std::uint64_t master_seed, int jobs = 1);

} // namespace mve
