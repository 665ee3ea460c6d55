#include "mve/consistency.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mve/errors.hpp"
#include "mve/parallel.hpp"
#include "mve/rng.hpp"

namespace mve {

LabelSet LabelSet::from_pairs(std::string source,
                              std::vector<std::pair<std::string, LabelId>> assignments) {
    std::sort(assignments.begin(), assignments.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < assignments.size(); ++i)
        if (assignments[i].first == assignments[i - 1].first)
            throw ParseError("duplicate label for image '" + assignments[i].first +
                             "' in source '" + source + "'");
    LabelSet set;
    set.source_name = std::move(source);
    set.image_ids.reserve(assignments.size());
    set.labels.reserve(assignments.size());
    for (auto& [id, label] : assignments) {
        set.image_ids.push_back(std::move(id));
        set.labels.push_back(label);
    }
    return set;
}

double consistency_rate(const LabelSet& a, const LabelSet& b) {
    if (!a.same_images(b))
        throw ImageListMismatch("label sets '" + a.source_name + "' and '" + b.source_name +
                                "' cover different images");
    if (a.labels.empty()) return 1.0;
    std::size_t agree = 0;
    for (std::size_t i = 0; i < a.labels.size(); ++i) agree += (a.labels[i] == b.labels[i]);
    return static_cast<double>(agree) / static_cast<double>(a.labels.size());
}

ConsistencyMatrix consistency_matrix(std::span<const LabelSet> sets) {
    if (sets.size() < 2) throw FewerThanTwoSystems("consistency matrix needs at least 2 sets");
    ConsistencyMatrix matrix;
    for (const auto& set : sets) matrix.sources.push_back(set.source_name);
    matrix.rates.assign(sets.size() * sets.size(), 1.0);
    for (std::size_t a = 0; a < sets.size(); ++a)
        for (std::size_t b = a + 1; b < sets.size(); ++b) {
            const double rate = consistency_rate(sets[a], sets[b]);
            matrix.rates[a * sets.size() + b] = rate;
            matrix.rates[b * sets.size() + a] = rate;
        }
    return matrix;
}

AgreementMatrix agreement_matrix(std::span<const std::vector<LabelId>> prediction_sets,
                                 int class_count) {
    if (prediction_sets.size() < 2)
        throw FewerThanTwoSystems("agreement matrix needs at least 2 systems");
    const std::size_t n = prediction_sets.front().size();
    for (const auto& preds : prediction_sets)
        if (preds.size() != n)
            throw ImageListMismatch("prediction sets cover different image counts");

    const std::size_t k = static_cast<std::size_t>(class_count);
    std::vector<std::int64_t> counts(k * k, 0);
    for (std::size_t a = 0; a < prediction_sets.size(); ++a)
        for (std::size_t b = 0; b < prediction_sets.size(); ++b) {
            if (a == b) continue;
            for (std::size_t i = 0; i < n; ++i) {
                const LabelId la = prediction_sets[a][i];
                const LabelId lb = prediction_sets[b][i];
                if (la < 0 || la >= class_count || lb < 0 || lb >= class_count)
                    throw LabelOutOfRange("prediction label outside [0, k)");
                ++counts[static_cast<std::size_t>(la) * k + static_cast<std::size_t>(lb)];
            }
        }

    AgreementMatrix matrix;
    matrix.class_count = class_count;
    matrix.values.assign(k * k, 0.0);
    matrix.row_flagged.assign(k, false);
    for (std::size_t i = 0; i < k; ++i) {
        std::int64_t row_mass = 0;
        for (std::size_t j = 0; j < k; ++j) row_mass += counts[i * k + j];
        if (row_mass == 0) {
            matrix.row_flagged[i] = true;
            for (std::size_t j = 0; j < k; ++j) matrix.values[i * k + j] = 1.0 / static_cast<double>(k);
        } else {
            for (std::size_t j = 0; j < k; ++j)
                matrix.values[i * k + j] =
                    static_cast<double>(counts[i * k + j]) / static_cast<double>(row_mass);
        }
    }
    return matrix;
}

LabelCsv load_label_sets_csv(const std::filesystem::path& path,
                             const std::vector<std::string>* class_names) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open label CSV '" + path.string() + "'");

    struct Row {
        std::string image_id, label, source;
    };
    std::vector<Row> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream fields(line);
        Row row;
        if (!std::getline(fields, row.image_id, ',') || !std::getline(fields, row.label, ',') ||
            !std::getline(fields, row.source))
            throw ParseError("label CSV line needs image_id,label,source: " + line);
        if (first) {
            first = false;
            if (row.image_id == "image_id") continue; // header
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("label CSV '" + path.string() + "' has no rows");

    LabelCsv result;
    if (class_names) {
        result.class_names = *class_names;
    } else {
        std::set<std::string> names;
        for (const auto& row : rows) names.insert(row.label);
        result.class_names.assign(names.begin(), names.end());
    }
    std::map<std::string, LabelId> class_index;
    for (std::size_t i = 0; i < result.class_names.size(); ++i)
        class_index[result.class_names[i]] = static_cast<LabelId>(i);

    std::map<std::string, std::vector<std::pair<std::string, LabelId>>> by_source;
    for (const auto& row : rows) {
        const auto it = class_index.find(row.label);
        if (it == class_index.end())
            throw ParseError("label '" + row.label + "' is not a known class name");
        by_source[row.source].emplace_back(row.image_id, it->second);
    }

    for (auto& [source, pairs] : by_source)
        result.sets.push_back(LabelSet::from_pairs(source, std::move(pairs)));
    return result;
}

std::vector<LabelId> aligned_labels(const LabelSet& set, const DatasetManifest& manifest) {
    if (set.image_ids.size() != manifest.entries.size())
        throw ImageListMismatch("label set '" + set.source_name + "' covers " +
                                std::to_string(set.image_ids.size()) + " images, dataset has " +
                                std::to_string(manifest.entries.size()));
    std::map<std::string, LabelId> lookup;
    for (std::size_t i = 0; i < set.image_ids.size(); ++i) lookup[set.image_ids[i]] = set.labels[i];

    std::vector<LabelId> result;
    result.reserve(manifest.entries.size());
    for (const auto& entry : manifest.entries) {
        const auto it = lookup.find(entry.image_path);
        if (it == lookup.end())
            throw ImageListMismatch("label set '" + set.source_name + "' is missing image '" +
                                    entry.image_path + "'");
        result.push_back(it->second);
    }
    return result;
}

CrossLabelResult cross_label_eval(const Dataset& dataset, std::span<const LabelSet> label_sets,
                                  int folds, int repeats, EnsembleKind kind,
                                  const TrainConfig& base, const ViewConfig& view_cfg,
                                  std::uint64_t master_seed, int jobs) {
    if (label_sets.empty()) throw FewerThanTwoSystems("cross_label_eval needs >= 1 label set");
    const int k = dataset.class_count();
    const std::size_t n_sets = label_sets.size();
    const std::size_t n_images = dataset.size();

    std::vector<std::vector<LabelId>> set_labels; // [set][entry index]
    for (const auto& set : label_sets) set_labels.push_back(aligned_labels(set, dataset.manifest()));

    // folds are shared across label sets; stratified by the dataset's own labels
    const std::vector<SplitSpec> fold_specs =
        kfold_split(dataset.manifest(), folds, derive_seed(master_seed, 0x666f6c64ULL));

    ViewInputCache cache(dataset, view_cfg);
    for (ViewKind view : kind_views(kind)) cache.view(view);

    struct Task {
        std::size_t set_index;
        int fold;
        int repeat;
    };
    std::vector<Task> tasks;
    for (std::size_t s = 0; s < n_sets; ++s)
        for (int f = 0; f < folds; ++f)
            for (int r = 0; r < repeats; ++r) tasks.push_back({s, f, r});

    // per (set, fold, repeat): accuracy against every truth set, plus the
    // validation predictions for the agreement matrix
    struct TaskResult {
        std::vector<double> acc_vs_truth;
        std::vector<LabelId> val_preds;
    };
    std::vector<TaskResult> results(tasks.size());

    parallel_for(tasks.size(), jobs, [&](std::size_t t) {
        const auto [s, f, r] = tasks[t];
        const SplitSpec& fold = fold_specs[static_cast<std::size_t>(f)];
        const std::vector<std::size_t> train_indices = fold.all_train();
        const std::vector<std::size_t> val_indices = fold.all_val();

        const std::vector<ViewKind> views = kind_views(kind);
        std::vector<TrainConfig> member_cfgs(views.size(), base);
        for (std::size_t m = 0; m < member_cfgs.size(); ++m)
            member_cfgs[m].seed = derive_seed(master_seed, s * 1000 + static_cast<std::size_t>(f),
                                              static_cast<std::uint64_t>(r), m);

        // train with this label set's labels
        const int class_count = k;
        EnsembleModel model;
        model.class_count = class_count;
        model.members.resize(views.size());
        std::vector<LabelId> train_labels;
        train_labels.reserve(train_indices.size());
        for (std::size_t idx : train_indices) train_labels.push_back(set_labels[s][idx]);
        for (std::size_t m = 0; m < views.size(); ++m) {
            const auto& all_inputs = cache.view(views[m]);
            std::vector<ModelInput> inputs;
            inputs.reserve(train_indices.size());
            for (std::size_t idx : train_indices) inputs.push_back(all_inputs[idx]);
            model.members[m].view = views[m];
            model.members[m].classifier = train(inputs, train_labels, member_cfgs[m], class_count);
        }

        TaskResult& out = results[t];
        out.val_preds.reserve(val_indices.size());
        std::vector<ProbVector> outputs;
        outputs.reserve(val_indices.size());
        for (std::size_t idx : val_indices) {
            outputs.push_back(ensemble_predict_cached(model, cache, idx));
            out.val_preds.push_back(decide(outputs.back()));
        }
        out.acc_vs_truth.resize(n_sets);
        for (std::size_t truth = 0; truth < n_sets; ++truth) {
            std::vector<LabelId> truths;
            truths.reserve(val_indices.size());
            for (std::size_t idx : val_indices) truths.push_back(set_labels[truth][idx]);
            out.acc_vs_truth[truth] = acc_at_k(outputs, truths, 1);
        }
    });

    CrossLabelResult result;
    for (const auto& set : label_sets) result.sources.push_back(set.source_name);
    result.table.assign(n_sets, std::vector<MeanStd>(n_sets));
    for (std::size_t s = 0; s < n_sets; ++s)
        for (std::size_t truth = 0; truth < n_sets; ++truth) {
            std::vector<double> values;
            for (std::size_t t = 0; t < tasks.size(); ++t)
                if (tasks[t].set_index == s) values.push_back(results[t].acc_vs_truth[truth]);
            result.table[s][truth] = mean_stddev(values);
        }

    // best-validation repeat per fold supplies each system's predictions
    result.system_predictions.assign(n_sets, std::vector<LabelId>(n_images, 0));
    for (std::size_t s = 0; s < n_sets; ++s) {
        for (int f = 0; f < folds; ++f) {
            std::size_t best_task = tasks.size();
            for (std::size_t t = 0; t < tasks.size(); ++t) {
                if (tasks[t].set_index != s || tasks[t].fold != f) continue;
                if (best_task == tasks.size() ||
                    results[t].acc_vs_truth[s] > results[best_task].acc_vs_truth[s])
                    best_task = t;
            }
            const SplitSpec& fold = fold_specs[static_cast<std::size_t>(f)];
            const std::vector<std::size_t> val_indices = fold.all_val();
            for (std::size_t i = 0; i < val_indices.size(); ++i)
                result.system_predictions[s][val_indices[i]] = results[best_task].val_preds[i];
        }
    }
    // a single system has no pairwise agreement to accumulate
    if (n_sets >= 2) result.agreement = agreement_matrix(result.system_predictions, k);
    return result;
}

} // namespace mve
