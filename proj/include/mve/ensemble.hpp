#pragma once

#include <array>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mve/classifier.hpp"
#include "mve/dataset.hpp"
#include "mve/views.hpp"

namespace mve {

enum class EnsembleKind { O, G, S, OOO, OGS, OOO_bagging };

const char* ensemble_kind_name(EnsembleKind kind);
EnsembleKind ensemble_kind_from_name(const std::string& name); // throws ParseError

// Member views per kind: O/G/S are single-member, OOO and OOO_bagging use
// three Original members, OGS uses (Original, Grey, Skeleton).
std::vector<ViewKind> kind_views(EnsembleKind kind);

struct EnsembleMember {
    ViewKind view = ViewKind::Original;
    TrainedClassifier classifier;
};

struct EnsembleModel {
    std::vector<EnsembleMember> members;
    int class_count = 0;
};

// Prepared per-view classifier inputs for a whole dataset, materialized on
// first use. Safe to share across threads.
class ViewInputCache {
public:
    ViewInputCache(const Dataset& dataset, ViewConfig cfg);

    const std::vector<ModelInput>& view(ViewKind kind);
    const ViewConfig& config() const { return cfg_; }
    const Dataset& dataset() const { return *dataset_; }

private:
    const Dataset* dataset_;
    ViewConfig cfg_;
    std::array<std::optional<std::vector<ModelInput>>, 3> views_;
    std::mutex mutex_;
};

// Elementwise mean of the member distributions.
ProbVector soft_vote(std::span<const ProbVector> member_probs);

// Index of the maximum probability; ties broken by lowest class index.
LabelId decide(const ProbVector& probs);

// Trains one member per view of `kind` on the full train set (no
// subsampling); members differ only in their TrainConfig (seed for OOO).
// cfgs must provide one entry per member.
EnsembleModel build_multiview(ViewInputCache& cache, std::span<const std::size_t> train_indices,
                              EnsembleKind kind, std::span<const TrainConfig> cfgs, int jobs = 1);

// Full transform -> prepare -> predict -> soft-vote path for one image.
ProbVector ensemble_predict(const EnsembleModel& model, const RasterImage& img,
                            const ViewConfig& cfg);

// Same prediction path against cached inputs (index into cache.dataset()).
ProbVector ensemble_predict_cached(const EnsembleModel& model, ViewInputCache& cache,
                                   std::size_t index);

// n i.i.d. uniform draws from [0, n) with replacement.
std::vector<std::size_t> bootstrap_sample(std::size_t n, std::uint64_t rng_seed);

// Closed form [1 - ((n-1)/n)^n] * n for the expected number of distinct
// indices in a bootstrap resample.
double unique_sample_expectation(std::size_t n);

struct BaggingBuild {
    EnsembleModel model;
    // per member: drawn global indices (with repeats) and out-of-bag
    // validation indices
    std::vector<std::vector<std::size_t>> member_train;
    std::vector<std::vector<std::size_t>> member_validation;
};

// Three Original-view members, each trained on an independent per-class
// bootstrap resample of the pool. The pool must exclude the reserved test
// images (checked).
BaggingBuild build_bagging(ViewInputCache& cache,
                           const std::vector<std::vector<std::size_t>>& per_class_pool,
                           std::span<const std::size_t> test_reserved,
                           std::span<const TrainConfig> cfgs, std::uint64_t rng_seed,
                           int jobs = 1);

// Directory persistence: manifest.json (kind, view list, k, view config)
// plus one serialized classifier per member.
void save_ensemble(const std::filesystem::path& dir, const EnsembleModel& model,
                   EnsembleKind kind, const ViewConfig& cfg);

struct LoadedEnsemble {
    EnsembleModel model;
    EnsembleKind kind = EnsembleKind::O;
    ViewConfig cfg;
};
LoadedEnsemble load_ensemble(const std::filesystem::path& dir);

} // namespace mve
