#include "mve/ensemble.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "mve/errors.hpp"
#include "mve/parallel.hpp"
#include "mve/rng.hpp"

namespace mve {

namespace {

using json = nlohmann::json;

std::size_t view_slot(ViewKind kind) { return static_cast<std::size_t>(kind); }

std::vector<ModelInput> gather(const std::vector<ModelInput>& all,
                               std::span<const std::size_t> indices) {
    std::vector<ModelInput> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(all[i]);
    return out;
}

std::vector<LabelId> gather_labels(const Dataset& ds, std::span<const std::size_t> indices) {
    std::vector<LabelId> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(ds.label(i));
    return out;
}

} // namespace

const char* ensemble_kind_name(EnsembleKind kind) {
    switch (kind) {
        case EnsembleKind::O: return "O";
        case EnsembleKind::G: return "G";
        case EnsembleKind::S: return "S";
        case EnsembleKind::OOO: return "OOO";
        case EnsembleKind::OGS: return "OGS";
        case EnsembleKind::OOO_bagging: return "OOO_bagging";
    }
    return "?";
}

EnsembleKind ensemble_kind_from_name(const std::string& name) {
    if (name == "O") return EnsembleKind::O;
    if (name == "G") return EnsembleKind::G;
    if (name == "S") return EnsembleKind::S;
    if (name == "OOO") return EnsembleKind::OOO;
    if (name == "OGS") return EnsembleKind::OGS;
    if (name == "OOO_bagging" || name == "OOO-bagging") return EnsembleKind::OOO_bagging;
    throw ParseError("unknown ensemble kind '" + name + "'");
}

std::vector<ViewKind> kind_views(EnsembleKind kind) {
    switch (kind) {
        case EnsembleKind::O: return {ViewKind::Original};
        case EnsembleKind::G: return {ViewKind::Grey};
        case EnsembleKind::S: return {ViewKind::Skeleton};
        case EnsembleKind::OOO:
        case EnsembleKind::OOO_bagging:
            return {ViewKind::Original, ViewKind::Original, ViewKind::Original};
        case EnsembleKind::OGS:
            return {ViewKind::Original, ViewKind::Grey, ViewKind::Skeleton};
    }
    return {};
}

ViewInputCache::ViewInputCache(const Dataset& dataset, ViewConfig cfg)
    : dataset_(&dataset), cfg_(cfg) {}

const std::vector<ModelInput>& ViewInputCache::view(ViewKind kind) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto& slot = views_[view_slot(kind)];
    if (!slot) {
        const std::size_t n = dataset_->size();
        std::vector<ModelInput> inputs(n);
        const std::int64_t count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t i = 0; i < count; ++i) {
            const auto img = dataset_->image(static_cast<std::size_t>(i));
            inputs[static_cast<std::size_t>(i)] =
                prepare_input(transform_view(img, kind, cfg_), cfg_);
        }
        slot = std::move(inputs);
    }
    return *slot;
}

ProbVector soft_vote(std::span<const ProbVector> member_probs) {
    if (member_probs.empty()) throw EmptyMemberList("soft_vote needs at least one member");
    const std::size_t k = member_probs.front().size();
    ProbVector mean(k, 0.0);
    for (const auto& probs : member_probs) {
        if (probs.size() != k)
            throw LengthMismatch("member probability vectors differ in length");
        for (std::size_t i = 0; i < k; ++i) mean[i] += probs[i];
    }
    const double inv_m = 1.0 / static_cast<double>(member_probs.size());
    for (double& v : mean) v *= inv_m;
    return mean;
}

LabelId decide(const ProbVector& probs) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i)
        if (probs[i] > probs[best]) best = i;
    return static_cast<LabelId>(best);
}

EnsembleModel build_multiview(ViewInputCache& cache, std::span<const std::size_t> train_indices,
                              EnsembleKind kind, std::span<const TrainConfig> cfgs, int jobs) {
    if (kind == EnsembleKind::OOO_bagging)
        throw ParseError("OOO_bagging ensembles are built by build_bagging");
    const std::vector<ViewKind> views = kind_views(kind);
    if (cfgs.size() != views.size())
        throw LengthMismatch("need " + std::to_string(views.size()) + " member configs, got " +
                             std::to_string(cfgs.size()));

    const Dataset& ds = cache.dataset();
    const std::vector<LabelId> labels = gather_labels(ds, train_indices);
    const int k = ds.class_count();

    // materialize every needed view before spawning member jobs
    for (ViewKind v : views) cache.view(v);

    EnsembleModel model;
    model.class_count = k;
    model.members.resize(views.size());
    parallel_for(views.size(), jobs, [&](std::size_t m) {
        const std::vector<ModelInput> inputs = gather(cache.view(views[m]), train_indices);
        model.members[m].view = views[m];
        model.members[m].classifier = train(inputs, labels, cfgs[m], k);
    });
    return model;
}

ProbVector ensemble_predict(const EnsembleModel& model, const RasterImage& img,
                            const ViewConfig& cfg) {
    if (model.members.empty()) throw EmptyMemberList("ensemble has no members");
    std::vector<ProbVector> member_probs;
    member_probs.reserve(model.members.size());
    for (const auto& member : model.members) {
        const ModelInput input = prepare_input(transform_view(img, member.view, cfg), cfg);
        member_probs.push_back(predict(member.classifier, input));
    }
    return soft_vote(member_probs);
}

ProbVector ensemble_predict_cached(const EnsembleModel& model, ViewInputCache& cache,
                                   std::size_t index) {
    if (model.members.empty()) throw EmptyMemberList("ensemble has no members");
    std::vector<ProbVector> member_probs;
    member_probs.reserve(model.members.size());
    for (const auto& member : model.members)
        member_probs.push_back(predict(member.classifier, cache.view(member.view)[index]));
    return soft_vote(member_probs);
}

std::vector<std::size_t> bootstrap_sample(std::size_t n, std::uint64_t rng_seed) {
    Rng rng(rng_seed);
    std::vector<std::size_t> draws(n);
    for (std::size_t i = 0; i < n; ++i) draws[i] = static_cast<std::size_t>(rng.bounded(n));
    return draws;
}

double unique_sample_expectation(std::size_t n) {
    const double nd = static_cast<double>(n);
    return (1.0 - std::pow((nd - 1.0) / nd, nd)) * nd;
}

BaggingBuild build_bagging(ViewInputCache& cache,
                           const std::vector<std::vector<std::size_t>>& per_class_pool,
                           std::span<const std::size_t> test_reserved,
                           std::span<const TrainConfig> cfgs, std::uint64_t rng_seed, int jobs) {
    const std::set<std::size_t> reserved(test_reserved.begin(), test_reserved.end());
    for (const auto& pool : per_class_pool)
        for (std::size_t idx : pool)
            if (reserved.count(idx))
                throw Error("bagging pool contains reserved test index " + std::to_string(idx));

    constexpr std::size_t kMemberCount = 3;
    if (cfgs.size() != kMemberCount)
        throw LengthMismatch("bagging needs 3 member configs, got " + std::to_string(cfgs.size()));

    const Dataset& ds = cache.dataset();
    cache.view(ViewKind::Original);

    BaggingBuild build;
    build.model.class_count = ds.class_count();
    build.model.members.resize(kMemberCount);
    build.member_train.resize(kMemberCount);
    build.member_validation.resize(kMemberCount);

    // resamples are drawn serially so the draw sequence is job-independent
    for (std::size_t m = 0; m < kMemberCount; ++m) {
        auto& drawn = build.member_train[m];
        auto& oob = build.member_validation[m];
        for (std::size_t c = 0; c < per_class_pool.size(); ++c) {
            const auto& pool = per_class_pool[c];
            if (pool.empty()) continue;
            const auto draws =
                bootstrap_sample(pool.size(), derive_seed(rng_seed, m, c, 0x626167ULL));
            std::vector<bool> seen(pool.size(), false);
            for (std::size_t d : draws) {
                drawn.push_back(pool[d]);
                seen[d] = true;
            }
            for (std::size_t i = 0; i < pool.size(); ++i)
                if (!seen[i]) oob.push_back(pool[i]);
        }
    }

    parallel_for(kMemberCount, jobs, [&](std::size_t m) {
        const auto& indices = build.member_train[m];
        const std::vector<ModelInput> inputs = gather(cache.view(ViewKind::Original), indices);
        const std::vector<LabelId> labels = gather_labels(ds, indices);
        build.model.members[m].view = ViewKind::Original;
        build.model.members[m].classifier = train(inputs, labels, cfgs[m], ds.class_count());
    });
    return build;
}

void save_ensemble(const std::filesystem::path& dir, const EnsembleModel& model,
                   EnsembleKind kind, const ViewConfig& cfg) {
    std::filesystem::create_directories(dir);
    json manifest;
    manifest["kind"] = ensemble_kind_name(kind);
    manifest["class_count"] = model.class_count;
    manifest["view_config"] = {{"blocksize", cfg.blocksize},
                               {"offset", cfg.offset},
                               {"input_side", cfg.input_side}};
    json members = json::array();
    for (std::size_t m = 0; m < model.members.size(); ++m) {
        char file_name[32];
        std::snprintf(file_name, sizeof(file_name), "member_%02zu.bin", m);
        save_classifier(dir / file_name, model.members[m].classifier);
        members.push_back({{"view", view_name(model.members[m].view)}, {"file", file_name}});
    }
    manifest["members"] = members;
    std::ofstream out(dir / "manifest.json");
    if (!out) throw IoError("cannot write ensemble manifest under '" + dir.string() + "'");
    out << manifest.dump(2) << '\n';
}

LoadedEnsemble load_ensemble(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw IoError("cannot open ensemble manifest under '" + dir.string() + "'");
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw ParseError("invalid ensemble manifest: " + std::string(e.what()));
    }

    LoadedEnsemble loaded;
    loaded.kind = ensemble_kind_from_name(manifest.at("kind").get<std::string>());
    loaded.model.class_count = manifest.at("class_count").get<int>();
    const auto& vc = manifest.at("view_config");
    loaded.cfg.blocksize = vc.at("blocksize").get<int>();
    loaded.cfg.offset = vc.at("offset").get<int>();
    loaded.cfg.input_side = vc.at("input_side").get<int>();
    for (const auto& member : manifest.at("members")) {
        EnsembleMember m;
        m.view = view_from_name(member.at("view").get<std::string>());
        m.classifier = load_classifier(dir / member.at("file").get<std::string>());
        loaded.model.members.push_back(std::move(m));
    }
    return loaded;
}

} // namespace mve
