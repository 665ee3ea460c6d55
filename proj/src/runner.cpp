#include "mve/runner.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "mve/consistency.hpp"
#include "mve/ensemble.hpp"
#include "mve/errors.hpp"
#include "mve/eval.hpp"
#include "mve/parallel.hpp"
#include "mve/png_io.hpp"
#include "mve/report.hpp"
#include "mve/rng.hpp"

namespace mve {

namespace {

using json = nlohmann::json;

json shape_to_json(const ClassShape& shape) {
    return {{"whorl_count", shape.whorl_count},
            {"proloculus_radius", shape.proloculus_radius},
            {"eccentricity", shape.eccentricity},
            {"wall_thickness", shape.wall_thickness},
            {"loosening_rate", shape.loosening_rate}};
}

ClassShape shape_from_json(const json& j) {
    ClassShape shape;
    shape.whorl_count = j.at("whorl_count").get<int>();
    shape.proloculus_radius = j.at("proloculus_radius").get<double>();
    shape.eccentricity = j.at("eccentricity").get<double>();
    shape.wall_thickness = j.at("wall_thickness").get<double>();
    shape.loosening_rate = j.at("loosening_rate").get<double>();
    return shape;
}

json config_to_json(const RunConfig& cfg) {
    json j;
    j["command"] = cfg.command;
    j["dataset"] = cfg.dataset_path;
    json synth;
    synth["class_count"] = cfg.synthetic.class_count;
    synth["per_class"] = cfg.synthetic.per_class;
    synth["image_side"] = cfg.synthetic.image_side;
    synth["color_noise_amplitude"] = cfg.synthetic.color_noise_amplitude;
    synth["seed"] = cfg.synthetic.seed;
    synth["shapes"] = json::array();
    for (const auto& shape : cfg.synthetic.shapes) synth["shapes"].push_back(shape_to_json(shape));
    j["synthetic"] = synth;
    j["view"] = {{"blocksize", cfg.view.blocksize},
                 {"offset", cfg.view.offset},
                 {"input_side", cfg.view.input_side}};
    j["train"] = {{"learning_rate", cfg.train.learning_rate},
                  {"batch_size", cfg.train.batch_size},
                  {"epochs", cfg.train.epochs},
                  {"seed", cfg.train.seed}};
    j["kinds"] = cfg.kinds;
    j["kind"] = cfg.kind;
    j["runs"] = cfg.runs;
    j["seed"] = cfg.seed;
    j["jobs"] = cfg.jobs;
    j["out"] = cfg.out_dir;
    j["inputs"] = cfg.inputs;
    j["labels_csv"] = cfg.labels_csv;
    j["split_file"] = cfg.split_file;
    j["split_counts"] = cfg.split_counts;
    j["split_ratios"] = cfg.split_ratios;
    j["folds"] = cfg.folds;
    j["repeats"] = cfg.repeats;
    return j;
}

RunConfig config_from_json(const json& j) {
    RunConfig cfg;
    cfg.command = j.at("command").get<std::string>();
    cfg.dataset_path = j.value("dataset", std::string{});
    if (j.contains("synthetic")) {
        const auto& synth = j.at("synthetic");
        cfg.synthetic.class_count = synth.value("class_count", cfg.synthetic.class_count);
        cfg.synthetic.per_class = synth.value("per_class", cfg.synthetic.per_class);
        cfg.synthetic.image_side = synth.value("image_side", cfg.synthetic.image_side);
        cfg.synthetic.color_noise_amplitude =
            synth.value("color_noise_amplitude", cfg.synthetic.color_noise_amplitude);
        cfg.synthetic.seed = synth.value("seed", cfg.synthetic.seed);
        if (synth.contains("shapes")) {
            cfg.synthetic.shapes.clear();
            for (const auto& shape : synth.at("shapes"))
                cfg.synthetic.shapes.push_back(shape_from_json(shape));
        }
    }
    if (j.contains("view")) {
        const auto& view = j.at("view");
        cfg.view.blocksize = view.value("blocksize", cfg.view.blocksize);
        cfg.view.offset = view.value("offset", cfg.view.offset);
        cfg.view.input_side = view.value("input_side", cfg.view.input_side);
    }
    if (j.contains("train")) {
        const auto& train = j.at("train");
        cfg.train.learning_rate = train.value("learning_rate", cfg.train.learning_rate);
        cfg.train.batch_size = train.value("batch_size", cfg.train.batch_size);
        cfg.train.epochs = train.value("epochs", cfg.train.epochs);
        cfg.train.seed = train.value("seed", cfg.train.seed);
    }
    cfg.kinds = j.value("kinds", cfg.kinds);
    cfg.kind = j.value("kind", cfg.kind);
    cfg.runs = j.value("runs", cfg.runs);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.jobs = j.value("jobs", cfg.jobs);
    cfg.out_dir = j.value("out", cfg.out_dir);
    cfg.inputs = j.value("inputs", cfg.inputs);
    cfg.labels_csv = j.value("labels_csv", cfg.labels_csv);
    cfg.split_file = j.value("split_file", cfg.split_file);
    cfg.split_counts = j.value("split_counts", cfg.split_counts);
    cfg.split_ratios = j.value("split_ratios", cfg.split_ratios);
    cfg.folds = j.value("folds", cfg.folds);
    cfg.repeats = j.value("repeats", cfg.repeats);
    return cfg;
}

Dataset open_dataset(const RunConfig& cfg) {
    if (cfg.dataset_path.empty()) return Dataset::synthetic(cfg.synthetic);
    return Dataset::from_directory(cfg.dataset_path);
}

SplitSpec make_split(const RunConfig& cfg, const DatasetManifest& manifest) {
    if (!cfg.split_file.empty()) return load_split(cfg.split_file, manifest);
    if (!cfg.split_counts.empty()) {
        if (cfg.split_counts.size() != 3)
            throw ParseError("--counts needs train,val,test");
        SplitCounts counts{cfg.split_counts[0], cfg.split_counts[1], cfg.split_counts[2]};
        return stratified_split(manifest, counts, cfg.seed);
    }
    SplitRatios ratios;
    if (!cfg.split_ratios.empty()) {
        if (cfg.split_ratios.size() != 2)
            throw ParseError("--ratios needs train,val");
        ratios.train = cfg.split_ratios[0];
        ratios.val = cfg.split_ratios[1];
    } else {
        ratios.train = 0.6;
        ratios.val = 0.2;
    }
    ratios.test = 1.0 - ratios.train - ratios.val;
    return stratified_split(manifest, ratios, cfg.seed);
}

std::vector<EnsembleKind> parse_kinds(const std::vector<std::string>& names) {
    std::vector<EnsembleKind> kinds;
    for (const auto& name : names) kinds.push_back(ensemble_kind_from_name(name));
    if (kinds.empty()) throw ParseError("no ensemble kinds given");
    return kinds;
}

ExperimentConfig experiment_config(const RunConfig& cfg) {
    ExperimentConfig exp;
    exp.kinds = parse_kinds(cfg.kinds);
    exp.runs = cfg.runs;
    exp.train_cfg = cfg.train;
    exp.view_cfg = cfg.view;
    exp.master_seed = cfg.seed;
    exp.jobs = cfg.jobs;
    return exp;
}

std::filesystem::path prepare_out_dir(const RunConfig& cfg) {
    std::filesystem::path out(cfg.out_dir);
    std::filesystem::create_directories(out);
    save_run_config(cfg, out / "run_config.json");
    return out;
}

void cmd_transform(const RunConfig& cfg) {
    if (cfg.inputs.empty()) throw ParseError("transform needs at least one input PNG");
    const auto out = prepare_out_dir(cfg);
    for (const auto& input : cfg.inputs) {
        const RasterImage img = png::read_rgba(input);
        const std::string stem = std::filesystem::path(input).stem().string();
        png::write_rgba(out / (stem + "_O.png"),
                        transform_view(img, ViewKind::Original, cfg.view));
        const RasterImage grey = transform_view(img, ViewKind::Grey, cfg.view);
        GreyImage grey_plane(grey.width, grey.height);
        for (std::size_t i = 0; i < grey.pixels.size(); ++i)
            grey_plane.pixels[i] = grey.pixels[i].r;
        png::write_grey(out / (stem + "_G.png"), grey_plane);
        const RasterImage skel = transform_view(img, ViewKind::Skeleton, cfg.view);
        BinaryImage skel_plane(skel.width, skel.height);
        for (std::size_t i = 0; i < skel.pixels.size(); ++i)
            skel_plane.pixels[i] = skel.pixels[i].r ? 1 : 0;
        png::write_binary(out / (stem + "_S.png"), skel_plane);
    }
}

void cmd_gen_synthetic(const RunConfig& cfg) {
    const auto out = prepare_out_dir(cfg);
    const Dataset ds = Dataset::synthetic(cfg.synthetic);
    ds.write_directory(out / "dataset");
}

void cmd_split(const RunConfig& cfg) {
    const auto out = prepare_out_dir(cfg);
    const Dataset ds = open_dataset(cfg);
    const SplitSpec split = make_split(cfg, ds.manifest());
    persist_split(split, out / "split.json", ds.manifest());
}

void cmd_train(const RunConfig& cfg) {
    const auto out = prepare_out_dir(cfg);
    const Dataset ds = open_dataset(cfg);
    const SplitSpec split = make_split(cfg, ds.manifest());
    const EnsembleKind kind = ensemble_kind_from_name(cfg.kind);

    ViewInputCache cache(ds, cfg.view);
    const std::vector<ViewKind> views = kind_views(kind);
    std::vector<TrainConfig> member_cfgs(views.size(), cfg.train);
    for (std::size_t m = 0; m < member_cfgs.size(); ++m)
        member_cfgs[m].seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(kind), 0, m);

    const std::vector<std::size_t> train_indices = split.all_train();
    const EnsembleModel model = build_multiview(cache, train_indices, kind, member_cfgs, cfg.jobs);
    save_ensemble(out / "ensemble", model, kind, cfg.view);
    persist_split(split, out / "split.json", ds.manifest());
}

void cmd_eval(const RunConfig& cfg) {
    const auto out = prepare_out_dir(cfg);
    const Dataset ds = open_dataset(cfg);
    const SplitSpec split = make_split(cfg, ds.manifest());
    const auto reports = run_experiment(ds, split, experiment_config(cfg));
    report::write_metrics_csv(out / "report.csv", reports);
    for (const auto& kind_report : reports)
        report::write_confusion_csv(out / (std::string("confusion_") +
                                           ensemble_kind_name(kind_report.kind) + ".csv"),
                                    kind_report.confusion, ds.manifest().class_names);
}

void cmd_sweep_ratio(const RunConfig& cfg) {
    const auto out = prepare_out_dir(cfg);
    const Dataset ds = open_dataset(cfg);
    const auto points = ratio_sweep(ds, experiment_config(cfg));
    report::write_sweep_csv(out / "sweep.csv", points);
}

void cmd_grid_search(const RunConfig& cfg) {
    const auto out = prepare_out_dir(cfg);
    const Dataset ds = open_dataset(cfg);
    const SplitSpec split = make_split(cfg, ds.manifest());
    const double lrs[] = {0.001, 0.01, 0.1};
    const int batches[] = {32, 64, 128};
    ViewKind view = ViewKind::Original;
    if (cfg.kind == "O" || cfg.kind == "G" || cfg.kind == "S") view = view_from_name(cfg.kind);
    const auto result =
        grid_search(ds, split, view, lrs, batches, cfg.train, cfg.view, cfg.seed, 2, cfg.jobs);
    report::write_grid_csv(out / "grid.csv", result);
    json best = {{"learning_rate", result.best.learning_rate},
                 {"batch_size", result.best.batch_size}};
    std::ofstream best_out(out / "grid_best.json");
    best_out << best.dump(2) << '\n';
}

void cmd_bagging_compare(const RunConfig& cfg) {
    const auto out = prepare_out_dir(cfg);
    const Dataset ds = open_dataset(cfg);
    const SplitSpec split = make_split(cfg, ds.manifest());

    ViewInputCache cache(ds, cfg.view);
    for (ViewKind view : kind_views(EnsembleKind::OGS)) cache.view(view);

    const std::vector<std::size_t> train_indices = split.all_train();
    const std::vector<std::size_t> test_indices = split.all_test();
    std::vector<LabelId> test_truths;
    for (std::size_t i : test_indices) test_truths.push_back(ds.label(i));

    // bagging pool: everything that is not reserved for test
    std::vector<std::vector<std::size_t>> pool(split.train.size());
    for (std::size_t c = 0; c < split.train.size(); ++c) {
        pool[c] = split.train[c];
        pool[c].insert(pool[c].end(), split.val[c].begin(), split.val[c].end());
    }
    double expected_unique = 0;
    for (const auto& cls : pool) expected_unique += unique_sample_expectation(cls.size());
    expected_unique /= static_cast<double>(pool.size());

    struct RunOutcome {
        RunMetrics ogs;
        RunMetrics bagging;
        double bagging_unique_per_class = 0;
    };
    std::vector<RunOutcome> outcomes(static_cast<std::size_t>(cfg.runs));

    parallel_for(outcomes.size(), cfg.jobs, [&](std::size_t r) {
        RunOutcome& outcome = outcomes[r];
        {
            const std::vector<ViewKind> views = kind_views(EnsembleKind::OGS);
            std::vector<TrainConfig> member_cfgs(views.size(), cfg.train);
            for (std::size_t m = 0; m < member_cfgs.size(); ++m)
                member_cfgs[m].seed =
                    derive_seed(cfg.seed, static_cast<std::uint64_t>(EnsembleKind::OGS), r, m);
            const EnsembleModel model =
                build_multiview(cache, train_indices, EnsembleKind::OGS, member_cfgs);
            std::vector<ProbVector> outputs;
            for (std::size_t idx : test_indices)
                outputs.push_back(ensemble_predict_cached(model, cache, idx));
            std::vector<LabelId> preds;
            for (const auto& probs : outputs) preds.push_back(decide(probs));
            outcome.ogs.acc_at_1 = acc_at_k(outputs, test_truths, 1);
            outcome.ogs.acc_at_3 = acc_at_k(outputs, test_truths, 3);
            outcome.ogs.macro_f1 = macro_f1(preds, test_truths, ds.class_count());
            outcome.ogs.micro_f1 = micro_f1(preds, test_truths, ds.class_count());
        }
        {
            std::vector<TrainConfig> member_cfgs(3, cfg.train);
            for (std::size_t m = 0; m < member_cfgs.size(); ++m)
                member_cfgs[m].seed = derive_seed(
                    cfg.seed, static_cast<std::uint64_t>(EnsembleKind::OOO_bagging), r, m);
            const BaggingBuild build =
                build_bagging(cache, pool, test_indices, member_cfgs,
                              derive_seed(cfg.seed, r, 0x62616767ULL));
            std::vector<ProbVector> outputs;
            for (std::size_t idx : test_indices)
                outputs.push_back(ensemble_predict_cached(build.model, cache, idx));
            std::vector<LabelId> preds;
            for (const auto& probs : outputs) preds.push_back(decide(probs));
            outcome.bagging.acc_at_1 = acc_at_k(outputs, test_truths, 1);
            outcome.bagging.acc_at_3 = acc_at_k(outputs, test_truths, 3);
            outcome.bagging.macro_f1 = macro_f1(preds, test_truths, ds.class_count());
            outcome.bagging.micro_f1 = micro_f1(preds, test_truths, ds.class_count());

            double unique_sum = 0;
            for (const auto& member : build.member_train) {
                const std::set<std::size_t> distinct(member.begin(), member.end());
                unique_sum += static_cast<double>(distinct.size());
            }
            outcome.bagging_unique_per_class =
                unique_sum / (static_cast<double>(build.member_train.size()) *
                              static_cast<double>(pool.size()));
        }
    });

    std::vector<KindReport> reports(2);
    reports[0].kind = EnsembleKind::OGS;
    reports[1].kind = EnsembleKind::OOO_bagging;
    double observed_unique = 0;
    for (const auto& outcome : outcomes) {
        reports[0].metrics.runs.push_back(outcome.ogs);
        reports[1].metrics.runs.push_back(outcome.bagging);
        observed_unique += outcome.bagging_unique_per_class;
    }
    observed_unique /= static_cast<double>(outcomes.size());

    std::ofstream csv(out / "bagging.csv");
    if (!csv) throw IoError("cannot write bagging.csv");
    csv << "kind,acc1_mean,acc1_std,acc3_mean,acc3_std,macro_f1_mean,macro_f1_std,"
           "expected_unique_per_class,observed_unique_per_class\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& rep = reports[i];
        const MeanStd acc1 = rep.metrics.acc_at_1();
        const MeanStd acc3 = rep.metrics.acc_at_3();
        const MeanStd macro = rep.metrics.macro_f1();
        char expected[32], observed[32];
        if (rep.kind == EnsembleKind::OOO_bagging) {
            std::snprintf(expected, sizeof(expected), "%.3f", expected_unique);
            std::snprintf(observed, sizeof(observed), "%.3f", observed_unique);
        } else {
            // every training image is seen by every member
            double train_mean = 0;
            for (const auto& cls : split.train) train_mean += static_cast<double>(cls.size());
            train_mean /= static_cast<double>(split.train.size());
            std::snprintf(expected, sizeof(expected), "%.3f", train_mean);
            std::snprintf(observed, sizeof(observed), "%.3f", train_mean);
        }
        csv << ensemble_kind_name(rep.kind) << ',' << report::format_percent(acc1.mean) << ','
            << report::format_percent(acc1.stddev) << ',' << report::format_percent(acc3.mean)
            << ',' << report::format_percent(acc3.stddev) << ','
            << report::format_percent(macro.mean) << ',' << report::format_percent(macro.stddev)
            << ',' << expected << ',' << observed << '\n';
    }
}

void cmd_consistency(const RunConfig& cfg) {
    if (cfg.labels_csv.empty()) throw ParseError("consistency needs --labels");
    const auto out = prepare_out_dir(cfg);
    const LabelCsv csv = load_label_sets_csv(cfg.labels_csv);
    const ConsistencyMatrix matrix = consistency_matrix(csv.sets);
    report::write_consistency_csv(out / "consistency.csv", matrix);
}

void cmd_cross_label(const RunConfig& cfg) {
    if (cfg.labels_csv.empty()) throw ParseError("cross-label needs --labels");
    const auto out = prepare_out_dir(cfg);
    const Dataset ds = open_dataset(cfg);
    const LabelCsv csv = load_label_sets_csv(cfg.labels_csv, &ds.manifest().class_names);
    const CrossLabelResult result =
        cross_label_eval(ds, csv.sets, cfg.folds, cfg.repeats,
                         ensemble_kind_from_name(cfg.kind), cfg.train, cfg.view, cfg.seed,
                         cfg.jobs);
    report::write_cross_label_csv(out / "cross_label.csv", result);
    if (csv.sets.size() >= 2)
        report::write_agreement_csv(out / "agreement.csv", result.agreement,
                                    ds.manifest().class_names);
}

void cmd_agreement(const RunConfig& cfg) {
    if (cfg.labels_csv.empty()) throw ParseError("agreement needs --labels");
    const auto out = prepare_out_dir(cfg);
    const LabelCsv csv = load_label_sets_csv(cfg.labels_csv);
    if (csv.sets.size() < 2) throw FewerThanTwoSystems("agreement needs >= 2 label sources");
    for (std::size_t i = 1; i < csv.sets.size(); ++i)
        if (!csv.sets[i].same_images(csv.sets[0]))
            throw ImageListMismatch("label sources cover different image lists");
    std::vector<std::vector<LabelId>> systems;
    for (const auto& set : csv.sets) systems.push_back(set.labels);
    const AgreementMatrix matrix =
        agreement_matrix(systems, static_cast<int>(csv.class_names.size()));
    report::write_agreement_csv(out / "agreement.csv", matrix, csv.class_names);
}

} // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("invalid config '" + path.string() + "': " + e.what());
    }
    return config_from_json(j);
}

void save_run_config(const RunConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write config '" + path.string() + "'");
    out << config_to_json(cfg).dump(2) << '\n';
}

void run_command(const RunConfig& cfg) {
    if (cfg.command == "transform") return cmd_transform(cfg);
    if (cfg.command == "gen-synthetic") return cmd_gen_synthetic(cfg);
    if (cfg.command == "split") return cmd_split(cfg);
    if (cfg.command == "train") return cmd_train(cfg);
    if (cfg.command == "eval") return cmd_eval(cfg);
    if (cfg.command == "sweep-ratio") return cmd_sweep_ratio(cfg);
    if (cfg.command == "bagging-compare") return cmd_bagging_compare(cfg);
    if (cfg.command == "grid-search") return cmd_grid_search(cfg);
    if (cfg.command == "consistency") return cmd_consistency(cfg);
    if (cfg.command == "cross-label") return cmd_cross_label(cfg);
    if (cfg.command == "agreement") return cmd_agreement(cfg);
    throw ParseError("unknown command '" + cfg.command + "'");
}

} // namespace mve
