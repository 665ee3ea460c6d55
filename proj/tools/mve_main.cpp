#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mve/errors.hpp"
#include "mve/runner.hpp"

namespace {

struct OptionSet {
    CLI::App* cmd = nullptr;
    std::string config, dataset, out, kinds, kind, labels, split, counts, ratios;
    std::vector<std::string> inputs;
    std::uint64_t seed = 0, gen_seed = 0;
    int runs = 0, jobs = 0, blocksize = 0, offset = 0, input_side = 0;
    int epochs = 0, batch = 0, folds = 0, repeats = 0;
    int classes = 0, per_class = 0, image_side = 0, noise = 0;
    double lr = 0;
};

void add_common_options(OptionSet& o, CLI::App* cmd) {
    o.cmd = cmd;
    cmd->add_option("--config", o.config, "JSON run config to start from");
    cmd->add_option("--dataset", o.dataset, "dataset directory (omit to use the synthetic set)");
    cmd->add_option("--out", o.out, "output directory (default: out)");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--runs", o.runs, "independent runs");
    cmd->add_option("--kinds", o.kinds, "comma list of ensemble kinds (O,G,S,OOO,OGS)");
    cmd->add_option("--kind", o.kind, "single ensemble kind or view");
    cmd->add_option("--blocksize", o.blocksize, "adaptive-threshold window, odd (default 41)");
    cmd->add_option("--offset", o.offset, "adaptive-threshold offset (default 2)");
    cmd->add_option("--input-side", o.input_side, "classifier input resolution (default 64)");
    cmd->add_option("--jobs", o.jobs, "worker thread bound (default 1)");
    cmd->add_option("--lr", o.lr, "learning rate");
    cmd->add_option("--batch", o.batch, "batch size");
    cmd->add_option("--epochs", o.epochs, "training epochs");
    cmd->add_option("--labels", o.labels, "label CSV with columns image_id,label,source");
    cmd->add_option("--split", o.split, "persisted split JSON to reuse");
    cmd->add_option("--counts", o.counts, "per-class split counts train,val,test");
    cmd->add_option("--ratios", o.ratios, "split ratios train,val (test takes the rest)");
    cmd->add_option("--folds", o.folds, "cross-validation folds (default 5)");
    cmd->add_option("--repeats", o.repeats, "repeated runs per fold (default 10)");
    cmd->add_option("--classes", o.classes, "synthetic: class count");
    cmd->add_option("--per-class", o.per_class, "synthetic: images per class");
    cmd->add_option("--image-side", o.image_side, "synthetic: image side in pixels");
    cmd->add_option("--noise", o.noise, "synthetic: colour-noise amplitude");
    cmd->add_option("--gen-seed", o.gen_seed, "synthetic: generator seed");
}

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> parts;
    std::istringstream in(text);
    std::string part;
    while (std::getline(in, part, ',')) parts.push_back(part);
    return parts;
}

mve::RunConfig build_config(const OptionSet& o, const std::string& command) {
    mve::RunConfig cfg;
    if (o.cmd->count("--config")) cfg = mve::load_run_config(o.config);
    cfg.command = command;

    const auto given = [&](const char* flag) { return o.cmd->count(flag) > 0; };
    if (given("--dataset")) cfg.dataset_path = o.dataset;
    if (given("--out")) cfg.out_dir = o.out;
    if (given("--seed")) cfg.seed = o.seed;
    if (given("--runs")) cfg.runs = o.runs;
    if (given("--kinds")) cfg.kinds = split_commas(o.kinds);
    if (given("--kind")) cfg.kind = o.kind;
    if (given("--blocksize")) cfg.view.blocksize = o.blocksize;
    if (given("--offset")) cfg.view.offset = o.offset;
    if (given("--input-side")) cfg.view.input_side = o.input_side;
    if (given("--jobs")) cfg.jobs = o.jobs;
    if (given("--lr")) cfg.train.learning_rate = o.lr;
    if (given("--batch")) cfg.train.batch_size = o.batch;
    if (given("--epochs")) cfg.train.epochs = o.epochs;
    if (given("--labels")) cfg.labels_csv = o.labels;
    if (given("--split")) cfg.split_file = o.split;
    if (given("--folds")) cfg.folds = o.folds;
    if (given("--repeats")) cfg.repeats = o.repeats;
    if (!o.inputs.empty()) cfg.inputs = o.inputs;

    if (given("--counts")) {
        cfg.split_counts.clear();
        for (const auto& part : split_commas(o.counts)) cfg.split_counts.push_back(std::stoi(part));
        cfg.split_ratios.clear();
    }
    if (given("--ratios")) {
        cfg.split_ratios.clear();
        for (const auto& part : split_commas(o.ratios)) cfg.split_ratios.push_back(std::stod(part));
        cfg.split_counts.clear();
    }

    if (given("--classes")) {
        const int k = o.classes;
        if (static_cast<int>(cfg.synthetic.shapes.size()) < k) {
            const mve::SyntheticSpec defaults = mve::default_synthetic_spec();
            if (k > static_cast<int>(defaults.shapes.size()))
                throw mve::SpecOutOfRange(
                    "more than " + std::to_string(defaults.shapes.size()) +
                    " synthetic classes need explicit shapes in a --config file");
            cfg.synthetic.shapes = defaults.shapes;
        }
        cfg.synthetic.shapes.resize(static_cast<std::size_t>(k));
        cfg.synthetic.class_count = k;
    }
    if (given("--per-class")) cfg.synthetic.per_class = o.per_class;
    if (given("--image-side")) cfg.synthetic.image_side = o.image_side;
    if (given("--noise")) cfg.synthetic.color_noise_amplitude = o.noise;
    if (given("--gen-seed")) cfg.synthetic.seed = o.gen_seed;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multiview ensemble image classification toolkit"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    struct Command {
        const char* name;
        const char* help;
    };
    const Command commands[] = {
        {"transform", "write the O/G/S view PNGs for input images"},
        {"gen-synthetic", "generate a synthetic shell-image dataset"},
        {"split", "build and persist a stratified split"},
        {"train", "train one ensemble and persist it"},
        {"eval", "train/test each kind over repeated runs and report metrics"},
        {"sweep-ratio", "metrics across train ratios 0.1..0.8"},
        {"bagging-compare", "OGS versus OOO-bagging on a shared test set"},
        {"grid-search", "learning-rate/batch-size grid on the validation split"},
        {"consistency", "pairwise label-consistency matrix from a label CSV"},
        {"cross-label", "cross-label-set training/evaluation table"},
        {"agreement", "per-class agreement matrix from >= 2 label sources"},
    };

    std::vector<OptionSet> options(std::size(commands));
    for (std::size_t i = 0; i < std::size(commands); ++i) {
        CLI::App* cmd = app.add_subcommand(commands[i].name, commands[i].help);
        add_common_options(options[i], cmd);
        if (std::string(commands[i].name) == "transform")
            cmd->add_option("inputs", options[i].inputs, "input PNG files");
    }

    CLI11_PARSE(app, argc, argv);

    for (std::size_t i = 0; i < std::size(commands); ++i) {
        if (!options[i].cmd->parsed()) continue;
        try {
            mve::run_command(build_config(options[i], commands[i].name));
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 1;
        }
        return 0;
    }
    std::cerr << "error: no subcommand given\n";
    return 1;
}
