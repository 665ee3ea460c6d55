// Desk-scale dataset and config fixtures shared by the heavier test suites.
#pragma once

#include "mve/dataset.hpp"
#include "mve/eval.hpp"
#include "mve/views.hpp"

namespace fixtures {

// small canvas, geometry chosen so the outermost whorl fits
inline mve::SyntheticSpec tiny_spec(int classes = 2, int per_class = 8, std::uint64_t seed = 0,
                                    int noise = 40) {
    mve::SyntheticSpec spec;
    spec.class_count = classes;
    spec.per_class = per_class;
    spec.image_side = 32;
    spec.color_noise_amplitude = noise;
    spec.seed = seed;
    spec.shapes = {
        mve::ClassShape{2, 3.0, 0.10, 2.0, 1.90},
        mve::ClassShape{3, 2.5, 0.30, 1.5, 1.75},
        mve::ClassShape{4, 2.0, 0.20, 1.5, 1.55},
        mve::ClassShape{2, 5.0, 0.40, 2.5, 1.60},
    };
    spec.shapes.resize(static_cast<std::size_t>(classes));
    return spec;
}

inline mve::ViewConfig tiny_view() {
    mve::ViewConfig cfg;
    cfg.blocksize = 15;
    cfg.offset = 2;
    cfg.input_side = 16;
    return cfg;
}

inline mve::TrainConfig tiny_train(int epochs = 15, std::uint64_t seed = 0) {
    mve::TrainConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.batch_size = 8;
    cfg.epochs = epochs;
    cfg.seed = seed;
    return cfg;
}

// manifest without images, for split-construction tests
inline mve::DatasetManifest fake_manifest(int classes, int per_class) {
    mve::DatasetManifest manifest;
    for (int c = 0; c < classes; ++c) {
        const std::string class_name = "genus_" + std::string(1, static_cast<char>('a' + c));
        manifest.class_names.push_back(class_name);
        for (int i = 0; i < per_class; ++i) {
            mve::DatasetEntry entry;
            entry.image_path = class_name + "/img_" + std::to_string(1000 + i) + ".png";
            entry.class_name = class_name;
            entry.label = c;
            manifest.entries.push_back(std::move(entry));
        }
    }
    return manifest;
}

} // namespace fixtures
