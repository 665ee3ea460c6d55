#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mve/image.hpp"

namespace mve {

struct DatasetEntry {
    std::string image_path; // relative to the dataset root; unique
    std::string class_name;
    std::string source_tag;
    int label = 0;
};

struct DatasetManifest {
    std::vector<DatasetEntry> entries;        // sorted by (class_name, image_path)
    std::vector<std::string> class_names;     // alphabetical; index = LabelId

    int class_count() const { return static_cast<int>(class_names.size()); }
    std::vector<std::vector<std::size_t>> per_class_indices() const;

    // content hash over class names and entry identities; used to bind
    // persisted splits to the dataset they were made for
    std::string fingerprint() const;
};

// Per-class shell geometry for the synthetic generator.
struct ClassShape {
    int whorl_count = 4;
    double proloculus_radius = 4.0;   // pixels
    double eccentricity = 0.3;        // in [0, 1)
    double wall_thickness = 2.0;      // pixels
    double loosening_rate = 1.6;      // whorl radius growth factor, > 0

    bool operator==(const ClassShape&) const = default;
};

struct SyntheticSpec {
    int class_count = 6;
    int per_class = 80;
    int image_side = 96;
    std::vector<ClassShape> shapes;   // one per class, pairwise distinct
    int color_noise_amplitude = 60;   // intensity units; 0 = no tint
    std::uint64_t seed = 0;

    bool operator==(const SyntheticSpec&) const = default;
};

// Six classes differing in whorl topology and coil geometry, colour left to
// noise. Matches the acceptance-scale defaults (6 classes, 80 per class,
// high tint amplitude).
SyntheticSpec default_synthetic_spec();

// Image corpus: manifest plus image access. Directory-backed datasets decode
// PNGs on demand; synthetic datasets hold their images in memory.
class Dataset {
public:
    static Dataset from_directory(const std::filesystem::path& root);
    static Dataset synthetic(const SyntheticSpec& spec);

    const DatasetManifest& manifest() const { return manifest_; }
    std::size_t size() const { return manifest_.entries.size(); }
    int class_count() const { return manifest_.class_count(); }
    int label(std::size_t index) const { return manifest_.entries[index].label; }
    std::vector<int> labels() const;

    RasterImage image(std::size_t index) const;

    // writes the directory-tree form (class subdirectories of PNGs plus
    // manifest.csv); only valid for in-memory datasets
    void write_directory(const std::filesystem::path& root) const;

private:
    DatasetManifest manifest_;
    std::filesystem::path root_;          // empty for in-memory datasets
    std::vector<RasterImage> images_;     // populated for in-memory datasets
};

// Reproducible stratified partition; indices are global entry indices
// grouped per class.
struct SplitSpec {
    std::uint64_t seed = 0;
    std::vector<std::vector<std::size_t>> train;
    std::vector<std::vector<std::size_t>> val;
    std::vector<std::vector<std::size_t>> test;

    std::vector<std::size_t> all_train() const;
    std::vector<std::size_t> all_val() const;
    std::vector<std::size_t> all_test() const;

    bool operator==(const SplitSpec&) const = default;
};

// Split round-trips as human-readable JSON recording the seed, the per-class
// index lists and the dataset fingerprint. load_split throws
// FingerprintMismatch against a different dataset.
void persist_split(const SplitSpec& split, const std::filesystem::path& path,
                   const DatasetManifest& manifest);
SplitSpec load_split(const std::filesystem::path& path, const DatasetManifest& manifest);

} // namespace mve
