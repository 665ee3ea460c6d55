#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mve/classifier.hpp"
#include "mve/dataset.hpp"
#include "mve/views.hpp"

namespace mve {

// Resolved invocation of one CLI subcommand. Serialized verbatim next to
// the outputs; re-running from that file reproduces them byte-identically.
struct RunConfig {
    std::string command;

    // data source: a dataset directory, or the synthetic generator
    std::string dataset_path; // empty -> synthetic
    SyntheticSpec synthetic = default_synthetic_spec();

    ViewConfig view;
    TrainConfig train{0.1, 32, 60, 0};
    std::vector<std::string> kinds = {"O", "G", "S", "OOO", "OGS"};
    std::string kind = "OGS"; // single-ensemble commands (train)
    int runs = 5;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string out_dir = "out";

    // command-specific
    std::vector<std::string> inputs;   // transform: input PNG paths
    std::string labels_csv;            // consistency / cross-label / agreement
    std::string split_file;            // reuse a persisted split
    std::vector<int> split_counts;     // [train, val, test] per class
    std::vector<double> split_ratios;  // [train, val]; test takes the rest
    int folds = 5;
    int repeats = 10;

    bool operator==(const RunConfig&) const = default;
};

RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const RunConfig& cfg, const std::filesystem::path& path);

// Executes cfg.command, writing outputs plus run_config.json under
// cfg.out_dir. Throws mve::Error subclasses on failure.
void run_command(const RunConfig& cfg);

} // namespace mve
