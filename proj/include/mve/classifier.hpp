#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mve/views.hpp"

namespace mve {

// length-k class probability distribution; entries >= 0, sum to 1
using ProbVector = std::vector<double>;

using LabelId = int;

bool is_prob_vector(const ProbVector& probs, double tolerance = 1e-9);

struct TrainConfig {
    double learning_rate = 0.01;
    int batch_size = 32;
    int epochs = 500;
    std::uint64_t seed = 0;

    bool operator==(const TrainConfig&) const = default;
};

// Multinomial logistic regression on flattened pixels. Weights are a
// class_count x (3*side*side + 1) row-major matrix; the trailing column is
// the bias applied to an implicit constant-1 feature.
struct TrainedClassifier {
    int class_count = 0;
    int input_side = 0;
    std::vector<double> weights;

    std::size_t feature_count() const {
        return static_cast<std::size_t>(input_side) * input_side * 3 + 1;
    }
    double* row(int c) { return weights.data() + static_cast<std::size_t>(c) * feature_count(); }
    const double* row(int c) const {
        return weights.data() + static_cast<std::size_t>(c) * feature_count();
    }
};

// probs_i = exp(logits_i - max) / sum_j exp(logits_j - max)
// Throws NonFiniteLogit on NaN/inf input.
ProbVector softmax(std::span<const double> logits);

// -ln(max(pred[truth], 1e-12))
double cross_entropy(const ProbVector& pred, LabelId truth);

// Minibatch SGD on the mean cross-entropy of softmax(W x~). Deterministic
// given cfg.seed: zero-initialized weights, seeded epoch shuffles.
TrainedClassifier train(std::span<const ModelInput> inputs, std::span<const LabelId> labels,
                        const TrainConfig& cfg, int class_count);

ProbVector predict(const TrainedClassifier& model, const ModelInput& input);

// Mean cross-entropy over a labelled set, and its analytic gradient with
// respect to every weight (same layout as TrainedClassifier::weights).
double training_loss(const TrainedClassifier& model, std::span<const ModelInput> inputs,
                     std::span<const LabelId> labels);
std::vector<double> loss_gradient(const TrainedClassifier& model,
                                  std::span<const ModelInput> inputs,
                                  std::span<const LabelId> labels);

// Versioned binary serialization: magic, k, input_side, row-major weights
// as 64-bit reals.
void save_classifier(const std::filesystem::path& path, const TrainedClassifier& model);
TrainedClassifier load_classifier(const std::filesystem::path& path);

} // namespace mve
