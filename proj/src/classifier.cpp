#include "mve/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

#include "mve/errors.hpp"
#include "mve/rng.hpp"

namespace mve {

namespace {

constexpr double kProbFloor = 1e-12;
constexpr char kMagic[8] = {'M', 'V', 'L', 'R', 'W', '0', '0', '1'};

void check_dataset(std::span<const ModelInput> inputs, std::span<const LabelId> labels,
                   int class_count) {
    if (inputs.empty()) throw EmptyTrainingSet("training set is empty");
    if (inputs.size() != labels.size())
        throw LengthMismatch("inputs/labels size mismatch: " + std::to_string(inputs.size()) +
                             " vs " + std::to_string(labels.size()));
    const int side = inputs.front().side;
    for (const auto& input : inputs)
        if (input.side != side)
            throw ShapeMismatch("inconsistent input sides in training set");
    for (const LabelId label : labels)
        if (label < 0 || label >= class_count)
            throw LabelOutOfRange("label " + std::to_string(label) + " not in [0, " +
                                  std::to_string(class_count) + ")");
}

// logits for one sample; x~ is the input with an implicit trailing 1
void compute_logits(const TrainedClassifier& model, const ModelInput& input, double* logits) {
    const std::size_t dim = input.values.size();
    const float* x = input.values.data();
    for (int c = 0; c < model.class_count; ++c) {
        const double* w = model.row(c);
        double acc = 0.0;
        for (std::size_t i = 0; i < dim; ++i) acc += w[i] * x[i];
        logits[c] = acc + w[dim]; // bias
    }
}

// adds (p_c - 1{c=y}) * x~ to the gradient rows for one sample
void accumulate_gradient(const ModelInput& input, const ProbVector& probs, LabelId truth,
                         std::vector<double>& grad, int class_count) {
    const std::size_t dim = input.values.size();
    const float* x = input.values.data();
    for (int c = 0; c < class_count; ++c) {
        const double coef = probs[c] - (c == truth ? 1.0 : 0.0);
        double* g = grad.data() + static_cast<std::size_t>(c) * (dim + 1);
        for (std::size_t i = 0; i < dim; ++i) g[i] += coef * x[i];
        g[dim] += coef;
    }
}

} // namespace

bool is_prob_vector(const ProbVector& probs, double tolerance) {
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) return false;
        sum += p;
    }
    return std::abs(sum - 1.0) <= tolerance;
}

ProbVector softmax(std::span<const double> logits) {
    double max_logit = -std::numeric_limits<double>::infinity();
    for (double v : logits) {
        if (!std::isfinite(v)) throw NonFiniteLogit("non-finite logit");
        max_logit = std::max(max_logit, v);
    }
    ProbVector probs(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - max_logit);
        sum += probs[i];
    }
    for (double& p : probs) p /= sum;
    return probs;
}

double cross_entropy(const ProbVector& pred, LabelId truth) {
    return -std::log(std::max(pred[static_cast<std::size_t>(truth)], kProbFloor));
}

TrainedClassifier train(std::span<const ModelInput> inputs, std::span<const LabelId> labels,
                        const TrainConfig& cfg, int class_count) {
    check_dataset(inputs, labels, class_count);

    TrainedClassifier model;
    model.class_count = class_count;
    model.input_side = inputs.front().side;
    model.weights.assign(static_cast<std::size_t>(class_count) * model.feature_count(), 0.0);

    const std::size_t n = inputs.size();
    const std::size_t batch_size = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), n);

    Rng rng(cfg.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<double> grad(model.weights.size());
    std::vector<double> logits(static_cast<std::size_t>(class_count));

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < n; start += batch_size) {
            const std::size_t end = std::min(start + batch_size, n);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t i = start; i < end; ++i) {
                const std::size_t idx = order[i];
                compute_logits(model, inputs[idx], logits.data());
                const ProbVector probs = softmax(logits);
                accumulate_gradient(inputs[idx], probs, labels[idx], grad, class_count);
            }
            const double step = cfg.learning_rate / static_cast<double>(end - start);
            for (std::size_t i = 0; i < model.weights.size(); ++i)
                model.weights[i] -= step * grad[i];
        }
    }
    return model;
}

ProbVector predict(const TrainedClassifier& model, const ModelInput& input) {
    if (input.side != model.input_side)
        throw ShapeMismatch("input side " + std::to_string(input.side) +
                            " does not match model side " + std::to_string(model.input_side));
    std::vector<double> logits(static_cast<std::size_t>(model.class_count));
    compute_logits(model, input, logits.data());
    return softmax(logits);
}

double training_loss(const TrainedClassifier& model, std::span<const ModelInput> inputs,
                     std::span<const LabelId> labels) {
    check_dataset(inputs, labels, model.class_count);
    std::vector<double> logits(static_cast<std::size_t>(model.class_count));
    double total = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        compute_logits(model, inputs[i], logits.data());
        total += cross_entropy(softmax(logits), labels[i]);
    }
    return total / static_cast<double>(inputs.size());
}

std::vector<double> loss_gradient(const TrainedClassifier& model,
                                  std::span<const ModelInput> inputs,
                                  std::span<const LabelId> labels) {
    check_dataset(inputs, labels, model.class_count);
    std::vector<double> grad(model.weights.size(), 0.0);
    std::vector<double> logits(static_cast<std::size_t>(model.class_count));
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        compute_logits(model, inputs[i], logits.data());
        accumulate_gradient(inputs[i], softmax(logits), labels[i], grad, model.class_count);
    }
    const double inv_n = 1.0 / static_cast<double>(inputs.size());
    for (double& g : grad) g *= inv_n;
    return grad;
}

void save_classifier(const std::filesystem::path& path, const TrainedClassifier& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(kMagic, sizeof(kMagic));
    const std::uint32_t k = static_cast<std::uint32_t>(model.class_count);
    const std::uint32_t side = static_cast<std::uint32_t>(model.input_side);
    out.write(reinterpret_cast<const char*>(&k), sizeof(k));
    out.write(reinterpret_cast<const char*>(&side), sizeof(side));
    out.write(reinterpret_cast<const char*>(model.weights.data()),
              static_cast<std::streamsize>(model.weights.size() * sizeof(double)));
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

TrainedClassifier load_classifier(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw ParseError("'" + path.string() + "' is not a classifier file");
    std::uint32_t k = 0, side = 0;
    in.read(reinterpret_cast<char*>(&k), sizeof(k));
    in.read(reinterpret_cast<char*>(&side), sizeof(side));
    if (!in || k == 0 || side == 0)
        throw ParseError("corrupt classifier header in '" + path.string() + "'");
    TrainedClassifier model;
    model.class_count = static_cast<int>(k);
    model.input_side = static_cast<int>(side);
    model.weights.resize(static_cast<std::size_t>(k) * model.feature_count());
    in.read(reinterpret_cast<char*>(model.weights.data()),
            static_cast<std::streamsize>(model.weights.size() * sizeof(double)));
    if (!in) throw ParseError("truncated classifier file '" + path.string() + "'");
    return model;
}

} // namespace mve
