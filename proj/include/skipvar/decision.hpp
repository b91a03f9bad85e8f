#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace skipvar {

inline constexpr int kFeatureCount = 2;

struct FeatureVector {
    double hf_diff  = 0.0;
    double hf_ratio = 0.0;

    std::array<double, kFeatureCount> values() const { return {hf_diff, hf_ratio}; }
    bool finite() const;
    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

struct Standardizer {
    std::array<double, kFeatureCount> means{0.0, 0.0};
    std::array<double, kFeatureCount> stds{1.0, 1.0};
    std::array<bool, kFeatureCount> zero_variance{false, false};

    static Standardizer identity() { return {}; }
    std::array<double, kFeatureCount> apply(const FeatureVector& f) const;
};

Standardizer fit_standardizer(std::span<const FeatureVector> features);

enum class ModelKind { logreg, tree, forest };

ModelKind parse_model_kind(const std::string& name);
std::string to_string(ModelKind kind);

struct LogRegConfig {
    double l2            = 1e-3;
    double learning_rate = 0.1;
    int max_epochs       = 2000;
    double tolerance     = 1e-6;  // stop when the gradient infinity-norm drops below
};

struct TreeConfig {
    int max_depth = 4;
    int min_leaf  = 5;
};

struct ForestConfig {
    int trees         = 50;
    uint64_t seed     = 0;
    bool bootstrap    = true;
    int max_features  = 1;  // features tried per split; <= 0 means all
    TreeConfig tree;
};

struct TrainingConfig {
    LogRegConfig logreg;
    TreeConfig tree;
    ForestConfig forest;
};

// Softmax regression parameters; rows follow the class list.
struct LogRegParams {
    std::vector<std::array<double, kFeatureCount>> weights;
    std::vector<double> biases;
};

struct TreeNode {
    int feature      = -1;  // -1 marks a leaf
    double threshold = 0.0;  // go left when x[feature] <= threshold
    int left         = -1;
    int right        = -1;
    int leaf_class   = -1;
};

struct Tree {
    std::vector<TreeNode> nodes;  // root at index 0

    int predict(const std::array<double, kFeatureCount>& x) const;
    int depth() const;
    // Nodes visited from the root to the leaf, inclusive.
    int path_length(const std::array<double, kFeatureCount>& x) const;
};

// Classes are kept in ladder order, most aggressive first. Every tie is
// resolved toward the later (less aggressive) class.
struct TrainedModel {
    ModelKind kind = ModelKind::logreg;
    Standardizer standardizer;
    std::vector<std::string> classes;
    LogRegParams logreg;
    std::vector<Tree> trees;  // one for tree, many for forest
    uint64_t seed = 0;

    void validate() const;
};

// Labeled design matrix with labels as indices into `classes`.
struct Dataset {
    std::vector<FeatureVector> features;
    std::vector<int> labels;
    std::vector<std::string> classes;

    static Dataset from_labels(std::vector<FeatureVector> features, std::span<const std::string> labels,
                               std::vector<std::string> classes);
    size_t size() const { return features.size(); }
};

// Seeded shuffle then prefix split.
std::pair<std::vector<size_t>, std::vector<size_t>> split_train_val(size_t count, double ratio, uint64_t seed);
Dataset subset(const Dataset& d, std::span<const size_t> idx);

TrainedModel train_logreg(const Dataset& d, const LogRegConfig& cfg = {});
TrainedModel train_tree(const Dataset& d, const TreeConfig& cfg = {});
TrainedModel train_forest(const Dataset& d, const ForestConfig& cfg = {});
TrainedModel train_model(ModelKind kind, const Dataset& d, const TrainingConfig& cfg = {});

// Softmax probabilities of a logreg model for standardized input.
std::vector<double> logreg_probabilities(const LogRegParams& p, const std::array<double, kFeatureCount>& x);

// Mean cross-entropy plus (l2/2) * ||W||^2 over standardized inputs, and its gradient
// laid out as [w_00, w_01, w_10, ..., b_0, b_1, ...].
double logreg_loss(const LogRegParams& p, std::span<const std::array<double, kFeatureCount>> x,
                   std::span<const int> y, double l2);
std::vector<double> logreg_gradient(const LogRegParams& p, std::span<const std::array<double, kFeatureCount>> x,
                                    std::span<const int> y, double l2);

struct SplitChoice {
    int feature      = -1;
    double threshold = 0.0;
    double impurity  = 0.0;  // weighted child Gini
};

// Best CART split over the given features; nullopt when no split satisfies
// the leaf-size constraint.
std::optional<SplitChoice> best_split(std::span<const std::array<double, kFeatureCount>> x, std::span<const int> y,
                                      int class_count, int min_leaf, std::span<const int> features);

double gini_from_counts(std::span<const int> counts, int total);

// Class index predicted for a raw (unstandardized) feature vector.
int predict_index(const TrainedModel& m, const FeatureVector& f);
std::string predict(const TrainedModel& m, const FeatureVector& f);

std::string serialize_model(const TrainedModel& m);
TrainedModel deserialize_model(const std::string& text);
void save_model(const TrainedModel& m, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

// Two independent models queried in order: the skip model first, the
// unconditional-replacement model when the skip model declines.
struct SequentialPolicy {
    TrainedModel skip_model;
    TrainedModel uncond_model;

    std::string predict(const FeatureVector& f) const;
};

std::string serialize_policy(const SequentialPolicy& p);
SequentialPolicy deserialize_policy(const std::string& text);

// Fraction of samples whose prediction matches the label; 0 for an empty set.
double accuracy(const TrainedModel& m, const Dataset& d);

struct ValidatedModel {
    TrainedModel model;  // fitted on the training part only
    size_t train_size     = 0;
    size_t val_size       = 0;
    double train_accuracy = 0.0;
    double val_accuracy   = 0.0;
};

// Seeded shuffle, prefix split at `ratio`, fit on the prefix, score both parts.
ValidatedModel train_with_validation(ModelKind kind, const Dataset& d, const TrainingConfig& cfg, double ratio,
                                     uint64_t seed);

}  // namespace skipvar
