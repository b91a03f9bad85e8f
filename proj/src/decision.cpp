#include "skipvar/decision.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "skipvar/errors.hpp"
#include "skipvar/random.hpp"

namespace skipvar {

using nlohmann::json;
using Row = std::array<double, kFeatureCount>;

namespace {

constexpr int kModelFormatVersion = 1;

std::vector<Row> standardize_all(const Standardizer& s, std::span<const FeatureVector> f) {
    std::vector<Row> out;
    out.reserve(f.size());
    for (const FeatureVector& v : f) out.push_back(s.apply(v));
    return out;
}

void require_two_classes(const Dataset& d) {
    std::vector<bool> seen(d.classes.size(), false);
    for (int y : d.labels) seen[y] = true;
    if (std::count(seen.begin(), seen.end(), true) < 2) {
        throw ConfigError("train_logreg: need at least two distinct classes in the training labels");
    }
}

void require_nonempty(const Dataset& d, const char* who) {
    if (d.size() == 0) throw ConfigError(std::string(who) + ": empty training set");
    if (d.classes.empty()) throw ConfigError(std::string(who) + ": empty class list");
}

// Argmax over scores; ties go to the later index.
template <typename Scores>
int argmax_late(const Scores& scores) {
    int best = 0;
    for (int c = 1; c < static_cast<int>(scores.size()); ++c) {
        if (scores[c] >= scores[best]) best = c;
    }
    return best;
}

struct TreeBuilder {
    std::span<const Row> x;
    std::span<const int> y;
    int class_count;
    TreeConfig cfg;
    int max_features;  // <= 0: all
    Rng* rng;          // feature subsampling; null when all features are used
    Tree tree;

    std::vector<int> pick_features() {
        std::vector<int> all(kFeatureCount);
        std::iota(all.begin(), all.end(), 0);
        if (max_features <= 0 || max_features >= kFeatureCount || rng == nullptr) return all;
        for (int i = 0; i < max_features; ++i) {
            const int j = i + static_cast<int>(rng->below(static_cast<uint64_t>(kFeatureCount - i)));
            std::swap(all[i], all[j]);
        }
        all.resize(max_features);
        std::sort(all.begin(), all.end());
        return all;
    }

    int build(const std::vector<int>& idx, int depth) {
        const int node = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        std::vector<int> ys;
        ys.reserve(idx.size());
        for (int i : idx) ys.push_back(y[i]);
        std::vector<int> counts(class_count, 0);
        for (int v : ys) ++counts[v];
        const int total = static_cast<int>(idx.size());
        const double parent_gini = gini_from_counts(counts, total);

        auto make_leaf = [&] {
            tree.nodes[node].leaf_class = argmax_late(counts);
            return node;
        };
        if (depth >= cfg.max_depth || parent_gini == 0.0 || total < 2 * cfg.min_leaf) return make_leaf();

        std::vector<Row> xs;
        xs.reserve(idx.size());
        for (int i : idx) xs.push_back(x[i]);
        const std::vector<int> features = pick_features();
        const auto split = best_split(xs, ys, class_count, cfg.min_leaf, features);
        if (!split || !(split->impurity < parent_gini)) return make_leaf();

        std::vector<int> left, right;
        for (int i : idx) (x[i][split->feature] <= split->threshold ? left : right).push_back(i);

        tree.nodes[node].feature   = split->feature;
        tree.nodes[node].threshold = split->threshold;
        const int l                = build(left, depth + 1);
        const int r                = build(right, depth + 1);
        tree.nodes[node].left      = l;
        tree.nodes[node].right     = r;
        return node;
    }
};

json tree_to_json(const Tree& t) {
    json nodes = json::array();
    for (const TreeNode& n : t.nodes) {
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right},
                         {"leaf_class", n.leaf_class}});
    }
    return nodes;
}

Tree tree_from_json(const json& j) {
    Tree t;
    for (const json& n : j) {
        TreeNode node;
        n.at("feature").get_to(node.feature);
        n.at("threshold").get_to(node.threshold);
        n.at("left").get_to(node.left);
        n.at("right").get_to(node.right);
        n.at("leaf_class").get_to(node.leaf_class);
        t.nodes.push_back(node);
    }
    return t;
}

}  // namespace

bool FeatureVector::finite() const { return std::isfinite(hf_diff) && std::isfinite(hf_ratio); }

Row Standardizer::apply(const FeatureVector& f) const {
    const Row raw = f.values();
    Row out{};
    for (int i = 0; i < kFeatureCount; ++i) out[i] = (raw[i] - means[i]) / stds[i];
    return out;
}

Standardizer fit_standardizer(std::span<const FeatureVector> features) {
    if (features.empty()) throw ConfigError("fit_standardizer: empty feature list");
    Standardizer s;
    const double n = static_cast<double>(features.size());
    for (int i = 0; i < kFeatureCount; ++i) {
        double sum = 0.0;
        for (const FeatureVector& f : features) sum += f.values()[i];
        const double mean = sum / n;
        double sq = 0.0;
        for (const FeatureVector& f : features) {
            const double d = f.values()[i] - mean;
            sq += d * d;
        }
        const double sd = std::sqrt(sq / n);
        s.means[i]         = mean;
        s.zero_variance[i] = !(sd > 0.0);
        s.stds[i]          = s.zero_variance[i] ? 1.0 : sd;
    }
    return s;
}

ModelKind parse_model_kind(const std::string& name) {
    if (name == "logreg") return ModelKind::logreg;
    if (name == "tree") return ModelKind::tree;
    if (name == "forest") return ModelKind::forest;
    throw ConfigError("unknown model kind '" + name + "' (expected logreg, tree or forest)");
}

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::logreg: return "logreg";
        case ModelKind::tree: return "tree";
        case ModelKind::forest: return "forest";
    }
    return "logreg";
}

int Tree::predict(const Row& x) const {
    int n = 0;
    while (nodes[n].feature >= 0) n = x[nodes[n].feature] <= nodes[n].threshold ? nodes[n].left : nodes[n].right;
    return nodes[n].leaf_class;
}

int Tree::path_length(const Row& x) const {
    int n     = 0;
    int count = 1;
    while (nodes[n].feature >= 0) {
        n = x[nodes[n].feature] <= nodes[n].threshold ? nodes[n].left : nodes[n].right;
        ++count;
    }
    return count;
}

int Tree::depth() const {
    std::vector<int> d(nodes.size(), 0);
    int best = 0;
    for (size_t i = 0; i < nodes.size(); ++i) {
        best = std::max(best, d[i]);
        if (nodes[i].feature >= 0) {
            d[nodes[i].left]  = d[i] + 1;
            d[nodes[i].right] = d[i] + 1;
        }
    }
    return best;
}

void TrainedModel::validate() const {
    if (classes.empty()) throw DataError("model has an empty class list");
    if (std::find(classes.begin(), classes.end(), "none") == classes.end()) {
        throw DataError("model class list must include none");
    }
    for (int i = 0; i < kFeatureCount; ++i) {
        if (!(standardizer.stds[i] > 0.0) || !std::isfinite(standardizer.means[i])) {
            throw DataError("model standardizer is invalid");
        }
    }
    const int nc = static_cast<int>(classes.size());
    if (kind == ModelKind::logreg) {
        if (static_cast<int>(logreg.weights.size()) != nc || static_cast<int>(logreg.biases.size()) != nc) {
            throw DataError("logreg parameters do not match the class list");
        }
        return;
    }
    if (trees.empty()) throw DataError("tree model has no trees");
    if (kind == ModelKind::tree && trees.size() != 1) throw DataError("tree model must hold exactly one tree");
    for (const Tree& t : trees) {
        if (t.nodes.empty()) throw DataError("empty tree");
        const int n = static_cast<int>(t.nodes.size());
        for (int i = 0; i < n; ++i) {
            const TreeNode& node = t.nodes[i];
            if (node.feature < 0) {
                if (node.leaf_class < 0 || node.leaf_class >= nc) throw DataError("tree leaf class out of range");
            } else {
                // Children always follow their parent, so the graph is acyclic.
                if (node.feature >= kFeatureCount || node.left <= i || node.right <= i || node.left >= n ||
                    node.right >= n) {
                    throw DataError("malformed tree node " + std::to_string(i));
                }
            }
        }
    }
}

Dataset Dataset::from_labels(std::vector<FeatureVector> features, std::span<const std::string> labels,
                             std::vector<std::string> classes) {
    if (features.size() != labels.size()) throw DataError("feature and label counts differ");
    Dataset d;
    d.features = std::move(features);
    d.classes  = std::move(classes);
    for (const std::string& l : labels) {
        const auto it = std::find(d.classes.begin(), d.classes.end(), l);
        if (it == d.classes.end()) throw DataError("label '" + l + "' is not in the class list");
        d.labels.push_back(static_cast<int>(it - d.classes.begin()));
    }
    return d;
}

std::pair<std::vector<size_t>, std::vector<size_t>> split_train_val(size_t count, double ratio, uint64_t seed) {
    if (count < 2) throw ConfigError("split_train_val: need at least 2 samples");
    if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split_train_val: ratio must lie in (0,1)");
    std::vector<size_t> idx(count);
    std::iota(idx.begin(), idx.end(), size_t{0});
    Rng rng(seed);
    for (size_t i = count - 1; i > 0; --i) std::swap(idx[i], idx[rng.below(i + 1)]);
    size_t n_train = static_cast<size_t>(std::llround(ratio * static_cast<double>(count)));
    n_train        = std::clamp<size_t>(n_train, 1, count - 1);
    return {std::vector<size_t>(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train)),
            std::vector<size_t>(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end())};
}

Dataset subset(const Dataset& d, std::span<const size_t> idx) {
    Dataset out;
    out.classes = d.classes;
    for (size_t i : idx) {
        out.features.push_back(d.features.at(i));
        out.labels.push_back(d.labels.at(i));
    }
    return out;
}

std::vector<double> logreg_probabilities(const LogRegParams& p, const Row& x) {
    const size_t nc = p.biases.size();
    std::vector<double> z(nc);
    for (size_t c = 0; c < nc; ++c) {
        z[c] = p.biases[c];
        for (int f = 0; f < kFeatureCount; ++f) z[c] += p.weights[c][f] * x[f];
    }
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        sum += v;
    }
    for (double& v : z) v /= sum;
    return z;
}

double logreg_loss(const LogRegParams& p, std::span<const Row> x, std::span<const int> y, double l2) {
    double loss = 0.0;
    for (size_t i = 0; i < x.size(); ++i) loss -= std::log(logreg_probabilities(p, x[i])[y[i]]);
    loss /= static_cast<double>(x.size());
    double reg = 0.0;
    for (const Row& w : p.weights) {
        for (double v : w) reg += v * v;
    }
    return loss + 0.5 * l2 * reg;
}

std::vector<double> logreg_gradient(const LogRegParams& p, std::span<const Row> x, std::span<const int> y,
                                    double l2) {
    const size_t nc = p.biases.size();
    std::vector<double> g(nc * kFeatureCount + nc, 0.0);
    const double inv_n = 1.0 / static_cast<double>(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        const std::vector<double> prob = logreg_probabilities(p, x[i]);
        for (size_t c = 0; c < nc; ++c) {
            const double r = prob[c] - (static_cast<int>(c) == y[i] ? 1.0 : 0.0);
            for (int f = 0; f < kFeatureCount; ++f) g[c * kFeatureCount + f] += r * x[i][f] * inv_n;
            g[nc * kFeatureCount + c] += r * inv_n;
        }
    }
    for (size_t c = 0; c < nc; ++c) {
        for (int f = 0; f < kFeatureCount; ++f) g[c * kFeatureCount + f] += l2 * p.weights[c][f];
    }
    return g;
}

TrainedModel train_logreg(const Dataset& d, const LogRegConfig& cfg) {
    require_nonempty(d, "train_logreg");
    require_two_classes(d);
    TrainedModel m;
    m.kind         = ModelKind::logreg;
    m.classes      = d.classes;
    m.standardizer = fit_standardizer(d.features);
    const std::vector<Row> x = standardize_all(m.standardizer, d.features);

    const size_t nc = d.classes.size();
    LogRegParams& p = m.logreg;
    p.weights.assign(nc, Row{});
    p.biases.assign(nc, 0.0);
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const std::vector<double> g = logreg_gradient(p, x, d.labels, cfg.l2);
        double gmax = 0.0;
        for (double v : g) gmax = std::max(gmax, std::abs(v));
        if (gmax < cfg.tolerance) break;
        for (size_t c = 0; c < nc; ++c) {
            for (int f = 0; f < kFeatureCount; ++f) p.weights[c][f] -= cfg.learning_rate * g[c * kFeatureCount + f];
            p.biases[c] -= cfg.learning_rate * g[nc * kFeatureCount + c];
        }
    }
    return m;
}

double gini_from_counts(std::span<const int> counts, int total) {
    if (total == 0) return 0.0;
    double s = 0.0;
    for (int c : counts) {
        const double q = static_cast<double>(c) / total;
        s += q * q;
    }
    return 1.0 - s;
}

std::optional<SplitChoice> best_split(std::span<const Row> x, std::span<const int> y, int class_count, int min_leaf,
                                      std::span<const int> features) {
    const int n = static_cast<int>(x.size());
    std::optional<SplitChoice> best;
    std::vector<int> order(n);
    for (int f : features) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return x[a][f] < x[b][f]; });
        std::vector<int> left(class_count, 0);
        std::vector<int> right(class_count, 0);
        for (int v : y) ++right[v];
        for (int i = 0; i + 1 < n; ++i) {
            const int yi = y[order[i]];
            ++left[yi];
            --right[yi];
            const double lo = x[order[i]][f];
            const double hi = x[order[i + 1]][f];
            if (!(lo < hi)) continue;
            const int nl = i + 1;
            const int nr = n - nl;
            if (nl < min_leaf || nr < min_leaf) continue;
            const double impurity = (nl * gini_from_counts(left, nl) + nr * gini_from_counts(right, nr)) / n;
            double threshold      = 0.5 * (lo + hi);
            if (!(threshold < hi)) threshold = lo;
            if (!best || impurity < best->impurity) best = SplitChoice{f, threshold, impurity};
        }
    }
    return best;
}

TrainedModel train_tree(const Dataset& d, const TreeConfig& cfg) {
    require_nonempty(d, "train_tree");
    if (cfg.max_depth < 0 || cfg.min_leaf < 1) throw ConfigError("tree: need max_depth >= 0 and min_leaf >= 1");
    TrainedModel m;
    m.kind         = ModelKind::tree;
    m.classes      = d.classes;
    m.standardizer = fit_standardizer(d.features);
    const std::vector<Row> x = standardize_all(m.standardizer, d.features);

    TreeBuilder b{x, d.labels, static_cast<int>(d.classes.size()), cfg, 0, nullptr, {}};
    std::vector<int> all(d.size());
    std::iota(all.begin(), all.end(), 0);
    b.build(all, 0);
    m.trees.push_back(std::move(b.tree));
    return m;
}

TrainedModel train_forest(const Dataset& d, const ForestConfig& cfg) {
    require_nonempty(d, "train_forest");
    if (cfg.trees < 1) throw ConfigError("forest: need at least one tree");
    if (cfg.tree.max_depth < 0 || cfg.tree.min_leaf < 1) {
        throw ConfigError("forest: need max_depth >= 0 and min_leaf >= 1");
    }
    TrainedModel m;
    m.kind         = ModelKind::forest;
    m.classes      = d.classes;
    m.seed         = cfg.seed;
    m.standardizer = fit_standardizer(d.features);
    const std::vector<Row> x = standardize_all(m.standardizer, d.features);
    const int class_count    = static_cast<int>(d.classes.size());

    for (int t = 0; t < cfg.trees; ++t) {
        Rng rng(mix_seed(cfg.seed, static_cast<uint64_t>(t)));
        std::vector<int> sample(d.size());
        if (cfg.bootstrap) {
            for (int& s : sample) s = static_cast<int>(rng.below(d.size()));
        } else {
            std::iota(sample.begin(), sample.end(), 0);
        }
        std::vector<Row> xs;
        std::vector<int> ys;
        for (int s : sample) {
            xs.push_back(x[s]);
            ys.push_back(d.labels[s]);
        }
        TreeBuilder b{xs, ys, class_count, cfg.tree, cfg.max_features, &rng, {}};
        std::vector<int> all(xs.size());
        std::iota(all.begin(), all.end(), 0);
        b.build(all, 0);
        m.trees.push_back(std::move(b.tree));
    }
    return m;
}

TrainedModel train_model(ModelKind kind, const Dataset& d, const TrainingConfig& cfg) {
    switch (kind) {
        case ModelKind::logreg: return train_logreg(d, cfg.logreg);
        case ModelKind::tree: return train_tree(d, cfg.tree);
        case ModelKind::forest: return train_forest(d, cfg.forest);
    }
    throw ConfigError("unknown model kind");
}

int predict_index(const TrainedModel& m, const FeatureVector& f) {
    if (!f.finite()) throw DataError("predict: non-finite feature vector");
    const Row x = m.standardizer.apply(f);
    switch (m.kind) {
        case ModelKind::logreg: return argmax_late(logreg_probabilities(m.logreg, x));
        case ModelKind::tree: return m.trees.front().predict(x);
        case ModelKind::forest: {
            std::vector<int> votes(m.classes.size(), 0);
            for (const Tree& t : m.trees) ++votes[t.predict(x)];
            return argmax_late(votes);
        }
    }
    return static_cast<int>(m.classes.size()) - 1;
}

std::string predict(const TrainedModel& m, const FeatureVector& f) { return m.classes[predict_index(m, f)]; }

std::string SequentialPolicy::predict(const FeatureVector& f) const {
    const std::string s = skipvar::predict(skip_model, f);
    if (s != "none") return s;
    return skipvar::predict(uncond_model, f);
}

std::string serialize_model(const TrainedModel& m) {
    json j;
    j["version"] = kModelFormatVersion;
    j["kind"]    = to_string(m.kind);
    j["classes"] = m.classes;
    j["standardizer"] = {{"means", m.standardizer.means},
                         {"stds", m.standardizer.stds},
                         {"zero_variance", m.standardizer.zero_variance}};
    json params;
    if (m.kind == ModelKind::logreg) {
        params["weights"] = m.logreg.weights;
        params["biases"]  = m.logreg.biases;
    } else {
        json trees = json::array();
        for (const Tree& t : m.trees) trees.push_back(tree_to_json(t));
        params["trees"] = trees;
        params["seed"]  = m.seed;
    }
    j["params"] = params;
    return j.dump(2) + "\n";
}

TrainedModel deserialize_model(const std::string& text) {
    TrainedModel m;
    try {
        const json j = json::parse(text);
        const int version = j.at("version").get<int>();
        if (version != kModelFormatVersion) throw DataError("unsupported model format version " + std::to_string(version));
        try {
            m.kind = parse_model_kind(j.at("kind").get<std::string>());
        } catch (const ConfigError& e) {
            throw DataError(e.what());
        }
        j.at("classes").get_to(m.classes);
        const json& s = j.at("standardizer");
        s.at("means").get_to(m.standardizer.means);
        s.at("stds").get_to(m.standardizer.stds);
        s.at("zero_variance").get_to(m.standardizer.zero_variance);
        const json& p = j.at("params");
        if (m.kind == ModelKind::logreg) {
            p.at("weights").get_to(m.logreg.weights);
            p.at("biases").get_to(m.logreg.biases);
        } else {
            for (const json& t : p.at("trees")) m.trees.push_back(tree_from_json(t));
            p.at("seed").get_to(m.seed);
        }
    } catch (const json::exception& e) {
        throw DataError("malformed model file: " + std::string(e.what()));
    }
    m.validate();
    return m;
}

void save_model(const TrainedModel& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write model '" + path.string() + "'");
    out << serialize_model(m);
}

TrainedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return deserialize_model(ss.str());
}

std::string serialize_policy(const SequentialPolicy& p) {
    const json j = {{"version", kModelFormatVersion},
                    {"kind", "sequential"},
                    {"skip", json::parse(serialize_model(p.skip_model))},
                    {"uncond", json::parse(serialize_model(p.uncond_model))}};
    return j.dump(2) + "\n";
}

SequentialPolicy deserialize_policy(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
        if (j.at("version").get<int>() != kModelFormatVersion || j.at("kind") != "sequential") {
            throw DataError("not a sequential policy file");
        }
    } catch (const json::exception& e) {
        throw DataError("malformed policy file: " + std::string(e.what()));
    }
    return SequentialPolicy{deserialize_model(j.at("skip").dump()), deserialize_model(j.at("uncond").dump())};
}

double accuracy(const TrainedModel& m, const Dataset& d) {
    if (d.size() == 0) return 0.0;
    size_t hits = 0;
    for (size_t i = 0; i < d.size(); ++i) {
        if (predict(m, d.features[i]) == d.classes.at(static_cast<size_t>(d.labels[i]))) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(d.size());
}

ValidatedModel train_with_validation(ModelKind kind, const Dataset& d, const TrainingConfig& cfg, double ratio,
                                     uint64_t seed) {
    const auto [train_idx, val_idx] = split_train_val(d.size(), ratio, seed);
    const Dataset train = subset(d, train_idx);
    const Dataset val   = subset(d, val_idx);
    ValidatedModel out;
    out.model          = train_model(kind, train, cfg);
    out.train_size     = train.size();
    out.val_size       = val.size();
    out.train_accuracy = accuracy(out.model, train);
    out.val_accuracy   = accuracy(out.model, val);
    return out;
}

}  // namespace skipvar
