#include <doctest.h>

#include <set>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "skipvar/decision.hpp"
#include "skipvar/errors.hpp"

using namespace skipvar;

namespace {

using Row = std::array<double, kFeatureCount>;

std::vector<Row> standardized(const TrainedModel& m, const Dataset& d) {
    std::vector<Row> out;
    for (const FeatureVector& f : d.features) out.push_back(m.standardizer.apply(f));
    return out;
}

std::vector<FeatureVector> probes(uint64_t seed, int n = 200) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> a(0.0, 0.1), b(0.0, 1.0);
    std::vector<FeatureVector> out;
    for (int i = 0; i < n; ++i) out.push_back({a(rng), b(rng)});
    return out;
}

}  // namespace

TEST_CASE("fit_standardizer examples") {
    const std::vector<FeatureVector> one{{0.3, 0.7}};
    const Standardizer s1 = fit_standardizer(one);
    CHECK(s1.means == std::array<double, 2>{0.3, 0.7});
    CHECK(s1.stds == std::array<double, 2>{1.0, 1.0});
    CHECK(s1.zero_variance[0]);

    const std::vector<FeatureVector> two{{0, 0}, {2, 1}};
    const Standardizer s2 = fit_standardizer(two);
    CHECK(s2.means[0] == 1.0);
    CHECK(s2.means[1] == 0.5);
    CHECK(s2.stds[0] == 1.0);
    CHECK(s2.stds[1] == 0.5);

    const auto xs = probes(3, 50);
    const Standardizer s = fit_standardizer(xs);
    for (int f = 0; f < 2; ++f) {
        double m = 0, v = 0;
        for (const auto& x : xs) m += s.apply(x)[f];
        m /= xs.size();
        for (const auto& x : xs) v += (s.apply(x)[f] - m) * (s.apply(x)[f] - m);
        CHECK(std::abs(m) <= 1e-9);
        CHECK(std::abs(std::sqrt(v / xs.size()) - 1.0) <= 1e-9);
    }
    CHECK_THROWS_AS(fit_standardizer(std::vector<FeatureVector>{}), ConfigError);
}

TEST_CASE("split_train_val") {
    const auto [train, val] = split_train_val(10, 0.8, 42);
    CHECK(train.size() == 8);
    CHECK(val.size() == 2);
    CHECK(split_train_val(10, 0.8, 42) == std::pair{train, val});
    std::multiset<size_t> all(train.begin(), train.end());
    all.insert(val.begin(), val.end());
    CHECK(all == std::multiset<size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    CHECK(split_train_val(10, 0.8, 43) != std::pair{train, val});
    CHECK_THROWS_AS(split_train_val(1, 0.8, 1), ConfigError);
    CHECK_THROWS_AS(split_train_val(10, 1.0, 1), ConfigError);
}

TEST_CASE("logreg with zero weights predicts one half and breaks ties toward none") {
    LogRegParams p;
    p.weights = {{0, 0}, {0, 0}};
    p.biases  = {0, 0};
    const auto probs = logreg_probabilities(p, {1.3, -2.0});
    CHECK(probs[0] == 0.5);
    CHECK(probs[1] == 0.5);

    TrainedModel m;
    m.kind    = ModelKind::logreg;
    m.classes = {"skip_3", "none"};
    m.logreg  = p;
    CHECK(predict(m, {0.02, 0.4}) == "none");
}

TEST_CASE("logreg gradient matches central differences") {
    const Dataset d = fixtures::random_set(5, 40, 3);
    const TrainedModel shape = train_logreg(d);
    const auto x = standardized(shape, d);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        LogRegParams p;
        for (int c = 0; c < 3; ++c) {
            p.weights.push_back({n(rng), n(rng)});
            p.biases.push_back(n(rng));
        }
        const double l2 = 1e-3;
        const auto grad = logreg_gradient(p, x, d.labels, l2);
        std::vector<double*> slots;
        for (auto& w : p.weights) slots.insert(slots.end(), {&w[0], &w[1]});
        for (double& b : p.biases) slots.push_back(&b);
        REQUIRE(grad.size() == slots.size());
        for (size_t i = 0; i < slots.size(); ++i) {
            const double h = 1e-5, keep = *slots[i];
            *slots[i] = keep + h;
            const double up = logreg_loss(p, x, d.labels, l2);
            *slots[i] = keep - h;
            const double down = logreg_loss(p, x, d.labels, l2);
            *slots[i] = keep;
            const double fd = (up - down) / (2 * h);
            CHECK(std::abs(fd - grad[i]) <= 1e-4 * std::max(1e-3, std::abs(fd)));
        }
    }
}

TEST_CASE("logreg separates the synthetic set and its probabilities sum to one") {
    const Dataset d = fixtures::separable_set();
    const TrainedModel m = train_logreg(d);
    CHECK(accuracy(m, d) == 1.0);
    for (const FeatureVector& f : probes(4)) {
        const auto probs = logreg_probabilities(m.logreg, m.standardizer.apply(f));
        double s = 0.0;
        for (double p : probs) s += p;
        CHECK(std::abs(s - 1.0) <= 1e-9);
    }
    CHECK(serialize_model(train_logreg(d)) == serialize_model(m));
}

TEST_CASE("logreg rejects single-class data") {
    const std::vector<FeatureVector> x{{0, 0}, {1, 1}};
    const std::vector<std::string> y{"none", "none"};
    CHECK_THROWS_AS(train_logreg(Dataset::from_labels(x, y, {"skip_3", "none"})), ConfigError);
}

TEST_CASE("tree root split equals exhaustive search") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        const Dataset d      = fixtures::random_set(seed, 30 + static_cast<int>(seed), 3);
        const TrainedModel m = train_tree(d);
        const auto want      = oracle::best_split(standardized(m, d), d.labels, 3, 5);
        const TreeNode& root = m.trees.front().nodes.front();
        if (want.feature < 0) {
            CHECK(root.feature == -1);
            continue;
        }
        CHECK(root.feature == want.feature);
        CHECK(root.threshold == doctest::Approx(want.threshold).epsilon(1e-12));
    }
}

TEST_CASE("tree degenerate cases") {
    const std::vector<FeatureVector> x{{0, 0}, {1, 1}, {2, 0.5}};
    const std::vector<std::string> same{"skip_2", "skip_2", "skip_2"};
    const TrainedModel pure = train_tree(Dataset::from_labels(x, same, {"skip_2", "none"}));
    CHECK(pure.trees.front().nodes.size() == 1);
    for (const auto& f : x) CHECK(predict(pure, f) == "skip_2");

    TreeConfig stump;
    stump.max_depth = 0;
    const Dataset d = fixtures::separable_set();
    const TrainedModel s = train_tree(d, stump);
    CHECK(s.trees.front().nodes.size() == 1);
    CHECK(predict(s, {0.0, 0.0}) == "none");  // 60/60 tie resolves to the safer class

    const std::vector<std::string> mostly{"skip_2", "skip_2", "none"};
    CHECK(predict(train_tree(Dataset::from_labels(x, mostly, {"skip_2", "none"}), stump), {5, 5}) == "skip_2");
}

TEST_CASE("tree paths respect the depth limit") {
    const Dataset d = fixtures::random_set(99, 200, 4);
    for (int depth : {1, 2, 4}) {
        TreeConfig cfg;
        cfg.max_depth = depth;
        cfg.min_leaf  = 2;
        const TrainedModel m = train_tree(d, cfg);
        CHECK(m.trees.front().depth() <= depth);
        for (const FeatureVector& f : probes(2)) {
            CHECK(m.trees.front().path_length(m.standardizer.apply(f)) - 1 <= depth);
        }
    }
}

TEST_CASE("forest behaviour") {
    const Dataset d = fixtures::random_set(7, 80, 3);
    ForestConfig one;
    one.trees        = 1;
    one.bootstrap    = false;
    one.max_features = 0;
    const TrainedModel f1 = train_forest(d, one);
    const TrainedModel t  = train_tree(d);
    for (const FeatureVector& f : probes(9)) CHECK(predict(f1, f) == predict(t, f));

    ForestConfig cfg;
    cfg.seed = 5;
    CHECK(serialize_model(train_forest(d, cfg)) == serialize_model(train_forest(d, cfg)));

    const Dataset sep = fixtures::separable_set(3, 80);
    const auto [tr, va] = split_train_val(sep.size(), 0.8, 1);
    const Dataset train = subset(sep, tr), val = subset(sep, va);
    CHECK(accuracy(train_forest(train, cfg), val) >= accuracy(train_logreg(train), val) - 0.05);
}

TEST_CASE("forest votes break ties toward the less aggressive class") {
    TrainedModel m;
    m.kind    = ModelKind::forest;
    m.classes = {"skip_3", "skip_2", "none"};
    Tree a, b;
    a.nodes = {TreeNode{-1, 0, -1, -1, 0}};
    b.nodes = {TreeNode{-1, 0, -1, -1, 1}};
    m.trees = {a, b};
    CHECK(predict(m, {0.1, 0.1}) == "skip_2");
}

TEST_CASE("predictions survive affine rescaling with a refit standardizer") {
    const Dataset d = fixtures::random_set(12, 60, 3);
    Dataset scaled  = d;
    for (FeatureVector& f : scaled.features) f = {3.0 * f.hf_diff + 1.0, 0.5 * f.hf_ratio - 2.0};
    for (ModelKind kind : {ModelKind::logreg, ModelKind::tree, ModelKind::forest}) {
        const TrainedModel a = train_model(kind, d);
        const TrainedModel b = train_model(kind, scaled);
        for (const FeatureVector& f : probes(6, 100)) {
            CHECK(predict(a, f) == predict(b, {3.0 * f.hf_diff + 1.0, 0.5 * f.hf_ratio - 2.0}));
        }
    }
}

TEST_CASE("standardize then predict equals identity-standardizer prediction") {
    const Dataset d = fixtures::random_set(13, 60, 3);
    for (ModelKind kind : {ModelKind::logreg, ModelKind::tree}) {
        const TrainedModel m = train_model(kind, d);
        TrainedModel raw     = m;
        raw.standardizer     = Standardizer::identity();
        for (const FeatureVector& f : probes(7, 100)) {
            const auto z = m.standardizer.apply(f);
            CHECK(predict(m, f) == predict(raw, {z[0], z[1]}));
        }
    }
}

TEST_CASE("model serialization round trip") {
    const Dataset d = fixtures::random_set(21, 90, 4);
    for (ModelKind kind : {ModelKind::logreg, ModelKind::tree, ModelKind::forest}) {
        const TrainedModel m = train_model(kind, d);
        const auto path = std::filesystem::temp_directory_path() / "skipvar_model_rt.json";
        save_model(m, path);
        const TrainedModel back = load_model(path);
        std::filesystem::remove(path);
        for (const FeatureVector& f : probes(1)) CHECK(predict(back, f) == predict(m, f));
        CHECK(serialize_model(back) == serialize_model(m));
    }
    std::string text = serialize_model(train_tree(d));
    CHECK_THROWS_AS(deserialize_model(text.substr(0, text.size() / 2)), DataError);
    const auto at = text.find("\"version\": 1");
    REQUIRE(at != std::string::npos);
    text.replace(at, 12, "\"version\": 9");
    CHECK_THROWS_AS(deserialize_model(text), DataError);
}

TEST_CASE("predict rejects non-finite features") {
    const TrainedModel m = train_logreg(fixtures::separable_set());
    CHECK_THROWS(predict(m, {std::nan(""), 0.1}));
}

TEST_CASE("sequential policy queries the skip model first") {
    const Dataset d = fixtures::separable_set();
    SequentialPolicy p;
    p.skip_model = train_logreg(d);
    const std::vector<FeatureVector> x{{0, 0}, {1, 1}};
    const std::vector<std::string> y{"uncond_2", "uncond_2"};
    p.uncond_model = train_tree(Dataset::from_labels(x, y, {"uncond_2", "none"}));
    CHECK(p.predict(d.features[0]) == "skip_3");
    CHECK(p.predict(d.features[1]) == "uncond_2");
    const SequentialPolicy back = deserialize_policy(serialize_policy(p));
    CHECK(back.predict(d.features[1]) == "uncond_2");
}

TEST_CASE("train_with_validation scores both parts") {
    const ValidatedModel vm = train_with_validation(ModelKind::logreg, fixtures::separable_set(), {}, 0.8, 3);
    CHECK(vm.train_size == 96);
    CHECK(vm.val_size == 24);
    CHECK(vm.train_accuracy == 1.0);
    CHECK(vm.val_accuracy == 1.0);
}

TEST_CASE("model kinds parse") {
    CHECK(parse_model_kind("forest") == ModelKind::forest);
    CHECK(to_string(ModelKind::tree) == "tree");
    CHECK_THROWS_AS(parse_model_kind("svm"), ConfigError);
}
