#include "skipvar/run_config.hpp"

#include <fstream>

#include "skipvar/errors.hpp"
#include "skipvar/json_io.hpp"

namespace skipvar {

using nlohmann::json;

namespace {

bool same_kind(const json& def, const json& v) {
    if (def.is_null()) return v.is_null() || v.is_array();  // optional lists
    if (def.is_boolean()) return v.is_boolean();
    if (def.is_number_integer()) return v.is_number_integer();
    if (def.is_number()) return v.is_number();
    if (def.is_string()) return v.is_string();
    if (def.is_array()) return v.is_array();
    return false;
}

const char* kind_name(const json& def) {
    if (def.is_null()) return "a list or null";
    if (def.is_boolean()) return "a boolean";
    if (def.is_number_integer()) return "an integer";
    if (def.is_number()) return "a number";
    if (def.is_string()) return "a string";
    return "a list";
}

template <typename T>
T get(const json& flat, const char* key) {
    try {
        return flat.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has an invalid value");
    }
}

void require(bool ok, const char* key, const std::string& what) {
    if (!ok) throw ConfigError(std::string("config key '") + key + "' " + what);
}

}  // namespace

json default_config_json() {
    const TraceConfig t = TraceConfig::defaults();
    const PipelineConfig p;
    const TrainingConfig tc;
    return json{
        {"seed", 20250611},
        {"jobs", 1},
        {"corpus.count", 200},
        {"corpus.family", "mixed"},
        {"trace.steps", nullptr},
        {"trace.schedule", t.schedule},
        {"trace.guidance", t.guidance},
        {"trace.alpha", t.alpha},
        {"trace.gamma", t.gamma},
        {"trace.cost_weights", nullptr},
        {"trace.late_share", 0.69},
        {"pipeline.decision_step", p.decision_step},
        {"pipeline.analysis_size", p.analysis_size},
        {"pipeline.eligible_steps", p.eligible_steps},
        {"pipeline.overhead", p.overhead},
        {"pipeline.ladder", strategy_ids(p.ladder)},
        {"hf.rho", p.hf.rho},
        {"hf.epsilon", p.hf.epsilon},
        {"ssim.window", p.ssim.window},
        {"ssim.sigma", p.ssim.sigma},
        {"ssim.k1", p.ssim.k1},
        {"ssim.k2", p.ssim.k2},
        {"ssim.dynamic_range", p.ssim.dynamic_range},
        {"hf_mask.quantile", p.hf_mask.quantile},
        {"label.tau", 0.84},
        {"split.tau_s", 0.85},
        {"train.kind", "logreg"},
        {"train.ratio", 0.8},
        {"train.two_stage", false},
        {"logreg.l2", tc.logreg.l2},
        {"logreg.learning_rate", tc.logreg.learning_rate},
        {"logreg.max_epochs", tc.logreg.max_epochs},
        {"logreg.tolerance", tc.logreg.tolerance},
        {"tree.max_depth", tc.tree.max_depth},
        {"tree.min_leaf", tc.tree.min_leaf},
        {"forest.trees", tc.forest.trees},
        {"forest.bootstrap", tc.forest.bootstrap},
        {"forest.max_features", tc.forest.max_features},
    };
}

json merge_config(json base, const json& overrides) {
    if (!overrides.is_object()) throw ConfigError("config must be a JSON object of flat keys");
    const json defaults = default_config_json();
    for (const auto& [key, value] : overrides.items()) {
        if (!defaults.contains(key)) throw ConfigError("unknown config key '" + key + "'");
        const json& def = defaults.at(key);
        if (!same_kind(def, value)) {
            throw ConfigError("config key '" + key + "' must be " + kind_name(def) + ", got " + value.dump());
        }
        base[key] = value;
    }
    return base;
}

RunConfig resolve_config(const json& flat) {
    const json full = merge_config(default_config_json(), flat);
    RunConfig c;

    const auto seed = get<int64_t>(full, "seed");
    require(seed >= 0, "seed", "must be >= 0");
    c.seed = static_cast<uint64_t>(seed);
    c.jobs = get<int>(full, "jobs");
    require(c.jobs >= 1, "jobs", "must be >= 1");

    c.corpus_count  = get<int>(full, "corpus.count");
    c.corpus_family = get<std::string>(full, "corpus.family");
    require(c.corpus_count >= 1, "corpus.count", "must be >= 1");
    require(c.corpus_family == "blob" || c.corpus_family == "sinusoid" || c.corpus_family == "mixed",
            "corpus.family", "must be blob, sinusoid or mixed");

    TraceConfig& t = c.trace;
    t.schedule = get<std::vector<int>>(full, "trace.schedule");
    require(t.schedule.size() >= 4, "trace.schedule", "needs at least 4 entries");
    t.steps = full.at("trace.steps").is_null() ? static_cast<int>(t.schedule.size()) : get<int>(full, "trace.steps");
    t.guidance = get<double>(full, "trace.guidance");
    t.alpha    = get<double>(full, "trace.alpha");
    t.gamma    = get<double>(full, "trace.gamma");
    t.seed     = c.seed;
    const double late_share = get<double>(full, "trace.late_share");
    require(late_share > 0.0 && late_share < 1.0, "trace.late_share", "must lie in (0,1)");
    if (full.at("trace.cost_weights").is_null()) {
        t.cost_weights = calibrated_cost_weights(t.schedule, 3, late_share);
    } else {
        t.cost_weights = get<std::vector<double>>(full, "trace.cost_weights");
    }
    t.validate();

    PipelineConfig& p   = c.pipeline;
    p.decision_step     = get<int>(full, "pipeline.decision_step");
    p.analysis_size     = get<int>(full, "pipeline.analysis_size");
    p.eligible_steps    = get<int>(full, "pipeline.eligible_steps");
    p.overhead          = get<double>(full, "pipeline.overhead");
    p.hf.rho            = get<double>(full, "hf.rho");
    p.hf.epsilon        = get<double>(full, "hf.epsilon");
    p.ssim.window       = get<int>(full, "ssim.window");
    p.ssim.sigma        = get<double>(full, "ssim.sigma");
    p.ssim.k1           = get<double>(full, "ssim.k1");
    p.ssim.k2           = get<double>(full, "ssim.k2");
    p.ssim.dynamic_range = get<double>(full, "ssim.dynamic_range");
    p.hf_mask.quantile  = get<double>(full, "hf_mask.quantile");
    p.ladder.clear();
    for (const std::string& id : get<std::vector<std::string>>(full, "pipeline.ladder")) {
        p.ladder.push_back(Strategy::parse(id));
    }
    p.validate(t);

    c.tau   = get<double>(full, "label.tau");
    c.tau_s = get<double>(full, "split.tau_s");
    require(c.tau > 0.0 && c.tau <= 1.0, "label.tau", "must lie in (0,1]");
    require(c.tau_s >= 0.0 && c.tau_s <= 1.0, "split.tau_s", "must lie in [0,1]");

    c.kind        = parse_model_kind(get<std::string>(full, "train.kind"));
    c.train_ratio = get<double>(full, "train.ratio");
    c.two_stage   = get<bool>(full, "train.two_stage");
    require(c.train_ratio > 0.0 && c.train_ratio < 1.0, "train.ratio", "must lie in (0,1)");

    TrainingConfig& tc       = c.training;
    tc.logreg.l2             = get<double>(full, "logreg.l2");
    tc.logreg.learning_rate  = get<double>(full, "logreg.learning_rate");
    tc.logreg.max_epochs     = get<int>(full, "logreg.max_epochs");
    tc.logreg.tolerance      = get<double>(full, "logreg.tolerance");
    tc.tree.max_depth        = get<int>(full, "tree.max_depth");
    tc.tree.min_leaf         = get<int>(full, "tree.min_leaf");
    tc.forest.trees          = get<int>(full, "forest.trees");
    tc.forest.bootstrap      = get<bool>(full, "forest.bootstrap");
    tc.forest.max_features   = get<int>(full, "forest.max_features");
    tc.forest.seed           = c.seed;
    tc.forest.tree           = tc.tree;
    require(tc.logreg.l2 >= 0.0, "logreg.l2", "must be >= 0");
    require(tc.logreg.learning_rate > 0.0, "logreg.learning_rate", "must be > 0");
    require(tc.logreg.max_epochs >= 1, "logreg.max_epochs", "must be >= 1");
    require(tc.logreg.tolerance >= 0.0, "logreg.tolerance", "must be >= 0");
    require(tc.tree.max_depth >= 0, "tree.max_depth", "must be >= 0");
    require(tc.tree.min_leaf >= 1, "tree.min_leaf", "must be >= 1");
    require(tc.forest.trees >= 1, "forest.trees", "must be >= 1");

    c.resolved = full;
    return c;
}

// jobs never changes results, so it stays out of the hash.
std::string RunConfig::hash() const {
    json keyed = resolved;
    keyed.erase("jobs");
    return hex64(content_hash(keyed.dump()));
}

json read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open config '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("malformed config '" + path.string() + "': " + e.what());
    }
}

std::pair<std::string, json> parse_assignment(const std::string& text) {
    const size_t eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("expected key=value, got '" + text + "'");
    const std::string key   = text.substr(0, eq);
    const std::string value = text.substr(eq + 1);
    json parsed = json::parse(value, nullptr, false);
    if (parsed.is_discarded()) parsed = value;
    return {key, parsed};
}

}  // namespace skipvar
