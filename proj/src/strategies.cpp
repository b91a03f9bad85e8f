#include "skipvar/strategies.hpp"

#include <algorithm>
#include <charconv>

#include "skipvar/errors.hpp"

namespace skipvar {

namespace {

int parse_count(const std::string& text, const std::string& id) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty() || v < 1) {
        throw ConfigError("malformed strategy identifier '" + id + "'");
    }
    return v;
}

int family_rank(Strategy::Kind k) {
    switch (k) {
        case Strategy::Kind::skip: return 0;
        case Strategy::Kind::hybrid: return 1;
        case Strategy::Kind::uncond_replace: return 2;
        case Strategy::Kind::none: return 3;
    }
    return 3;
}

}  // namespace

std::string Strategy::id() const {
    switch (kind) {
        case Kind::none: return "none";
        case Kind::skip: return "skip_" + std::to_string(skip_n);
        case Kind::uncond_replace: return "uncond_" + std::to_string(uncond_n);
        case Kind::hybrid: return "hybrid_" + std::to_string(skip_n) + "_" + std::to_string(uncond_n);
    }
    return "none";
}

Strategy Strategy::parse(const std::string& id) {
    if (id == "none") return none();
    if (id.rfind("skip_", 0) == 0) return skip(parse_count(id.substr(5), id));
    if (id.rfind("uncond_", 0) == 0) return uncond_replace(parse_count(id.substr(7), id));
    if (id.rfind("hybrid_", 0) == 0) {
        const std::string rest = id.substr(7);
        const auto sep         = rest.find('_');
        if (sep == std::string::npos) throw ConfigError("malformed strategy identifier '" + id + "'");
        return hybrid(parse_count(rest.substr(0, sep), id), parse_count(rest.substr(sep + 1), id));
    }
    throw ConfigError("unknown strategy identifier '" + id + "'");
}

void Strategy::validate(int steps) const {
    const std::string who = "strategy " + id() + ": ";
    switch (kind) {
        case Kind::none:
            if (skip_n != 0 || uncond_n != 0) throw ConfigError(who + "none carries no counts");
            break;
        case Kind::skip:
            if (uncond_n != 0 || skip_n < 1 || skip_n > steps - 1) throw ConfigError(who + "need 1 <= n <= K-1");
            break;
        case Kind::uncond_replace:
            if (skip_n != 0 || uncond_n < 1 || uncond_n > steps - 1) throw ConfigError(who + "need 1 <= n <= K-1");
            break;
        case Kind::hybrid:
            if (skip_n < 1 || uncond_n < 1 || skip_n + uncond_n > steps - 1) {
                throw ConfigError(who + "need skip_n, uncond_n >= 1 and skip_n + uncond_n <= K-1");
            }
            break;
    }
}

int Strategy::first_touched(int steps) const {
    if (kind == Kind::none) return steps + 1;
    if (uncond_n > 0) return first_replaced(steps);
    return stop_step(steps) + 1;
}

std::vector<Strategy> default_ladder() {
    return {Strategy::skip(3),           Strategy::skip(2),           Strategy::skip(1),
            Strategy::uncond_replace(3), Strategy::uncond_replace(2), Strategy::uncond_replace(1),
            Strategy::none()};
}

std::vector<std::string> strategy_ids(const std::vector<Strategy>& ladder) {
    std::vector<std::string> ids;
    ids.reserve(ladder.size());
    for (const Strategy& s : ladder) ids.push_back(s.id());
    return ids;
}

CostModel CostModel::from_trace_config(const TraceConfig& cfg, double overhead) {
    return CostModel{cfg.cost_weights, overhead};
}

void CostModel::validate() const {
    if (weights.empty()) throw ConfigError("cost model has no weights");
    double sum = 0.0;
    for (double w : weights) sum += w;
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("cost weights must sum to 1");
    if (!(overhead >= 0.0)) throw ConfigError("decision overhead must be >= 0");
}

double CostModel::baseline() const {
    double total = 0.0;
    for (double w : weights) total += w + w;
    return total;
}

double strategy_cost(const CostModel& cm, const Strategy& s) {
    const int k = cm.steps();
    s.validate(k);
    double total = 0.0;
    for (int step = 1; step <= s.stop_step(k); ++step) {
        const double w = cm.weights[step - 1];
        total += s.replaces(step, k) ? w : w + w;
    }
    return total;
}

double speedup(const CostModel& cm, const Strategy& s) {
    const double base = cm.baseline();
    return base / (strategy_cost(cm, s) + cm.overhead * base);
}

std::vector<Strategy> ladder_order(const CostModel& cm, std::vector<Strategy> ladder) {
    if (ladder.empty()) throw ConfigError("strategy ladder is empty");
    if (std::find(ladder.begin(), ladder.end(), Strategy::none()) == ladder.end()) {
        throw ConfigError("strategy ladder must contain none");
    }
    std::vector<std::pair<double, Strategy>> keyed;
    for (const Strategy& s : ladder) {
        if (std::find_if(keyed.begin(), keyed.end(), [&](const auto& p) { return p.second == s; }) != keyed.end()) {
            throw ConfigError("strategy ladder contains duplicate " + s.id());
        }
        keyed.emplace_back(speedup(cm, s), s);
    }
    std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
        const bool a_none = a.second.kind == Strategy::Kind::none;
        const bool b_none = b.second.kind == Strategy::Kind::none;
        if (a_none != b_none) return b_none;
        if (a.first != b.first) return a.first > b.first;
        const int fa = family_rank(a.second.kind);
        const int fb = family_rank(b.second.kind);
        if (fa != fb) return fa < fb;
        return a.second.skip_n + a.second.uncond_n > b.second.skip_n + b.second.uncond_n;
    });
    std::vector<Strategy> out;
    for (auto& [sp, s] : keyed) out.push_back(s);
    return out;
}

StrategyOutcome complete_with_strategy(ToyGenerator& gen, const Strategy& s) {
    const TraceConfig& cfg = gen.trace().config;
    const int k            = cfg.steps;
    s.validate(k);
    if (s.first_touched(k) < gen.next_step()) {
        throw ConfigError("strategy " + s.id() + " modifies step " + std::to_string(s.first_touched(k)) +
                          " which has already been generated");
    }
    while (gen.next_step() <= s.stop_step(k)) gen.run_step(s.replaces(gen.next_step(), k));
    return StrategyOutcome{decode_final(gen.trace(), s.stop_step(k)), gen.cost()};
}

StrategyOutcome apply_strategy(const Image& target, const TraceConfig& cfg, const Strategy& s) {
    ToyGenerator gen(target, cfg);
    return complete_with_strategy(gen, s);
}

StrategyOutcome outcome_from_trace(const StepTrace& baseline, const Strategy& s) {
    const TraceConfig& cfg = baseline.config;
    const int k            = cfg.steps;
    s.validate(k);
    if (baseline.steps_run() != k) throw ConfigError("outcome_from_trace: baseline trace is incomplete");
    for (bool replaced : baseline.uncond_replaced) {
        if (replaced) throw ConfigError("outcome_from_trace: baseline trace has replaced steps");
    }
    const int stop = s.stop_step(k);
    double cost    = 0.0;
    for (int step = 1; step <= stop; ++step) {
        const double w = cfg.cost_weights[step - 1];
        cost += s.replaces(step, k) ? w : w + w;
    }
    if (!s.replaces(stop, k)) return StrategyOutcome{decode_final(baseline, stop), cost};

    Image last = clamp_unit(baseline.cond[stop - 1]);
    if (stop == k) return StrategyOutcome{std::move(last), cost};
    const int full = cfg.final_resolution();
    return StrategyOutcome{resize_bilinear(last, full, full), cost};
}

}  // namespace skipvar
