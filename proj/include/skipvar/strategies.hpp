#pragma once

#include <string>
#include <vector>

#include "skipvar/imagecore.hpp"
#include "skipvar/toygen.hpp"

namespace skipvar {

// Action applied to the steps after the decision step.
struct Strategy {
    enum class Kind { none, skip, uncond_replace, hybrid };

    Kind kind    = Kind::none;
    int skip_n   = 0;  // steps removed from the end
    int uncond_n = 0;  // steps whose unconditional branch is replaced

    static Strategy none() { return {}; }
    static Strategy skip(int n) { return {Kind::skip, n, 0}; }
    static Strategy uncond_replace(int n) { return {Kind::uncond_replace, 0, n}; }
    static Strategy hybrid(int skip_steps, int uncond_steps) { return {Kind::hybrid, skip_steps, uncond_steps}; }

    // "none", "skip_3", "uncond_2", "hybrid_2_2"
    std::string id() const;
    static Strategy parse(const std::string& id);

    void validate(int steps) const;
    // Last step that is generated at all.
    int stop_step(int steps) const { return steps - skip_n; }
    // 1-based inclusive range of steps run with the unconditional branch replaced;
    // empty when first > last.
    int first_replaced(int steps) const { return stop_step(steps) - uncond_n + 1; }
    int last_replaced(int steps) const { return stop_step(steps); }
    bool replaces(int step, int steps) const {
        return step >= first_replaced(steps) && step <= last_replaced(steps);
    }
    // Earliest step the strategy modifies (K+1 for none).
    int first_touched(int steps) const;

    friend bool operator==(const Strategy&, const Strategy&) = default;
};

std::vector<Strategy> default_ladder();
std::vector<std::string> strategy_ids(const std::vector<Strategy>& ladder);

struct CostModel {
    std::vector<double> weights;  // w_k, sum to 1; each step costs 2 w_k at baseline
    double overhead = 0.005;      // decision overhead as a fraction of baseline

    static CostModel from_trace_config(const TraceConfig& cfg, double overhead = 0.005);
    void validate() const;
    int steps() const { return static_cast<int>(weights.size()); }
    double baseline() const;
};

// Cost of the branch passes a strategy executes, without overhead.
double strategy_cost(const CostModel& cm, const Strategy& s);

// baseline / (cost + overhead * baseline)
double speedup(const CostModel& cm, const Strategy& s);

// Most aggressive first: descending speedup, skip before uncond on ties, then
// larger n; none always last.
std::vector<Strategy> ladder_order(const CostModel& cm, std::vector<Strategy> ladder);

struct StrategyOutcome {
    Image output;
    double cost = 0.0;  // branch passes only
};

// Runs the generator from scratch under the strategy.
StrategyOutcome apply_strategy(const Image& target, const TraceConfig& cfg, const Strategy& s);

// Same result as apply_strategy, derived from a complete unmodified trace of
// the same target and config. Valid because step k depends only on the target.
StrategyOutcome outcome_from_trace(const StepTrace& baseline, const Strategy& s);

// Continues a generator that has already run some steps; the strategy must not
// touch steps that were already run.
StrategyOutcome complete_with_strategy(ToyGenerator& gen, const Strategy& s);

}  // namespace skipvar
