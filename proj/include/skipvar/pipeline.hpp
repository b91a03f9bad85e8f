#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skipvar/decision.hpp"
#include "skipvar/frequency.hpp"
#include "skipvar/metrics.hpp"
#include "skipvar/strategies.hpp"
#include "skipvar/toygen.hpp"

namespace skipvar {

struct PipelineConfig {
    int decision_step  = 9;    // N
    int analysis_size  = 128;  // side of the downsampled analysis images
    int eligible_steps = 3;    // only the last steps may be accelerated
    double overhead    = 0.005;
    HFParams hf;
    SsimParams ssim;
    HfMaskParams hf_mask;
    std::vector<Strategy> ladder = default_ladder();

    void validate(const TraceConfig& trace) const;
    CostModel cost_model(const TraceConfig& trace) const { return CostModel{trace.cost_weights, overhead}; }
    // The ladder sorted most aggressive first under the trace's cost weights.
    std::vector<Strategy> ordered_ladder(const TraceConfig& trace) const;
};

// Features from the decoded images at steps N and N-1.
FeatureVector decision_features(const Image& step_n, const Image& step_prev, const PipelineConfig& p);
FeatureVector decision_features(const StepTrace& trace, const PipelineConfig& p);

// One corpus entry: the target plus the seed of its generation noise.
struct CorpusSample {
    std::string id;
    TargetSpec spec;
    uint64_t seed = 0;
};

// Trace configuration with the per-sample noise seed folded in.
TraceConfig sample_trace_config(const TraceConfig& cfg, const CorpusSample& s);

using Policy = std::function<std::string(const FeatureVector&)>;

Policy policy_from(const TrainedModel& m);
Policy policy_from(const SequentialPolicy& p);
Policy constant_policy(const Strategy& s);

struct RunOptions {
    bool compute_baseline = false;
};

struct RunReport {
    Strategy strategy;
    FeatureVector features;
    std::optional<double> ssim;
    std::optional<double> ssim_hf;
    double cost    = 0.0;  // branch passes plus decision overhead
    double speedup = 1.0;
};

struct RunResult {
    Image output;
    RunReport report;
};

// Steps 1..N, decision from the cached step N-1 and step N, then completion
// of the remaining steps under the chosen strategy.
RunResult run_skipvar(const Image& target, const TraceConfig& cfg, const PipelineConfig& p, const Policy& policy,
                      const RunOptions& opts = {});
RunResult run_skipvar(const Image& target, const TraceConfig& cfg, const PipelineConfig& p, const TrainedModel& model,
                      const RunOptions& opts = {});

// Throws ConfigError unless every model class belongs to the ladder.
void check_model_ladder(const TrainedModel& m, const PipelineConfig& p);

struct SampleReport {
    std::string sample_id;
    RunReport run;
};

struct EvaluationReport {
    std::vector<SampleReport> rows;
    double mean_ssim    = 0.0;
    double min_ssim     = 0.0;
    double mean_ssim_hf = 0.0;
    double mean_speedup = 0.0;
    std::vector<std::pair<std::string, int>> histogram;  // ladder order
};

EvaluationReport evaluate(const std::vector<CorpusSample>& samples, const TraceConfig& cfg, const PipelineConfig& p,
                          const Policy& policy, int jobs = 1);

void write_evaluation_csv(const EvaluationReport& r, const std::filesystem::path& path);
std::string evaluation_summary_json(const EvaluationReport& r);

struct GeneralizationReport {
    double tau              = 0.0;
    double mean_ssim        = 0.0;
    double oracle_mean_ssim = 0.0;
    double ssim_gap         = 0.0;  // oracle minus model
    double agreement        = 0.0;  // fraction of held-out samples matching the oracle label
    bool overlapping_recipes = false;
};

// Train on one corpus, evaluate on another without retraining.
GeneralizationReport generalization_check(const std::vector<CorpusSample>& train,
                                          const std::vector<CorpusSample>& held_out, const TraceConfig& cfg,
                                          const PipelineConfig& p, double tau, ModelKind kind,
                                          const TrainingConfig& tcfg = {}, int jobs = 1);

}  // namespace skipvar
