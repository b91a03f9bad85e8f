#include "skipvar/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "skipvar/errors.hpp"
#include "skipvar/json_io.hpp"
#include "skipvar/labeling.hpp"
#include "skipvar/parallel.hpp"
#include "skipvar/random.hpp"

namespace skipvar {

using nlohmann::json;

void PipelineConfig::validate(const TraceConfig& trace) const {
    trace.validate();
    const int k = trace.steps;
    if (decision_step < 2 || decision_step >= k) {
        throw ConfigError("pipeline.decision_step must satisfy 2 <= N < K (K=" + std::to_string(k) + ")");
    }
    if (analysis_size < 3) throw ConfigError("pipeline.analysis_size must be >= 3");
    if (analysis_size > trace.schedule[decision_step - 2]) {
        throw ConfigError("pipeline.analysis_size exceeds the resolution of step N-1 (" +
                          std::to_string(trace.schedule[decision_step - 2]) + ")");
    }
    if (eligible_steps < 1 || eligible_steps > k - decision_step) {
        throw ConfigError("pipeline.eligible_steps must lie in [1, K-N]");
    }
    if (!(overhead >= 0.0)) throw ConfigError("pipeline.overhead must be >= 0");
    hf.validate();
    ssim.validate();
    hf_mask.validate();
    if (std::find(ladder.begin(), ladder.end(), Strategy::none()) == ladder.end()) {
        throw ConfigError("pipeline.ladder must contain none");
    }
    const int first_eligible = k - eligible_steps + 1;
    for (const Strategy& s : ladder) {
        s.validate(k);
        if (s.first_touched(k) < first_eligible) {
            throw ConfigError("ladder entry " + s.id() + " touches step " + std::to_string(s.first_touched(k)) +
                              ", before the eligible range starting at step " + std::to_string(first_eligible));
        }
    }
}

std::vector<Strategy> PipelineConfig::ordered_ladder(const TraceConfig& trace) const {
    return ladder_order(cost_model(trace), ladder);
}

FeatureVector decision_features(const Image& step_n, const Image& step_prev, const PipelineConfig& p) {
    FeatureVector f;
    f.hf_diff  = hf_diff(step_n, step_prev, p.analysis_size);
    f.hf_ratio = hf_ratio(resize_area(step_n, p.analysis_size, p.analysis_size), p.hf);
    return f;
}

FeatureVector decision_features(const StepTrace& trace, const PipelineConfig& p) {
    const int n = p.decision_step;
    if (trace.steps_run() < n) throw ConfigError("decision_features: trace has not reached the decision step");
    return decision_features(trace.combined[n - 1], trace.combined[n - 2], p);
}

TraceConfig sample_trace_config(const TraceConfig& cfg, const CorpusSample& s) {
    TraceConfig out = cfg;
    out.seed        = mix_seed(cfg.seed, s.seed);
    return out;
}

Policy policy_from(const TrainedModel& m) {
    return [m](const FeatureVector& f) { return predict(m, f); };
}

Policy policy_from(const SequentialPolicy& p) {
    return [p](const FeatureVector& f) { return p.predict(f); };
}

Policy constant_policy(const Strategy& s) {
    const std::string id = s.id();
    return [id](const FeatureVector&) { return id; };
}

void check_model_ladder(const TrainedModel& m, const PipelineConfig& p) {
    const std::vector<std::string> ids = strategy_ids(p.ladder);
    for (const std::string& c : m.classes) {
        if (std::find(ids.begin(), ids.end(), c) == ids.end()) {
            throw ConfigError("model class '" + c + "' is not in the configured ladder");
        }
    }
}

RunResult run_skipvar(const Image& target, const TraceConfig& cfg, const PipelineConfig& p, const Policy& policy,
                      const RunOptions& opts) {
    p.validate(cfg);
    const int n = p.decision_step;

    ToyGenerator gen(target, cfg);
    while (gen.next_step() <= n) gen.run_step();

    RunReport report;
    report.features = decision_features(gen.trace(), p);
    const std::string choice = policy(report.features);
    report.strategy          = Strategy::parse(choice);
    if (std::find(p.ladder.begin(), p.ladder.end(), report.strategy) == p.ladder.end()) {
        throw ConfigError("policy returned '" + choice + "', which is not in the ladder");
    }

    StrategyOutcome outcome = complete_with_strategy(gen, report.strategy);
    const CostModel cm      = p.cost_model(cfg);
    const double baseline   = cm.baseline();
    report.cost             = outcome.cost + cm.overhead * baseline;
    report.speedup          = baseline / report.cost;

    if (opts.compute_baseline) {
        const Image reference = report.strategy == Strategy::none()
                                    ? outcome.output
                                    : apply_strategy(target, cfg, Strategy::none()).output;
        report.ssim    = ssim(reference, outcome.output, p.ssim);
        report.ssim_hf = ssim_hf(reference, outcome.output, p.ssim, p.hf_mask);
    }
    return RunResult{std::move(outcome.output), report};
}

RunResult run_skipvar(const Image& target, const TraceConfig& cfg, const PipelineConfig& p, const TrainedModel& model,
                      const RunOptions& opts) {
    check_model_ladder(model, p);
    return run_skipvar(target, cfg, p, policy_from(model), opts);
}

EvaluationReport evaluate(const std::vector<CorpusSample>& samples, const TraceConfig& cfg, const PipelineConfig& p,
                          const Policy& policy, int jobs) {
    if (samples.empty()) throw ConfigError("evaluate: empty corpus");
    p.validate(cfg);
    const int size = cfg.final_resolution();

    EvaluationReport r;
    r.rows.resize(samples.size());
    parallel_for(samples.size(), jobs, [&](size_t i) {
        const CorpusSample& s   = samples[i];
        const Image target      = synth_target(s.spec, size);
        RunResult res = run_skipvar(target, sample_trace_config(cfg, s), p, policy, RunOptions{true});
        r.rows[i]     = SampleReport{s.id, res.report};
    });

    double ssim_sum = 0.0, hf_sum = 0.0, speed_sum = 0.0;
    r.min_ssim = std::numeric_limits<double>::infinity();
    for (const Strategy& s : p.ordered_ladder(cfg)) r.histogram.emplace_back(s.id(), 0);
    for (const SampleReport& row : r.rows) {
        ssim_sum += *row.run.ssim;
        hf_sum += *row.run.ssim_hf;
        speed_sum += row.run.speedup;
        r.min_ssim = std::min(r.min_ssim, *row.run.ssim);
        for (auto& [id, count] : r.histogram) {
            if (id == row.run.strategy.id()) ++count;
        }
    }
    const double n = static_cast<double>(r.rows.size());
    r.mean_ssim    = ssim_sum / n;
    r.mean_ssim_hf = hf_sum / n;
    r.mean_speedup = speed_sum / n;
    return r;
}

void write_evaluation_csv(const EvaluationReport& r, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "sample_id,strategy,hf_diff,hf_ratio,ssim,ssim_hf,cost,speedup\n";
    for (const SampleReport& row : r.rows) {
        const RunReport& rr = row.run;
        out << row.sample_id << ',' << rr.strategy.id() << ',' << format_double(rr.features.hf_diff) << ','
            << format_double(rr.features.hf_ratio) << ',' << format_double(rr.ssim.value_or(0.0)) << ','
            << format_double(rr.ssim_hf.value_or(0.0)) << ',' << format_double(rr.cost) << ','
            << format_double(rr.speedup) << '\n';
    }
}

std::string evaluation_summary_json(const EvaluationReport& r) {
    json hist = json::array();
    for (const auto& [id, count] : r.histogram) hist.push_back({{"strategy", id}, {"count", count}});
    json j = {{"samples", r.rows.size()},
              {"mean_ssim", r.mean_ssim},
              {"min_ssim", r.min_ssim},
              {"mean_ssim_hf", r.mean_ssim_hf},
              {"mean_speedup", r.mean_speedup},
              {"histogram", hist}};
    return j.dump(2) + "\n";
}

GeneralizationReport generalization_check(const std::vector<CorpusSample>& train,
                                          const std::vector<CorpusSample>& held_out, const TraceConfig& cfg,
                                          const PipelineConfig& p, double tau, ModelKind kind,
                                          const TrainingConfig& tcfg, int jobs) {
    if (train.empty() || held_out.empty()) throw ConfigError("generalization_check: empty corpus");
    GeneralizationReport rep;
    rep.tau = tau;

    std::set<std::string> train_recipes;
    for (const CorpusSample& s : train) {
        if (const auto* r = std::get_if<TargetRecipe>(&s.spec)) train_recipes.insert(json(*r).dump());
    }
    for (const CorpusSample& s : held_out) {
        if (const auto* r = std::get_if<TargetRecipe>(&s.spec); r && train_recipes.count(json(*r).dump())) {
            rep.overlapping_recipes = true;
        }
    }
    if (rep.overlapping_recipes) {
        std::fprintf(stderr, "warning: generalization_check: train and held-out corpora share recipes\n");
    }

    const std::vector<std::string> classes = strategy_ids(p.ordered_ladder(cfg));
    const std::vector<LabeledSample> train_labels = build_dataset(train, cfg, p, tau, jobs);
    const TrainedModel model = train_model(kind, to_dataset(train_labels, classes), tcfg);

    const std::vector<SampleSimulation> sims = simulate_corpus(held_out, cfg, p, jobs);
    double model_sum = 0.0, oracle_sum = 0.0;
    int agree = 0;
    for (const SampleSimulation& sim : sims) {
        const size_t oracle = select_label(sim.ssim, tau);
        const std::string choice = predict(model, sim.features);
        const auto it = std::find(classes.begin(), classes.end(), choice);
        const size_t chosen = static_cast<size_t>(it - classes.begin());
        model_sum += sim.ssim[chosen];
        oracle_sum += sim.ssim[oracle];
        if (chosen == oracle) ++agree;
    }
    const double n       = static_cast<double>(sims.size());
    rep.mean_ssim        = model_sum / n;
    rep.oracle_mean_ssim = oracle_sum / n;
    rep.ssim_gap         = rep.oracle_mean_ssim - rep.mean_ssim;
    rep.agreement        = agree / n;
    return rep;
}

}  // namespace skipvar
