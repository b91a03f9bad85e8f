#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "skipvar/decision.hpp"
#include "skipvar/pipeline.hpp"

namespace skipvar {

// Every ladder strategy simulated against the full baseline for one target.
struct SampleSimulation {
    std::string sample_id;
    FeatureVector features;
    std::vector<Strategy> ladder;  // most aggressive first
    std::vector<double> ssim;      // vs the none output, aligned with ladder
};

SampleSimulation simulate_sample(const CorpusSample& sample, const TraceConfig& cfg, const PipelineConfig& p);

// First entry in ladder order whose SSIM reaches tau.
size_t select_label(const std::vector<double>& ssim_in_ladder_order, double tau);

struct LabeledSample {
    std::string sample_id;
    FeatureVector features;
    std::string label;
    std::vector<std::pair<std::string, double>> ssim_record;
};

LabeledSample assign_label(const SampleSimulation& sim, double tau);
LabeledSample label_sample(const CorpusSample& sample, const TraceConfig& cfg, const PipelineConfig& p, double tau);

std::vector<SampleSimulation> simulate_corpus(const std::vector<CorpusSample>& samples, const TraceConfig& cfg,
                                              const PipelineConfig& p, int jobs = 1);

// One labeled sample per corpus entry; warns on stderr when fewer than two
// distinct labels come out.
std::vector<LabeledSample> build_dataset(const std::vector<CorpusSample>& samples, const TraceConfig& cfg,
                                         const PipelineConfig& p, double tau, int jobs = 1);
std::vector<LabeledSample> label_simulations(const std::vector<SampleSimulation>& sims, double tau);

Dataset to_dataset(const std::vector<LabeledSample>& samples, const std::vector<std::string>& classes);

// Labels restricted to one strategy family (plus none), for the sequential
// two-model policy.
std::vector<LabeledSample> label_family(const std::vector<SampleSimulation>& sims, double tau, Strategy::Kind family);

struct SensitivitySplit {
    std::vector<std::string> sensitive;
    std::vector<std::string> robust;
};

// Sensitive when ssim(skip(3) output, none output) < tau_s.
SensitivitySplit sensitivity_split(const std::vector<CorpusSample>& samples, const TraceConfig& cfg,
                                   const PipelineConfig& p, double tau_s, int jobs = 1);

// CSV: sample_id,hf_diff,hf_ratio[,label]
void write_features_csv(const std::vector<LabeledSample>& samples, const std::filesystem::path& path,
                        bool with_label);
std::string features_csv(const std::vector<LabeledSample>& samples, bool with_label);
std::vector<LabeledSample> read_features_csv(const std::filesystem::path& path);
// Per-strategy SSIM table: sample_id,<strategy ids...>
void write_ssim_csv(const std::vector<LabeledSample>& samples, const std::filesystem::path& path);

// Rebuilds simulations from a per-strategy SSIM table and the matching
// feature rows (joined on sample_id; the SSIM header gives the ladder order).
std::vector<SampleSimulation> read_simulations(const std::vector<LabeledSample>& features,
                                               const std::filesystem::path& ssim_csv);

// Shortest round-trip representation of a double.
std::string format_double(double v);

}  // namespace skipvar
