#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "skipvar/imagecore.hpp"

namespace skipvar {

// Configuration of the deterministic coarse-to-fine toy generator.
struct TraceConfig {
    int steps = 12;
    std::vector<int> schedule;         // r_1..r_K, strictly increasing
    double guidance = 2.0;             // I = U + g (C - U)
    double alpha    = 0.15;            // unconditional gap amplitude
    double gamma    = 0.6;             // per-step gap decay
    uint64_t seed   = 0;               // noise seed for the unconditional perturbation
    std::vector<double> cost_weights;  // per-branch cost of each step, sums to 1

    static TraceConfig defaults();
    void validate() const;
    int final_resolution() const { return schedule.back(); }
};

std::vector<int> default_schedule();

// Weights proportional to r_k^2 within the early and late groups; the late
// group (last late_steps steps) is rescaled to sum to late_share exactly.
std::vector<double> calibrated_cost_weights(const std::vector<int>& schedule, int late_steps = 3,
                                            double late_share = 0.69);

// Procedural target: Gaussian blobs, oriented sinusoid texture, multi-octave
// detail and grain.
struct TargetRecipe {
    std::string family = "mixed";
    double base        = 0.5;
    int blob_count     = 4;
    double blob_amplitude = 0.3;
    double blob_sigma_min = 0.08;  // fraction of image size
    double blob_sigma_max = 0.2;
    double texture_frequency = 0.0;  // cycles per image width
    double texture_amplitude = 0.0;
    double texture_angle     = 0.0;  // radians
    double noise_amplitude   = 0.0;  // std of the grain field
    double noise_scale       = 0.0;  // grain correlation length in pixels (Gaussian sigma); 0 = white
    double detail_amplitude  = 0.0;  // std of a multi-octave field (sigma 2, 4, 8, 16 px)
    uint64_t seed            = 0;

    void validate() const;
    friend bool operator==(const TargetRecipe&, const TargetRecipe&) = default;
};

using TargetSpec = std::variant<std::filesystem::path, TargetRecipe>;

Image synth_target(const TargetSpec& spec, int size);

struct StepTrace {
    TraceConfig config;
    Image target;
    std::vector<Image> cond;      // C_k
    std::vector<Image> uncond;    // U_k (equal to C_k on replaced steps)
    std::vector<Image> combined;  // I_k, clamped
    std::vector<double> branch_cost;  // w_k
    std::vector<bool> uncond_replaced;

    int steps_run() const { return static_cast<int>(combined.size()); }
};

// Incremental generator; step k depends only on the target and config.
class ToyGenerator {
public:
    ToyGenerator(Image target, TraceConfig cfg);

    // Runs the next step. With replace_uncond the unconditional branch is not
    // evaluated and C_k stands in for it.
    void run_step(bool replace_uncond = false);

    int next_step() const { return static_cast<int>(trace_.combined.size()) + 1; }
    // Sum of branch passes executed so far.
    double cost() const { return cost_; }
    const StepTrace& trace() const { return trace_; }
    StepTrace release() { return std::move(trace_); }

private:
    StepTrace trace_;
    double cost_ = 0.0;
};

// Unit-variance Gaussian noise smoothed by a 3x3 box (replicate padding).
std::vector<double> smoothed_noise(int size, uint64_t seed, int step);

StepTrace generate_trace(const Image& target, const TraceConfig& cfg);

// l1_mean(C_k, U_k); k is 1-based.
double branch_gap(const StepTrace& trace, int k);

// I_s upsampled to the final resolution; I_K itself when s = K.
Image decode_final(const StepTrace& trace, int stop_step);

// Writes manifest.json plus cond_k/uncond_k/comb_k rawf32 files.
void write_trace(const StepTrace& trace, const std::filesystem::path& dir);
StepTrace read_trace(const std::filesystem::path& dir);

}  // namespace skipvar
