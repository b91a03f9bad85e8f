#include <doctest.h>

#include <filesystem>

#include "oracles.hpp"
#include "skipvar/corpus.hpp"
#include "skipvar/errors.hpp"
#include "skipvar/frequency.hpp"
#include "skipvar/metrics.hpp"
#include "skipvar/toygen.hpp"

using namespace skipvar;

namespace {

TraceConfig small_config(uint64_t seed = 1) {
    TraceConfig c;
    c.schedule     = {4, 8, 12, 16, 24, 32};
    c.steps        = 6;
    c.cost_weights = calibrated_cost_weights(c.schedule);
    c.seed         = seed;
    return c;
}

// Low-contrast smooth blobs; stronger blobs leak into high bins through the
// wrap-around discontinuity at the borders.
TargetRecipe blob_only(uint64_t seed) {
    TargetRecipe r;
    r.family         = "blob";
    r.blob_amplitude = 0.05;
    r.seed           = seed;
    return r;
}

}  // namespace

TEST_CASE("default config and calibrated weights") {
    const TraceConfig c = TraceConfig::defaults();
    CHECK(c.steps == 12);
    CHECK(c.schedule == std::vector<int>{8, 16, 24, 32, 48, 64, 96, 128, 160, 192, 224, 256});
    double total = 0.0;
    for (double w : c.cost_weights) total += w;
    CHECK(std::abs(total - 1.0) <= 1e-9);
    CHECK(std::abs(c.cost_weights[9] + c.cost_weights[10] + c.cost_weights[11] - 0.69) <= 1e-9);
    // proportional to r^2 within each group
    CHECK(c.cost_weights[1] / c.cost_weights[0] == doctest::Approx(4.0));
    CHECK(c.cost_weights[11] / c.cost_weights[10] == doctest::Approx(256.0 * 256.0 / (224.0 * 224.0)));
}

TEST_CASE("trace config validation") {
    TraceConfig c = small_config();
    c.gamma = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config();
    c.schedule[2] = c.schedule[1];
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config();
    c.cost_weights[0] += 0.1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(generate_trace(Image(31, 31), small_config()), ConfigError);
}

TEST_CASE("synth_target examples") {
    const Image smooth = synth_target(blob_only(7), 256);
    CHECK(hf_ratio(smooth) < 0.1);

    TargetRecipe fine;
    fine.family            = "sinusoid";
    fine.blob_count        = 0;
    fine.blob_amplitude    = 0.0;
    fine.texture_frequency = 64;  // above rho * Nyquist = 32 cycles
    fine.texture_amplitude = 0.3;
    fine.noise_amplitude   = 0.05;
    fine.seed              = 7;
    const Image busy   = synth_target(fine, 256);
    const double ratio = hf_ratio(busy);
    CHECK(ratio > 0.5);
    CHECK(std::abs(ratio - oracle::hf_ratio_from(oracle::dft_separable(busy), 256, 256, 0.25)) <= 1e-6);

    CHECK(synth_target(fine, 256) == busy);
    for (float v : busy.data) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("recipe validation") {
    TargetRecipe r = blob_only(1);
    r.blob_amplitude = 0.6;
    CHECK_THROWS_AS(synth_target(r, 32), ConfigError);
    r = blob_only(1);
    r.noise_scale = 9;
    CHECK_THROWS_AS(synth_target(r, 32), ConfigError);
    CHECK_THROWS_AS(synth_target(TargetSpec{std::filesystem::path("/nonexistent.pgm")}, 32), DataError);
}

TEST_CASE("generate_trace follows the branch and guidance rules") {
    const TraceConfig cfg = small_config();
    const Image target    = synth_target(blob_only(3), 32);
    const StepTrace t     = generate_trace(target, cfg);
    REQUIRE(t.steps_run() == 6);
    for (int k = 1; k <= 6; ++k) {
        const int r = cfg.schedule[k - 1];
        CHECK(t.cond[k - 1] == resize_area(target, r, r));
        CHECK(t.combined[k - 1].width == r);
        const auto noise = smoothed_noise(r, cfg.seed, k);
        const double amp = cfg.alpha * std::pow(cfg.gamma, k - 1);
        for (size_t i = 0; i < noise.size(); ++i) {
            const double c = t.cond[k - 1].data[i];
            const double u = c + amp * noise[i];
            CHECK(t.uncond[k - 1].data[i] == doctest::Approx(u).epsilon(1e-6));
            const double comb = std::clamp(u + cfg.guidance * (c - u), 0.0, 1.0);
            CHECK(t.combined[k - 1].data[i] == doctest::Approx(comb).epsilon(1e-6));
        }
        CHECK(t.branch_cost[k - 1] == cfg.cost_weights[k - 1]);
    }
    CHECK(generate_trace(target, cfg).combined == t.combined);
}

TEST_CASE("alpha zero and unit guidance degenerate to the conditional branch") {
    const Image target = synth_target(blob_only(4), 32);
    TraceConfig cfg    = small_config();
    cfg.alpha          = 0.0;
    const StepTrace t  = generate_trace(target, cfg);
    for (int k = 1; k <= cfg.steps; ++k) {
        CHECK(branch_gap(t, k) == 0.0);
        CHECK(t.uncond[k - 1] == t.cond[k - 1]);
        CHECK(t.combined[k - 1] == clamp_unit(t.cond[k - 1]));
    }
    cfg          = small_config();
    cfg.guidance = 1.0;
    const StepTrace g1 = generate_trace(target, cfg);
    for (int k = 1; k <= cfg.steps; ++k) CHECK(g1.combined[k - 1] == clamp_unit(g1.cond[k - 1]));
}

TEST_CASE("branch gap decays geometrically") {
    const TraceConfig base = TraceConfig::defaults();
    for (uint64_t seed = 0; seed < 20; ++seed) {
        TraceConfig cfg    = base;
        cfg.seed           = seed;
        const Image target = synth_target(blob_only(seed), 256);
        const StepTrace t  = generate_trace(target, cfg);
        for (int k = 1; k < cfg.steps; ++k) CHECK(branch_gap(t, k + 1) < branch_gap(t, k));
        for (int k = 3; k < cfg.steps; ++k) {
            const double ratio = branch_gap(t, k + 1) / branch_gap(t, k);
            CHECK(std::abs(ratio - cfg.gamma) <= 0.2 * cfg.gamma);
        }
        CHECK_THROWS_AS(branch_gap(t, 0), ConfigError);
        CHECK_THROWS_AS(branch_gap(t, 13), ConfigError);
        if (seed >= 3) break;  // the full 20-seed sweep runs in the acceptance suite
    }
}

TEST_CASE("decode_final") {
    const TraceConfig cfg = TraceConfig::defaults();
    const Image target    = synth_target(blob_only(9), 256);
    const StepTrace t     = generate_trace(target, cfg);
    CHECK(decode_final(t, 12) == t.combined.back());
    CHECK(decode_final(t, 8) == resize_bilinear(t.combined[7], 256, 256));
    CHECK(ssim(decode_final(t, 9), t.combined.back()) >= 0.95);
    CHECK_THROWS_AS(decode_final(t, 0), ConfigError);

    TargetRecipe wave;
    wave.family            = "sinusoid";
    wave.blob_count        = 0;
    wave.blob_amplitude    = 0.0;
    wave.texture_frequency = 60;
    wave.texture_amplitude = 0.3;
    wave.seed              = 9;
    const StepTrace w = generate_trace(synth_target(wave, 256), cfg);
    CHECK(ssim(decode_final(w, 9), w.combined.back()) < ssim(decode_final(t, 9), t.combined.back()));
}

TEST_CASE("decode fidelity improves with the stop step") {
    const TraceConfig cfg = TraceConfig::defaults();
    for (const CorpusSample& s : default_corpus(6)) {
        const StepTrace t = generate_trace(synth_target(s.spec, 256), cfg);
        double prev_ssim = -1.0;
        double prev_l1   = 1e9;
        for (int k = 1; k <= cfg.steps; ++k) {
            const Image d   = decode_final(t, k);
            const double s_ = ssim(d, t.combined.back());
            const double l1 = l1_mean(d, t.combined.back());
            CHECK(s_ >= prev_ssim - 1e-4);
            CHECK(l1 <= prev_l1);
            prev_ssim = s_;
            prev_l1   = l1;
        }
    }
}

TEST_CASE("incremental generator matches generate_trace") {
    const TraceConfig cfg = small_config(5);
    const Image target    = synth_target(blob_only(5), 32);
    ToyGenerator gen(target, cfg);
    for (int k = 1; k <= cfg.steps; ++k) gen.run_step();
    CHECK(gen.trace().combined == generate_trace(target, cfg).combined);
    double baseline = 0.0;
    for (double w : cfg.cost_weights) baseline += 2 * w;
    CHECK(gen.cost() == doctest::Approx(baseline).epsilon(1e-12));
    CHECK_THROWS(gen.run_step());
}

TEST_CASE("trace directory round trip") {
    const TraceConfig cfg = small_config(2);
    const StepTrace t     = generate_trace(synth_target(blob_only(2), 32), cfg);
    const auto dir        = std::filesystem::temp_directory_path() / "skipvar_trace_rt";
    std::filesystem::remove_all(dir);
    write_trace(t, dir);
    CHECK(std::filesystem::exists(dir / "manifest.json"));
    CHECK(std::filesystem::exists(dir / "cond_1.f32"));
    const StepTrace back = read_trace(dir);
    CHECK(back.cond == t.cond);
    CHECK(back.uncond == t.uncond);
    CHECK(back.combined == t.combined);
    CHECK(back.config.cost_weights == t.config.cost_weights);
    std::filesystem::remove_all(dir);
}
