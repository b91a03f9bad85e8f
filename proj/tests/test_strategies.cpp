#include <doctest.h>

#include "skipvar/corpus.hpp"
#include "skipvar/errors.hpp"
#include "skipvar/metrics.hpp"
#include "skipvar/pipeline.hpp"
#include "skipvar/strategies.hpp"

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

Image small_target(uint64_t seed) {
    TargetRecipe r;
    r.blob_count        = 3;
    r.texture_frequency = 5;
    r.texture_amplitude = 0.1;
    r.noise_amplitude   = 0.03;
    r.seed              = seed;
    return synth_target(r, 32);
}

}  // namespace

TEST_CASE("strategy identifiers round trip") {
    for (const char* id : {"none", "skip_3", "uncond_2", "hybrid_2_2"}) CHECK(Strategy::parse(id).id() == id);
    CHECK(Strategy::parse("hybrid_2_1") == Strategy::hybrid(2, 1));
    for (const char* bad : {"", "skip", "skip_x", "skip_0", "uncond_-1", "hybrid_2", "fast"}) {
        CHECK_THROWS_AS(Strategy::parse(bad), ConfigError);
    }
    CHECK_THROWS_AS(Strategy::skip(12).validate(12), ConfigError);
    CHECK_THROWS_AS(Strategy::hybrid(6, 6).validate(12), ConfigError);
    CHECK_NOTHROW(Strategy::hybrid(2, 2).validate(12));
}

TEST_CASE("speedup arithmetic under calibrated weights") {
    const CostModel cm = CostModel::from_trace_config(TraceConfig::defaults());
    CHECK(speedup(cm, Strategy::skip(3)) == doctest::Approx(1.0 / (0.31 + 0.005)).epsilon(1e-9));
    CHECK(speedup(cm, Strategy::none()) == 1.0 / 1.005);
    const double w11 = cm.weights[10], w12 = cm.weights[11];
    CHECK(speedup(cm, Strategy::uncond_replace(2)) ==
          doctest::Approx(1.0 / (1.0 - (w11 + w12) / 2 + 0.005)).epsilon(1e-12));
    CostModel free = cm;
    free.overhead  = 0.0;
    CHECK(speedup(free, Strategy::none()) == 1.0);
}

TEST_CASE("hybrid cost is additive") {
    const CostModel cm = CostModel::from_trace_config(TraceConfig::defaults(), 0.0);
    const double base  = cm.baseline();
    CHECK(base == doctest::Approx(2.0));
    for (auto [s, u] : {std::pair{1, 1}, {2, 2}, {1, 3}, {3, 1}}) {
        double skipped = 0.0, replaced = 0.0;
        for (int k = 12 - s + 1; k <= 12; ++k) skipped += 2 * cm.weights[k - 1];
        for (int k = 12 - s - u + 1; k <= 12 - s; ++k) replaced += 2 * cm.weights[k - 1];
        CHECK(strategy_cost(cm, Strategy::hybrid(s, u)) == doctest::Approx(base - skipped - replaced / 2).epsilon(1e-12));
    }
}

TEST_CASE("ladder ordering") {
    const CostModel cm = CostModel::from_trace_config(TraceConfig::defaults());
    const auto order   = ladder_order(cm, default_ladder());
    CHECK(order.front() == Strategy::skip(3));
    CHECK(order.back() == Strategy::none());
    for (size_t i = 0; i + 2 < order.size(); ++i) CHECK(speedup(cm, order[i]) >= speedup(cm, order[i + 1]));
    CHECK(ladder_order(cm, {Strategy::none()}) == std::vector<Strategy>{Strategy::none()});

    // equal-cost tie: uniform weights make skip_1 and uncond_2 cost the same
    CostModel flat{std::vector<double>(4, 0.25), 0.0};
    const auto tied = ladder_order(flat, {Strategy::none(), Strategy::uncond_replace(2), Strategy::skip(1)});
    CHECK(tied[0] == Strategy::skip(1));
    CHECK(tied[1] == Strategy::uncond_replace(2));
}

TEST_CASE("apply_strategy semantics") {
    const TraceConfig cfg = small_config();
    const Image target    = small_target(1);
    const StepTrace full  = generate_trace(target, cfg);

    const StrategyOutcome none = apply_strategy(target, cfg, Strategy::none());
    CHECK(none.output == full.combined.back());
    CHECK(none.cost == doctest::Approx(2.0).epsilon(1e-12));

    const StrategyOutcome skip2 = apply_strategy(target, cfg, Strategy::skip(2));
    CHECK(skip2.output == decode_final(full, 4));
    double cost = 0.0;
    for (int k = 0; k < 4; ++k) cost += 2 * cfg.cost_weights[k];
    CHECK(skip2.cost == doctest::Approx(cost).epsilon(1e-12));

    const StrategyOutcome u2 = apply_strategy(target, cfg, Strategy::uncond_replace(2));
    CHECK(u2.output == clamp_unit(full.cond.back()));

    TraceConfig quiet = cfg;
    quiet.alpha       = 0.0;
    const StrategyOutcome q_none = apply_strategy(target, quiet, Strategy::none());
    const StrategyOutcome q_rep  = apply_strategy(target, quiet, Strategy::uncond_replace(cfg.steps - 1));
    CHECK(q_rep.output == q_none.output);
    double expected = 2 * cfg.cost_weights[0];
    for (int k = 1; k < cfg.steps; ++k) expected += cfg.cost_weights[k];
    CHECK(q_rep.cost == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("outcome_from_trace reproduces apply_strategy") {
    const TraceConfig cfg = small_config(3);
    for (uint64_t seed = 0; seed < 4; ++seed) {
        const Image target   = small_target(seed);
        const StepTrace full = generate_trace(target, cfg);
        for (const Strategy& s : {Strategy::none(), Strategy::skip(1), Strategy::skip(3), Strategy::uncond_replace(1),
                                  Strategy::uncond_replace(3), Strategy::hybrid(1, 2), Strategy::hybrid(2, 2)}) {
            const StrategyOutcome direct = apply_strategy(target, cfg, s);
            const StrategyOutcome cached = outcome_from_trace(full, s);
            CHECK(cached.output == direct.output);
            CHECK(cached.cost == direct.cost);
        }
    }
}

TEST_CASE("complete_with_strategy refuses to touch finished steps") {
    const TraceConfig cfg = small_config();
    ToyGenerator gen(small_target(2), cfg);
    for (int k = 0; k < 4; ++k) gen.run_step();
    CHECK_THROWS_AS(complete_with_strategy(gen, Strategy::uncond_replace(3)), ConfigError);
    const StrategyOutcome done = complete_with_strategy(gen, Strategy::skip(1));
    CHECK(done.output == apply_strategy(small_target(2), cfg, Strategy::skip(1)).output);
}

TEST_CASE("skip fidelity decreases with n and replacement dominates skipping") {
    const TraceConfig base = TraceConfig::defaults();
    const PipelineConfig p;
    int dominated = 0, total = 0;
    for (const CorpusSample& s : default_corpus(8)) {
        const TraceConfig cfg = sample_trace_config(base, s);
        const StepTrace t     = generate_trace(synth_target(s.spec, 256), cfg);
        const Image& ref      = t.combined.back();
        double prev = 2.0;
        for (int n = 1; n <= 3; ++n) {
            const double sk = ssim(ref, outcome_from_trace(t, Strategy::skip(n)).output, p.ssim);
            CHECK(sk <= prev + 1e-4);
            prev = sk;
            const double un = ssim(ref, outcome_from_trace(t, Strategy::uncond_replace(n)).output, p.ssim);
            dominated += un >= sk;
            ++total;
        }
    }
    CHECK(dominated >= 0.95 * total);
}
