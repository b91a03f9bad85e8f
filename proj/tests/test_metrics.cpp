#include <doctest.h>

#include "oracles.hpp"
#include "skipvar/errors.hpp"
#include "skipvar/frequency.hpp"
#include "skipvar/metrics.hpp"

using namespace skipvar;

TEST_CASE("ssim of identical images is exactly one") {
    const Image a = oracle::random_image(24, 24, 1);
    for (double v : ssim_map(a, a)) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ssim_hf(a, a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim of two constants follows the luminance term") {
    const double c1   = 1e-4;
    const double want = (2 * 0.5 * 0.6 + c1) / (0.25 + 0.36 + c1);
    const Image a(16, 16, 0.5f), b(16, 16, 0.6f);
    // float storage of 0.6 moves the value by about 1e-8
    for (double v : ssim_map(a, b)) CHECK(v == doctest::Approx(want).epsilon(1e-7));
    CHECK(ssim(a, b) == doctest::Approx(0.98361).epsilon(1e-5));
}

TEST_CASE("ssim_map matches the sliding-window oracle") {
    for (uint64_t seed = 0; seed < 3; ++seed) {
        const Image a  = oracle::random_image(32, 32, seed);
        const Image b  = oracle::random_image(32, 32, seed + 100);
        const auto got = ssim_map(a, b);
        const auto want = oracle::ssim_map(a, b);
        for (size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-6);
    }
}

TEST_CASE("ssim is symmetric and bounded") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
        const Image a = oracle::random_image(20, 20, seed);
        const Image b = oracle::random_image(20, 20, seed + 50, 0.0f, 0.3f);
        const double ab = ssim(a, b);
        CHECK(std::abs(ab - ssim(b, a)) <= 1e-9);
        CHECK(ab >= -1.0);
        CHECK(ab <= 1.0);
    }
}

TEST_CASE("ssim_hf on a flat reference falls back to ssim") {
    const Image flat(20, 20, 0.4f);
    const Image other = oracle::random_image(20, 20, 9);
    CHECK(ssim_hf(flat, other) == ssim(flat, other));
}

TEST_CASE("ssim_hf penalizes blurred edges and matches the masked-mean oracle") {
    Image edge(48, 48), blurred(48, 48);
    for (int y = 0; y < 48; ++y) {
        for (int x = 0; x < 48; ++x) {
            edge.at(x, y)    = x < 24 ? 0.2f : 0.8f;
            blurred.at(x, y) = static_cast<float>(0.5 + 0.3 * std::tanh((x - 23.5) / 2.0));
        }
    }
    const double hf = ssim_hf(edge, blurred);
    CHECK(hf < ssim(edge, blurred));
    CHECK(std::abs(hf - oracle::ssim_hf(edge, blurred)) <= 1e-6);
}

TEST_CASE("quantile mask size is bounded by the tie width") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
        Image img = oracle::random_image(20, 20, seed);
        for (float& v : img.data) v = std::round(v * 4) / 4;  // lots of ties
        const auto mask = high_frequency_mask(img);
        const auto mag  = sobel_magnitude_exact(img);
        const double cut = quantile_value(mag, 0.75);
        int selected = 0, ties = 0;
        for (size_t i = 0; i < mask.size(); ++i) {
            selected += mask[i];
            ties += std::abs(mag[i] - cut) <= 1e-12;
        }
        const double expect = 0.25 * mag.size();
        CHECK(selected >= expect - ties - 1);
        CHECK(selected <= expect + ties + 1);
    }
}

TEST_CASE("l1_mean") {
    const Image a = oracle::random_image(11, 7, 1), b = oracle::random_image(11, 7, 2);
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += std::abs(static_cast<double>(a.data[i]) - b.data[i]);
    CHECK(l1_mean(a, b) == acc / a.size());
    CHECK(l1_mean(a, a) == 0.0);
    CHECK(l1_mean(Image(3, 3, 0.0f), Image(3, 3, 1.0f)) == 1.0);
}

TEST_CASE("metric errors") {
    CHECK_THROWS_AS(ssim(Image(20, 20), Image(20, 21)), ConfigError);
    CHECK_THROWS_AS(ssim(Image(8, 8), Image(8, 8)), ConfigError);
    CHECK_THROWS_AS(l1_mean(Image(2, 2), Image(3, 2)), ConfigError);
    SsimParams even;
    even.window = 10;
    CHECK_THROWS_AS(ssim(Image(20, 20), Image(20, 20), even), ConfigError);
}
