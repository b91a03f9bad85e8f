#pragma once

#include <vector>

#include "skipvar/imagecore.hpp"

namespace skipvar {

struct SsimParams {
    int window         = 11;
    double sigma       = 1.5;
    double k1          = 0.01;
    double k2          = 0.03;
    double dynamic_range = 1.0;

    void validate() const;
    double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
    double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
};

struct HfMaskParams {
    double quantile = 0.75;

    void validate() const;
};

// Normalized 1D Gaussian taps of length p.window.
std::vector<double> gaussian_window(const SsimParams& p);

// Mirror index without repeating the edge sample (...c b | a b c d | c b...).
int reflect_index(int i, int n);

// Full-size SSIM map from Gaussian-weighted local statistics, reflect padding.
std::vector<double> ssim_map(const Image& a, const Image& b, const SsimParams& p = {});

double ssim(const Image& a, const Image& b, const SsimParams& p = {});

// Pixels of the reference whose Sobel magnitude is at or above the quantile
// value and strictly positive.
std::vector<bool> high_frequency_mask(const Image& reference, const HfMaskParams& m = {});

// Linear-interpolated quantile of the values (numpy "linear" rule).
double quantile_value(std::vector<double> values, double q);

// Mean SSIM over the high-frequency mask of `reference`. Falls back to plain
// SSIM when the mask is empty.
double ssim_hf(const Image& reference, const Image& test, const SsimParams& p = {}, const HfMaskParams& m = {});

double l1_mean(const Image& a, const Image& b);

}  // namespace skipvar
