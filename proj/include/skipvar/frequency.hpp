#pragma once

#include <complex>
#include <vector>

#include "skipvar/imagecore.hpp"

namespace skipvar {

struct Spectrum {
    int width  = 0;
    int height = 0;
    std::vector<std::complex<double>> coeffs;  // row-major
    bool shifted = false;                      // DC at (height/2, width/2) when set

    const std::complex<double>& at(int u, int v) const { return coeffs[static_cast<size_t>(v) * width + u]; }
};

struct HFParams {
    double rho     = 0.25;  // normalized radius of the low-frequency disc, unit = min(H,W)/2
    double epsilon = 1e-8;

    void validate() const;
};

enum class DftMethod {
    automatic,  // radix-2 FFT along power-of-two axes, direct DFT otherwise
    direct,
};

// 3x3 Sobel gradient magnitude with replicate padding. Not clamped.
Image sobel_magnitude(const Image& img);

// Same as sobel_magnitude, kept in double precision.
std::vector<double> sobel_magnitude_exact(const Image& img);

// Mean absolute difference of the Sobel maps after area-resizing both images
// to analysis_size x analysis_size. Symmetric in its arguments.
double hf_diff(const Image& current, const Image& previous, int analysis_size);

// Unnormalized forward 2D DFT.
Spectrum dft2(const Image& img, bool shifted, DftMethod method = DftMethod::automatic);

// Swaps quadrants so DC moves to (H/2, W/2); idempotent on the flag.
Spectrum fft_shift(Spectrum s);

// Fraction of spectral magnitude outside the normalized radius rho.
double hf_ratio(const Image& img, const HFParams& p = {});

}  // namespace skipvar
