#include "skipvar/frequency.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "skipvar/errors.hpp"

namespace skipvar {

namespace {

using cd = std::complex<double>;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 Cooley-Tukey, forward direction.
void fft_radix2(std::vector<cd>& a) {
    const size_t n = a.size();
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        const size_t half = len / 2;
        std::vector<cd> tw(half);
        for (size_t k = 0; k < half; ++k) tw[k] = std::polar(1.0, ang * static_cast<double>(k));
        for (size_t i = 0; i < n; i += len) {
            for (size_t k = 0; k < half; ++k) {
                const cd u = a[i + k];
                const cd v = a[i + k + half] * tw[k];
                a[i + k]        = u + v;
                a[i + k + half] = u - v;
            }
        }
    }
}

void dft_direct(std::vector<cd>& a) {
    const size_t n = a.size();
    std::vector<cd> tw(n);
    for (size_t k = 0; k < n; ++k) tw[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / n);
    std::vector<cd> out(n);
    for (size_t k = 0; k < n; ++k) {
        cd acc = 0.0;
        for (size_t t = 0; t < n; ++t) acc += a[t] * tw[(k * t) % n];
        out[k] = acc;
    }
    a.swap(out);
}

void transform_1d(std::vector<cd>& a, DftMethod method) {
    if (method == DftMethod::automatic && is_power_of_two(static_cast<int>(a.size()))) {
        fft_radix2(a);
    } else {
        dft_direct(a);
    }
}

}  // namespace

void HFParams::validate() const {
    if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("rho must lie in (0,1), got " + std::to_string(rho));
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
}

std::vector<double> sobel_magnitude_exact(const Image& img) {
    if (img.width < 3 || img.height < 3) {
        throw ConfigError("sobel_magnitude: image must be at least 3x3, got " + std::to_string(img.width) + "x" +
                          std::to_string(img.height));
    }
    const int w = img.width;
    const int h = img.height;
    auto px = [&](int x, int y) -> double {
        return img.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1));
    };
    std::vector<double> out(static_cast<size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double gx = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1)) -
                              (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
            const double gy = (px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1)) -
                              (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1));
            out[static_cast<size_t>(y) * w + x] = std::sqrt(gx * gx + gy * gy);
        }
    }
    return out;
}

Image sobel_magnitude(const Image& img) {
    const std::vector<double> mag = sobel_magnitude_exact(img);
    Image out(img.width, img.height);
    std::transform(mag.begin(), mag.end(), out.data.begin(), [](double v) { return static_cast<float>(v); });
    return out;
}

double hf_diff(const Image& current, const Image& previous, int analysis_size) {
    if (analysis_size < 3) throw ConfigError("hf_diff: analysis_size must be >= 3");
    const Image a = resize_area(current, analysis_size, analysis_size);
    const Image b = resize_area(previous, analysis_size, analysis_size);
    const std::vector<double> sa = sobel_magnitude_exact(a);
    const std::vector<double> sb = sobel_magnitude_exact(b);
    double acc = 0.0;
    for (size_t i = 0; i < sa.size(); ++i) acc += std::abs(sa[i] - sb[i]);
    return acc / static_cast<double>(sa.size());
}

Spectrum dft2(const Image& img, bool shifted, DftMethod method) {
    Spectrum s;
    s.width  = img.width;
    s.height = img.height;
    s.coeffs.resize(img.size());
    std::transform(img.data.begin(), img.data.end(), s.coeffs.begin(), [](float v) { return cd(v, 0.0); });

    std::vector<cd> line(img.width);
    for (int y = 0; y < img.height; ++y) {
        auto row = s.coeffs.begin() + static_cast<std::ptrdiff_t>(y) * img.width;
        std::copy(row, row + img.width, line.begin());
        transform_1d(line, method);
        std::copy(line.begin(), line.end(), row);
    }
    line.resize(img.height);
    for (int x = 0; x < img.width; ++x) {
        for (int y = 0; y < img.height; ++y) line[y] = s.coeffs[static_cast<size_t>(y) * img.width + x];
        transform_1d(line, method);
        for (int y = 0; y < img.height; ++y) s.coeffs[static_cast<size_t>(y) * img.width + x] = line[y];
    }
    return shifted ? fft_shift(std::move(s)) : s;
}

Spectrum fft_shift(Spectrum s) {
    if (s.shifted) return s;
    std::vector<cd> out(s.coeffs.size());
    const int cx = s.width / 2;
    const int cy = s.height / 2;
    for (int v = 0; v < s.height; ++v) {
        for (int u = 0; u < s.width; ++u) {
            const int du = (u + cx) % s.width;
            const int dv = (v + cy) % s.height;
            out[static_cast<size_t>(dv) * s.width + du] = s.coeffs[static_cast<size_t>(v) * s.width + u];
        }
    }
    s.coeffs  = std::move(out);
    s.shifted = true;
    return s;
}

double hf_ratio(const Image& img, const HFParams& p) {
    p.validate();
    const Spectrum s = dft2(img, true);
    const double cx     = s.width / 2;
    const double cy     = s.height / 2;
    const double radius = std::min(s.width, s.height) / 2.0;
    double high  = 0.0;
    double total = 0.0;
    for (int v = 0; v < s.height; ++v) {
        for (int u = 0; u < s.width; ++u) {
            const double mag  = std::abs(s.at(u, v));
            const double dist = std::hypot(u - cx, v - cy) / radius;
            total += mag;
            if (dist > p.rho) high += mag;
        }
    }
    return high / (total + p.epsilon);
}

}  // namespace skipvar
