#include "skipvar/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "skipvar/errors.hpp"
#include "skipvar/frequency.hpp"

namespace skipvar {

namespace {

void require_same_shape(const Image& a, const Image& b, const char* who) {
    if (!a.same_shape(b)) {
        throw ConfigError(std::string(who) + ": dimension mismatch " + std::to_string(a.width) + "x" +
                          std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                          std::to_string(b.height));
    }
}

// Source index of every tap position for a reflected axis of length n.
std::vector<int> reflect_table(int n, int r) {
    std::vector<int> idx(static_cast<size_t>(n) + 2 * r);
    for (int i = -r; i < n + r; ++i) idx[i + r] = reflect_index(i, n);
    return idx;
}

// Separable Gaussian filter of a double field with reflect padding.
std::vector<double> blur(const std::vector<double>& src, int w, int h, const std::vector<double>& taps) {
    const int r = static_cast<int>(taps.size()) / 2;
    const std::vector<int> xi = reflect_table(w, r);
    const std::vector<int> yi = reflect_table(h, r);
    std::vector<double> tmp(src.size());
    for (int y = 0; y < h; ++y) {
        const double* row = src.data() + static_cast<size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = 0; t <= 2 * r; ++t) acc += taps[t] * row[xi[x + t]];
            tmp[static_cast<size_t>(y) * w + x] = acc;
        }
    }
    std::vector<double> out(src.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        double* dst = out.data() + static_cast<size_t>(y) * w;
        for (int t = 0; t <= 2 * r; ++t) {
            const double* row = tmp.data() + static_cast<size_t>(yi[y + t]) * w;
            for (int x = 0; x < w; ++x) dst[x] += taps[t] * row[x];
        }
    }
    return out;
}

}  // namespace

void SsimParams::validate() const {
    if (window < 3 || window % 2 == 0) throw ConfigError("ssim window must be odd and >= 3");
    if (!(sigma > 0.0)) throw ConfigError("ssim sigma must be positive");
    if (!(k1 > 0.0) || !(k2 > 0.0)) throw ConfigError("ssim k1/k2 must be positive");
    if (!(dynamic_range > 0.0)) throw ConfigError("ssim dynamic range must be positive");
}

void HfMaskParams::validate() const {
    if (!(quantile > 0.0 && quantile < 1.0)) throw ConfigError("hf mask quantile must lie in (0,1)");
}

std::vector<double> gaussian_window(const SsimParams& p) {
    const int r = p.window / 2;
    std::vector<double> taps(p.window);
    for (int i = -r; i <= r; ++i) taps[i + r] = std::exp(-(i * i) / (2.0 * p.sigma * p.sigma));
    const double sum = std::accumulate(taps.begin(), taps.end(), 0.0);
    for (double& t : taps) t /= sum;
    return taps;
}

int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

std::vector<double> ssim_map(const Image& a, const Image& b, const SsimParams& p) {
    p.validate();
    require_same_shape(a, b, "ssim_map");
    if (a.width < p.window || a.height < p.window) {
        throw ConfigError("ssim_map: image smaller than the SSIM window");
    }
    const int w = a.width;
    const int h = a.height;
    const size_t n = a.size();
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (size_t i = 0; i < n; ++i) {
        x[i]  = a.data[i];
        y[i]  = b.data[i];
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const std::vector<double> taps = gaussian_window(p);
    const std::vector<double> mx  = blur(x, w, h, taps);
    const std::vector<double> my  = blur(y, w, h, taps);
    const std::vector<double> mxx = blur(xx, w, h, taps);
    const std::vector<double> myy = blur(yy, w, h, taps);
    const std::vector<double> mxy = blur(xy, w, h, taps);

    const double c1 = p.c1();
    const double c2 = p.c2();
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) {
        const double vx  = mxx[i] - mx[i] * mx[i];
        const double vy  = myy[i] - my[i] * my[i];
        const double cov = mxy[i] - mx[i] * my[i];
        const double num = (2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2);
        const double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2);
        out[i] = num / den;
    }
    return out;
}

double ssim(const Image& a, const Image& b, const SsimParams& p) {
    const std::vector<double> map = ssim_map(a, b, p);
    return std::accumulate(map.begin(), map.end(), 0.0) / static_cast<double>(map.size());
}

double quantile_value(std::vector<double> values, double q) {
    if (values.empty()) throw ConfigError("quantile of empty set");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const size_t lo  = static_cast<size_t>(std::floor(pos));
    const size_t hi  = std::min(lo + 1, values.size() - 1);
    const double t   = pos - static_cast<double>(lo);
    return values[lo] + t * (values[hi] - values[lo]);
}

std::vector<bool> high_frequency_mask(const Image& reference, const HfMaskParams& m) {
    m.validate();
    const std::vector<double> mag = sobel_magnitude_exact(reference);
    const double cut = quantile_value(mag, m.quantile);
    std::vector<bool> mask(mag.size());
    for (size_t i = 0; i < mag.size(); ++i) mask[i] = mag[i] >= cut && mag[i] > 0.0;
    return mask;
}

double ssim_hf(const Image& reference, const Image& test, const SsimParams& p, const HfMaskParams& m) {
    require_same_shape(reference, test, "ssim_hf");
    const std::vector<double> map = ssim_map(reference, test, p);
    const std::vector<bool> mask  = high_frequency_mask(reference, m);
    double acc   = 0.0;
    size_t count = 0;
    for (size_t i = 0; i < map.size(); ++i) {
        if (mask[i]) {
            acc += map[i];
            ++count;
        }
    }
    if (count == 0) return std::accumulate(map.begin(), map.end(), 0.0) / static_cast<double>(map.size());
    return acc / static_cast<double>(count);
}

double l1_mean(const Image& a, const Image& b) {
    require_same_shape(a, b, "l1_mean");
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += std::abs(static_cast<double>(a.data[i]) - b.data[i]);
    return acc / static_cast<double>(a.size());
}

}  // namespace skipvar
