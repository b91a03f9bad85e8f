#pragma once

#include <random>
#include <string>
#include <vector>

#include "skipvar/decision.hpp"

namespace fixtures {

// Two Gaussian clusters far enough apart to stay separable after
// standardization (margin well above 2).
inline skipvar::Dataset separable_set(uint64_t seed = 17, int per_class = 60) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 0.3);
    std::vector<skipvar::FeatureVector> x;
    std::vector<std::string> y;
    for (int i = 0; i < per_class; ++i) {
        x.push_back({0.02 + 0.004 * n(rng), 0.2 + 0.02 * n(rng)});
        y.push_back("skip_3");
        x.push_back({0.06 + 0.004 * n(rng), 0.6 + 0.02 * n(rng)});
        y.push_back("none");
    }
    return skipvar::Dataset::from_labels(x, y, {"skip_3", "none"});
}

inline skipvar::Dataset random_set(uint64_t seed, int count, int classes) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::string> names;
    for (int c = 0; c + 1 < classes; ++c) names.push_back("skip_" + std::to_string(classes - 1 - c));
    names.push_back("none");
    std::vector<skipvar::FeatureVector> x;
    std::vector<std::string> y;
    for (int i = 0; i < count; ++i) {
        // coarse grid values so duplicate thresholds and ties occur
        x.push_back({std::round(u(rng) * 10) / 10, std::round(u(rng) * 10) / 10});
        y.push_back(names[rng() % names.size()]);
    }
    return skipvar::Dataset::from_labels(x, y, names);
}

}  // namespace fixtures
