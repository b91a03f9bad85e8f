#include "skipvar/toygen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>

#include "skipvar/errors.hpp"
#include "skipvar/json_io.hpp"
#include "skipvar/metrics.hpp"
#include "skipvar/random.hpp"

namespace skipvar {

using nlohmann::json;

std::vector<int> default_schedule() { return {8, 16, 24, 32, 48, 64, 96, 128, 160, 192, 224, 256}; }

std::vector<double> calibrated_cost_weights(const std::vector<int>& schedule, int late_steps, double late_share) {
    const int k = static_cast<int>(schedule.size());
    if (late_steps < 1 || late_steps >= k) throw ConfigError("late_steps must lie in [1, K-1]");
    if (!(late_share > 0.0 && late_share < 1.0)) throw ConfigError("late_share must lie in (0,1)");
    const int split = k - late_steps;
    double early_sum = 0.0;
    double late_sum  = 0.0;
    for (int i = 0; i < k; ++i) {
        const double area = static_cast<double>(schedule[i]) * schedule[i];
        (i < split ? early_sum : late_sum) += area;
    }
    std::vector<double> w(k);
    for (int i = 0; i < k; ++i) {
        const double area = static_cast<double>(schedule[i]) * schedule[i];
        w[i] = i < split ? (1.0 - late_share) * area / early_sum : late_share * area / late_sum;
    }
    return w;
}

TraceConfig TraceConfig::defaults() {
    TraceConfig c;
    c.schedule     = default_schedule();
    c.steps        = static_cast<int>(c.schedule.size());
    c.cost_weights = calibrated_cost_weights(c.schedule);
    return c;
}

void TraceConfig::validate() const {
    if (steps < 4) throw ConfigError("trace.steps must be >= 4");
    if (static_cast<int>(schedule.size()) != steps) {
        throw ConfigError("trace.schedule must have exactly trace.steps entries");
    }
    if (schedule.front() < 1) throw ConfigError("trace.schedule entries must be positive");
    for (size_t i = 1; i < schedule.size(); ++i) {
        if (schedule[i] <= schedule[i - 1]) throw ConfigError("trace.schedule must be strictly increasing");
    }
    if (static_cast<int>(cost_weights.size()) != steps) {
        throw ConfigError("trace.cost_weights must have exactly trace.steps entries");
    }
    double sum = 0.0;
    for (double w : cost_weights) {
        if (!(w >= 0.0)) throw ConfigError("trace.cost_weights must be non-negative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("trace.cost_weights must sum to 1");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("trace.gamma must lie in (0,1)");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("trace.alpha must be finite and >= 0");
    if (!std::isfinite(guidance)) throw ConfigError("trace.guidance must be finite");
}

void TargetRecipe::validate() const {
    if (!(base >= 0.0 && base <= 1.0)) throw ConfigError("recipe.base must lie in [0,1]");
    if (blob_count < 0) throw ConfigError("recipe.blob_count must be >= 0");
    if (!(blob_amplitude >= 0.0) || !(texture_amplitude >= 0.0) || !(noise_amplitude >= 0.0) ||
        !(detail_amplitude >= 0.0)) {
        throw ConfigError("recipe amplitudes must be >= 0");
    }
    if (!(blob_sigma_min > 0.0) || blob_sigma_max < blob_sigma_min) {
        throw ConfigError("recipe blob sigma range must satisfy 0 < min <= max");
    }
    if (!(texture_frequency >= 0.0)) throw ConfigError("recipe.texture_frequency must be >= 0");
    if (!(noise_scale >= 0.0) || noise_scale > 8.0) throw ConfigError("recipe.noise_scale must lie in [0,8]");
    const double swing = blob_amplitude + texture_amplitude;
    if (base - swing < 0.0 || base + swing > 1.0) {
        throw ConfigError("recipe: base +/- (blob + texture amplitude) leaves [0,1]");
    }
}

namespace {

// Unit-variance grain: white Gaussian noise blurred by a Gaussian of the given
// sigma (replicate border), rescaled by the kernel's L2 norm.
std::vector<double> grain_field(int size, double scale, Rng& rng) {
    std::vector<double> field(static_cast<size_t>(size) * size);
    for (double& v : field) v = rng.normal();
    if (scale <= 0.0) return field;

    const int r = static_cast<int>(std::ceil(3.0 * scale));
    std::vector<double> taps(2 * r + 1);
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) sum += taps[i + r] = std::exp(-(i * i) / (2.0 * scale * scale));
    double energy = 0.0;
    for (double& t : taps) {
        t /= sum;
        energy += t * t;
    }
    const double norm = 1.0 / energy;  // separable: output std is energy

    std::vector<double> tmp(field.size());
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            double acc = 0.0;
            for (int t = -r; t <= r; ++t) acc += taps[t + r] * field[static_cast<size_t>(y) * size + std::clamp(x + t, 0, size - 1)];
            tmp[static_cast<size_t>(y) * size + x] = acc;
        }
    }
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            double acc = 0.0;
            for (int t = -r; t <= r; ++t) acc += taps[t + r] * tmp[static_cast<size_t>(std::clamp(y + t, 0, size - 1)) * size + x];
            field[static_cast<size_t>(y) * size + x] = acc * norm;
        }
    }
    return field;
}

Image synth_recipe(const TargetRecipe& r, int size) {
    r.validate();
    Rng rng(r.seed);
    const double n = size;

    std::vector<double> blobs(static_cast<size_t>(size) * size, 0.0);
    for (int b = 0; b < r.blob_count; ++b) {
        const double cx    = rng.uniform() * n;
        const double cy    = rng.uniform() * n;
        const double sigma = rng.uniform(r.blob_sigma_min, r.blob_sigma_max) * n;
        const double sign  = rng.uniform() < 0.5 ? -1.0 : 1.0;
        const double gain  = sign * rng.uniform(0.5, 1.0);
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                const double dx = x + 0.5 - cx;
                const double dy = y + 0.5 - cy;
                blobs[static_cast<size_t>(y) * size + x] += gain * std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
            }
        }
    }
    double peak = 0.0;
    for (double v : blobs) peak = std::max(peak, std::abs(v));
    const double blob_scale = peak > 0.0 ? r.blob_amplitude / peak : 0.0;

    const double phase = rng.uniform() * 2.0 * std::numbers::pi;
    const double kx    = 2.0 * std::numbers::pi * r.texture_frequency * std::cos(r.texture_angle) / n;
    const double ky    = 2.0 * std::numbers::pi * r.texture_frequency * std::sin(r.texture_angle) / n;

    std::vector<double> detail;
    if (r.detail_amplitude > 0.0) {
        detail.assign(static_cast<size_t>(size) * size, 0.0);
        for (double scale : {2.0, 4.0, 8.0, 16.0}) {
            const std::vector<double> octave = grain_field(size, scale, rng);
            for (size_t i = 0; i < detail.size(); ++i) detail[i] += 0.5 * octave[i];
        }
    }
    const std::vector<double> grain =
        r.noise_amplitude > 0.0 ? grain_field(size, r.noise_scale, rng) : std::vector<double>{};

    Image out(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const size_t i = static_cast<size_t>(y) * size + x;
            double v       = r.base + blob_scale * blobs[i];
            if (r.texture_amplitude > 0.0) v += r.texture_amplitude * std::sin(kx * x + ky * y + phase);
            if (r.detail_amplitude > 0.0) v += r.detail_amplitude * detail[i];
            if (r.noise_amplitude > 0.0) v += r.noise_amplitude * grain[i];
            out.at(x, y) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
    return out;
}

}  // namespace

Image synth_target(const TargetSpec& spec, int size) {
    if (size < 1) throw ConfigError("synth_target: size must be >= 1");
    if (const auto* recipe = std::get_if<TargetRecipe>(&spec)) return synth_recipe(*recipe, size);

    Image img = load_grayscale(std::get<std::filesystem::path>(spec));
    if (img.width != img.height) throw DataError("target image must be square");
    if (img.width < size) throw DataError("target image smaller than the final resolution");
    return clamp_unit(resize_area(img, size, size));
}

std::vector<double> smoothed_noise(int size, uint64_t seed, int step) {
    Rng rng(mix_seed(seed, static_cast<uint64_t>(step)));
    std::vector<double> raw(static_cast<size_t>(size) * size);
    for (double& v : raw) v = rng.normal();
    std::vector<double> out(raw.size());
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            double acc = 0.0;
            for (int dy = -1; dy <= 1; ++dy) {
                const int yy = std::clamp(y + dy, 0, size - 1);
                for (int dx = -1; dx <= 1; ++dx) {
                    const int xx = std::clamp(x + dx, 0, size - 1);
                    acc += raw[static_cast<size_t>(yy) * size + xx];
                }
            }
            out[static_cast<size_t>(y) * size + x] = acc / 9.0;
        }
    }
    return out;
}

ToyGenerator::ToyGenerator(Image target, TraceConfig cfg) {
    cfg.validate();
    if (target.width != target.height || target.width != cfg.final_resolution()) {
        throw ConfigError("generate_trace: target must be " + std::to_string(cfg.final_resolution()) + "x" +
                          std::to_string(cfg.final_resolution()) + ", got " + std::to_string(target.width) + "x" +
                          std::to_string(target.height));
    }
    trace_.config = std::move(cfg);
    trace_.target = std::move(target);
}

void ToyGenerator::run_step(bool replace_uncond) {
    const TraceConfig& cfg = trace_.config;
    const int k            = next_step();
    if (k > cfg.steps) throw ConfigError("run_step: all steps already generated");
    const int r = cfg.schedule[k - 1];

    Image cond = resize_area(trace_.target, r, r);
    Image uncond(r, r);
    if (replace_uncond) {
        uncond = cond;
    } else {
        const double amp = cfg.alpha * std::pow(cfg.gamma, k - 1);
        if (amp == 0.0) {
            uncond = cond;
        } else {
            const std::vector<double> noise = smoothed_noise(r, cfg.seed, k);
            for (size_t i = 0; i < cond.size(); ++i) {
                uncond.data[i] = static_cast<float>(cond.data[i] + amp * noise[i]);
            }
        }
    }

    Image comb(r, r);
    for (size_t i = 0; i < cond.size(); ++i) {
        const double u = uncond.data[i];
        const double c = cond.data[i];
        comb.data[i]   = static_cast<float>(u + cfg.guidance * (c - u));
    }
    comb = clamp_unit(std::move(comb));

    const double w = cfg.cost_weights[k - 1];
    cost_ += replace_uncond ? w : w + w;
    trace_.cond.push_back(std::move(cond));
    trace_.uncond.push_back(std::move(uncond));
    trace_.combined.push_back(std::move(comb));
    trace_.branch_cost.push_back(w);
    trace_.uncond_replaced.push_back(replace_uncond);
}

StepTrace generate_trace(const Image& target, const TraceConfig& cfg) {
    ToyGenerator gen(target, cfg);
    for (int k = 1; k <= cfg.steps; ++k) gen.run_step();
    return gen.release();
}

namespace {

void check_step(const StepTrace& trace, int k, const char* who) {
    if (k < 1 || k > trace.steps_run()) {
        throw ConfigError(std::string(who) + ": step " + std::to_string(k) + " out of range [1, " +
                          std::to_string(trace.steps_run()) + "]");
    }
}

}  // namespace

double branch_gap(const StepTrace& trace, int k) {
    check_step(trace, k, "branch_gap");
    return l1_mean(trace.cond[k - 1], trace.uncond[k - 1]);
}

Image decode_final(const StepTrace& trace, int stop_step) {
    check_step(trace, stop_step, "decode_final");
    const Image& img = trace.combined[stop_step - 1];
    const int full   = trace.config.final_resolution();
    if (stop_step == trace.config.steps) return img;
    return resize_bilinear(img, full, full);
}

void to_json(json& j, const TraceConfig& c) {
    j = json{{"steps", c.steps},   {"schedule", c.schedule}, {"guidance", c.guidance},
             {"alpha", c.alpha},   {"gamma", c.gamma},       {"seed", c.seed},
             {"cost_weights", c.cost_weights}};
}

void from_json(const json& j, TraceConfig& c) {
    j.at("steps").get_to(c.steps);
    j.at("schedule").get_to(c.schedule);
    j.at("guidance").get_to(c.guidance);
    j.at("alpha").get_to(c.alpha);
    j.at("gamma").get_to(c.gamma);
    j.at("seed").get_to(c.seed);
    j.at("cost_weights").get_to(c.cost_weights);
}

void to_json(json& j, const TargetRecipe& r) {
    j = json{{"family", r.family},
             {"base", r.base},
             {"blob_count", r.blob_count},
             {"blob_amplitude", r.blob_amplitude},
             {"blob_sigma_min", r.blob_sigma_min},
             {"blob_sigma_max", r.blob_sigma_max},
             {"texture_frequency", r.texture_frequency},
             {"texture_amplitude", r.texture_amplitude},
             {"texture_angle", r.texture_angle},
             {"noise_amplitude", r.noise_amplitude},
             {"noise_scale", r.noise_scale},
             {"detail_amplitude", r.detail_amplitude},
             {"seed", r.seed}};
}

void from_json(const json& j, TargetRecipe& r) {
    j.at("family").get_to(r.family);
    j.at("base").get_to(r.base);
    j.at("blob_count").get_to(r.blob_count);
    j.at("blob_amplitude").get_to(r.blob_amplitude);
    j.at("blob_sigma_min").get_to(r.blob_sigma_min);
    j.at("blob_sigma_max").get_to(r.blob_sigma_max);
    j.at("texture_frequency").get_to(r.texture_frequency);
    j.at("texture_amplitude").get_to(r.texture_amplitude);
    j.at("texture_angle").get_to(r.texture_angle);
    j.at("noise_amplitude").get_to(r.noise_amplitude);
    j.at("noise_scale").get_to(r.noise_scale);
    j.at("detail_amplitude").get_to(r.detail_amplitude);
    j.at("seed").get_to(r.seed);
}

uint64_t content_hash(const std::string& text) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_trace(const StepTrace& trace, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json manifest;
    manifest["format"]          = "skipvar-trace";
    manifest["version"]         = 1;
    manifest["config"]          = trace.config;
    manifest["steps_run"]       = trace.steps_run();
    manifest["uncond_replaced"] = trace.uncond_replaced;
    {
        std::ofstream out(dir / "manifest.json", std::ios::trunc);
        if (!out) throw DataError("cannot write trace manifest in '" + dir.string() + "'");
        out << manifest.dump(2) << '\n';
    }
    save_image(trace.target, dir / "target.f32", ImageFormat::rawf32);
    for (int k = 1; k <= trace.steps_run(); ++k) {
        const std::string s = std::to_string(k);
        save_image(trace.cond[k - 1], dir / ("cond_" + s + ".f32"), ImageFormat::rawf32);
        save_image(trace.uncond[k - 1], dir / ("uncond_" + s + ".f32"), ImageFormat::rawf32);
        save_image(trace.combined[k - 1], dir / ("comb_" + s + ".f32"), ImageFormat::rawf32);
    }
}

StepTrace read_trace(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw DataError("missing trace manifest in '" + dir.string() + "'");
    StepTrace trace;
    try {
        const json manifest = json::parse(in);
        if (manifest.at("format") != "skipvar-trace" || manifest.at("version") != 1) {
            throw DataError("unsupported trace manifest version");
        }
        trace.config = manifest.at("config").get<TraceConfig>();
        trace.uncond_replaced = manifest.at("uncond_replaced").get<std::vector<bool>>();
        const int steps = manifest.at("steps_run").get<int>();
        if (steps < 0 || steps > trace.config.steps || static_cast<int>(trace.uncond_replaced.size()) != steps) {
            throw DataError("inconsistent trace manifest");
        }
        trace.target = load_grayscale(dir / "target.f32");
        for (int k = 1; k <= steps; ++k) {
            const std::string s = std::to_string(k);
            trace.cond.push_back(load_grayscale(dir / ("cond_" + s + ".f32")));
            trace.uncond.push_back(load_grayscale(dir / ("uncond_" + s + ".f32")));
            trace.combined.push_back(load_grayscale(dir / ("comb_" + s + ".f32")));
            trace.branch_cost.push_back(trace.config.cost_weights.at(k - 1));
        }
    } catch (const json::exception& e) {
        throw DataError("malformed trace manifest: " + std::string(e.what()));
    }
    return trace;
}

}  // namespace skipvar
