#include "skipvar/corpus.hpp"

#include <cstdio>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "skipvar/errors.hpp"
#include "skipvar/json_io.hpp"
#include "skipvar/random.hpp"

namespace skipvar {

using nlohmann::json;

namespace {

std::string sample_id(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "s%04d", index);
    return buf;
}

TargetRecipe blob_recipe(Rng& rng) {
    TargetRecipe r;
    r.family           = "blob";
    r.base             = 0.5;
    r.blob_count       = 6 + static_cast<int>(rng.below(7));
    r.blob_sigma_min   = 0.02;
    r.blob_sigma_max   = 0.12;
    r.noise_scale      = 0.7;
    if (rng.uniform() < 0.25) {
        // clean, low-contrast layout with no fine content
        r.blob_amplitude = rng.uniform(0.03, 0.1);
    } else {
        r.blob_amplitude   = rng.uniform(0.1, 0.35);
        r.detail_amplitude = rng.uniform(0.0, 0.06);
        r.noise_amplitude  = rng.uniform(0.0, 0.038);
    }
    r.seed             = rng.next();
    return r;
}

TargetRecipe sinusoid_recipe(Rng& rng) {
    TargetRecipe r;
    r.family            = "sinusoid";
    r.base              = 0.5;
    r.blob_count        = 2 + static_cast<int>(rng.below(3));
    r.blob_amplitude    = rng.uniform(0.05, 0.15);
    r.blob_sigma_min    = 0.05;
    r.blob_sigma_max    = 0.15;
    r.texture_frequency = rng.uniform(3.0, 8.0);
    r.texture_amplitude = rng.uniform(0.1, 0.25);
    r.texture_angle     = rng.uniform() * std::numbers::pi;
    r.detail_amplitude  = rng.uniform(0.0, 0.08);
    r.noise_amplitude   = rng.uniform(0.06, 0.08);
    r.noise_scale       = 0.7;
    r.seed              = rng.next();
    return r;
}

}  // namespace

std::vector<CorpusSample> family_corpus(const std::string& family, int count, uint64_t seed) {
    if (count < 1) throw ConfigError("corpus size must be >= 1");
    if (family != "blob" && family != "sinusoid" && family != "mixed") {
        throw ConfigError("unknown corpus family '" + family + "' (expected blob, sinusoid or mixed)");
    }
    Rng rng(seed);
    std::vector<CorpusSample> out;
    for (int i = 0; i < count; ++i) {
        const bool blob = family == "blob" || (family == "mixed" && i % 2 == 0);
        TargetRecipe r  = blob ? blob_recipe(rng) : sinusoid_recipe(rng);
        out.push_back(CorpusSample{sample_id(i), r, rng.next()});
    }
    return out;
}

std::vector<CorpusSample> default_corpus(int count, uint64_t seed) { return family_corpus("mixed", count, seed); }

void write_corpus(const std::vector<CorpusSample>& samples, int size, const std::filesystem::path& dir,
                  const std::string& config_hash) {
    std::filesystem::create_directories(dir);
    json entries = json::array();
    for (const CorpusSample& s : samples) {
        const std::string file = "target_" + s.id + ".f32";
        save_image(synth_target(s.spec, size), dir / file, ImageFormat::rawf32);
        json e = {{"id", s.id}, {"seed", s.seed}, {"file", file}};
        if (const auto* r = std::get_if<TargetRecipe>(&s.spec)) e["recipe"] = *r;
        entries.push_back(e);
    }
    const json manifest = {{"format", "skipvar-corpus"},
                           {"version", 1},
                           {"config_hash", config_hash},
                           {"size", size},
                           {"samples", entries}};
    std::ofstream out(dir / "corpus.json", std::ios::trunc | std::ios::binary);
    if (!out) throw DataError("cannot write corpus manifest in '" + dir.string() + "'");
    out << manifest.dump(2) << '\n';
}

std::vector<CorpusSample> read_corpus(const std::filesystem::path& dir) {
    std::ifstream in(dir / "corpus.json");
    if (!in) throw DataError("missing corpus.json in '" + dir.string() + "'");
    std::vector<CorpusSample> out;
    try {
        const json manifest = json::parse(in);
        if (manifest.at("format") != "skipvar-corpus" || manifest.at("version") != 1) {
            throw DataError("unsupported corpus manifest");
        }
        for (const json& e : manifest.at("samples")) {
            CorpusSample s;
            e.at("id").get_to(s.id);
            e.at("seed").get_to(s.seed);
            s.spec = dir / e.at("file").get<std::string>();
            out.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw DataError("malformed corpus.json: " + std::string(e.what()));
    }
    if (out.empty()) throw DataError("corpus.json lists no samples");
    return out;
}

}  // namespace skipvar
