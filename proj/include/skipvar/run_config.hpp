#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "skipvar/decision.hpp"
#include "skipvar/pipeline.hpp"
#include "skipvar/toygen.hpp"

namespace skipvar {

// Everything a CLI command needs, resolved from a flat-key JSON config file
// plus per-key overrides. Keys look like "trace.alpha" or "label.tau".
struct RunConfig {
    uint64_t seed = 20250611;
    int jobs      = 1;

    int corpus_count          = 200;
    std::string corpus_family = "mixed";

    TraceConfig trace;
    PipelineConfig pipeline;

    double tau   = 0.84;  // labeling threshold
    double tau_s = 0.85;  // sensitivity split threshold

    ModelKind kind   = ModelKind::logreg;
    double train_ratio = 0.8;
    bool two_stage     = false;
    TrainingConfig training;

    // Resolved key/value view; this is what gets hashed and recorded.
    nlohmann::json resolved;

    std::string hash() const;
};

// The default value of every accepted key.
nlohmann::json default_config_json();

// Merges `overrides` into the defaults key by key. Unknown keys and values of
// the wrong type throw ConfigError naming the key.
nlohmann::json merge_config(nlohmann::json base, const nlohmann::json& overrides);

// Builds and validates the typed config; every failure names the offending key.
RunConfig resolve_config(const nlohmann::json& flat);

// Reads a JSON object from disk (DataError when unreadable or malformed).
nlohmann::json read_config_file(const std::filesystem::path& path);

// "key=value"; value is parsed as JSON when possible, else taken as a string.
std::pair<std::string, nlohmann::json> parse_assignment(const std::string& text);

}  // namespace skipvar
