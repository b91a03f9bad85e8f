#pragma once

#include <json.hpp>

#include "skipvar/toygen.hpp"

namespace skipvar {

void to_json(nlohmann::json& j, const TraceConfig& c);
void from_json(const nlohmann::json& j, TraceConfig& c);

void to_json(nlohmann::json& j, const TargetRecipe& r);
void from_json(const nlohmann::json& j, TargetRecipe& r);

// FNV-1a over the compact dump; stable across platforms.
uint64_t content_hash(const std::string& text);
std::string hex64(uint64_t v);

}  // namespace skipvar
