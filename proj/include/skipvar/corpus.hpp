#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "skipvar/pipeline.hpp"

namespace skipvar {

// Recipe families of the procedural corpus.
//   blob     - Gaussian blobs of mixed size
//   sinusoid - low-frequency oriented waves over faint blobs
//   mixed    - alternation of the two
// Both carry the same multi-octave detail field and fine grain of varying
// strength, so the families differ in layout but share their fine-scale
// statistics.
std::vector<CorpusSample> family_corpus(const std::string& family, int count, uint64_t seed);

// The frozen 200-sample mixed corpus used for labeling and evaluation.
std::vector<CorpusSample> default_corpus(int count = 200, uint64_t seed = 20250611);

// Writes target_<id>.f32 files and corpus.json (recipes, seeds, file names).
void write_corpus(const std::vector<CorpusSample>& samples, int size, const std::filesystem::path& dir,
                  const std::string& config_hash);

// Reads corpus.json; specs point at the materialized target files.
std::vector<CorpusSample> read_corpus(const std::filesystem::path& dir);

}  // namespace skipvar
