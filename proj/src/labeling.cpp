#include "skipvar/labeling.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "skipvar/errors.hpp"
#include "skipvar/parallel.hpp"

namespace skipvar {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

SampleSimulation simulate_sample(const CorpusSample& sample, const TraceConfig& base_cfg, const PipelineConfig& p) {
    p.validate(base_cfg);
    const TraceConfig cfg = sample_trace_config(base_cfg, sample);
    const Image target    = synth_target(sample.spec, cfg.final_resolution());

    SampleSimulation sim;
    sim.sample_id = sample.id;
    sim.ladder    = p.ordered_ladder(cfg);

    const StepTrace baseline = generate_trace(target, cfg);
    sim.features             = decision_features(baseline, p);
    const Image& reference   = baseline.combined.back();
    for (const Strategy& s : sim.ladder) {
        if (s == Strategy::none()) {
            sim.ssim.push_back(ssim(reference, reference, p.ssim));
            continue;
        }
        const StrategyOutcome out = outcome_from_trace(baseline, s);
        sim.ssim.push_back(ssim(reference, out.output, p.ssim));
    }
    return sim;
}

size_t select_label(const std::vector<double>& ssim_in_ladder_order, double tau) {
    if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0,1]");
    for (size_t i = 0; i < ssim_in_ladder_order.size(); ++i) {
        if (ssim_in_ladder_order[i] >= tau) return i;
    }
    throw DataError("no ladder entry reaches the SSIM threshold (none must score 1)");
}

LabeledSample assign_label(const SampleSimulation& sim, double tau) {
    LabeledSample out;
    out.sample_id = sim.sample_id;
    out.features  = sim.features;
    out.label     = sim.ladder[select_label(sim.ssim, tau)].id();
    for (size_t i = 0; i < sim.ladder.size(); ++i) out.ssim_record.emplace_back(sim.ladder[i].id(), sim.ssim[i]);
    return out;
}

LabeledSample label_sample(const CorpusSample& sample, const TraceConfig& cfg, const PipelineConfig& p, double tau) {
    return assign_label(simulate_sample(sample, cfg, p), tau);
}

std::vector<SampleSimulation> simulate_corpus(const std::vector<CorpusSample>& samples, const TraceConfig& cfg,
                                              const PipelineConfig& p, int jobs) {
    std::vector<SampleSimulation> sims(samples.size());
    parallel_for(samples.size(), jobs, [&](size_t i) { sims[i] = simulate_sample(samples[i], cfg, p); });
    return sims;
}

std::vector<LabeledSample> label_simulations(const std::vector<SampleSimulation>& sims, double tau) {
    std::vector<LabeledSample> out;
    out.reserve(sims.size());
    std::set<std::string> distinct;
    for (const SampleSimulation& s : sims) {
        out.push_back(assign_label(s, tau));
        distinct.insert(out.back().label);
    }
    if (distinct.size() < 2) {
        std::fprintf(stderr, "warning: labeled dataset contains fewer than two distinct labels\n");
    }
    return out;
}

std::vector<LabeledSample> build_dataset(const std::vector<CorpusSample>& samples, const TraceConfig& cfg,
                                         const PipelineConfig& p, double tau, int jobs) {
    if (samples.empty()) throw ConfigError("build_dataset: empty corpus");
    return label_simulations(simulate_corpus(samples, cfg, p, jobs), tau);
}

std::vector<LabeledSample> label_family(const std::vector<SampleSimulation>& sims, double tau, Strategy::Kind family) {
    std::vector<LabeledSample> out;
    for (const SampleSimulation& sim : sims) {
        SampleSimulation restricted;
        restricted.sample_id = sim.sample_id;
        restricted.features  = sim.features;
        for (size_t i = 0; i < sim.ladder.size(); ++i) {
            if (sim.ladder[i].kind == family || sim.ladder[i] == Strategy::none()) {
                restricted.ladder.push_back(sim.ladder[i]);
                restricted.ssim.push_back(sim.ssim[i]);
            }
        }
        out.push_back(assign_label(restricted, tau));
    }
    return out;
}

Dataset to_dataset(const std::vector<LabeledSample>& samples, const std::vector<std::string>& classes) {
    std::vector<FeatureVector> features;
    std::vector<std::string> labels;
    for (const LabeledSample& s : samples) {
        features.push_back(s.features);
        labels.push_back(s.label);
    }
    return Dataset::from_labels(std::move(features), labels, classes);
}

SensitivitySplit sensitivity_split(const std::vector<CorpusSample>& samples, const TraceConfig& cfg,
                                   const PipelineConfig& p, double tau_s, int jobs) {
    if (!(tau_s >= 0.0 && tau_s <= 1.0)) throw ConfigError("sensitivity threshold must lie in [0,1]");
    p.validate(cfg);
    std::vector<double> scores(samples.size());
    parallel_for(samples.size(), jobs, [&](size_t i) {
        const TraceConfig c = sample_trace_config(cfg, samples[i]);
        const Image target  = synth_target(samples[i].spec, c.final_resolution());
        const StepTrace trace = generate_trace(target, c);
        scores[i] = ssim(trace.combined.back(), outcome_from_trace(trace, Strategy::skip(3)).output, p.ssim);
    });
    SensitivitySplit split;
    for (size_t i = 0; i < samples.size(); ++i) {
        (scores[i] < tau_s ? split.sensitive : split.robust).push_back(samples[i].id);
    }
    return split;
}

std::string features_csv(const std::vector<LabeledSample>& samples, bool with_label) {
    std::ostringstream out;
    out << "sample_id,hf_diff,hf_ratio" << (with_label ? ",label" : "") << '\n';
    for (const LabeledSample& s : samples) {
        out << s.sample_id << ',' << format_double(s.features.hf_diff) << ',' << format_double(s.features.hf_ratio);
        if (with_label) out << ',' << s.label;
        out << '\n';
    }
    return out.str();
}

void write_features_csv(const std::vector<LabeledSample>& samples, const std::filesystem::path& path,
                        bool with_label) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << features_csv(samples, with_label);
}

void write_ssim_csv(const std::vector<LabeledSample>& samples, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "sample_id";
    if (!samples.empty()) {
        for (const auto& [id, v] : samples.front().ssim_record) out << ',' << id;
    }
    out << '\n';
    for (const LabeledSample& s : samples) {
        out << s.sample_id;
        for (const auto& [id, v] : s.ssim_record) out << ',' << format_double(v);
        out << '\n';
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_double(const std::string& text, const std::string& where) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw DataError(where + ": cannot parse number '" + text + "'");
    }
    return v;
}

}  // namespace

std::vector<LabeledSample> read_features_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool with_label = false;
    if (line == "sample_id,hf_diff,hf_ratio,label") {
        with_label = true;
    } else if (line != "sample_id,hf_diff,hf_ratio") {
        throw DataError(path.string() + ": unexpected header '" + line + "'");
    }
    std::vector<LabeledSample> out;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells     = split_csv_line(line);
        const std::string at = path.string() + ":" + std::to_string(row);
        if (cells.size() != (with_label ? 4u : 3u)) throw DataError(at + ": wrong number of columns");
        LabeledSample s;
        s.sample_id         = cells[0];
        s.features.hf_diff  = parse_double(cells[1], at);
        s.features.hf_ratio = parse_double(cells[2], at);
        if (with_label) s.label = cells[3];
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<SampleSimulation> read_simulations(const std::vector<LabeledSample>& features,
                                               const std::filesystem::path& ssim_csv) {
    std::ifstream in(ssim_csv, std::ios::binary);
    if (!in) throw DataError("cannot open '" + ssim_csv.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError(ssim_csv.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "sample_id") {
        throw DataError(ssim_csv.string() + ": unexpected header '" + line + "'");
    }
    std::vector<Strategy> ladder;
    try {
        for (size_t i = 1; i < header.size(); ++i) ladder.push_back(Strategy::parse(header[i]));
    } catch (const ConfigError& e) {
        throw DataError(ssim_csv.string() + ": " + e.what());
    }

    std::map<std::string, std::vector<double>> rows;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells     = split_csv_line(line);
        const std::string at = ssim_csv.string() + ":" + std::to_string(row);
        if (cells.size() != header.size()) throw DataError(at + ": wrong number of columns");
        std::vector<double> values;
        for (size_t i = 1; i < cells.size(); ++i) values.push_back(parse_double(cells[i], at));
        if (!rows.emplace(cells[0], std::move(values)).second) throw DataError(at + ": duplicate sample id");
    }

    std::vector<SampleSimulation> out;
    for (const LabeledSample& f : features) {
        const auto it = rows.find(f.sample_id);
        if (it == rows.end()) throw DataError(ssim_csv.string() + ": no row for sample '" + f.sample_id + "'");
        out.push_back(SampleSimulation{f.sample_id, f.features, ladder, it->second});
    }
    return out;
}

}  // namespace skipvar
