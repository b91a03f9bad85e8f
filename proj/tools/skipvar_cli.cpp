// skipvar: corpus -> label -> train -> run -> evaluate.

#include <algorithm>
#include <cstdio>
#include <functional>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "skipvar/corpus.hpp"
#include "skipvar/decision.hpp"
#include "skipvar/errors.hpp"
#include "skipvar/json_io.hpp"
#include "skipvar/labeling.hpp"
#include "skipvar/pipeline.hpp"
#include "skipvar/run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace skipvar;

namespace {

struct Globals {
    std::string config;
    std::vector<std::string> sets;
    std::optional<int64_t> seed;
    std::optional<int> jobs;
};

RunConfig load_config(const Globals& g) {
    json flat = g.config.empty() ? json::object() : read_config_file(g.config);
    if (!flat.is_object()) throw ConfigError("config file must hold a JSON object");
    for (const std::string& s : g.sets) {
        auto [key, value] = parse_assignment(s);
        flat[key]         = value;
    }
    if (g.seed) flat["seed"] = *g.seed;
    if (g.jobs) flat["jobs"] = *g.jobs;
    return resolve_config(flat);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Collects the files a command writes and records them, with content hashes,
// in manifest.json next to them.
class OutputDir {
public:
    explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec || !fs::is_directory(dir_)) throw DataError("cannot create output directory '" + dir_.string() + "'");
    }

    fs::path path(const std::string& name) {
        files_.push_back(name);
        return dir_ / name;
    }

    void write(const std::string& name, const std::string& content) {
        std::ofstream out(path(name), std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write '" + (dir_ / name).string() + "'");
        out << content;
        if (!out) throw DataError("write failed for '" + (dir_ / name).string() + "'");
    }

    void manifest(const std::string& command, const RunConfig& cfg, const json& inputs) {
        json outputs = json::array();
        for (const std::string& f : files_) {
            outputs.push_back({{"file", f}, {"fnv1a", hex64(content_hash(read_file(dir_ / f)))}});
        }
        const json m = {{"tool", "skipvar"},  {"version", 1},        {"command", command},
                        {"config_hash", cfg.hash()}, {"config", cfg.resolved}, {"inputs", inputs},
                        {"outputs", outputs}};
        std::ofstream out(dir_ / "manifest.json", std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write manifest in '" + dir_.string() + "'");
        out << m.dump(2) << '\n';
    }

private:
    fs::path dir_;
    std::vector<std::string> files_;
};

json input_record(const fs::path& p) {
    return {{"path", p.generic_string()}, {"fnv1a", hex64(content_hash(read_file(p)))}};
}

std::string tau_tag(double tau) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", tau);
    return buf;
}

json label_counts(const std::vector<LabeledSample>& labels, const std::vector<std::string>& classes) {
    json counts = json::array();
    for (const std::string& c : classes) {
        int n = 0;
        for (const LabeledSample& s : labels) n += s.label == c;
        counts.push_back({{"strategy", c}, {"count", n}});
    }
    return counts;
}

// ---- corpus ----

void cmd_corpus(const RunConfig& cfg, const fs::path& out_dir) {
    const std::vector<CorpusSample> samples = family_corpus(cfg.corpus_family, cfg.corpus_count, cfg.seed);
    const int size = cfg.trace.final_resolution();

    OutputDir out(out_dir);
    write_corpus(samples, size, out_dir, cfg.hash());
    out.path("corpus.json");

    constexpr int kBuckets = 10;
    std::vector<int> hist(kBuckets, 0);
    for (const CorpusSample& s : samples) {
        out.path("target_" + s.id + ".f32");
        const double r = hf_ratio(synth_target(s.spec, size), cfg.pipeline.hf);
        hist[std::min(kBuckets - 1, static_cast<int>(r * kBuckets))]++;
    }
    std::ostringstream csv;
    csv << "bucket_lo,bucket_hi,count\n";
    for (int b = 0; b < kBuckets; ++b) {
        csv << format_double(b / 10.0) << ',' << format_double((b + 1) / 10.0) << ',' << hist[b] << '\n';
    }
    out.write("hf_ratio_hist.csv", csv.str());
    out.manifest("corpus", cfg, json::object());
    std::printf("wrote %zu targets (%dx%d) to %s\n", samples.size(), size, size, out_dir.string().c_str());
}

// ---- label ----

void cmd_label(const RunConfig& cfg, const fs::path& corpus_dir, const fs::path& out_dir, bool tau_sweep) {
    const std::vector<CorpusSample> samples = read_corpus(corpus_dir);
    const std::vector<std::string> classes  = strategy_ids(cfg.pipeline.ordered_ladder(cfg.trace));
    const std::vector<SampleSimulation> sims = simulate_corpus(samples, cfg.trace, cfg.pipeline, cfg.jobs);
    const std::vector<LabeledSample> labels  = label_simulations(sims, cfg.tau);

    OutputDir out(out_dir);
    write_features_csv(labels, out.path("features.csv"), false);
    write_features_csv(labels, out.path("labels.csv"), true);
    write_ssim_csv(labels, out.path("ssim.csv"));

    json summary = {{"tau", cfg.tau}, {"samples", labels.size()}, {"counts", label_counts(labels, classes)}};
    if (tau_sweep) {
        json sweep = json::array();
        for (double tau : {0.88, 0.86, 0.84}) {
            const std::vector<LabeledSample> l = label_simulations(sims, tau);
            write_features_csv(l, out.path("labels_tau" + tau_tag(tau) + ".csv"), true);
            sweep.push_back({{"tau", tau}, {"counts", label_counts(l, classes)}});
        }
        summary["sweep"] = sweep;
    }
    out.write("label_summary.json", summary.dump(2) + "\n");
    out.manifest("label", cfg, {{"corpus", input_record(corpus_dir / "corpus.json")}});
    std::printf("labeled %zu samples at tau=%s\n", labels.size(), tau_tag(cfg.tau).c_str());
}

// ---- train ----

std::vector<LabeledSample> read_training_rows(const fs::path& features, const std::string& labels_path) {
    std::vector<LabeledSample> rows = read_features_csv(features);
    if (!labels_path.empty()) {
        std::map<std::string, std::string> by_id;
        for (const LabeledSample& s : read_features_csv(labels_path)) by_id[s.sample_id] = s.label;
        for (LabeledSample& s : rows) {
            const auto it = by_id.find(s.sample_id);
            if (it == by_id.end()) throw DataError("no label for sample '" + s.sample_id + "'");
            s.label = it->second;
        }
    }
    for (const LabeledSample& s : rows) {
        if (s.label.empty()) throw DataError("sample '" + s.sample_id + "' has no label");
    }
    if (rows.size() < 2) throw DataError("training needs at least 2 labeled samples");
    return rows;
}

// A family whose labels are all identical becomes a single-leaf tree.
ValidatedModel fit_family(const RunConfig& cfg, const Dataset& d, bool& constant) {
    constant = std::adjacent_find(d.labels.begin(), d.labels.end(), std::not_equal_to<>()) == d.labels.end();
    return train_with_validation(constant ? ModelKind::tree : cfg.kind, d, cfg.training, cfg.train_ratio, cfg.seed);
}

json accuracy_record(const ValidatedModel& vm) {
    return {{"train_size", vm.train_size},
            {"val_size", vm.val_size},
            {"train_accuracy", vm.train_accuracy},
            {"val_accuracy", vm.val_accuracy}};
}

void cmd_train(const RunConfig& cfg, const fs::path& features, const std::string& labels_path,
               const std::string& ssim_path, const fs::path& out_dir) {
    const std::vector<std::string> classes = strategy_ids(cfg.pipeline.ordered_ladder(cfg.trace));
    json inputs = {{"features", input_record(features)}};
    if (!labels_path.empty()) inputs["labels"] = input_record(labels_path);

    if (!cfg.two_stage) {
        const std::vector<LabeledSample> rows = read_training_rows(features, labels_path);
        const Dataset d                       = to_dataset(rows, classes);
        const ValidatedModel vm = train_with_validation(cfg.kind, d, cfg.training, cfg.train_ratio, cfg.seed);

        OutputDir out(out_dir);
        save_model(vm.model, out.path("model.json"));
        json report = accuracy_record(vm);
        report["kind"] = to_string(cfg.kind);
        out.write("train_report.json", report.dump(2) + "\n");
        out.manifest("train", cfg, inputs);
        std::printf("%s: train accuracy %.4f (%zu), validation accuracy %.4f (%zu)\n", to_string(cfg.kind).c_str(),
                    vm.train_accuracy, vm.train_size, vm.val_accuracy, vm.val_size);
        return;
    }

    // Two-stage: one model for the skip family, one for the unconditional
    // replacement family, both labeled from the per-strategy SSIM table.
    if (ssim_path.empty()) throw ConfigError("train.two_stage requires --ssim");
    inputs["ssim"] = input_record(ssim_path);
    const std::vector<SampleSimulation> sims = read_simulations(read_features_csv(features), ssim_path);
    const Dataset skip_d   = to_dataset(label_family(sims, cfg.tau, Strategy::Kind::skip), classes);
    const Dataset uncond_d = to_dataset(label_family(sims, cfg.tau, Strategy::Kind::uncond_replace), classes);
    const Dataset full_d   = to_dataset(label_simulations(sims, cfg.tau), classes);

    bool skip_constant = false, uncond_constant = false;
    const ValidatedModel skip_vm   = fit_family(cfg, skip_d, skip_constant);
    const ValidatedModel uncond_vm = fit_family(cfg, uncond_d, uncond_constant);
    const SequentialPolicy policy{skip_vm.model, uncond_vm.model};

    const auto [train_idx, val_idx] = split_train_val(full_d.size(), cfg.train_ratio, cfg.seed);
    auto policy_accuracy = [&](const std::vector<size_t>& idx) {
        size_t hits = 0;
        for (size_t i : idx) hits += policy.predict(full_d.features[i]) == classes[full_d.labels[i]];
        return idx.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(idx.size());
    };

    OutputDir out(out_dir);
    out.write("model.json", serialize_policy(policy));
    json skip_rec   = accuracy_record(skip_vm);
    json uncond_rec = accuracy_record(uncond_vm);
    skip_rec["constant"]   = skip_constant;
    uncond_rec["constant"] = uncond_constant;
    const json report = {{"kind", "sequential-" + to_string(cfg.kind)},
                         {"skip", skip_rec},
                         {"uncond", uncond_rec},
                         {"train_accuracy", policy_accuracy(train_idx)},
                         {"val_accuracy", policy_accuracy(val_idx)}};
    out.write("train_report.json", report.dump(2) + "\n");
    out.manifest("train", cfg, inputs);
    std::printf("two-stage %s: train accuracy %.4f, validation accuracy %.4f\n", to_string(cfg.kind).c_str(),
                report["train_accuracy"].get<double>(), report["val_accuracy"].get<double>());
}

// ---- policies for run / evaluate ----

Policy load_policy(const fs::path& path, const PipelineConfig& p) {
    const std::string text = read_file(path);
    const json probe       = json::parse(text, nullptr, false);
    if (!probe.is_discarded() && probe.is_object() && probe.value("kind", "") == "sequential") {
        SequentialPolicy sp = deserialize_policy(text);
        check_model_ladder(sp.skip_model, p);
        check_model_ladder(sp.uncond_model, p);
        return policy_from(sp);
    }
    TrainedModel m = deserialize_model(text);
    check_model_ladder(m, p);
    return policy_from(m);
}

json report_json(const RunReport& r) {
    json j = {{"strategy", r.strategy.id()},
              {"features", {{"hf_diff", r.features.hf_diff}, {"hf_ratio", r.features.hf_ratio}}},
              {"cost", r.cost},
              {"speedup", r.speedup}};
    if (r.ssim) j["ssim"] = *r.ssim;
    if (r.ssim_hf) j["ssim_hf"] = *r.ssim_hf;
    return j;
}

// ---- run ----

void cmd_run(const RunConfig& cfg, const std::string& model_path, const std::string& force, const fs::path& target,
             const std::string& format, bool baseline, const fs::path& out_dir) {
    const ImageFormat fmt = parse_image_format(format);
    json inputs           = {{"target", input_record(target)}};
    Policy policy;
    if (!force.empty()) {
        policy = constant_policy(Strategy::parse(force));
    } else {
        if (model_path.empty()) throw ConfigError("run needs --model or --force-strategy");
        policy          = load_policy(model_path, cfg.pipeline);
        inputs["model"] = input_record(model_path);
    }
    const Image img       = synth_target(target, cfg.trace.final_resolution());
    const RunResult res   = run_skipvar(img, cfg.trace, cfg.pipeline, policy, RunOptions{baseline});

    OutputDir out(out_dir);
    save_image(res.output, out.path(fmt == ImageFormat::pgm8 ? "output.pgm" : "output.f32"), fmt);
    out.write("report.json", report_json(res.report).dump(2) + "\n");
    out.manifest("run", cfg, inputs);
    std::printf("strategy %s, speedup %.4f\n", res.report.strategy.id().c_str(), res.report.speedup);
}

// ---- evaluate ----

void cmd_evaluate(const RunConfig& cfg, const std::vector<std::string>& models, const std::string& force,
                  const fs::path& corpus_dir, bool split, const fs::path& out_dir) {
    if (models.empty() && force.empty()) throw ConfigError("evaluate needs --model or --force-strategy");
    if (!models.empty() && !force.empty()) throw ConfigError("--model and --force-strategy are exclusive");
    std::vector<Policy> policies;
    json inputs = {{"corpus", input_record(corpus_dir / "corpus.json")}, {"models", json::array()}};
    if (!force.empty()) {
        policies.push_back(constant_policy(Strategy::parse(force)));
    } else {
        for (const std::string& m : models) {
            policies.push_back(load_policy(m, cfg.pipeline));
            inputs["models"].push_back(input_record(m));
        }
    }
    const std::vector<CorpusSample> samples = read_corpus(corpus_dir);

    OutputDir out(out_dir);
    json sweep = json::array();
    for (size_t i = 0; i < policies.size(); ++i) {
        const EvaluationReport rep = evaluate(samples, cfg.trace, cfg.pipeline, policies[i], cfg.jobs);
        const std::string suffix   = policies.size() == 1 ? "" : "_" + std::to_string(i);
        write_evaluation_csv(rep, out.path("evaluation" + suffix + ".csv"));
        out.write("summary" + suffix + ".json", evaluation_summary_json(rep));
        sweep.push_back({{"index", i},
                         {"model", models.empty() ? "force:" + force : fs::path(models[i]).generic_string()},
                         {"mean_ssim", rep.mean_ssim},
                         {"mean_speedup", rep.mean_speedup}});
        std::printf("[%zu] mean SSIM %.4f, mean speedup %.4f\n", i, rep.mean_ssim, rep.mean_speedup);
    }
    if (policies.size() > 1) out.write("sweep.json", sweep.dump(2) + "\n");

    if (split) {
        const SensitivitySplit s = sensitivity_split(samples, cfg.trace, cfg.pipeline, cfg.tau_s, cfg.jobs);
        std::string sensitive, robust;
        for (const std::string& id : s.sensitive) sensitive += id + "\n";
        for (const std::string& id : s.robust) robust += id + "\n";
        out.write("sensitive.txt", sensitive);
        out.write("robust.txt", robust);
        std::printf("sensitivity split at tau_s=%s: %zu sensitive, %zu robust\n", tau_tag(cfg.tau_s).c_str(),
                    s.sensitive.size(), s.robust.size());
    }
    out.manifest("evaluate", cfg, inputs);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Frequency-guided acceleration of coarse-to-fine generation on a toy generator"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("-c,--config", g.config, "JSON config file with flat keys");
    app.add_option("--set", g.sets, "Override one config key: key=value (repeatable)");
    app.add_option("--seed", g.seed, "Override the master seed");
    app.add_option("--jobs", g.jobs, "Worker threads for per-sample work");

    std::string out_dir, corpus_dir, features, labels, ssim_path, kind, target, force, format = "rawf32";
    std::vector<std::string> models;
    bool tau_sweep = false, two_stage = false, baseline = false, split = false;
    std::optional<double> tau;

    auto* corpus = app.add_subcommand("corpus", "Materialize the procedural target corpus");
    corpus->add_option("-o,--out", out_dir, "Output directory")->required();

    auto* label = app.add_subcommand("label", "Simulate every strategy and label each sample");
    label->add_option("--corpus", corpus_dir, "Corpus directory")->required();
    label->add_option("-o,--out", out_dir, "Output directory")->required();
    label->add_option("--tau", tau, "SSIM threshold (overrides label.tau)");
    label->add_flag("--tau-sweep", tau_sweep, "Also write labels at tau 0.88, 0.86 and 0.84");

    auto* train = app.add_subcommand("train", "Fit a decision model with an 80/20 validation split");
    train->add_option("--features", features, "Feature CSV (may carry a label column)")->required();
    train->add_option("--labels", labels, "Label CSV joined on sample_id");
    train->add_option("--kind", kind, "logreg, tree or forest (overrides train.kind)");
    train->add_flag("--two-stage", two_stage, "Train separate skip and unconditional-replacement models");
    train->add_option("--ssim", ssim_path, "Per-strategy SSIM table (two-stage mode)");
    train->add_option("--tau", tau, "SSIM threshold for two-stage relabeling (overrides label.tau)");
    train->add_option("-o,--out", out_dir, "Output directory")->required();

    auto* run = app.add_subcommand("run", "Accelerated generation for one target");
    run->add_option("--model", models, "Model file")->expected(0, 1);
    run->add_option("--force-strategy", force, "Use this strategy instead of a model");
    run->add_option("--target", target, "Target image (pgm, ppm or rawf32)")->required();
    run->add_option("--format", format, "Output format: rawf32 or pgm8");
    run->add_flag("--baseline", baseline, "Also compute the full run and report SSIM against it");
    run->add_option("-o,--out", out_dir, "Output directory")->required();

    auto* evaluate_cmd = app.add_subcommand("evaluate", "Evaluate one or more models on a corpus");
    evaluate_cmd->add_option("--model", models, "Model file (repeatable)");
    evaluate_cmd->add_option("--force-strategy", force, "Evaluate a fixed strategy instead of a model");
    evaluate_cmd->add_option("--corpus", corpus_dir, "Corpus directory")->required();
    evaluate_cmd->add_flag("--split-sensitivity", split, "Write sensitive.txt and robust.txt");
    evaluate_cmd->add_option("-o,--out", out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (tau) g.sets.push_back("label.tau=" + format_double(*tau));
        if (!kind.empty()) g.sets.push_back("train.kind=\"" + kind + "\"");
        if (two_stage) g.sets.push_back("train.two_stage=true");
        const RunConfig cfg = load_config(g);

        if (corpus->parsed()) cmd_corpus(cfg, out_dir);
        if (label->parsed()) cmd_label(cfg, corpus_dir, out_dir, tau_sweep);
        if (train->parsed()) cmd_train(cfg, features, labels, ssim_path, out_dir);
        if (run->parsed()) cmd_run(cfg, models.empty() ? "" : models.front(), force, target, format, baseline, out_dir);
        if (evaluate_cmd->parsed()) cmd_evaluate(cfg, models, force, corpus_dir, split, out_dir);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
