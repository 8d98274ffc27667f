#include "imfas/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "imfas/checkpoint.hpp"
#include "imfas/config.hpp"
#include "imfas/errors.hpp"
#include "imfas/manifest.hpp"
#include "imfas/parallel.hpp"
#include "imfas/trainer.hpp"

namespace imfas::cli {

namespace fs = std::filesystem;

namespace {

std::string curves_file(const std::string& data_dir) {
    return (fs::path(data_dir) / "curves.csv").string();
}

std::string meta_file(const std::string& data_dir) {
    return (fs::path(data_dir) / "meta_features.csv").string();
}

// A directory with a manifest holds a finished run; refuse to clobber it
// unless --force is given.
void prepare_out_dir(const std::string& out_dir, bool force) {
    const fs::path dir(out_dir);
    if (fs::exists(dir / "manifest.json") && !force) {
        throw SpecError("output directory '" + out_dir +
                        "' already holds a run; pass --force to overwrite");
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory: " + out_dir);
}

std::string join_doubles(const std::vector<double>& values) {
    std::ostringstream out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out << ',';
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", values[i]);
        out << buf;
    }
    return out.str();
}

std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
    std::ostringstream out;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        if (i) out << ',';
        out << seeds[i];
    }
    return out.str();
}

void validate_fractions(const std::vector<double>& fractions) {
    if (fractions.empty()) throw SpecError("need at least one fraction");
    for (double q : fractions) {
        if (q < 0.0 || q > 1.0) {
            throw SpecError("fraction " + std::to_string(q) + " outside [0, 1]");
        }
    }
}

nlohmann::ordered_json sh_report_json(const std::string& name, const ShEvalResult& result,
                                      const ShConfig& cfg, const std::string& config_hash) {
    nlohmann::ordered_json root;
    root["schema_version"] = 1;
    root["name"] = name;
    root["eta"] = cfg.eta;
    root["schedule"] = sh_schedule_description(cfg);
    nlohmann::ordered_json per_dataset;
    for (std::size_t i = 0; i < result.dataset_ids.size(); ++i) {
        per_dataset[result.dataset_ids[i]] = result.per_dataset[i];
    }
    root["per_dataset"] = per_dataset;
    root["mean"] = result.mean;
    root["sd"] = result.sd;
    root["excluded_datasets"] = result.excluded_datasets;
    root["config_hash"] = config_hash;
    return root;
}

}  // namespace

std::vector<double> parse_fractions(const std::string& text) {
    std::vector<double> fractions;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            fractions.push_back(std::stod(item, &pos));
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw SpecError("bad fraction: '" + item + "'");
        }
    }
    validate_fractions(fractions);
    std::sort(fractions.begin(), fractions.end());
    fractions.erase(std::unique(fractions.begin(), fractions.end()), fractions.end());
    return fractions;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            seeds.push_back(std::stoull(item, &pos));
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw SpecError("bad seed: '" + item + "'");
        }
    }
    if (seeds.empty()) throw SpecError("need at least one seed");
    return seeds;
}

void cmd_generate(const std::string& config_path, const std::string& out_dir, bool force) {
    const KeyValues kv = parse_kv_file(config_path);
    const SyntheticSpec spec = synthetic_spec_from(kv);
    prepare_out_dir(out_dir, force);

    RunManifest manifest;
    manifest.command = "generate";
    manifest.config = to_key_values(spec);
    manifest.seeds = {spec.seed};
    manifest.input_digests[config_path] = digest_file(config_path);
    manifest.outputs = {"curves.csv", "meta_features.csv"};
    write_manifest(manifest, out_dir);

    const MetaDataset ds = generate_synthetic(spec);
    save_csv(ds, curves_file(out_dir), meta_file(out_dir));
    std::cout << "generate: wrote " << out_dir << "/curves.csv and meta_features.csv (M="
              << ds.num_datasets() << " A=" << ds.num_algorithms() << " n="
              << ds.num_fidelities() << " F=" << ds.num_meta_features() << ")\n";
}

void cmd_train(const std::string& data_dir, const std::string& config_path,
               const std::string& out_dir, bool force) {
    const KeyValues kv = parse_kv_file(config_path);
    const TrainConfig cfg = train_config_from(kv);
    const MetaDataset raw = load_csv(curves_file(data_dir), meta_file(data_dir));
    prepare_out_dir(out_dir, force);

    RunManifest manifest;
    manifest.command = "train";
    manifest.config = to_key_values(cfg);
    manifest.seeds = {cfg.seed};
    manifest.input_digests[config_path] = digest_file(config_path);
    manifest.input_digests[curves_file(data_dir)] = digest_file(curves_file(data_dir));
    manifest.input_digests[meta_file(data_dir)] = digest_file(meta_file(data_dir));
    manifest.outputs = {"checkpoint.bin", "history.csv"};
    write_manifest(manifest, out_dir);

    const FeatureScaler scaler = fit_feature_scaler(raw);
    const MetaDataset normalized = apply_feature_scaler(scaler, raw);
    TrainResult trained = train(normalized, cfg);

    save_checkpoint({std::move(trained.params), scaler},
                    (fs::path(out_dir) / "checkpoint.bin").string());
    write_text_file((fs::path(out_dir) / "history.csv").string(),
                    history_to_csv(trained.history));

    std::cout << "train: " << cfg.epochs << " epochs on " << raw.num_datasets()
              << " datasets";
    if (!trained.history.train_loss.empty()) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", trained.history.train_loss.back());
        std::cout << ", final loss " << buf;
    }
    std::cout << " -> " << out_dir << "/checkpoint.bin\n";
}

void cmd_eval(const std::string& checkpoint_path, const std::string& data_dir,
              const std::vector<double>& fractions, const std::string& out_dir, bool force) {
    validate_fractions(fractions);
    const TrainedModel model = load_checkpoint(checkpoint_path);
    const MetaDataset raw = load_csv(curves_file(data_dir), meta_file(data_dir));
    prepare_out_dir(out_dir, force);

    KeyValues config;
    config["checkpoint"] = checkpoint_path;
    config["fractions"] = join_doubles(fractions);
    const std::string config_hash = digest_text(canonical_text(config));

    RunManifest manifest;
    manifest.command = "eval";
    manifest.config = config;
    manifest.input_digests[checkpoint_path] = digest_file(checkpoint_path);
    manifest.input_digests[curves_file(data_dir)] = digest_file(curves_file(data_dir));
    manifest.input_digests[meta_file(data_dir)] = digest_file(meta_file(data_dir));
    manifest.outputs = {"report.json", "report.md", "fraction_curve.csv"};
    write_manifest(manifest, out_dir);

    const MetaDataset normalized = apply_feature_scaler(model.scaler, raw);
    const SoftRankConfig rank_cfg{1.0, RankDirection::Descending};
    const ShConfig sh_cfg;

    // One pseudo-seed: eval scores a fixed checkpoint on the whole directory.
    EvalReport report;
    report.name = fs::path(data_dir).filename().string();
    if (report.name.empty()) report.name = "dataset";
    report.fractions = fractions;
    report.seeds = {0};
    report.sh_schedule = sh_schedule_description(sh_cfg);
    report.config_hash = config_hash;

    SeedEval eval;
    eval.seed = 0;
    eval.n_train = 0;
    eval.n_test = raw.num_datasets();
    eval.fractions = evaluate_model(model.params, normalized, fractions, rank_cfg,
                                    &eval.excluded_datasets, &eval.test_dataset_ids);
    const ShEvalResult sh = sh_eval(raw, sh_cfg);
    eval.sh_per_dataset = sh.per_dataset;
    eval.sh_mean = sh.mean;
    report.per_seed.push_back(std::move(eval));
    aggregate_report(report);

    write_text_file((fs::path(out_dir) / "report.json").string(),
                    render_report(report, ReportFormat::Json));
    write_text_file((fs::path(out_dir) / "report.md").string(),
                    render_report(report, ReportFormat::Markdown));
    write_text_file((fs::path(out_dir) / "fraction_curve.csv").string(),
                    export_fraction_curve(report));

    std::cout << "eval: " << raw.num_datasets() << " datasets at " << fractions.size()
              << " fractions -> " << out_dir << "/report.json\n";
}

void cmd_baseline(const std::string& data_dir, int eta, const std::string& out_dir,
                  bool force) {
    ShConfig cfg;
    cfg.eta = eta;
    if (cfg.eta < 2) throw SpecError("eta must be >= 2");
    const MetaDataset raw = load_csv(curves_file(data_dir), meta_file(data_dir));
    prepare_out_dir(out_dir, force);

    KeyValues config;
    config["eta"] = std::to_string(cfg.eta);
    const std::string config_hash = digest_text(canonical_text(config));

    RunManifest manifest;
    manifest.command = "baseline";
    manifest.config = config;
    manifest.input_digests[curves_file(data_dir)] = digest_file(curves_file(data_dir));
    manifest.input_digests[meta_file(data_dir)] = digest_file(meta_file(data_dir));
    manifest.outputs = {"sh_report.json"};
    write_manifest(manifest, out_dir);

    const ShEvalResult result = sh_eval(raw, cfg);
    std::string name = fs::path(data_dir).filename().string();
    if (name.empty()) name = "dataset";
    write_text_file((fs::path(out_dir) / "sh_report.json").string(),
                    sh_report_json(name, result, cfg, config_hash).dump(2) + "\n");

    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", result.mean);
    std::cout << "baseline: successive halving (eta=" << cfg.eta << ") mean Spearman " << buf
              << " over " << result.per_dataset.size() << " datasets -> " << out_dir
              << "/sh_report.json\n";
}

void cmd_experiment(const std::string& data_dir, const std::string& synth_config_path,
                    const std::string& config_path, const std::vector<std::uint64_t>& seeds,
                    const std::vector<double>& fractions, int eta, const std::string& out_dir,
                    bool force) {
    if (data_dir.empty() == synth_config_path.empty()) {
        throw SpecError("experiment needs exactly one of --data or --synth");
    }
    if (seeds.empty()) throw SpecError("need at least one seed");
    validate_fractions(fractions);

    const KeyValues kv = parse_kv_file(config_path);
    ExperimentConfig cfg = experiment_config_from(kv);
    cfg.fractions = fractions;
    cfg.sh.eta = eta;
    if (cfg.sh.eta < 2) throw SpecError("eta must be >= 2");

    RunManifest manifest;
    manifest.command = "experiment";
    manifest.config = to_key_values(cfg);
    manifest.config["fractions"] = join_doubles(fractions);
    manifest.config["eta"] = std::to_string(cfg.sh.eta);
    manifest.config["seeds"] = join_seeds(seeds);
    manifest.seeds = seeds;
    manifest.input_digests[config_path] = digest_file(config_path);

    MetaDataset ds;
    if (!data_dir.empty()) {
        ds = load_csv(curves_file(data_dir), meta_file(data_dir));
        manifest.config["data"] = data_dir;
        manifest.input_digests[curves_file(data_dir)] = digest_file(curves_file(data_dir));
        manifest.input_digests[meta_file(data_dir)] = digest_file(meta_file(data_dir));
    } else {
        const KeyValues synth_kv = parse_kv_file(synth_config_path);
        const SyntheticSpec spec = synthetic_spec_from(synth_kv);
        for (const auto& [key, value] : to_key_values(spec)) {
            manifest.config["synth_" + key] = value;
        }
        manifest.input_digests[synth_config_path] = digest_file(synth_config_path);
        ds = generate_synthetic(spec);
    }

    prepare_out_dir(out_dir, force);
    manifest.outputs = {"report.json", "report.md", "fraction_curve.csv"};
    for (std::uint64_t seed : seeds) {
        manifest.outputs.push_back("seed_" + std::to_string(seed) + "/checkpoint.bin");
        manifest.outputs.push_back("seed_" + std::to_string(seed) + "/history.csv");
    }
    write_manifest(manifest, out_dir);
    const std::string config_hash = digest_text(canonical_text(manifest.config));

    EvalReport report;
    report.name = cfg.name;
    report.fractions = fractions;
    report.seeds = seeds;
    report.sh_schedule = sh_schedule_description(cfg.sh);
    report.config_hash = config_hash;
    report.per_seed.resize(seeds.size());

    // Seeds are independent; each writes only its own slot and directory.
    parallel_for(seeds.size(), [&](std::size_t i) {
        SeedRun run = run_one_seed(ds, cfg, seeds[i]);
        const fs::path seed_dir = fs::path(out_dir) / ("seed_" + std::to_string(seeds[i]));
        std::error_code ec;
        fs::create_directories(seed_dir, ec);
        if (ec) throw IoError("cannot create seed directory: " + seed_dir.string());
        save_checkpoint({run.params, run.scaler}, (seed_dir / "checkpoint.bin").string());
        write_text_file((seed_dir / "history.csv").string(), history_to_csv(run.history));
        report.per_seed[i] = std::move(run.eval);
    });
    aggregate_report(report);

    write_text_file((fs::path(out_dir) / "report.json").string(),
                    render_report(report, ReportFormat::Json));
    write_text_file((fs::path(out_dir) / "report.md").string(),
                    render_report(report, ReportFormat::Markdown));
    write_text_file((fs::path(out_dir) / "fraction_curve.csv").string(),
                    export_fraction_curve(report));

    std::cout << "experiment: " << seeds.size() << " seeds, fractions "
              << join_doubles(fractions) << " -> " << out_dir << "/report.md\n";
}

int run(int argc, char** argv) {
    CLI::App app{"Meta-learned multi-fidelity algorithm selection harness"};
    app.require_subcommand(1);

    std::string data_dir, config_path, synth_config, checkpoint_path, out_dir;
    std::string fractions_text = "0.1,0.2,0.5,1.0";
    std::string seeds_text = "1,2,3,4,5";
    int eta = 2;
    bool force = false;

    auto* generate = app.add_subcommand("generate", "Write a synthetic benchmark as CSV");
    generate->add_option("--config", config_path, "Synthetic spec (key = value)")->required();
    generate->add_option("--out", out_dir, "Output directory")->required();
    generate->add_flag("--force", force, "Overwrite an existing run directory");

    auto* train = app.add_subcommand("train", "Train a model on a data directory");
    train->add_option("--data", data_dir, "Directory with curves.csv + meta_features.csv")
        ->required();
    train->add_option("--config", config_path, "Training config (key = value)")->required();
    train->add_option("--out", out_dir, "Output directory")->required();
    train->add_flag("--force", force, "Overwrite an existing run directory");

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint at fidelity fractions");
    eval->add_option("--checkpoint", checkpoint_path, "Trained checkpoint")->required();
    eval->add_option("--data", data_dir, "Directory with curves.csv + meta_features.csv")
        ->required();
    eval->add_option("--fractions", fractions_text, "Comma list of fidelity fractions");
    eval->add_option("--out", out_dir, "Output directory")->required();
    eval->add_flag("--force", force, "Overwrite an existing run directory");

    auto* baseline = app.add_subcommand("baseline", "Successive Halving baseline report");
    baseline->add_option("--data", data_dir, "Directory with curves.csv + meta_features.csv")
        ->required();
    baseline->add_option("--eta", eta, "Elimination factor (>= 2)");
    baseline->add_option("--out", out_dir, "Output directory")->required();
    baseline->add_flag("--force", force, "Overwrite an existing run directory");

    auto* experiment =
        app.add_subcommand("experiment", "Full multi-seed split/train/eval/baseline run");
    experiment->add_option("--data", data_dir, "Existing data directory");
    experiment->add_option("--synth", synth_config, "Synthetic spec to generate from");
    experiment->add_option("--config", config_path, "Experiment config (key = value)")
        ->required();
    experiment->add_option("--seeds", seeds_text, "Comma list of seeds");
    experiment->add_option("--fractions", fractions_text, "Comma list of fidelity fractions");
    experiment->add_option("--eta", eta, "Successive Halving elimination factor");
    experiment->add_option("--out", out_dir, "Output directory")->required();
    experiment->add_flag("--force", force, "Overwrite an existing run directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return kExitUserError;
    }

    try {
        if (generate->parsed()) {
            cmd_generate(config_path, out_dir, force);
        } else if (train->parsed()) {
            cmd_train(data_dir, config_path, out_dir, force);
        } else if (eval->parsed()) {
            cmd_eval(checkpoint_path, data_dir, parse_fractions(fractions_text), out_dir,
                     force);
        } else if (baseline->parsed()) {
            cmd_baseline(data_dir, eta, out_dir, force);
        } else if (experiment->parsed()) {
            cmd_experiment(data_dir, synth_config, config_path, parse_seeds(seeds_text),
                           parse_fractions(fractions_text), eta, out_dir, force);
        }
        return kExitOk;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntimeError;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUserError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntimeError;
    }
}

}  // namespace imfas::cli
