#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "uab/cli.hpp"
#include "uab/error.hpp"

namespace {

struct GlobalFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::string out;
};

// Precedence: flag, then UAB_* environment, then config file, then defaults.
uab::RunConfig resolve_config(const GlobalFlags& flags) {
    uab::RunConfig cfg = flags.config.empty() ? uab::RunConfig{} : uab::load_config(flags.config);
    if (flags.seed) {
        cfg.seed = *flags.seed;
    }
    if (flags.jobs) {
        cfg.jobs = *flags.jobs;
    }
    if (!flags.out.empty()) {
        cfg.out_dir = flags.out;
    }
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Up-scaling appeal toolkit: dataset generation, subjective analysis, features and baselines"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags flags;
    app.add_option("--config", flags.config, "JSON run configuration")->envname("UAB_CONFIG");
    app.add_option("--seed", flags.seed, "RNG seed (u64)")->envname("UAB_SEED");
    app.add_option("--jobs", flags.jobs, "worker threads")->envname("UAB_JOBS")->check(CLI::PositiveNumber);
    app.add_option("--out", flags.out, "output directory")->envname("UAB_OUT");

    auto* prepare = app.add_subcommand("prepare", "rescale sources, run the upscalers, write the manifest");
    std::string input_dir;
    std::string work_dir;
    prepare->add_option("--input", input_dir, "directory of source images")->envname("UAB_INPUT");
    prepare->add_option("--work", work_dir, "dataset directory (default: --out)")->envname("UAB_WORK");

    auto* features = app.add_subcommand("features", "feature CSV and full-reference scores for a manifest");
    std::string manifest;
    bool no_fr = false;
    features->add_option("--manifest", manifest, "manifest JSON")->required()->check(CLI::ExistingFile);
    features->add_flag("--no-fr", no_fr, "skip psnr/ssim/ms_ssim");

    auto* analyze = app.add_subcommand("analyze", "MOS, SOS fit, preference tables and plots");
    std::string ratings;
    analyze->add_option("--ratings", ratings, "ratings CSV")->required()->check(CLI::ExistingFile);
    analyze->add_option("--manifest", manifest, "manifest JSON")->required()->check(CLI::ExistingFile);

    auto* train = app.add_subcommand("train", "random-forest appeal regressor with k-fold CV");
    std::string features_csv;
    std::string mos_csv;
    std::optional<int> folds;
    std::optional<int> trees;
    train->add_option("--features", features_csv, "feature CSV")->required()->check(CLI::ExistingFile);
    train->add_option("--mos", mos_csv, "MOS CSV")->required()->check(CLI::ExistingFile);

    auto* detect = app.add_subcommand("detect", "patch-level method detection baseline");
    uab::DetectInputs detect_in;
    std::string patch_features;
    detect->add_option("--manifest", manifest, "manifest JSON")->check(CLI::ExistingFile);
    detect->add_option("--patch-features", patch_features, "reuse a patch feature CSV")->check(CLI::ExistingFile);
    detect->add_flag("--write-patches", detect_in.write_patches, "write patch PNGs under <out>/patches");

    for (auto* sub : {train, detect}) {
        sub->add_option("--folds", folds, "cross-validation folds")->check(CLI::Range(2, 1 << 20));
        sub->add_option("--trees", trees, "trees per forest")->check(CLI::PositiveNumber);
    }

    auto* eval = app.add_subcommand("eval", "correlation or classification report for predictions");
    std::string predictions;
    std::string scores;
    eval->add_option("--predictions", predictions, "prediction CSV")->check(CLI::ExistingFile);
    eval->add_option("--mos", mos_csv, "MOS CSV")->check(CLI::ExistingFile);
    eval->add_option("--scores", scores, "stimulus_id,model,score CSV")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? uab::kExitOk : uab::kExitUsage;
    }

    try {
        uab::RunConfig cfg = resolve_config(flags);
        if (!input_dir.empty()) {
            cfg.input_dir = input_dir;
        }
        if (!work_dir.empty()) {
            cfg.work_dir = work_dir;
        }
        if (folds) {
            cfg.folds = *folds;
        }
        if (trees) {
            cfg.forest.n_trees = *trees;
        }
        cfg.validate();

        if (prepare->parsed()) {
            return uab::cmd_prepare(cfg, std::cerr);
        }
        if (features->parsed()) {
            return uab::cmd_features(cfg, manifest, !no_fr, std::cerr);
        }
        if (analyze->parsed()) {
            return uab::cmd_analyze(cfg, ratings, manifest, std::cerr);
        }
        if (train->parsed()) {
            return uab::cmd_train(cfg, features_csv, mos_csv, std::cerr);
        }
        if (detect->parsed()) {
            detect_in.manifest = manifest;
            detect_in.patch_features = patch_features;
            return uab::cmd_detect(cfg, detect_in, std::cerr);
        }
        return uab::cmd_eval(cfg, {predictions, mos_csv, scores}, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return uab::exit_code_for(e);
    }
}
