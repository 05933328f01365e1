#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "uab/cli.hpp"
#include "uab/csv.hpp"
#include "uab/error.hpp"
#include "uab/evalmetrics.hpp"
#include "uab/io.hpp"
#include "uab/json_report.hpp"
#include "uab/pipeline.hpp"
#include "uab/subjective.hpp"
#include "uab/svg.hpp"

namespace uab {

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr std::size_t kLoggedWarnings = 20;

void log_warnings(std::ostream& log, const std::vector<std::string>& warnings) {
    for (std::size_t i = 0; i < warnings.size() && i < kLoggedWarnings; ++i) {
        log << "warning: " << warnings[i] << '\n';
    }
    if (warnings.size() > kLoggedWarnings) {
        log << fmt::format("warning: {} more warnings in the report\n", warnings.size() - kLoggedWarnings);
    }
}

void write_json(const fs::path& path, const ordered_json& doc) { write_text_file(path, doc.dump(2) + "\n"); }

std::string factor_label(int f) { return fmt::format("x{}", f); }

std::string confusion_to_csv(const ClassificationReport& r) {
    std::ostringstream out;
    std::vector<std::string> fields = {"truth\\pred"};
    fields.insert(fields.end(), r.class_names.begin(), r.class_names.end());
    write_csv_row(out, fields);
    for (std::size_t i = 0; i < r.confusion.size(); ++i) {
        fields = {r.class_names[i]};
        for (std::size_t v : r.confusion[i]) {
            fields.push_back(std::to_string(v));
        }
        write_csv_row(out, fields);
    }
    return out.str();
}

std::string confusion_svg(const std::string& title, const ClassificationReport& r) {
    std::vector<std::vector<double>> m;
    for (const auto& row : r.confusion) {
        m.emplace_back(row.begin(), row.end());
    }
    return svg_heatmap(title, r.class_names, r.class_names, m, "truth", "predicted");
}

ForestConfig forest_config(const RunConfig& config) {
    ForestConfig f = config.forest;
    f.seed = config.seed;
    f.jobs = config.jobs;
    return f;
}

std::map<std::string, double> mos_map(std::span<const MosEntry> mos) {
    std::map<std::string, double> out;
    for (const auto& m : mos) {
        out[m.stimulus_id] = m.mos;
    }
    return out;
}

// Source images only, each feature scaled to [0,1] over its observed range.
std::string source_feature_plot(const DatasetManifest& manifest, std::span<const FeatureVector> rows) {
    std::vector<BoxSeries> series;
    for (std::size_t k = 0; k < FeatureVector::kNames.size(); ++k) {
        BoxSeries s{std::string(FeatureVector::kNames[k]), {}};
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto v = rows[i].values()[k];
            if (manifest.entries[i].method == kSourceMethod && v) {
                s.values.push_back(*v);
            }
        }
        if (!s.values.empty()) {
            const auto [lo, hi] = std::minmax_element(s.values.begin(), s.values.end());
            const double a = *lo;
            const double span = *hi - *lo;
            for (double& v : s.values) {
                v = span > 0.0 ? (v - a) / span : 0.0;
            }
        }
        series.push_back(std::move(s));
    }
    return svg_boxplot("Source image features (min-max scaled)", series, {"scaled value", 0.0, 1.0});
}

}  // namespace

int cmd_prepare(const RunConfig& config, std::ostream& log) {
    if (config.input_dir.empty()) {
        throw ConfigError("prepare needs an input directory (--input or input_dir)");
    }
    if (!fs::is_directory(config.input_dir)) {
        throw ConfigError(fmt::format("input directory {} does not exist", config.input_dir.string()));
    }
    const fs::path work = config.effective_work_dir();
    const auto specs = config.effective_upscalers();
    const auto prepared = prepare_sources(config.input_dir, work, config.heights, config.jobs);
    if (prepared.sources.empty() && prepared.failures.empty()) {
        throw ConfigError(fmt::format("no .png/.jpg/.jpeg images in {}", config.input_dir.string()));
    }
    DatasetManifest manifest = build_dataset(prepared.sources, specs, config.factors, work, config.jobs);
    for (const auto& f : prepared.failures) {
        const std::string src = f.input.stem().string();
        manifest.failures.push_back({stimulus_id_for(src, kSourceMethod, 1), src, std::string(kSourceMethod), 1,
                                     "prepare", fmt::format("{}: {}", f.input.filename().string(), f.message)});
    }
    write_manifest(manifest, work / "manifest.json");
    write_text_file(work / "pipeline.json", pipeline_constants_json(config));
    log << fmt::format("prepare: {} sources, {} upscalers, {} manifest entries, {} failures -> {}\n",
                       prepared.sources.size(), specs.size(), manifest.entries.size(), manifest.failures.size(),
                       (work / "manifest.json").string());
    for (const auto& f : manifest.failures) {
        log << fmt::format("failed: {} [{}] {}\n", f.stimulus_id, f.stage, f.message);
    }
    return manifest.failures.empty() ? kExitOk : kExitPartial;
}

int cmd_features(const RunConfig& config, const fs::path& manifest_path, bool fr_scores, std::ostream& log) {
    const DatasetManifest manifest = read_manifest(manifest_path);
    const FeatureRun run = features_for_manifest(manifest, manifest_path, config.jobs);
    write_text_file(config.out_dir / "features.csv", features_to_csv(run.rows));
    write_text_file(config.out_dir / "plots" / "source_features.svg", source_feature_plot(manifest, run.rows));

    ordered_json report = {{"stimuli", run.rows.size()}, {"failed_images", run.failed_images}};
    std::vector<std::string> warnings = run.warnings;
    std::size_t failed = run.failed_images;
    if (fr_scores) {
        const FrRun fr = fr_scores_for_manifest(manifest, manifest_path, config.jobs);
        write_text_file(config.out_dir / "fr_scores.csv", fr_scores_to_csv(fr.scores));
        report["fr_scores"] = fr.scores.size();
        report["fr_failed_images"] = fr.failed_images;
        warnings.insert(warnings.end(), fr.warnings.begin(), fr.warnings.end());
        failed += fr.failed_images;
    }
    report["warnings"] = warnings;
    write_json(config.out_dir / "features_report.json", report);
    log << fmt::format("features: {} rows, {} failed images -> {}\n", run.rows.size(), failed,
                       (config.out_dir / "features.csv").string());
    log_warnings(log, warnings);
    return failed == 0 ? kExitOk : kExitPartial;
}

int cmd_analyze(const RunConfig& config, const fs::path& ratings_path, const fs::path& manifest_path,
                std::ostream& log) {
    const RatingSet ratings = load_ratings(ratings_path);
    const DatasetManifest manifest = read_manifest(manifest_path);
    const auto mos = compute_mos(ratings.records);
    AnalysisReport report = analyze(ratings.records, mos, manifest);
    report.warnings.insert(report.warnings.begin(), ratings.warnings.begin(), ratings.warnings.end());

    write_text_file(config.out_dir / "mos.csv", mos_to_csv(mos));
    write_text_file(config.out_dir / "analysis.json", analysis_to_json(report));

    const MosGroups groups = group_mos(mos, manifest);
    std::vector<BoxSeries> by_factor;
    for (const auto& [f, values] : groups.by_factor) {
        by_factor.push_back({factor_label(f), values});
    }
    write_text_file(config.out_dir / "plots" / "mos_by_factor.svg",
                    svg_boxplot("MOS by up-scaling factor", by_factor, {"MOS", 1.0, 5.0}));

    std::vector<BoxSeries> by_method;
    for (const auto& method : manifest.methods()) {
        const auto it = groups.by_method.find(method);
        if (it == groups.by_method.end()) {
            continue;
        }
        for (const auto& [f, values] : it->second) {
            by_method.push_back({fmt::format("{} {}", method, factor_label(f)), values});
        }
    }
    write_text_file(config.out_dir / "plots" / "mos_by_method.svg",
                    svg_boxplot("MOS by up-scaling method", by_method, {"MOS", 1.0, 5.0}));

    std::vector<std::string> factor_names;
    for (const auto& [f, counts] : report.preference_counts) {
        factor_names.push_back(factor_label(f));
    }
    std::vector<BarGroup> bars;
    for (const auto& method : manifest.methods()) {
        BarGroup g{method, {}};
        for (const auto& [f, counts] : report.preference_counts) {
            const auto it = counts.find(method);
            g.values.push_back(it == counts.end() ? 0.0 : it->second.wins + it->second.tied_wins);
        }
        bars.push_back(std::move(g));
    }
    write_text_file(config.out_dir / "plots" / "preference.svg",
                    svg_grouped_bars("Preferred method per image", factor_names, bars, {"images", 0.0, 0.0}));

    log << fmt::format("analyze: {} ratings, {} stimuli, {} participants", ratings.records.size(), mos.size(),
                       report.votes.participants);
    if (report.sos) {
        log << fmt::format(", SOS a = {:.4f}", report.sos->a);
    }
    log << fmt::format(" -> {}\n", (config.out_dir / "analysis.json").string());
    log_warnings(log, report.warnings);
    return kExitOk;
}

int cmd_train(const RunConfig& config, const fs::path& features_path, const fs::path& mos_path, std::ostream& log) {
    const auto features = read_features(features_path);
    const auto mos = read_mos(mos_path);
    const JoinedTable table = join_features_mos(features, mos);
    const ForestConfig forest = forest_config(config);
    const std::vector<std::string> names(FeatureVector::kNames.begin(), FeatureVector::kNames.end());

    const CvResult cv = cross_validate(table.ids, table.x, table.mos, forest, config.folds);
    write_text_file(config.out_dir / "cv_predictions.csv", cv_predictions_to_csv(cv));
    write_text_file(config.out_dir / "cv_metrics.json", cv_metrics_to_json(cv));

    // Single-feature correlations next to the combined out-of-fold result.
    std::vector<NamedCorrelation> rows;
    for (std::size_t c = 0; c < names.size(); ++c) {
        std::vector<double> x;
        std::vector<double> y;
        for (std::size_t r = 0; r < table.x.rows(); ++r) {
            if (std::isfinite(table.x.at(r, c))) {
                x.push_back(table.x.at(r, c));
                y.push_back(table.mos[r]);
            }
        }
        rows.push_back({names[c], correlate(x, y)});
    }
    rows.push_back({"combined", *cv.correlation});
    sort_by_pearson(rows);
    ordered_json corr = ordered_json::array();
    for (const auto& r : rows) {
        corr.push_back({{"name", r.name}, {"correlation", to_json(r.triple)}});
    }
    write_json(config.out_dir / "feature_correlations.json", corr);

    FeatureMatrix all = table.x;
    const auto medians = column_medians(all);
    impute(all, medians);
    const RandomForestModel model = train_regressor(all, table.mos, forest, names);
    ordered_json model_doc = {{"imputation_medians", medians},
                              {"forest", ordered_json::parse(model_to_json(model))}};
    write_json(config.out_dir / "model.json", model_doc);

    std::vector<double> truth;
    std::vector<double> pred;
    for (const auto& p : cv.predictions) {
        truth.push_back(p.truth);
        pred.push_back(p.prediction);
    }
    write_text_file(config.out_dir / "plots" / "cv_scatter.svg",
                    svg_scatter("Out-of-fold prediction vs MOS", truth, pred, {"MOS", 1.0, 5.0},
                                {"predicted MOS", 1.0, 5.0}, true));

    log << fmt::format("train: {} samples, {}-fold CV, pearson {} -> {}\n", table.ids.size(), config.folds,
                       cv.correlation->pearson ? fmt::format("{:.4f}", *cv.correlation->pearson) : "undefined",
                       (config.out_dir / "cv_metrics.json").string());
    return kExitOk;
}

int cmd_detect(const RunConfig& config, const DetectInputs& inputs, std::ostream& log) {
    PatchTable table;
    std::size_t failed = 0;
    std::vector<std::string> warnings;
    std::optional<std::size_t> expected;
    if (!inputs.patch_features.empty()) {
        table = patch_features_from_csv(read_text_file(inputs.patch_features));
    } else {
        if (inputs.manifest.empty()) {
            throw ConfigError("detect needs --manifest or --patch-features");
        }
        const DatasetManifest manifest = read_manifest(inputs.manifest);
        expected = expected_patch_count(manifest, config.patch_size);
        const fs::path patch_dir = inputs.write_patches ? config.out_dir / "patches" : fs::path();
        PatchRun run = patch_dataset(manifest, inputs.manifest, config.patch_size, patch_dir, config.jobs);
        failed = run.failed_images;
        warnings = run.warnings;
        log_warnings(log, warnings);
        write_text_file(config.out_dir / "patches" / "index.csv",
                        patch_index_to_csv(run.patches, inputs.write_patches));
        write_text_file(config.out_dir / "patch_features.csv", patch_features_to_csv(run.patches, run.features));
        for (auto& p : run.patches) {
            table.patch_ids.push_back(p.patch_id);
            table.stimulus_ids.push_back(p.stimulus_id);
            table.labels.push_back(p.method);
        }
        table.features = std::move(run.features);
    }

    const std::set<std::string> distinct(table.labels.begin(), table.labels.end());
    std::vector<std::string> classes(distinct.begin(), distinct.end());
    if (classes.size() < 2) {
        throw InsufficientData(fmt::format("detection needs at least two labels, found {}", classes.size()));
    }
    std::vector<int> labels;
    for (const auto& l : table.labels) {
        labels.push_back(static_cast<int>(std::lower_bound(classes.begin(), classes.end(), l) - classes.begin()));
    }
    const CvResult cv = detect_baseline(table.patch_ids, table.stimulus_ids, to_matrix(table.features), labels,
                                        classes, forest_config(config), config.folds);
    write_text_file(config.out_dir / "detect_predictions.csv", cv_predictions_to_csv(cv));
    ordered_json metrics = ordered_json::parse(cv_metrics_to_json(cv));
    metrics["patches"] = table.patch_ids.size();
    if (expected) {
        metrics["expected_patches"] = *expected;
    }
    metrics["failed_images"] = failed;
    metrics["warnings"] = warnings;
    write_json(config.out_dir / "detect_metrics.json", metrics);
    write_text_file(config.out_dir / "confusion.csv", confusion_to_csv(*cv.report));
    write_text_file(config.out_dir / "plots" / "confusion.svg", confusion_svg("Patch method detection", *cv.report));

    log << fmt::format("detect: {} patches from {} images, {} classes, accuracy {:.4f}, image accuracy {:.4f}\n",
                       table.patch_ids.size(), cv.groups, classes.size(), cv.report->accuracy,
                       cv.image_accuracy.value_or(0.0));
    return failed == 0 ? kExitOk : kExitPartial;
}

int cmd_eval(const RunConfig& config, const EvalInputs& inputs, std::ostream& log) {
    if (inputs.predictions.empty() && inputs.scores.empty()) {
        throw ConfigError("eval needs --predictions and/or --scores");
    }
    std::optional<std::map<std::string, double>> mos;
    if (!inputs.mos.empty()) {
        mos = mos_map(read_mos(inputs.mos));
    }
    ordered_json doc = ordered_json::object();
    std::vector<std::string> warnings;

    if (!inputs.predictions.empty()) {
        const CsvTable table = read_csv(inputs.predictions);
        const bool classification = table.find_column("truth") && table.find_column("pred");
        if (classification) {
            const std::size_t c_truth = table.column("truth");
            const std::size_t c_pred = table.column("pred");
            std::vector<std::string> truth;
            std::vector<std::string> pred;
            for (const auto& row : table.rows) {
                truth.push_back(row[c_truth]);
                pred.push_back(row[c_pred]);
            }
            const ClassificationReport report = classification_report(truth, pred);
            doc["task"] = "classification";
            doc["samples"] = truth.size();
            doc["classification"] = to_json(report);
            write_text_file(config.out_dir / "eval_confusion.csv", confusion_to_csv(report));
            write_text_file(config.out_dir / "plots" / "eval_confusion.svg", confusion_svg("Confusion", report));
            log << fmt::format("eval: {} samples, accuracy {:.4f}, mcc {:.4f}\n", truth.size(), report.accuracy,
                               report.mcc);
        } else {
            const std::size_t c_id = table.column("stimulus_id");
            const auto pred_col = table.find_column("pred_mos") ? table.find_column("pred_mos")
                                                                : table.find_column("prediction");
            if (!pred_col) {
                throw ParseError(fmt::format("{}: no pred_mos or prediction column", inputs.predictions.string()),
                                 1);
            }
            const auto truth_col = table.find_column("truth_mos");
            if (!mos && !truth_col) {
                throw ConfigError("predictions have no truth_mos column; pass --mos");
            }
            std::vector<double> truth;
            std::vector<double> pred;
            for (std::size_t r = 0; r < table.rows.size(); ++r) {
                const auto& row = table.rows[r];
                const auto p = parse_real(row[*pred_col]);
                if (!p || !std::isfinite(*p)) {
                    throw ParseError(fmt::format("prediction \"{}\" is not a finite number", row[*pred_col]),
                                     table.line_numbers[r]);
                }
                std::optional<double> t;
                if (mos) {
                    const auto it = mos->find(row[c_id]);
                    if (it == mos->end()) {
                        warnings.push_back(
                            fmt::format("line {}: unknown stimulus '{}' skipped", table.line_numbers[r], row[c_id]));
                        continue;
                    }
                    t = it->second;
                } else {
                    t = parse_real(row[*truth_col]);
                    if (!t || !std::isfinite(*t)) {
                        throw ParseError(fmt::format("truth_mos \"{}\" is not a finite number", row[*truth_col]),
                                         table.line_numbers[r]);
                    }
                }
                truth.push_back(*t);
                pred.push_back(*p);
            }
            const CorrelationTriple triple = correlate(truth, pred);
            double sse = 0.0;
            for (std::size_t i = 0; i < truth.size(); ++i) {
                sse += (truth[i] - pred[i]) * (truth[i] - pred[i]);
            }
            doc["task"] = "regression";
            doc["samples"] = truth.size();
            doc["correlation"] = to_json(triple);
            doc["rmse"] = truth.empty() ? ordered_json(nullptr)
                                        : ordered_json(std::sqrt(sse / static_cast<double>(truth.size())));
            write_text_file(config.out_dir / "plots" / "eval_scatter.svg",
                            svg_scatter("Prediction vs MOS", truth, pred, {"MOS", 1.0, 5.0},
                                        {"predicted MOS", 1.0, 5.0}, true));
            log << fmt::format("eval: {} samples, pearson {}\n", truth.size(),
                               triple.pearson ? fmt::format("{:.4f}", *triple.pearson) : "undefined");
        }
    }

    if (!inputs.scores.empty()) {
        if (!mos) {
            throw ConfigError("--scores needs --mos");
        }
        const ScoreComparison cmp = ingest_external_scores(inputs.scores, *mos);
        ordered_json models = ordered_json::array();
        for (const auto& m : cmp.models) {
            models.push_back({{"name", m.name}, {"correlation", to_json(m.triple)}});
            log << fmt::format("eval: model {} pearson {}\n", m.name,
                               m.triple.pearson ? fmt::format("{:.4f}", *m.triple.pearson) : "undefined");
        }
        doc["models"] = models;
        doc["skipped_score_rows"] = cmp.skipped_rows;
        warnings.insert(warnings.end(), cmp.warnings.begin(), cmp.warnings.end());
    }
    doc["warnings"] = warnings;
    write_json(config.out_dir / "eval.json", doc);
    log_warnings(log, warnings);
    return kExitOk;
}

}  // namespace uab
