#include <algorithm>

#include <fmt/format.h>
#include <json.hpp>

#include "uab/cli.hpp"
#include "uab/error.hpp"
#include "uab/io.hpp"

namespace uab {

namespace {

using nlohmann::ordered_json;

void reject_unknown(const ordered_json& obj, std::initializer_list<std::string_view> known, std::string_view where) {
    for (const auto& [key, value] : obj.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ConfigError(fmt::format("unknown key \"{}\" in {}", key, where));
        }
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_relative() && !base.empty() ? base / path : path;
}

void read_forest(const ordered_json& j, ForestConfig& f) {
    if (!j.is_object()) {
        throw ConfigError("\"forest\" must be an object");
    }
    reject_unknown(j, {"n_trees", "max_depth", "min_samples_leaf", "features_per_split", "bootstrap"}, "forest");
    f.n_trees = j.value("n_trees", f.n_trees);
    if (j.contains("max_depth") && !j["max_depth"].is_null()) {
        f.max_depth = j["max_depth"].get<int>();
    }
    f.min_samples_leaf = j.value("min_samples_leaf", f.min_samples_leaf);
    if (j.contains("features_per_split") && !j["features_per_split"].is_null()) {
        const auto& v = j["features_per_split"];
        f.features_per_split = FeatureSubset::parse(v.is_number_integer() ? std::to_string(v.get<int>())
                                                                          : v.get<std::string>());
    }
    f.bootstrap = j.value("bootstrap", f.bootstrap);
}

}  // namespace

std::vector<UpscalerSpec> RunConfig::effective_upscalers() const {
    if (!upscalers.empty()) {
        return upscalers;
    }
    UpscalerSpec lanczos;
    lanczos.name = "lanczos";
    lanczos.kind = UpscalerKind::native_lanczos;
    return {lanczos};
}

void RunConfig::validate() const {
    if (heights.reference <= 0 || heights.half <= 0 || heights.quarter <= 0) {
        throw ConfigError("heights must be positive");
    }
    if (factors.empty()) {
        throw ConfigError("factors must not be empty");
    }
    for (int f : factors) {
        if (f != 2 && f != 4) {
            throw ConfigError(fmt::format("factor {} not in {{2,4}}", f));
        }
    }
    if (patch_size <= 0 || crop_size <= 0) {
        throw ConfigError("patch_size and crop_size must be positive");
    }
    if (folds < 2) {
        throw ConfigError(fmt::format("folds must be >= 2, got {}", folds));
    }
    if (jobs < 1) {
        throw ConfigError(fmt::format("jobs must be >= 1, got {}", jobs));
    }
    forest.validate();
    for (const auto& s : upscalers) {
        validate_spec(s);
    }
}

RunConfig config_from_json(std::string_view text, const std::filesystem::path& base_dir) {
    RunConfig cfg;
    try {
        const auto j = ordered_json::parse(text);
        if (!j.is_object()) {
            throw ConfigError("config must be a JSON object");
        }
        reject_unknown(j,
                       {"input_dir", "work_dir", "out_dir", "upscalers", "heights", "factors", "patch_size",
                        "crop_size", "forest", "folds", "seed", "jobs"},
                       "config");
        if (j.contains("input_dir")) {
            cfg.input_dir = resolve(base_dir, j["input_dir"].get<std::string>());
        }
        if (j.contains("work_dir")) {
            cfg.work_dir = resolve(base_dir, j["work_dir"].get<std::string>());
        }
        if (j.contains("out_dir")) {
            cfg.out_dir = resolve(base_dir, j["out_dir"].get<std::string>());
        }
        if (j.contains("upscalers")) {
            cfg.upscalers = upscalers_from_json(j["upscalers"].dump());
        }
        if (j.contains("heights")) {
            const auto& h = j["heights"];
            reject_unknown(h, {"reference", "half", "quarter"}, "heights");
            cfg.heights.reference = h.value("reference", cfg.heights.reference);
            cfg.heights.half = h.value("half", cfg.heights.half);
            cfg.heights.quarter = h.value("quarter", cfg.heights.quarter);
        }
        if (j.contains("factors")) {
            const auto f = j["factors"].get<std::vector<int>>();
            cfg.factors = std::set<int>(f.begin(), f.end());
        }
        cfg.patch_size = j.value("patch_size", cfg.patch_size);
        cfg.crop_size = j.value("crop_size", cfg.crop_size);
        if (j.contains("forest")) {
            read_forest(j["forest"], cfg.forest);
        }
        cfg.folds = j.value("folds", cfg.folds);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.jobs = j.value("jobs", cfg.jobs);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("invalid config: {}", e.what()));
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    try {
        return config_from_json(text, path.parent_path());
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

std::string pipeline_constants_json(const RunConfig& config) {
    ordered_json j = {
        {"heights", {{"reference", config.heights.reference}, {"half", config.heights.half},
                     {"quarter", config.heights.quarter}}},
        {"factors", std::vector<int>(config.factors.begin(), config.factors.end())},
        {"patch_size", config.patch_size},
        {"crop_size", config.crop_size},
        {"upscalers", ordered_json::parse(upscalers_to_json(config.effective_upscalers()))},
        {"seed", config.seed},
    };
    return j.dump(2) + "\n";
}

int exit_code_for(const std::exception& e) noexcept {
    return dynamic_cast<const ConfigError*>(&e) != nullptr ? kExitUsage : kExitPartial;
}

}  // namespace uab
