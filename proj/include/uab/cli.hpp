#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <set>
#include <string_view>
#include <vector>

#include "uab/forest.hpp"
#include "uab/upscalers.hpp"

namespace uab {

struct RunConfig {
    std::filesystem::path input_dir;
    std::filesystem::path work_dir;  // prepare output; defaults to out_dir
    std::filesystem::path out_dir = ".";
    std::vector<UpscalerSpec> upscalers;  // empty: a single native Lanczos spec
    PipelineHeights heights;
    std::set<int> factors = {2, 4};
    int patch_size = 224;
    int crop_size = 224;  // center crop handed to the appeal regressor adapter
    ForestConfig forest;
    int folds = 10;
    std::uint64_t seed = 0;
    int jobs = 1;

    [[nodiscard]] std::filesystem::path effective_work_dir() const { return work_dir.empty() ? out_dir : work_dir; }
    [[nodiscard]] std::vector<UpscalerSpec> effective_upscalers() const;
    /// ConfigError for inconsistent values.
    void validate() const;
};

/// Keys: input_dir, work_dir, out_dir, upscalers, heights {reference, half,
/// quarter}, factors, patch_size, crop_size, forest {n_trees, max_depth,
/// min_samples_leaf, features_per_split, bootstrap}, folds, seed, jobs.
/// Unknown keys are rejected. Relative paths resolve against `base_dir`.
[[nodiscard]] RunConfig config_from_json(std::string_view text, const std::filesystem::path& base_dir = {});
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path);

/// Pipeline constants and upscaler specs without any paths; written next to
/// the manifest for downstream consumers.
[[nodiscard]] std::string pipeline_constants_json(const RunConfig& config);

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitUsage = 2;

// Each command writes under config.out_dir (prepare: the work dir) and
// returns kExitOk or kExitPartial. Fatal problems are thrown.

int cmd_prepare(const RunConfig& config, std::ostream& log);

int cmd_features(const RunConfig& config, const std::filesystem::path& manifest, bool fr_scores, std::ostream& log);

int cmd_analyze(const RunConfig& config, const std::filesystem::path& ratings, const std::filesystem::path& manifest,
                std::ostream& log);

int cmd_train(const RunConfig& config, const std::filesystem::path& features, const std::filesystem::path& mos,
              std::ostream& log);

struct DetectInputs {
    std::filesystem::path manifest;
    std::filesystem::path patch_features;  // reuse instead of extracting when set
    bool write_patches = false;
};

int cmd_detect(const RunConfig& config, const DetectInputs& inputs, std::ostream& log);

struct EvalInputs {
    std::filesystem::path predictions;
    std::filesystem::path mos;
    std::filesystem::path scores;  // stimulus_id,model,score; needs mos
};

int cmd_eval(const RunConfig& config, const EvalInputs& inputs, std::ostream& log);

/// Maps an exception to an exit code: ConfigError -> 2, anything else -> 1.
[[nodiscard]] int exit_code_for(const std::exception& e) noexcept;

}  // namespace uab
