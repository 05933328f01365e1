#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "uab/features.hpp"
#include "uab/forest.hpp"
#include "uab/frmetrics.hpp"
#include "uab/manifest.hpp"
#include "uab/subjective.hpp"

namespace uab {

struct FeatureRun {
    std::vector<FeatureVector> rows;  // manifest order, one per entry
    std::vector<std::string> warnings;
    std::size_t failed_images = 0;
};

/// Features of every manifest entry. An undecodable or missing image yields
/// an all-empty row and a warning.
[[nodiscard]] FeatureRun features_for_manifest(const DatasetManifest& manifest,
                                               const std::filesystem::path& manifest_path, int jobs = 1);

struct FrRun {
    std::vector<FrScore> scores;  // manifest order, metrics psnr, ssim, ms_ssim
    std::vector<std::string> warnings;
    std::size_t failed_images = 0;
};

/// psnr/ssim/ms_ssim of every upscaled entry against the factor-1 image of
/// its source. Factor-1 entries are not scored.
[[nodiscard]] FrRun fr_scores_for_manifest(const DatasetManifest& manifest, const std::filesystem::path& manifest_path,
                                           int jobs = 1);

/// `stimulus_id,model,score`, the layout read by ingest_external_scores.
[[nodiscard]] std::string fr_scores_to_csv(std::span<const FrScore> scores);

struct JoinedTable {
    std::vector<std::string> ids;  // sorted
    FeatureMatrix x;               // columns in FeatureVector::kNames order, NaN for missing
    std::vector<double> mos;
};

/// Inner join on stimulus_id that must be exact: any id present on one side
/// only raises JoinError naming the orphans of both sides.
[[nodiscard]] JoinedTable join_features_mos(std::span<const FeatureVector> features, std::span<const MosEntry> mos);

[[nodiscard]] FeatureMatrix to_matrix(std::span<const FeatureVector> rows);

struct PatchRecord {
    std::string patch_id;  // {stimulus_id}_r{row}_c{col}
    std::string stimulus_id;
    std::string src_id;
    std::string method;
    int factor = 0;
    int row = 0;
    int col = 0;
};

/// floor(width / patch) * floor(height / patch) summed over the manifest.
[[nodiscard]] std::size_t expected_patch_count(const DatasetManifest& manifest, int patch_size);

struct PatchRun {
    std::vector<PatchRecord> patches;    // manifest order, row-major within an image
    std::vector<FeatureVector> features;  // parallel to patches, id = patch_id
    std::vector<std::string> warnings;
    std::size_t failed_images = 0;
};

/// Tiles every manifest image into patch_size squares and extracts features
/// per patch. When `patch_dir` is non-empty each patch is also written to
/// patch_dir/{method}/{patch_id}.png.
[[nodiscard]] PatchRun patch_dataset(const DatasetManifest& manifest, const std::filesystem::path& manifest_path,
                                     int patch_size, const std::filesystem::path& patch_dir = {}, int jobs = 1);

/// `patch_id,stimulus_id,src_id,method,factor,row,col,path`; path is
/// relative to the index file and empty when patches were not written.
[[nodiscard]] std::string patch_index_to_csv(std::span<const PatchRecord> patches, bool with_paths);

/// Patch features with their labels: `patch_id,stimulus_id,label,<features>`.
[[nodiscard]] std::string patch_features_to_csv(std::span<const PatchRecord> patches,
                                                std::span<const FeatureVector> features);

struct PatchTable {
    std::vector<std::string> patch_ids;
    std::vector<std::string> stimulus_ids;
    std::vector<std::string> labels;
    std::vector<FeatureVector> features;
};

[[nodiscard]] PatchTable patch_features_from_csv(std::string_view csv_text);

}  // namespace uab
