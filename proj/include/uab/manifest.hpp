#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace uab {

inline constexpr std::string_view kSourceMethod = "source";

struct ManifestEntry {
    std::string stimulus_id;
    std::string src_id;
    std::string method;  // upscaler name, or "source" for factor 1
    int factor = 1;
    std::string path;
    int width = 0;
    int height = 0;

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// A stimulus that could not be produced; it has no entry.
struct ManifestFailure {
    std::string stimulus_id;
    std::string src_id;
    std::string method;
    int factor = 0;
    std::string stage;
    std::string message;

    friend bool operator==(const ManifestFailure&, const ManifestFailure&) = default;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    std::vector<ManifestFailure> failures;

    [[nodiscard]] const ManifestEntry* find(std::string_view stimulus_id) const;
    /// Upscaler names in first-appearance order, "source" excluded.
    [[nodiscard]] std::vector<std::string> methods() const;
    /// Source ids in first-appearance order.
    [[nodiscard]] std::vector<std::string> sources() const;

    friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// "{src_id}_{method}_x{factor}"
[[nodiscard]] std::string stimulus_id_for(std::string_view src_id, std::string_view method, int factor);

/// Throws FormatError on duplicate stimulus ids, a source without exactly one
/// factor-1 entry, or a factor outside {1,2,4}.
void validate_manifest(const DatasetManifest& manifest);

/// Relative entry paths are resolved against the manifest's directory.
[[nodiscard]] std::filesystem::path resolve_entry_path(const std::filesystem::path& manifest_path,
                                                       const ManifestEntry& entry);

[[nodiscard]] std::string manifest_to_json(const DatasetManifest& manifest);
[[nodiscard]] DatasetManifest manifest_from_json(std::string_view text);
[[nodiscard]] DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

}  // namespace uab
