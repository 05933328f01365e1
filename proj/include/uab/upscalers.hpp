#pragma once

#include <chrono>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "uab/manifest.hpp"

namespace uab {

enum class UpscalerKind { native_lanczos, external };
enum class UpscaleStrategy { direct, x4_then_downscale };

struct UpscalerSpec {
    std::string name;
    UpscalerKind kind = UpscalerKind::native_lanczos;
    /// argv; {input} {output} {scale} are substituted inside each argument.
    std::vector<std::string> command_template;
    UpscaleStrategy strategy = UpscaleStrategy::direct;
    std::set<int> supported_scales = {2, 4};
    std::chrono::seconds timeout{600};

    /// Factors this spec can produce: supported_scales for direct, {2,4}
    /// for x4_then_downscale.
    [[nodiscard]] bool covers(int scale) const;
};

/// Throws ConfigError: bad name, external without a command, scales outside
/// {2,4}, x4_then_downscale without scale 4, non-positive timeout.
void validate_spec(const UpscalerSpec& spec);

/// JSON array of spec objects (or {"upscalers": [...]}); every spec is
/// validated and names must be unique.
[[nodiscard]] std::vector<UpscalerSpec> upscalers_from_json(std::string_view text);
[[nodiscard]] std::string upscalers_to_json(const std::vector<UpscalerSpec>& specs);

/// Replaces every {input}, {output} and {scale} inside each argument.
[[nodiscard]] std::vector<std::string> substitute_command(const std::vector<std::string>& command_template,
                                                          const std::string& input, const std::string& output,
                                                          int scale);

struct ProcessResult {
    int exit_code = 0;
    std::string output_tail;  // last bytes of combined stdout/stderr
};

/// Spawns argv[0] (PATH lookup, no shell) in its own process group with
/// stdout and stderr captured. ProcessError on spawn failure, on timeout
/// (the group is killed) or when the child dies from a signal.
[[nodiscard]] ProcessResult run_process(const std::vector<std::string>& argv, std::chrono::milliseconds timeout);

struct PipelineHeights {
    int reference = 1080;  // factor-1 stimulus
    int half = 540;        // input of x2
    int quarter = 270;     // input of x4

    [[nodiscard]] int input_height(int factor) const;
};

struct PreparedSource {
    std::string src_id;
    std::filesystem::path reference;  // factor-1 stimulus
    std::filesystem::path half;
    std::filesystem::path quarter;
    int width = 0;  // of the reference
    int height = 0;
};

struct PrepareFailure {
    std::filesystem::path input;
    std::string message;
};

struct PreparedSources {
    std::vector<PreparedSource> sources;  // sorted by src_id
    std::vector<PrepareFailure> failures;
};

/// Rescales every .png/.jpg/.jpeg in `input_dir` (non-recursive) to the
/// reference height, then derives the half and quarter heights from the
/// reference. Files are written as PNG under work_dir/stimuli (reference,
/// named {src}_source_x1.png) and work_dir/inputs. src_id is the file stem.
/// Unreadable images and duplicate stems are reported and skipped.
[[nodiscard]] PreparedSources prepare_sources(const std::filesystem::path& input_dir,
                                              const std::filesystem::path& work_dir,
                                              const PipelineHeights& heights = {}, int jobs = 1);

struct UpscaleOutput {
    int width = 0;
    int height = 0;
};

/// Produces `output` at exactly scale x the input size. native_lanczos
/// resamples in-process; external specs run their command. With
/// x4_then_downscale the command runs at 4 and a scale-2 request is
/// resampled down from that intermediate. ProcessError for a failing
/// command, DimensionMismatch for a wrong-size result, ConfigError when the
/// spec cannot produce `scale`.
UpscaleOutput run_upscaler(const UpscalerSpec& spec, const std::filesystem::path& input, int scale,
                           const std::filesystem::path& output);

/// Manifest of factor-1 sources plus every (spec, factor) the spec covers,
/// in source, spec, factor order. Upscales run on `jobs` workers; a failed
/// stimulus is listed under failures instead of entries. Paths are relative
/// to work_dir.
[[nodiscard]] DatasetManifest build_dataset(const std::vector<PreparedSource>& sources,
                                            const std::vector<UpscalerSpec>& specs, const std::set<int>& factors,
                                            const std::filesystem::path& work_dir, int jobs = 1);

}  // namespace uab
