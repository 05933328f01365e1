#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uab/manifest.hpp"

namespace uab {

struct RatingRecord {
    std::string participant_id;
    std::string stimulus_id;
    int score = 0;  // 1..5
};

struct RatingSet {
    std::vector<RatingRecord> records;  // file order, duplicates removed
    std::vector<std::string> warnings;
};

/// Columns participant_id, stimulus_id, rating (any order). A repeated
/// (participant, stimulus) pair keeps the later row and warns. Throws
/// ParseError for malformed rows and RangeError for ratings outside 1..5.
[[nodiscard]] RatingSet parse_ratings(std::string_view csv_text);
[[nodiscard]] RatingSet load_ratings(const std::filesystem::path& path);

struct MosEntry {
    std::string stimulus_id;
    int n = 0;
    double mos = 0.0;
    double sd = 0.0;               // sample SD; 0 when n == 1
    std::optional<double> ci95;    // t(0.975, n-1) * sd / sqrt(n); absent when n == 1
};

/// One entry per stimulus, sorted by stimulus_id.
[[nodiscard]] std::vector<MosEntry> compute_mos(std::span<const RatingRecord> records);

/// Student-t 0.975 quantile with `dof` degrees of freedom.
[[nodiscard]] double t_quantile_975(int dof);

/// Header stimulus_id,n,mos,sd,ci95.
[[nodiscard]] std::string mos_to_csv(std::span<const MosEntry> entries);
/// Reads the MOS CSV; only stimulus_id and mos are required (n, sd, ci95
/// are optional columns).
[[nodiscard]] std::vector<MosEntry> mos_from_csv(std::string_view csv_text);
[[nodiscard]] std::vector<MosEntry> read_mos(const std::filesystem::path& path);

struct SosFit {
    double a = 0.0;
    double residual_rms = 0.0;  // RMS of sd^2 - a*g(mos)
    std::size_t n_points = 0;
};

/// g(x) = -x^2 + 6x - 5, the SOS^2 shape on a five-point scale.
[[nodiscard]] double sos_shape(double mos);

/// Least squares of sd^2 = a*g(mos) over entries with n >= 2, a clamped to
/// [0,1]. Throws InsufficientData with fewer than two such entries.
[[nodiscard]] SosFit fit_sos(std::span<const MosEntry> entries);

struct MethodPreference {
    std::string src_id;
    int factor = 0;
    std::vector<std::string> best_methods;  // more than one only on ties
    double best_mos = 0.0;
    bool tie = false;
};

/// Argmax of MOS over the upscalers at each (source, factor) in manifest
/// order. Every upscaler seen at a factor must be rated for every source at
/// that factor, else MissingStimulus.
[[nodiscard]] std::vector<MethodPreference> preference_per_image(std::span<const MosEntry> entries,
                                                                 const DatasetManifest& manifest);

struct PreferenceCounts {
    int wins = 0;       // sole best
    int tied_wins = 0;  // best together with another method
};

/// factor -> method -> counts, every manifest method listed.
[[nodiscard]] std::map<int, std::map<std::string, PreferenceCounts>> preference_counts(
    std::span<const MethodPreference> prefs, const DatasetManifest& manifest);

struct SourcePreferenceRow {
    int factor = 0;
    int yes = 0;  // source preferred: mos(src) - mos(upscaled) > 0
    int no = 0;
    [[nodiscard]] double yes_percent() const;
    [[nodiscard]] double no_percent() const;
};

struct SourcePreference {
    /// Compared against the best upscaled MOS at each factor.
    std::vector<SourcePreferenceRow> best_of;
    /// Compared against each method separately.
    std::map<std::string, std::vector<SourcePreferenceRow>> per_method;
};

/// Throws MissingStimulus when a source has no factor-1 MOS or a factor has
/// no rated upscaled stimulus for it.
[[nodiscard]] SourcePreference source_preference(std::span<const MosEntry> entries,
                                                 const DatasetManifest& manifest);

struct VoteStats {
    std::size_t participants = 0;
    std::size_t stimuli = 0;
    int min_votes = 0;
    int max_votes = 0;
    double mean_votes = 0.0;
};

[[nodiscard]] VoteStats vote_stats(std::span<const RatingRecord> records, std::span<const MosEntry> entries);

/// MOS values grouped by factor and by (method, factor); manifest order.
struct MosGroups {
    std::map<int, std::vector<double>> by_factor;
    std::map<std::string, std::map<int, std::vector<double>>> by_method;
};

[[nodiscard]] MosGroups group_mos(std::span<const MosEntry> entries, const DatasetManifest& manifest);

/// Linear-interpolated quantile (type 7) of unsorted values; empty -> NaN.
[[nodiscard]] double quantile(std::vector<double> values, double q);

struct AnalysisReport {
    VoteStats votes;
    std::optional<SosFit> sos;  // absent when fewer than two entries have n >= 2
    std::vector<MethodPreference> preferences;
    std::map<int, std::map<std::string, PreferenceCounts>> preference_counts;
    SourcePreference source_preference;
    std::map<int, double> median_by_factor;
    std::map<std::string, std::map<int, double>> median_by_method;
    std::vector<std::string> warnings;
};

/// Full analysis of ratings against a manifest. Rated stimuli unknown to the
/// manifest are dropped with a warning; preference sections are skipped with
/// a warning when coverage is incomplete.
[[nodiscard]] AnalysisReport analyze(std::span<const RatingRecord> records, std::span<const MosEntry> entries,
                                     const DatasetManifest& manifest);

[[nodiscard]] std::string analysis_to_json(const AnalysisReport& report);

}  // namespace uab
