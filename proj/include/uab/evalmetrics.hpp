#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace uab {

/// Pearson, Kendall (tau-b) and Spearman against a common target. A
/// coefficient is empty when it is undefined (zero variance on either side).
struct CorrelationTriple {
    std::optional<double> pearson;
    std::optional<double> kendall;
    std::optional<double> spearman;
    std::size_t n = 0;
};

// All three throw LengthMismatch for unequal lengths, InsufficientData for
// fewer than two samples and ZeroVariance when either side is constant.
[[nodiscard]] double pearson(std::span<const double> x, std::span<const double> y);
[[nodiscard]] double spearman(std::span<const double> x, std::span<const double> y);
/// Tau-b in O(n log n) (Knight's merge-sort scheme).
[[nodiscard]] double kendall(std::span<const double> x, std::span<const double> y);

/// 1-based ranks with ties sharing their average rank.
[[nodiscard]] std::vector<double> average_ranks(std::span<const double> v);

/// Never throws on zero variance; those coefficients come back empty.
[[nodiscard]] CorrelationTriple correlate(std::span<const double> x, std::span<const double> y);

struct ClassificationReport {
    double accuracy = 0.0;
    double f1 = 0.0;         // support-weighted
    double precision = 0.0;  // support-weighted
    double recall = 0.0;     // support-weighted
    double mcc = 0.0;
    /// confusion[truth][predicted]
    std::vector<std::vector<std::size_t>> confusion;
    std::vector<std::string> class_names;
};

/// Labels are indices into `class_names`.
[[nodiscard]] ClassificationReport classification_report(std::span<const int> truth,
                                                         std::span<const int> predicted,
                                                         std::vector<std::string> class_names);

/// String labels; the class list is the sorted union of both sides.
[[nodiscard]] ClassificationReport classification_report(std::span<const std::string> truth,
                                                         std::span<const std::string> predicted);

struct NamedCorrelation {
    std::string name;
    CorrelationTriple triple;
};

/// Descending Pearson, undefined coefficients last, name as tie-breaker.
void sort_by_pearson(std::vector<NamedCorrelation>& rows);

struct ScoreComparison {
    std::vector<NamedCorrelation> models;  // sorted by Pearson
    std::vector<std::string> warnings;
    std::size_t skipped_rows = 0;
};

/// Reads `stimulus_id,model,score` rows and correlates each model with `mos`.
/// Rows naming stimuli absent from `mos` are skipped with a warning.
[[nodiscard]] ScoreComparison ingest_external_scores(const std::filesystem::path& path,
                                                     const std::map<std::string, double>& mos);

}  // namespace uab
