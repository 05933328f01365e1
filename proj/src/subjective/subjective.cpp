#include "uab/subjective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "uab/csv.hpp"
#include "uab/error.hpp"
#include "uab/io.hpp"

namespace uab {

namespace {

using nlohmann::ordered_json;

using MosIndex = std::unordered_map<std::string, double>;

MosIndex index_mos(std::span<const MosEntry> entries) {
    MosIndex out;
    for (const auto& e : entries) {
        out[e.stimulus_id] = e.mos;
    }
    return out;
}

// (src_id, method, factor) -> manifest entry.
class StimulusLookup {
public:
    StimulusLookup(const DatasetManifest& manifest, const MosIndex& mos) : mos_(mos) {
        for (const auto& e : manifest.entries) {
            by_key_.emplace(std::make_tuple(e.src_id, e.method, e.factor), &e);
        }
    }

    // nullopt when the manifest has no such stimulus; MissingStimulus when
    // it has one that was never rated.
    [[nodiscard]] std::optional<double> mos(const std::string& src, const std::string& method, int factor) const {
        const auto it = by_key_.find(std::make_tuple(src, method, factor));
        if (it == by_key_.end()) {
            return std::nullopt;
        }
        const auto m = mos_.find(it->second->stimulus_id);
        if (m == mos_.end()) {
            throw MissingStimulus(fmt::format("no MOS for stimulus {}", it->second->stimulus_id));
        }
        return m->second;
    }

private:
    const MosIndex& mos_;
    std::map<std::tuple<std::string, std::string, int>, const ManifestEntry*> by_key_;
};

std::vector<int> upscaled_factors(const DatasetManifest& manifest) {
    std::set<int> factors;
    for (const auto& e : manifest.entries) {
        if (e.factor != 1) {
            factors.insert(e.factor);
        }
    }
    return {factors.begin(), factors.end()};
}

std::vector<std::string> methods_at(const DatasetManifest& manifest, int factor) {
    std::vector<std::string> out;
    for (const auto& m : manifest.methods()) {
        const bool present = std::any_of(manifest.entries.begin(), manifest.entries.end(),
                                         [&](const ManifestEntry& e) { return e.method == m && e.factor == factor; });
        if (present) {
            out.push_back(m);
        }
    }
    return out;
}

ordered_json row_json(const SourcePreferenceRow& r) {
    return {{"factor", r.factor},
            {"yes", r.yes},
            {"no", r.no},
            {"yes_percent", r.yes_percent()},
            {"no_percent", r.no_percent()}};
}

}  // namespace

RatingSet parse_ratings(std::string_view csv_text) {
    const CsvTable table = parse_csv(csv_text);
    const std::size_t c_participant = table.column("participant_id");
    const std::size_t c_stimulus = table.column("stimulus_id");
    const std::size_t c_rating = table.column("rating");

    RatingSet out;
    std::map<std::pair<std::string, std::string>, std::size_t> seen;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::size_t line = table.line_numbers[r];
        if (row[c_participant].empty() || row[c_stimulus].empty()) {
            throw ParseError("empty participant_id or stimulus_id", line);
        }
        const auto score = parse_integer(row[c_rating]);
        if (!score) {
            throw ParseError(fmt::format("rating \"{}\" is not an integer", row[c_rating]), line);
        }
        if (*score < 1 || *score > 5) {
            throw RangeError(fmt::format("rating {} outside 1..5", *score), line);
        }
        RatingRecord rec{row[c_participant], row[c_stimulus], static_cast<int>(*score)};
        auto key = std::make_pair(rec.participant_id, rec.stimulus_id);
        const auto it = seen.find(key);
        if (it != seen.end()) {
            out.warnings.push_back(fmt::format("line {}: duplicate rating by {} for {}; keeping the later one", line,
                                               rec.participant_id, rec.stimulus_id));
            out.records[it->second] = std::move(rec);
        } else {
            seen.emplace(std::move(key), out.records.size());
            out.records.push_back(std::move(rec));
        }
    }
    return out;
}

RatingSet load_ratings(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return parse_ratings(text);
    } catch (const RangeError& e) {
        throw RangeError(fmt::format("{}: {}", path.string(), e.detail()), e.line());
    } catch (const ParseError& e) {
        throw ParseError(fmt::format("{}: {}", path.string(), e.detail()), e.line());
    }
}

double t_quantile_975(int dof) {
    if (dof < 1) {
        throw InsufficientData("t quantile needs at least one degree of freedom");
    }
    const boost::math::students_t dist(static_cast<double>(dof));
    return boost::math::quantile(dist, 0.975);
}

std::vector<MosEntry> compute_mos(std::span<const RatingRecord> records) {
    std::map<std::string, std::vector<int>> by_stimulus;
    for (const auto& r : records) {
        by_stimulus[r.stimulus_id].push_back(r.score);
    }
    std::vector<MosEntry> out;
    out.reserve(by_stimulus.size());
    for (auto& [id, scores] : by_stimulus) {
        // Sorting makes the sums independent of record order.
        std::sort(scores.begin(), scores.end());
        const int n = static_cast<int>(scores.size());
        long sum = 0;
        for (int s : scores) {
            sum += s;
        }
        MosEntry e;
        e.stimulus_id = id;
        e.n = n;
        e.mos = static_cast<double>(sum) / n;
        if (n >= 2) {
            double ss = 0.0;
            for (int s : scores) {
                ss += (s - e.mos) * (s - e.mos);
            }
            e.sd = std::sqrt(ss / (n - 1));
            e.ci95 = t_quantile_975(n - 1) * e.sd / std::sqrt(static_cast<double>(n));
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::string mos_to_csv(std::span<const MosEntry> entries) {
    std::ostringstream out;
    write_csv_row(out, {"stimulus_id", "n", "mos", "sd", "ci95"});
    for (const auto& e : entries) {
        write_csv_row(out, {e.stimulus_id, std::to_string(e.n), format_real(e.mos), format_real(e.sd),
                            format_real(e.ci95)});
    }
    return out.str();
}

std::vector<MosEntry> mos_from_csv(std::string_view csv_text) {
    const CsvTable table = parse_csv(csv_text);
    const std::size_t c_id = table.column("stimulus_id");
    const std::size_t c_mos = table.column("mos");
    const auto c_n = table.find_column("n");
    const auto c_sd = table.find_column("sd");
    const auto c_ci = table.find_column("ci95");
    std::vector<MosEntry> out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::size_t line = table.line_numbers[r];
        MosEntry e;
        e.stimulus_id = row[c_id];
        const auto mos = parse_real(row[c_mos]);
        if (!mos || !std::isfinite(*mos)) {
            throw ParseError(fmt::format("mos \"{}\" is not a number", row[c_mos]), line);
        }
        e.mos = *mos;
        if (c_n) {
            const auto n = parse_integer(row[*c_n]);
            if (!n || *n < 1) {
                throw ParseError(fmt::format("n \"{}\" is not a positive integer", row[*c_n]), line);
            }
            e.n = static_cast<int>(*n);
        }
        if (c_sd && !row[*c_sd].empty()) {
            const auto sd = parse_real(row[*c_sd]);
            if (!sd) {
                throw ParseError(fmt::format("sd \"{}\" is not a number", row[*c_sd]), line);
            }
            e.sd = *sd;
        }
        if (c_ci && !row[*c_ci].empty()) {
            e.ci95 = parse_real(row[*c_ci]);
            if (!e.ci95) {
                throw ParseError(fmt::format("ci95 \"{}\" is not a number", row[*c_ci]), line);
            }
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<MosEntry> read_mos(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return mos_from_csv(text);
    } catch (const ParseError& e) {
        throw ParseError(fmt::format("{}: {}", path.string(), e.detail()), e.line());
    }
}

double sos_shape(double mos) { return -mos * mos + 6.0 * mos - 5.0; }

SosFit fit_sos(std::span<const MosEntry> entries) {
    double num = 0.0;
    double den = 0.0;
    std::size_t points = 0;
    for (const auto& e : entries) {
        if (e.n < 2) {
            continue;
        }
        const double g = sos_shape(e.mos);
        num += g * e.sd * e.sd;
        den += g * g;
        ++points;
    }
    if (points < 2) {
        throw InsufficientData(fmt::format("SOS fit needs two stimuli with n >= 2, have {}", points));
    }
    SosFit fit;
    fit.n_points = points;
    fit.a = den > 0.0 ? std::clamp(num / den, 0.0, 1.0) : 0.0;
    double ss = 0.0;
    for (const auto& e : entries) {
        if (e.n < 2) {
            continue;
        }
        const double r = e.sd * e.sd - fit.a * sos_shape(e.mos);
        ss += r * r;
    }
    fit.residual_rms = std::sqrt(ss / static_cast<double>(points));
    return fit;
}

std::vector<MethodPreference> preference_per_image(std::span<const MosEntry> entries,
                                                   const DatasetManifest& manifest) {
    const MosIndex mos = index_mos(entries);
    const StimulusLookup lookup(manifest, mos);
    std::vector<MethodPreference> out;
    for (int factor : upscaled_factors(manifest)) {
        const auto methods = methods_at(manifest, factor);
        for (const auto& src : manifest.sources()) {
            MethodPreference pref;
            pref.src_id = src;
            pref.factor = factor;
            pref.best_mos = -std::numeric_limits<double>::infinity();
            for (const auto& m : methods) {
                const auto v = lookup.mos(src, m, factor);
                if (!v) {
                    throw MissingStimulus(fmt::format("no {} stimulus for {} at x{}", m, src, factor));
                }
                if (*v > pref.best_mos) {
                    pref.best_mos = *v;
                    pref.best_methods = {m};
                } else if (*v == pref.best_mos) {
                    pref.best_methods.push_back(m);
                }
            }
            pref.tie = pref.best_methods.size() > 1;
            out.push_back(std::move(pref));
        }
    }
    return out;
}

std::map<int, std::map<std::string, PreferenceCounts>> preference_counts(std::span<const MethodPreference> prefs,
                                                                         const DatasetManifest& manifest) {
    std::map<int, std::map<std::string, PreferenceCounts>> out;
    for (int factor : upscaled_factors(manifest)) {
        for (const auto& m : methods_at(manifest, factor)) {
            out[factor][m];
        }
    }
    for (const auto& p : prefs) {
        for (const auto& m : p.best_methods) {
            auto& c = out[p.factor][m];
            (p.tie ? c.tied_wins : c.wins) += 1;
        }
    }
    return out;
}

double SourcePreferenceRow::yes_percent() const {
    const int total = yes + no;
    return total == 0 ? 0.0 : 100.0 * yes / total;
}

double SourcePreferenceRow::no_percent() const {
    const int total = yes + no;
    return total == 0 ? 0.0 : 100.0 * no / total;
}

SourcePreference source_preference(std::span<const MosEntry> entries, const DatasetManifest& manifest) {
    const MosIndex mos = index_mos(entries);
    const StimulusLookup lookup(manifest, mos);
    const std::string source(kSourceMethod);
    SourcePreference out;
    for (int factor : upscaled_factors(manifest)) {
        const auto methods = methods_at(manifest, factor);
        SourcePreferenceRow best_row{factor, 0, 0};
        std::map<std::string, SourcePreferenceRow> method_rows;
        for (const auto& m : methods) {
            method_rows[m] = {factor, 0, 0};
        }
        for (const auto& src : manifest.sources()) {
            const auto src_mos = lookup.mos(src, source, 1);
            if (!src_mos) {
                throw MissingStimulus(fmt::format("no factor-1 stimulus for source {}", src));
            }
            std::optional<double> best;
            for (const auto& m : methods) {
                const auto v = lookup.mos(src, m, factor);
                if (!v) {
                    continue;
                }
                best = best ? std::max(*best, *v) : *v;
                auto& row = method_rows[m];
                (*src_mos - *v > 0.0 ? row.yes : row.no) += 1;
            }
            if (!best) {
                throw MissingStimulus(fmt::format("no upscaled stimulus for {} at x{}", src, factor));
            }
            (*src_mos - *best > 0.0 ? best_row.yes : best_row.no) += 1;
        }
        out.best_of.push_back(best_row);
        for (auto& [m, row] : method_rows) {
            out.per_method[m].push_back(row);
        }
    }
    return out;
}

VoteStats vote_stats(std::span<const RatingRecord> records, std::span<const MosEntry> entries) {
    VoteStats s;
    std::set<std::string_view> participants;
    for (const auto& r : records) {
        participants.insert(r.participant_id);
    }
    s.participants = participants.size();
    s.stimuli = entries.size();
    if (entries.empty()) {
        return s;
    }
    s.min_votes = std::numeric_limits<int>::max();
    long total = 0;
    for (const auto& e : entries) {
        s.min_votes = std::min(s.min_votes, e.n);
        s.max_votes = std::max(s.max_votes, e.n);
        total += e.n;
    }
    s.mean_votes = static_cast<double>(total) / static_cast<double>(entries.size());
    return s;
}

MosGroups group_mos(std::span<const MosEntry> entries, const DatasetManifest& manifest) {
    const MosIndex mos = index_mos(entries);
    MosGroups g;
    for (const auto& e : manifest.entries) {
        const auto it = mos.find(e.stimulus_id);
        if (it == mos.end()) {
            continue;
        }
        g.by_factor[e.factor].push_back(it->second);
        if (e.method != kSourceMethod) {
            g.by_method[e.method][e.factor].push_back(it->second);
        }
    }
    return g;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

AnalysisReport analyze(std::span<const RatingRecord> records, std::span<const MosEntry> entries,
                       const DatasetManifest& manifest) {
    AnalysisReport report;
    std::vector<MosEntry> known;
    std::size_t unknown = 0;
    std::unordered_map<std::string_view, bool> in_manifest;
    for (const auto& e : manifest.entries) {
        in_manifest[e.stimulus_id] = true;
    }
    for (const auto& e : entries) {
        if (in_manifest.count(e.stimulus_id) != 0) {
            known.push_back(e);
        } else {
            ++unknown;
        }
    }
    if (unknown > 0) {
        report.warnings.push_back(fmt::format("{} rated stimuli are not in the manifest and were ignored", unknown));
    }
    report.votes = vote_stats(records, known);
    try {
        report.sos = fit_sos(known);
    } catch (const InsufficientData& e) {
        report.warnings.push_back(fmt::format("SOS fit skipped: {}", e.what()));
    }
    try {
        report.preferences = preference_per_image(known, manifest);
        report.preference_counts = preference_counts(report.preferences, manifest);
    } catch (const MissingStimulus& e) {
        report.warnings.push_back(fmt::format("per-image preference skipped: {}", e.what()));
    }
    try {
        report.source_preference = source_preference(known, manifest);
    } catch (const MissingStimulus& e) {
        report.warnings.push_back(fmt::format("source preference skipped: {}", e.what()));
    }
    const MosGroups groups = group_mos(known, manifest);
    for (const auto& [factor, values] : groups.by_factor) {
        report.median_by_factor[factor] = quantile(values, 0.5);
    }
    for (const auto& [method, by_factor] : groups.by_method) {
        for (const auto& [factor, values] : by_factor) {
            report.median_by_method[method][factor] = quantile(values, 0.5);
        }
    }
    return report;
}

std::string analysis_to_json(const AnalysisReport& report) {
    ordered_json doc;
    doc["votes"] = {{"participants", report.votes.participants},
                    {"stimuli", report.votes.stimuli},
                    {"min_votes", report.votes.min_votes},
                    {"max_votes", report.votes.max_votes},
                    {"mean_votes", report.votes.mean_votes}};
    if (report.sos) {
        doc["sos"] = {{"a", report.sos->a}, {"residual_rms", report.sos->residual_rms},
                      {"n_points", report.sos->n_points}};
    } else {
        doc["sos"] = nullptr;
    }

    ordered_json best_of = ordered_json::array();
    for (const auto& r : report.source_preference.best_of) {
        best_of.push_back(row_json(r));
    }
    ordered_json per_method = ordered_json::object();
    for (const auto& [m, rows] : report.source_preference.per_method) {
        ordered_json arr = ordered_json::array();
        for (const auto& r : rows) {
            arr.push_back(row_json(r));
        }
        per_method[m] = std::move(arr);
    }
    doc["source_preference"] = {{"best_of", std::move(best_of)}, {"per_method", std::move(per_method)}};

    ordered_json counts = ordered_json::object();
    for (const auto& [factor, by_method] : report.preference_counts) {
        ordered_json f = ordered_json::object();
        for (const auto& [m, c] : by_method) {
            f[m] = {{"wins", c.wins}, {"tied_wins", c.tied_wins}};
        }
        counts[fmt::format("x{}", factor)] = std::move(f);
    }
    doc["preference_counts"] = std::move(counts);

    ordered_json prefs = ordered_json::array();
    for (const auto& p : report.preferences) {
        prefs.push_back({{"src_id", p.src_id},
                         {"factor", p.factor},
                         {"best_methods", p.best_methods},
                         {"best_mos", p.best_mos},
                         {"tie", p.tie}});
    }
    doc["preferences"] = std::move(prefs);

    ordered_json med = ordered_json::object();
    for (const auto& [factor, v] : report.median_by_factor) {
        med[fmt::format("x{}", factor)] = v;
    }
    doc["median_mos_by_factor"] = std::move(med);
    ordered_json med_m = ordered_json::object();
    for (const auto& [m, by_factor] : report.median_by_method) {
        ordered_json f = ordered_json::object();
        for (const auto& [factor, v] : by_factor) {
            f[fmt::format("x{}", factor)] = v;
        }
        med_m[m] = std::move(f);
    }
    doc["median_mos_by_method"] = std::move(med_m);
    doc["warnings"] = report.warnings;
    return doc.dump(2) + "\n";
}

}  // namespace uab
