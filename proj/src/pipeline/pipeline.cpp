#include "uab/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include <fmt/format.h>

#include "uab/csv.hpp"
#include "uab/error.hpp"
#include "uab/imaging.hpp"
#include "uab/parallel.hpp"

namespace uab {

namespace {

FeatureVector empty_row(const std::string& id, const std::string& why) {
    FeatureVector fv;
    fv.stimulus_id = id;
    fv.diagnostics.push_back(why);
    return fv;
}

std::string join_ids(const std::vector<std::string>& ids) {
    constexpr std::size_t kShown = 20;
    std::string out;
    for (std::size_t i = 0; i < ids.size() && i < kShown; ++i) {
        out += (i == 0 ? "" : ", ") + ids[i];
    }
    if (ids.size() > kShown) {
        out += fmt::format(" and {} more", ids.size() - kShown);
    }
    return out;
}

}  // namespace

FeatureRun features_for_manifest(const DatasetManifest& manifest, const std::filesystem::path& manifest_path,
                                 int jobs) {
    const auto& entries = manifest.entries;
    FeatureRun run;
    run.rows.resize(entries.size());
    std::vector<std::string> errors(entries.size());
    parallel_for(entries.size(), jobs, [&](std::size_t i) {
        const auto& e = entries[i];
        try {
            run.rows[i] = extract_features(decode(resolve_entry_path(manifest_path, e)), e.stimulus_id);
        } catch (const Error& err) {
            errors[i] = err.what();
            run.rows[i] = empty_row(e.stimulus_id, err.what());
        }
    });
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!errors[i].empty()) {
            ++run.failed_images;
            run.warnings.push_back(fmt::format("{}: {}", entries[i].stimulus_id, errors[i]));
        }
        for (const auto& d : run.rows[i].diagnostics) {
            if (errors[i].empty()) {
                run.warnings.push_back(fmt::format("{}: {}", entries[i].stimulus_id, d));
            }
        }
    }
    return run;
}

FrRun fr_scores_for_manifest(const DatasetManifest& manifest, const std::filesystem::path& manifest_path, int jobs) {
    std::map<std::string, const ManifestEntry*> reference_of;
    for (const auto& e : manifest.entries) {
        if (e.method == kSourceMethod) {
            reference_of[e.src_id] = &e;
        }
    }
    std::vector<const ManifestEntry*> targets;
    for (const auto& e : manifest.entries) {
        if (e.method != kSourceMethod) {
            targets.push_back(&e);
        }
    }
    std::vector<std::vector<FrScore>> scores(targets.size());
    std::vector<std::string> errors(targets.size());
    parallel_for(targets.size(), jobs, [&](std::size_t i) {
        const auto& e = *targets[i];
        try {
            const auto ref = reference_of.find(e.src_id);
            if (ref == reference_of.end()) {
                throw MissingStimulus(fmt::format("no factor-1 image for source {}", e.src_id));
            }
            scores[i] = full_reference_scores(decode(resolve_entry_path(manifest_path, *ref->second)),
                                              decode(resolve_entry_path(manifest_path, e)), e.stimulus_id);
        } catch (const Error& err) {
            errors[i] = err.what();
        }
    });
    FrRun run;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (!errors[i].empty()) {
            ++run.failed_images;
            run.warnings.push_back(fmt::format("{}: {}", targets[i]->stimulus_id, errors[i]));
        }
        run.scores.insert(run.scores.end(), scores[i].begin(), scores[i].end());
    }
    return run;
}

std::string fr_scores_to_csv(std::span<const FrScore> scores) {
    std::ostringstream out;
    write_csv_row(out, {"stimulus_id", "model", "score"});
    for (const auto& s : scores) {
        write_csv_row(out, {s.stimulus_id, s.metric, format_real(s.value)});
    }
    return out.str();
}

FeatureMatrix to_matrix(std::span<const FeatureVector> rows) {
    FeatureMatrix x(0, FeatureVector::kNames.size());
    std::vector<double> buf(FeatureVector::kNames.size());
    for (const auto& fv : rows) {
        const auto values = fv.values();
        for (std::size_t c = 0; c < values.size(); ++c) {
            buf[c] = values[c].value_or(std::numeric_limits<double>::quiet_NaN());
        }
        x.append_row(buf);
    }
    return x;
}

JoinedTable join_features_mos(std::span<const FeatureVector> features, std::span<const MosEntry> mos) {
    std::map<std::string, const FeatureVector*> by_id;
    for (const auto& fv : features) {
        if (!by_id.emplace(fv.stimulus_id, &fv).second) {
            throw JoinError(fmt::format("duplicate stimulus_id {} in features", fv.stimulus_id));
        }
    }
    std::map<std::string, double> mos_of;
    for (const auto& m : mos) {
        if (!mos_of.emplace(m.stimulus_id, m.mos).second) {
            throw JoinError(fmt::format("duplicate stimulus_id {} in MOS", m.stimulus_id));
        }
    }
    std::vector<std::string> only_features;
    std::vector<std::string> only_mos;
    for (const auto& [id, fv] : by_id) {
        if (mos_of.count(id) == 0) {
            only_features.push_back(id);
        }
    }
    for (const auto& [id, v] : mos_of) {
        if (by_id.count(id) == 0) {
            only_mos.push_back(id);
        }
    }
    if (!only_features.empty() || !only_mos.empty()) {
        std::string msg = "feature and MOS tables do not match";
        if (!only_features.empty()) {
            msg += fmt::format("; {} only in features: {}", only_features.size(), join_ids(only_features));
        }
        if (!only_mos.empty()) {
            msg += fmt::format("; {} only in MOS: {}", only_mos.size(), join_ids(only_mos));
        }
        throw JoinError(msg);
    }
    JoinedTable t;
    std::vector<FeatureVector> ordered;
    for (const auto& [id, fv] : by_id) {
        t.ids.push_back(id);
        t.mos.push_back(mos_of.at(id));
        ordered.push_back(*fv);
    }
    t.x = to_matrix(ordered);
    return t;
}

std::size_t expected_patch_count(const DatasetManifest& manifest, int patch_size) {
    if (patch_size <= 0) {
        throw InvalidDimension(fmt::format("patch size {} must be positive", patch_size));
    }
    std::size_t total = 0;
    for (const auto& e : manifest.entries) {
        total += static_cast<std::size_t>(e.width / patch_size) * static_cast<std::size_t>(e.height / patch_size);
    }
    return total;
}

PatchRun patch_dataset(const DatasetManifest& manifest, const std::filesystem::path& manifest_path, int patch_size,
                       const std::filesystem::path& patch_dir, int jobs) {
    const auto& entries = manifest.entries;
    if (!patch_dir.empty()) {
        for (const auto& e : entries) {
            std::filesystem::create_directories(patch_dir / e.method);
        }
    }
    std::vector<std::vector<PatchRecord>> records(entries.size());
    std::vector<std::vector<FeatureVector>> features(entries.size());
    std::vector<std::string> errors(entries.size());
    parallel_for(entries.size(), jobs, [&](std::size_t i) {
        const auto& e = entries[i];
        try {
            const PatchGrid grid = extract_patches(decode(resolve_entry_path(manifest_path, e)), patch_size);
            for (int r = 0; r < grid.rows; ++r) {
                for (int c = 0; c < grid.cols; ++c) {
                    PatchRecord rec{fmt::format("{}_r{}_c{}", e.stimulus_id, r, c), e.stimulus_id, e.src_id,
                                    e.method, e.factor, r, c};
                    const ImageBuffer& patch = grid.patches[static_cast<std::size_t>(r * grid.cols + c)];
                    if (!patch_dir.empty()) {
                        encode_png(patch, patch_dir / e.method / (rec.patch_id + ".png"));
                    }
                    features[i].push_back(extract_features(patch, rec.patch_id));
                    records[i].push_back(std::move(rec));
                }
            }
        } catch (const Error& err) {
            errors[i] = err.what();
            records[i].clear();
            features[i].clear();
        }
    });
    PatchRun run;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!errors[i].empty()) {
            ++run.failed_images;
            run.warnings.push_back(fmt::format("{}: {}", entries[i].stimulus_id, errors[i]));
        }
        std::move(records[i].begin(), records[i].end(), std::back_inserter(run.patches));
        std::move(features[i].begin(), features[i].end(), std::back_inserter(run.features));
    }
    return run;
}

std::string patch_index_to_csv(std::span<const PatchRecord> patches, bool with_paths) {
    std::ostringstream out;
    write_csv_row(out, {"patch_id", "stimulus_id", "src_id", "method", "factor", "row", "col", "path"});
    for (const auto& p : patches) {
        write_csv_row(out, {p.patch_id, p.stimulus_id, p.src_id, p.method, std::to_string(p.factor),
                            std::to_string(p.row), std::to_string(p.col),
                            with_paths ? p.method + "/" + p.patch_id + ".png" : std::string()});
    }
    return out.str();
}

std::string patch_features_to_csv(std::span<const PatchRecord> patches, std::span<const FeatureVector> features) {
    if (patches.size() != features.size()) {
        throw LengthMismatch(fmt::format("{} patches, {} feature rows", patches.size(), features.size()));
    }
    std::ostringstream out;
    std::vector<std::string> fields = {"patch_id", "stimulus_id", "label"};
    fields.insert(fields.end(), FeatureVector::kNames.begin(), FeatureVector::kNames.end());
    write_csv_row(out, fields);
    for (std::size_t i = 0; i < patches.size(); ++i) {
        fields = {patches[i].patch_id, patches[i].stimulus_id, patches[i].method};
        for (const auto& v : features[i].values()) {
            fields.push_back(format_real(v));
        }
        write_csv_row(out, fields);
    }
    return out.str();
}

PatchTable patch_features_from_csv(std::string_view csv_text) {
    const CsvTable table = parse_csv(csv_text);
    const std::size_t c_patch = table.column("patch_id");
    const std::size_t c_stim = table.column("stimulus_id");
    const std::size_t c_label = table.column("label");
    std::vector<std::size_t> cols;
    for (const auto name : FeatureVector::kNames) {
        cols.push_back(table.column(name));
    }
    PatchTable out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        out.patch_ids.push_back(row[c_patch]);
        out.stimulus_ids.push_back(row[c_stim]);
        out.labels.push_back(row[c_label]);
        FeatureVector fv;
        fv.stimulus_id = row[c_patch];
        for (std::size_t i = 0; i < cols.size(); ++i) {
            const std::string& field = row[cols[i]];
            if (field.empty()) {
                continue;
            }
            const auto v = parse_real(field);
            if (!v || !std::isfinite(*v)) {
                throw ParseError(fmt::format("{} \"{}\" is not a finite number", FeatureVector::kNames[i], field),
                                 table.line_numbers[r]);
            }
            fv.set(i, *v);
        }
        out.features.push_back(std::move(fv));
    }
    return out;
}

}  // namespace uab
