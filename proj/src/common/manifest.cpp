#include "uab/manifest.hpp"

#include <map>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "uab/error.hpp"
#include "uab/io.hpp"

namespace uab {

namespace {

using nlohmann::ordered_json;

template <typename T>
T required(const ordered_json& obj, const char* key, std::size_t index) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        throw FormatError(fmt::format("manifest record {}: missing \"{}\"", index, key));
    }
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw FormatError(fmt::format("manifest record {}: \"{}\" has the wrong type", index, key));
    }
}

}  // namespace

const ManifestEntry* DatasetManifest::find(std::string_view stimulus_id) const {
    for (const auto& e : entries) {
        if (e.stimulus_id == stimulus_id) {
            return &e;
        }
    }
    return nullptr;
}

std::vector<std::string> DatasetManifest::methods() const {
    std::vector<std::string> out;
    std::set<std::string, std::less<>> seen;
    for (const auto& e : entries) {
        if (e.method != kSourceMethod && seen.insert(e.method).second) {
            out.push_back(e.method);
        }
    }
    return out;
}

std::vector<std::string> DatasetManifest::sources() const {
    std::vector<std::string> out;
    std::set<std::string, std::less<>> seen;
    for (const auto& e : entries) {
        if (seen.insert(e.src_id).second) {
            out.push_back(e.src_id);
        }
    }
    return out;
}

std::string stimulus_id_for(std::string_view src_id, std::string_view method, int factor) {
    return fmt::format("{}_{}_x{}", src_id, method, factor);
}

void validate_manifest(const DatasetManifest& manifest) {
    std::set<std::string, std::less<>> ids;
    std::map<std::string, int, std::less<>> sources_at_x1;
    for (const auto& e : manifest.entries) {
        if (!ids.insert(e.stimulus_id).second) {
            throw FormatError(fmt::format("duplicate stimulus_id {}", e.stimulus_id));
        }
        if (e.factor != 1 && e.factor != 2 && e.factor != 4) {
            throw FormatError(fmt::format("{}: factor {} not in {{1,2,4}}", e.stimulus_id, e.factor));
        }
        if ((e.factor == 1) != (e.method == kSourceMethod)) {
            throw FormatError(fmt::format("{}: factor 1 is reserved for method \"source\"", e.stimulus_id));
        }
        auto& count = sources_at_x1[e.src_id];
        if (e.factor == 1) {
            ++count;
        }
    }
    for (const auto& [src, count] : sources_at_x1) {
        if (count != 1) {
            throw FormatError(fmt::format("source {} has {} factor-1 entries", src, count));
        }
    }
}

std::filesystem::path resolve_entry_path(const std::filesystem::path& manifest_path, const ManifestEntry& entry) {
    const std::filesystem::path p(entry.path);
    return p.is_absolute() ? p : manifest_path.parent_path() / p;
}

std::string manifest_to_json(const DatasetManifest& manifest) {
    ordered_json entries = ordered_json::array();
    for (const auto& e : manifest.entries) {
        entries.push_back({{"stimulus_id", e.stimulus_id},
                           {"src_id", e.src_id},
                           {"method", e.method},
                           {"factor", e.factor},
                           {"path", e.path},
                           {"width", e.width},
                           {"height", e.height}});
    }
    ordered_json failures = ordered_json::array();
    for (const auto& f : manifest.failures) {
        failures.push_back({{"stimulus_id", f.stimulus_id},
                            {"src_id", f.src_id},
                            {"method", f.method},
                            {"factor", f.factor},
                            {"stage", f.stage},
                            {"message", f.message}});
    }
    ordered_json doc = {{"entries", std::move(entries)}, {"failures", std::move(failures)}};
    return doc.dump(2) + "\n";
}

DatasetManifest manifest_from_json(std::string_view text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(fmt::format("manifest is not valid JSON: {}", e.what()));
    }
    if (!doc.is_object() || !doc.contains("entries") || !doc["entries"].is_array()) {
        throw FormatError("manifest must be an object with an \"entries\" array");
    }
    DatasetManifest m;
    std::size_t i = 0;
    for (const auto& e : doc["entries"]) {
        m.entries.push_back({required<std::string>(e, "stimulus_id", i), required<std::string>(e, "src_id", i),
                             required<std::string>(e, "method", i), required<int>(e, "factor", i),
                             required<std::string>(e, "path", i), required<int>(e, "width", i),
                             required<int>(e, "height", i)});
        ++i;
    }
    if (doc.contains("failures")) {
        i = 0;
        for (const auto& f : doc["failures"]) {
            m.failures.push_back({required<std::string>(f, "stimulus_id", i), required<std::string>(f, "src_id", i),
                                  required<std::string>(f, "method", i), required<int>(f, "factor", i),
                                  required<std::string>(f, "stage", i), required<std::string>(f, "message", i)});
            ++i;
        }
    }
    validate_manifest(m);
    return m;
}

DatasetManifest read_manifest(const std::filesystem::path& path) { return manifest_from_json(read_text_file(path)); }

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    write_text_file(path, manifest_to_json(manifest));
}

}  // namespace uab
