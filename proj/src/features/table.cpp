#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "uab/csv.hpp"
#include "uab/error.hpp"
#include "uab/features.hpp"
#include "uab/io.hpp"

namespace uab {

std::string features_to_csv(std::span<const FeatureVector> rows) {
    std::ostringstream out;
    std::vector<std::string> fields = {"stimulus_id"};
    fields.insert(fields.end(), FeatureVector::kNames.begin(), FeatureVector::kNames.end());
    write_csv_row(out, fields);
    for (const auto& fv : rows) {
        fields.assign(1, fv.stimulus_id);
        for (const auto& v : fv.values()) {
            fields.push_back(format_real(v));
        }
        write_csv_row(out, fields);
    }
    return out.str();
}

std::vector<FeatureVector> features_from_csv(std::string_view csv_text) {
    const CsvTable table = parse_csv(csv_text);
    const std::size_t c_id = table.column("stimulus_id");
    std::vector<std::size_t> cols;
    for (const auto name : FeatureVector::kNames) {
        cols.push_back(table.column(name));
    }
    std::vector<FeatureVector> out;
    out.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        FeatureVector fv;
        fv.stimulus_id = row[c_id];
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
        out.push_back(std::move(fv));
    }
    return out;
}

std::vector<FeatureVector> read_features(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return features_from_csv(text);
    } catch (const ParseError& e) {
        throw ParseError(fmt::format("{}: {}", path.string(), e.detail()), e.line());
    }
}

}  // namespace uab
