#include <fmt/format.h>

#include "uab/csv.hpp"
#include "uab/error.hpp"
#include "uab/evalmetrics.hpp"

namespace uab {

ScoreComparison ingest_external_scores(const std::filesystem::path& path, const std::map<std::string, double>& mos) {
    const CsvTable table = read_csv(path);
    const std::size_t id_col = table.column("stimulus_id");
    const std::size_t model_col = table.column("model");
    const std::size_t score_col = table.column("score");

    ScoreComparison out;
    std::map<std::string, std::map<std::string, double>> by_model;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::size_t line = table.line_numbers[r];
        const auto score = parse_real(row[score_col]);
        if (!score) {
            throw ParseError(fmt::format("{}: score '{}' is not a number", path.string(), row[score_col]), line);
        }
        const std::string& id = row[id_col];
        if (!mos.contains(id)) {
            out.warnings.push_back(fmt::format("line {}: unknown stimulus '{}' skipped", line, id));
            ++out.skipped_rows;
            continue;
        }
        auto& slot = by_model[row[model_col]];
        if (slot.contains(id)) {
            out.warnings.push_back(
                fmt::format("line {}: duplicate score for ({}, {}); keeping the last", line, row[model_col], id));
        }
        slot[id] = *score;
    }

    for (const auto& [model, scores] : by_model) {
        std::vector<double> x;
        std::vector<double> y;
        x.reserve(scores.size());
        y.reserve(scores.size());
        for (const auto& [id, s] : scores) {
            x.push_back(s);
            y.push_back(mos.at(id));
        }
        out.models.push_back({model, correlate(x, y)});
    }
    sort_by_pearson(out.models);
    return out;
}

}  // namespace uab
