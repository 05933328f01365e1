#include "uab/upscalers.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>

#include <fmt/format.h>
#include <json.hpp>

#include "uab/error.hpp"
#include "uab/imaging.hpp"
#include "uab/parallel.hpp"

namespace uab {

namespace {

using nlohmann::ordered_json;

bool valid_name(std::string_view name) {
    if (name.empty() || name == kSourceMethod || !std::isalnum(static_cast<unsigned char>(name.front()))) {
        return false;
    }
    return std::all_of(name.begin(), name.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' || c == '_';
    });
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
        s.replace(pos, from.size(), to);
    }
}

bool is_image_file(const std::filesystem::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

void check_scaled(const ImageBuffer& out, int in_w, int in_h, int scale, const std::string& who) {
    if (out.width() != in_w * scale || out.height() != in_h * scale) {
        throw DimensionMismatch(fmt::format("{}: expected {}x{} for x{} of {}x{}, got {}x{}", who, in_w * scale,
                                            in_h * scale, scale, in_w, in_h, out.width(), out.height()));
    }
}

// Runs the spec at `scale` without any strategy handling; returns the image.
ImageBuffer produce(const UpscalerSpec& spec, const std::filesystem::path& input, const ImageBuffer& in, int scale,
                    const std::filesystem::path& output) {
    if (spec.kind == UpscalerKind::native_lanczos) {
        return resize_lanczos(in, in.width() * scale, in.height() * scale);
    }
    const auto argv = substitute_command(spec.command_template, input.string(), output.string(), scale);
    const auto result = run_process(argv, std::chrono::duration_cast<std::chrono::milliseconds>(spec.timeout));
    if (result.exit_code != 0) {
        throw ProcessError(fmt::format("{} exited with {}: {}", spec.name, result.exit_code, result.output_tail));
    }
    if (!std::filesystem::exists(output)) {
        throw ProcessError(fmt::format("{} produced no output file {}", spec.name, output.string()));
    }
    ImageBuffer out = decode(output);
    check_scaled(out, in.width(), in.height(), scale, spec.name);
    return out;
}

}  // namespace

bool UpscalerSpec::covers(int scale) const {
    if (scale != 2 && scale != 4) {
        return false;
    }
    return strategy == UpscaleStrategy::x4_then_downscale || supported_scales.count(scale) != 0;
}

void validate_spec(const UpscalerSpec& spec) {
    if (!valid_name(spec.name)) {
        throw ConfigError(fmt::format("invalid upscaler name \"{}\" (letters, digits, - . _; not \"source\")",
                                      spec.name));
    }
    if (spec.kind == UpscalerKind::external && spec.command_template.empty()) {
        throw ConfigError(fmt::format("{}: external upscalers need a command_template", spec.name));
    }
    if (spec.supported_scales.empty()) {
        throw ConfigError(fmt::format("{}: supported_scales is empty", spec.name));
    }
    for (int s : spec.supported_scales) {
        if (s != 2 && s != 4) {
            throw ConfigError(fmt::format("{}: scale {} not in {{2,4}}", spec.name, s));
        }
    }
    if (spec.strategy == UpscaleStrategy::x4_then_downscale && spec.supported_scales.count(4) == 0) {
        throw ConfigError(fmt::format("{}: x4_then_downscale needs supported scale 4", spec.name));
    }
    if (spec.timeout.count() <= 0) {
        throw ConfigError(fmt::format("{}: timeout must be positive", spec.name));
    }
}

std::vector<UpscalerSpec> upscalers_from_json(std::string_view text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(fmt::format("upscaler config is not valid JSON: {}", e.what()));
    }
    if (doc.is_object() && doc.contains("upscalers")) {
        doc = doc["upscalers"];
    }
    if (!doc.is_array()) {
        throw ConfigError("upscaler config must be a JSON array of specs");
    }
    std::vector<UpscalerSpec> specs;
    std::set<std::string> names;
    for (const auto& j : doc) {
        UpscalerSpec s;
        try {
            s.name = j.at("name").get<std::string>();
            const std::string kind = j.value("kind", std::string("external"));
            if (kind == "native_lanczos") {
                s.kind = UpscalerKind::native_lanczos;
            } else if (kind == "external") {
                s.kind = UpscalerKind::external;
            } else {
                throw ConfigError(fmt::format("{}: unknown kind \"{}\"", s.name, kind));
            }
            if (j.contains("command_template")) {
                s.command_template = j.at("command_template").get<std::vector<std::string>>();
            }
            const std::string strategy = j.value("strategy", std::string("direct"));
            if (strategy == "direct") {
                s.strategy = UpscaleStrategy::direct;
            } else if (strategy == "x4_then_downscale") {
                s.strategy = UpscaleStrategy::x4_then_downscale;
            } else {
                throw ConfigError(fmt::format("{}: unknown strategy \"{}\"", s.name, strategy));
            }
            if (j.contains("supported_scales")) {
                const auto scales = j.at("supported_scales").get<std::vector<int>>();
                s.supported_scales = std::set<int>(scales.begin(), scales.end());
            }
            if (j.contains("timeout_s")) {
                s.timeout = std::chrono::seconds(j.at("timeout_s").get<long>());
            }
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(fmt::format("malformed upscaler spec: {}", e.what()));
        }
        validate_spec(s);
        if (!names.insert(s.name).second) {
            throw ConfigError(fmt::format("duplicate upscaler name \"{}\"", s.name));
        }
        specs.push_back(std::move(s));
    }
    return specs;
}

std::string upscalers_to_json(const std::vector<UpscalerSpec>& specs) {
    ordered_json arr = ordered_json::array();
    for (const auto& s : specs) {
        arr.push_back({{"name", s.name},
                       {"kind", s.kind == UpscalerKind::native_lanczos ? "native_lanczos" : "external"},
                       {"command_template", s.command_template},
                       {"strategy", s.strategy == UpscaleStrategy::direct ? "direct" : "x4_then_downscale"},
                       {"supported_scales", std::vector<int>(s.supported_scales.begin(), s.supported_scales.end())},
                       {"timeout_s", s.timeout.count()}});
    }
    return arr.dump(2) + "\n";
}

std::vector<std::string> substitute_command(const std::vector<std::string>& command_template,
                                            const std::string& input, const std::string& output, int scale) {
    std::vector<std::string> argv;
    argv.reserve(command_template.size());
    const std::string scale_text = std::to_string(scale);
    for (std::string arg : command_template) {
        replace_all(arg, "{input}", input);
        replace_all(arg, "{output}", output);
        replace_all(arg, "{scale}", scale_text);
        argv.push_back(std::move(arg));
    }
    return argv;
}

int PipelineHeights::input_height(int factor) const {
    switch (factor) {
        case 1:
            return reference;
        case 2:
            return half;
        case 4:
            return quarter;
        default:
            throw ConfigError(fmt::format("factor {} not in {{1,2,4}}", factor));
    }
}

PreparedSources prepare_sources(const std::filesystem::path& input_dir, const std::filesystem::path& work_dir,
                                const PipelineHeights& heights, int jobs) {
    std::error_code ec;
    if (!std::filesystem::is_directory(input_dir, ec)) {
        throw IoError(fmt::format("input directory {} does not exist", input_dir.string()));
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(input_dir)) {
        if (entry.is_regular_file() && is_image_file(entry.path())) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());

    PreparedSources out;
    // A stem seen twice (a.png, a.jpg) keeps the first in path order.
    std::vector<std::filesystem::path> unique;
    std::set<std::string> stems;
    for (const auto& f : files) {
        if (stems.insert(f.stem().string()).second) {
            unique.push_back(f);
        } else {
            out.failures.push_back({f, fmt::format("duplicate source id \"{}\"", f.stem().string())});
        }
    }

    const auto stimuli = work_dir / "stimuli";
    const auto inputs = work_dir / "inputs";
    std::filesystem::create_directories(stimuli);
    std::filesystem::create_directories(inputs);

    std::vector<std::optional<PreparedSource>> prepared(unique.size());
    std::vector<std::string> errors(unique.size());
    parallel_for(unique.size(), jobs, [&](std::size_t i) {
        const std::string src = unique[i].stem().string();
        try {
            const ImageBuffer original = decode(unique[i]);
            const ImageBuffer reference = rescale_to_height(original, heights.reference);
            PreparedSource p;
            p.src_id = src;
            p.reference = stimuli / (stimulus_id_for(src, kSourceMethod, 1) + ".png");
            p.half = inputs / fmt::format("{}_h{}.png", src, heights.half);
            p.quarter = inputs / fmt::format("{}_h{}.png", src, heights.quarter);
            p.width = reference.width();
            p.height = reference.height();
            encode_png(reference, p.reference);
            encode_png(rescale_to_height(reference, heights.half), p.half);
            encode_png(rescale_to_height(reference, heights.quarter), p.quarter);
            prepared[i] = std::move(p);
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < unique.size(); ++i) {
        if (prepared[i]) {
            out.sources.push_back(std::move(*prepared[i]));
        } else {
            out.failures.push_back({unique[i], errors[i]});
        }
    }
    std::sort(out.sources.begin(), out.sources.end(),
              [](const PreparedSource& a, const PreparedSource& b) { return a.src_id < b.src_id; });
    return out;
}

UpscaleOutput run_upscaler(const UpscalerSpec& spec, const std::filesystem::path& input, int scale,
                           const std::filesystem::path& output) {
    if (!spec.covers(scale)) {
        throw ConfigError(fmt::format("{} cannot produce x{}", spec.name, scale));
    }
    const ImageBuffer in = decode(input);
    if (output.has_parent_path()) {
        std::filesystem::create_directories(output.parent_path());
    }
    ImageBuffer result;
    if (spec.strategy == UpscaleStrategy::x4_then_downscale && scale != 4) {
        auto intermediate = output;
        intermediate += ".x4.png";
        try {
            const ImageBuffer x4 = produce(spec, input, in, 4, intermediate);
            result = resize_lanczos(x4, in.width() * scale, in.height() * scale);
        } catch (...) {
            std::filesystem::remove(intermediate);
            throw;
        }
        std::filesystem::remove(intermediate);
    } else {
        result = produce(spec, input, in, scale, output);
    }
    check_scaled(result, in.width(), in.height(), scale, spec.name);
    // A direct external result stays as written; readers sniff the format.
    const bool written_by_tool = spec.kind == UpscalerKind::external &&
                                 (spec.strategy == UpscaleStrategy::direct || scale == 4);
    if (!written_by_tool) {
        encode_png(result, output);
    }
    return {result.width(), result.height()};
}

DatasetManifest build_dataset(const std::vector<PreparedSource>& sources, const std::vector<UpscalerSpec>& specs,
                              const std::set<int>& factors, const std::filesystem::path& work_dir, int jobs) {
    for (int f : factors) {
        if (f != 2 && f != 4) {
            throw ConfigError(fmt::format("upscaling factor {} not in {{2,4}}", f));
        }
    }
    struct Job {
        const PreparedSource* source;
        const UpscalerSpec* spec;
        int factor;
        std::string stimulus_id;
    };
    std::vector<Job> jobs_list;
    for (const auto& src : sources) {
        for (const auto& spec : specs) {
            for (int f : factors) {
                if (spec.covers(f)) {
                    jobs_list.push_back({&src, &spec, f, stimulus_id_for(src.src_id, spec.name, f)});
                }
            }
        }
    }

    std::vector<std::optional<UpscaleOutput>> done(jobs_list.size());
    std::vector<std::string> errors(jobs_list.size());
    parallel_for(jobs_list.size(), jobs, [&](std::size_t i) {
        const Job& job = jobs_list[i];
        const auto output = work_dir / "stimuli" / (job.stimulus_id + ".png");
        const auto& input = job.factor == 2 ? job.source->half : job.source->quarter;
        try {
            done[i] = run_upscaler(*job.spec, input, job.factor, output);
        } catch (const Error& e) {
            errors[i] = e.what();
            std::error_code ec;
            std::filesystem::remove(output, ec);
        }
    });

    DatasetManifest manifest;
    std::size_t next_job = 0;
    for (const auto& src : sources) {
        const std::string id = stimulus_id_for(src.src_id, kSourceMethod, 1);
        manifest.entries.push_back({id, src.src_id, std::string(kSourceMethod), 1,
                                    std::filesystem::relative(src.reference, work_dir).generic_string(), src.width,
                                    src.height});
        for (; next_job < jobs_list.size() && jobs_list[next_job].source == &src; ++next_job) {
            const Job& job = jobs_list[next_job];
            if (done[next_job]) {
                manifest.entries.push_back({job.stimulus_id, src.src_id, job.spec->name, job.factor,
                                            "stimuli/" + job.stimulus_id + ".png", done[next_job]->width,
                                            done[next_job]->height});
            } else {
                manifest.failures.push_back(
                    {job.stimulus_id, src.src_id, job.spec->name, job.factor, "upscale", errors[next_job]});
            }
        }
    }
    return manifest;
}

}  // namespace uab
