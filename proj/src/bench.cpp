#include "scanloc/bench.hpp"

#include <atomic>
#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "scanloc/common.hpp"
#include "scanloc/protocol.hpp"

namespace scanloc::bench {

using geometry::PointPx;
using geometry::RectPx;

const std::vector<std::string> kCategories = {"Development", "Creative",  "CAD",
                                              "Scientific",  "Office",    "OS"};
const std::vector<std::string> kUiTypes = {"text", "icon"};

int hit(PointPx p, const BBoxClosed& bbox) {
    return (p.x >= bbox.x1 && p.x <= bbox.x2 && p.y >= bbox.y1 && p.y <= bbox.y2) ? 1 : 0;
}

bool GroundingTask::special_variant() const {
    return protocol::variant_for_subset(subset_id) == protocol::Variant::Special;
}

pipeline::TaskInput GroundingTask::to_input() const {
    pipeline::TaskInput input;
    input.task_id = id;
    input.instruction = instruction;
    input.application_name = application_name;
    input.system_name = system_name;
    input.special_variant = special_variant();
    input.screenshot = image_provider ? image_provider() : nullptr;
    return input;
}

// --- dataset loading -----------------------------------------------------

LoadedDataset load_dataset(const std::filesystem::path& root,
                           const std::filesystem::path& manifest) {
    LoadedDataset out;
    std::ifstream in(manifest);
    if (!in) {
        throw std::runtime_error("cannot open manifest: " + manifest.string());
    }

    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++out.manifest_entries;

        nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (j.is_discarded() || !j.is_object()) {
            out.skipped.push_back({line_no, "", "invalid json"});
            continue;
        }

        auto str_field = [&](const char* name) -> std::optional<std::string> {
            if (!j.contains(name) || !j[name].is_string()) return std::nullopt;
            return j[name].get<std::string>();
        };

        GroundingTask task;
        std::string missing;
        auto require = [&](const char* name) {
            auto v = str_field(name);
            if (!v && missing.empty()) missing = name;
            return v.value_or("");
        };
        task.image_file = require("img_filename");
        task.instruction = require("instruction");
        task.application_name = require("application");
        task.system_name = require("platform");
        task.ui_type = require("ui_type");
        if (!missing.empty()) {
            out.skipped.push_back({line_no, task.image_file, "missing field: " + missing});
            continue;
        }

        if (!j.contains("bbox") || !j["bbox"].is_array() || j["bbox"].size() != 4) {
            out.skipped.push_back({line_no, task.image_file, "missing field: bbox"});
            continue;
        }
        try {
            task.gt_bbox = {j["bbox"][0].get<int>(), j["bbox"][1].get<int>(),
                            j["bbox"][2].get<int>(), j["bbox"][3].get<int>()};
        } catch (const std::exception&) {
            out.skipped.push_back({line_no, task.image_file, "non-integer bbox"});
            continue;
        }
        if (!task.gt_bbox.valid()) {
            out.skipped.push_back({line_no, task.image_file, "inverted bbox"});
            continue;
        }
        if (task.gt_bbox.x1 < 0 || task.gt_bbox.y1 < 0) {
            out.skipped.push_back({line_no, task.image_file, "negative bbox"});
            continue;
        }

        task.category = str_field("group").value_or("");
        if (task.category.empty()) {
            out.skipped.push_back({line_no, task.image_file, "missing field: group"});
            continue;
        }
        task.subset_id = str_field("subset").value_or(task.application_name + "_" +
                                                      task.system_name);
        task.id = str_field("id").value_or(task.image_file + "#" + std::to_string(line_no));

        if (j.contains("img_size") && j["img_size"].is_array() && j["img_size"].size() == 2) {
            task.image_size = {j["img_size"][0].get<int>(), j["img_size"][1].get<int>()};
            if (task.gt_bbox.x2 >= task.image_size.width ||
                task.gt_bbox.y2 >= task.image_size.height) {
                out.skipped.push_back({line_no, task.image_file, "bbox outside image"});
                continue;
            }
        }

        std::filesystem::path img_path = root / task.image_file;
        task.unavailable = !std::filesystem::exists(img_path);
        task.image_provider = [img_path]() -> img::ImagePtr {
            auto decoded = img::read_png(img_path);
            if (!decoded) return nullptr;
            return std::make_shared<img::Image>(std::move(*decoded));
        };

        out.tasks.push_back(std::move(task));
    }
    return out;
}

// --- report --------------------------------------------------------------

CellStats EvalReport::cell(const std::string& category, const std::string& ui) const {
    auto it = cells.find(category);
    if (it == cells.end()) return {};
    auto jt = it->second.find(ui);
    return jt == it->second.end() ? CellStats{} : jt->second;
}

CellStats EvalReport::category_total(const std::string& category) const {
    CellStats total;
    auto it = cells.find(category);
    if (it == cells.end()) return total;
    for (const auto& [ui, stats] : it->second) {
        total.n += stats.n;
        total.hits += stats.hits;
    }
    return total;
}

CellStats EvalReport::ui_total(const std::string& ui) const {
    CellStats total;
    for (const auto& [cat, by_ui] : cells) {
        auto it = by_ui.find(ui);
        if (it != by_ui.end()) {
            total.n += it->second.n;
            total.hits += it->second.hits;
        }
    }
    return total;
}

CellStats EvalReport::overall() const {
    CellStats total;
    for (const auto& [cat, by_ui] : cells) {
        for (const auto& [ui, stats] : by_ui) {
            total.n += stats.n;
            total.hits += stats.hits;
        }
    }
    return total;
}

namespace {

std::string pct(const CellStats& stats) {
    if (stats.n == 0) return "-";
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.1f", stats.accuracy() * 100.0);
    return buf;
}

std::vector<std::string> report_categories(const EvalReport& report) {
    std::vector<std::string> cats = kCategories;
    for (const auto& [cat, _] : report.cells) {
        if (std::find(cats.begin(), cats.end(), cat) == cats.end()) cats.push_back(cat);
    }
    return cats;
}

}  // namespace

std::string EvalReport::to_markdown() const {
    std::vector<std::string> cats = report_categories(*this);

    std::ostringstream md;
    md << "| run |";
    for (const auto& cat : cats) {
        for (const auto& ui : kUiTypes) md << " " << cat << " " << ui << " |";
        md << " " << cat << " avg |";
    }
    md << " Average text | Average icon | Average avg |\n";

    int columns = static_cast<int>(cats.size()) * 3 + 3;
    md << "| --- |";
    for (int i = 0; i < columns; ++i) md << " --- |";
    md << "\n";

    md << "| " << config_fingerprint.substr(0, 8) << " |";
    for (const auto& cat : cats) {
        for (const auto& ui : kUiTypes) md << " " << pct(cell(cat, ui)) << " |";
        md << " " << pct(category_total(cat)) << " |";
    }
    md << " " << pct(ui_total("text")) << " | " << pct(ui_total("icon")) << " | "
       << pct(overall()) << " |\n";

    md << "| n |";
    for (const auto& cat : cats) {
        for (const auto& ui : kUiTypes) md << " " << cell(cat, ui).n << " |";
        md << " " << category_total(cat).n << " |";
    }
    md << " " << ui_total("text").n << " | " << ui_total("icon").n << " | " << overall().n
       << " |\n";

    md << "\nscanner calls: " << scanner_calls << ", locator calls: " << locator_calls << "\n";
    return md.str();
}

std::string EvalReport::to_csv() const {
    std::ostringstream csv;
    csv << "category,ui_type,n,hits,fingerprint,scanner_calls,locator_calls\n";
    for (const auto& [cat, by_ui] : cells) {
        for (const auto& [ui, stats] : by_ui) {
            csv << cat << ',' << ui << ',' << stats.n << ',' << stats.hits << ','
                << config_fingerprint << ',' << scanner_calls << ',' << locator_calls << "\n";
        }
    }
    return csv.str();
}

std::optional<EvalReport> EvalReport::from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) return std::nullopt;
    if (line.rfind("category,ui_type,n,hits", 0) != 0) return std::nullopt;

    EvalReport report;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (fields.size() != 7) return std::nullopt;
        try {
            CellStats stats{std::stol(fields[2]), std::stol(fields[3])};
            report.cells[fields[0]][fields[1]] = stats;
            if (first) {
                report.config_fingerprint = fields[4];
                report.scanner_calls = std::stol(fields[5]);
                report.locator_calls = std::stol(fields[6]);
                first = false;
            }
        } catch (const std::exception&) {
            return std::nullopt;
        }
    }
    return report;
}

// --- batch running --------------------------------------------------------

std::vector<TaskOutcome> run_batch(const std::vector<GroundingTask>& tasks,
                                   const pipeline::PipelineConfig& config,
                                   agents::ScannerAgent& scanner, agents::LocatorAgent& locator,
                                   const BatchOptions& options) {
    pipeline::GroundingPipeline pipe(config, scanner, locator);

    std::vector<TaskOutcome> outcomes(tasks.size());
    std::vector<std::string> traces(tasks.size());
    std::atomic<size_t> cursor{0};

    auto worker = [&]() {
        for (;;) {
            size_t i = cursor.fetch_add(1);
            if (i >= tasks.size()) return;
            const GroundingTask& task = tasks[i];
            TaskOutcome& out = outcomes[i];
            out.task_id = task.id;

            img::ImagePtr image =
                (!task.unavailable && task.image_provider) ? task.image_provider() : nullptr;
            if (!image || image->empty()) {
                out.failed = true;
                continue;
            }

            if (options.direct_locator) {
                agents::AgentImage view{image,
                                        {task.id, image->size().as_rect(), 1, image->size()}};
                out.calls.locator = 1;
                try {
                    PointPx p = locator.ground(task.instruction, view);
                    out.point = geometry::clamp_point(p, image->size());
                } catch (const std::exception&) {
                    out.failed = true;
                    continue;
                }
            } else {
                pipeline::TaskInput input;
                input.task_id = task.id;
                input.instruction = task.instruction;
                input.application_name = task.application_name;
                input.system_name = task.system_name;
                input.special_variant = task.special_variant();
                input.screenshot = image;

                pipeline::GroundingResult result = pipe.run(input);
                out.point = result.final_point;
                out.fallback = result.fallback;
                out.calls = result.calls;
                if (!options.trace_path.empty()) traces[i] = result.trace.to_jsonl(task.id);
            }
            out.hit = hit(out.point, task.gt_bbox);
        }
    };

    int threads = std::max(1, options.parallelism);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(threads));
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    if (!options.trace_path.empty()) {
        std::ofstream tf(options.trace_path);
        for (const auto& t : traces) tf << t;
    }
    return outcomes;
}

EvalReport make_report(const std::vector<GroundingTask>& tasks,
                       const std::vector<TaskOutcome>& outcomes,
                       const std::string& fingerprint) {
    if (tasks.size() != outcomes.size()) {
        throw std::invalid_argument("one outcome required per task");
    }
    EvalReport report;
    report.config_fingerprint = fingerprint;
    for (size_t i = 0; i < tasks.size(); ++i) {
        CellStats& stats = report.cells[tasks[i].category][tasks[i].ui_type];
        stats.n += 1;
        stats.hits += outcomes[i].hit;
        report.scanner_calls += outcomes[i].calls.scanner;
        report.locator_calls += outcomes[i].calls.locator;
    }
    return report;
}

// --- ablations -------------------------------------------------------------

std::string_view variant_name(AblationVariant v) {
    switch (v) {
        case AblationVariant::Full: return "full";
        case AblationVariant::NoVerify: return "no_verify";
        case AblationVariant::NoConsensus: return "no_consensus";
        case AblationVariant::NoEnhance: return "no_enhance";
    }
    return "unknown";
}

pipeline::PipelineConfig apply_variant(pipeline::PipelineConfig config, AblationVariant v) {
    switch (v) {
        case AblationVariant::Full: break;
        case AblationVariant::NoVerify: config.enable_verification = false; break;
        case AblationVariant::NoConsensus: config.enable_consensus = false; break;
        case AblationVariant::NoEnhance: config.enable_enhancement = false; break;
    }
    return config;
}

std::map<AblationVariant, EvalReport> run_ablation(const std::vector<GroundingTask>& tasks,
                                                   const pipeline::PipelineConfig& config,
                                                   agents::ScannerAgent& scanner,
                                                   agents::LocatorAgent& locator,
                                                   const BatchOptions& options) {
    std::map<AblationVariant, EvalReport> reports;
    for (AblationVariant v : {AblationVariant::Full, AblationVariant::NoVerify,
                              AblationVariant::NoConsensus, AblationVariant::NoEnhance}) {
        pipeline::PipelineConfig cfg = apply_variant(config, v);
        BatchOptions opt = options;
        opt.trace_path.clear();  // per-variant traces would clobber each other
        auto outcomes = run_batch(tasks, cfg, scanner, locator, opt);
        reports[v] = make_report(tasks, outcomes, cfg.fingerprint());
    }
    return reports;
}

// --- sweeps ----------------------------------------------------------------

std::vector<SweepRow> run_sweep(const std::vector<GroundingTask>& tasks,
                                const pipeline::PipelineConfig& config, SweepAxis axis,
                                const std::vector<int>& values, agents::ScannerAgent& scanner,
                                agents::LocatorAgent& locator, const BatchOptions& options) {
    std::vector<SweepRow> rows;
    for (int v : values) {
        pipeline::PipelineConfig cfg = config;
        if (axis == SweepAxis::TopK) {
            cfg.top_k = v;
        } else {
            cfg.stop_threshold_px = std::max(v, cfg.crop_side_px);
        }
        BatchOptions opt = options;
        opt.trace_path.clear();
        auto outcomes = run_batch(tasks, cfg, scanner, locator, opt);
        rows.push_back({axis, v, make_report(tasks, outcomes, cfg.fingerprint())});
    }
    return rows;
}

std::string sweep_to_markdown(const std::vector<SweepRow>& rows) {
    std::ostringstream md;
    md << "| axis | value | accuracy | scanner calls | locator calls |\n";
    md << "| --- | --- | --- | --- | --- |\n";
    for (const auto& row : rows) {
        md << "| " << (row.axis == SweepAxis::TopK ? "top_k" : "threshold") << " | " << row.value
           << " | " << pct(row.report.overall()) << " | " << row.report.scanner_calls << " | "
           << row.report.locator_calls << " |\n";
    }
    return md.str();
}

// --- emitters ----------------------------------------------------------------

bool emit_report(const EvalReport& report, const std::filesystem::path& path_md,
                 const std::filesystem::path& path_csv) {
    if (!path_md.empty()) {
        std::ofstream f(path_md);
        if (!f) return false;
        f << report.to_markdown();
    }
    if (!path_csv.empty()) {
        std::ofstream f(path_csv);
        if (!f) return false;
        f << report.to_csv();
    }
    return true;
}

bool emit_overlay(const GroundingTask& task, const pipeline::GroundingResult& result,
                  const std::filesystem::path& path) {
    img::ImagePtr source = task.image_provider ? task.image_provider() : nullptr;
    if (!source || source->empty()) return false;
    img::Image canvas = *source;

    const img::Color kGrid{150, 150, 150};
    const img::Color kLeaf{255, 165, 0};
    const img::Color kCrop{70, 90, 255};
    const img::Color kTruth{0, 190, 0};
    const img::Color kHit{0, 220, 40};
    const img::Color kMiss{235, 40, 40};

    try {
        for (const auto& tile : geometry::partition_grid(canvas.size().as_rect(), {3, 3})) {
            canvas.draw_rect_outline(tile, kGrid, 2);
        }
    } catch (const std::exception&) {
    }

    auto rect_of = [](const nlohmann::json& j) -> RectPx {
        return {j["x1"].get<int>(), j["y1"].get<int>(), j["x2"].get<int>(), j["y2"].get<int>()};
    };
    for (const auto& event : result.trace.events()) {
        if (event.stage == "refine" && event.type == "leaf" &&
            event.data.contains("rect_global")) {
            canvas.draw_rect_outline(rect_of(event.data["rect_global"]), kLeaf, 3);
        }
        if (event.type == "candidate" && event.data.contains("crop_global")) {
            canvas.draw_rect_outline(rect_of(event.data["crop_global"]), kCrop, 2);
        }
    }

    canvas.draw_rect_outline(task.gt_bbox.to_halfopen(), kTruth, 3);
    bool was_hit = hit(result.final_point, task.gt_bbox) == 1;
    canvas.draw_marker(result.final_point, was_hit ? kHit : kMiss, 8);

    return img::write_png(canvas, path);
}

// --- synthetic dataset -------------------------------------------------------

namespace {

struct SyntheticLayout {
    geometry::ImageSize size;
    RectPx target;  // half-open
};

SyntheticLayout synthetic_layout(const SyntheticSpec& spec, int index) {
    Rng rng = derive_rng(spec.seed, "synthetic-layout|" + std::to_string(index));
    SyntheticLayout layout;
    layout.size = spec.sizes[static_cast<size_t>(index) % spec.sizes.size()];

    int w = rng.uniform_int(spec.min_target, spec.max_target);
    int h = rng.uniform_int(spec.min_target, spec.max_target);
    int x = rng.uniform_int(2, layout.size.width - w - 2);
    int y = rng.uniform_int(2, layout.size.height - h - 2);
    layout.target = {x, y, x + w, y + h};
    return layout;
}

img::Image render_synthetic(const SyntheticSpec& spec, int index) {
    SyntheticLayout layout = synthetic_layout(spec, index);
    Rng rng = derive_rng(spec.seed, "synthetic-paint|" + std::to_string(index));

    auto channel = [&]() { return static_cast<uint8_t>(rng.uniform_int(30, 225)); };
    img::Image image(layout.size.width, layout.size.height,
                     {channel(), channel(), channel()});

    // a few window-like panels for visual texture
    int panels = rng.uniform_int(5, 10);
    for (int p = 0; p < panels; ++p) {
        int pw = rng.uniform_int(layout.size.width / 10, layout.size.width / 3);
        int ph = rng.uniform_int(layout.size.height / 10, layout.size.height / 3);
        int px = rng.uniform_int(0, layout.size.width - pw - 1);
        int py = rng.uniform_int(0, layout.size.height - ph - 1);
        img::Color fill{channel(), channel(), channel()};
        image.fill_rect({px, py, px + pw, py + ph}, fill);
        image.draw_rect_outline({px, py, px + pw, py + ph}, {60, 60, 60}, 2);
    }

    image.fill_rect(layout.target, {250, 90, 30});
    image.draw_rect_outline(layout.target, {20, 20, 20}, 2);
    return image;
}

}  // namespace

std::vector<GroundingTask> generate_synthetic(const SyntheticSpec& spec) {
    static const std::vector<std::vector<std::string>> kApps = {
        {"vscode", "pycharm"},   {"photoshop", "blender"}, {"autocad", "solidworks"},
        {"matlab", "origin"},    {"excel", "powerpoint"},  {"common"},
    };
    static const std::vector<std::string> kSystems = {"windows", "macos", "linux"};
    static const std::vector<std::string> kVerbs = {
        "save the current document", "open the settings panel", "toggle the sidebar",
        "export the selection",      "insert a new layer",      "run the build task",
        "enable dark mode",          "align the objects",
    };

    std::vector<GroundingTask> tasks;
    tasks.reserve(static_cast<size_t>(spec.count));
    for (int i = 0; i < spec.count; ++i) {
        SyntheticLayout layout = synthetic_layout(spec, i);
        Rng rng = derive_rng(spec.seed, "synthetic-task|" + std::to_string(i));

        GroundingTask task;
        size_t cat = static_cast<size_t>(i) % kCategories.size();
        task.category = kCategories[cat];
        task.ui_type = kUiTypes[static_cast<size_t>(i) % 2];
        task.system_name = kSystems[static_cast<size_t>(i / 2) % kSystems.size()];
        const auto& apps = kApps[cat];
        task.application_name = apps[static_cast<size_t>(rng.uniform_int(
            0, static_cast<int>(apps.size()) - 1))];
        // the OS category mirrors the common_* subsets, which carry no
        // application name and use the special prompt variant
        task.subset_id = task.category == "OS"
                             ? "common_" + task.system_name
                             : task.application_name + "_" + task.system_name;
        task.id = "synthetic-" + std::to_string(spec.seed) + "-" + std::to_string(i);
        task.instruction =
            "Click the orange " + std::string(task.ui_type == "icon" ? "icon" : "button") +
            " to " + kVerbs[static_cast<size_t>(rng.uniform_int(
                          0, static_cast<int>(kVerbs.size()) - 1))];
        task.image_size = layout.size;
        task.gt_bbox = {layout.target.x1, layout.target.y1, layout.target.x2 - 1,
                        layout.target.y2 - 1};

        SyntheticSpec captured = spec;
        int index = i;
        task.image_provider = [captured, index]() -> img::ImagePtr {
            return std::make_shared<img::Image>(render_synthetic(captured, index));
        };
        tasks.push_back(std::move(task));
    }
    return tasks;
}

agents::GroundTruthIndexPtr build_truth_index(const std::vector<GroundingTask>& tasks) {
    auto index = std::make_shared<agents::GroundTruthIndex>();
    for (const auto& task : tasks) {
        index->add(task.id, task.gt_bbox.to_halfopen());
    }
    return index;
}

}  // namespace scanloc::bench
