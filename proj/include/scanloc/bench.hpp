#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scanloc/agents.hpp"
#include "scanloc/geometry.hpp"
#include "scanloc/image.hpp"
#include "scanloc/pipeline.hpp"

namespace scanloc::bench {

// Metric-side bounding box: closed on BOTH edges ([x1,x2] x [y1,y2]), unlike
// the half-open tiling rects. A 1-pixel target has x1 == x2.
struct BBoxClosed {
    int x1 = 0, y1 = 0, x2 = 0, y2 = 0;
    bool valid() const { return x1 <= x2 && y1 <= y2; }
    geometry::RectPx to_halfopen() const { return {x1, y1, x2 + 1, y2 + 1}; }
    geometry::PointPx center() const { return {(x1 + x2) / 2, (y1 + y2) / 2}; }
    bool operator==(const BBoxClosed&) const = default;
};

// The accuracy indicator: 1 iff x1 <= p.x <= x2 and y1 <= p.y <= y2.
int hit(geometry::PointPx p, const BBoxClosed& bbox);

extern const std::vector<std::string> kCategories;  // Table-layout order
extern const std::vector<std::string> kUiTypes;     // text, icon

struct GroundingTask {
    std::string id;
    std::string image_file;  // manifest filename; empty for synthetic tasks
    std::function<img::ImagePtr()> image_provider;
    geometry::ImageSize image_size;
    std::string instruction;
    std::string application_name;
    std::string system_name;
    BBoxClosed gt_bbox;
    std::string category;  // Development | Creative | CAD | Scientific | Office | OS
    std::string ui_type;   // text | icon
    std::string subset_id;
    bool unavailable = false;  // image file missing/unreadable

    bool special_variant() const;
    pipeline::TaskInput to_input() const;  // materializes the screenshot
};

struct SkipEntry {
    size_t line = 0;
    std::string id;
    std::string reason;
};

struct LoadedDataset {
    std::vector<GroundingTask> tasks;
    std::vector<SkipEntry> skipped;
    size_t manifest_entries = 0;  // tasks.size() + skipped.size() == manifest_entries
};

// Manifest: one JSON object per line with img_filename, instruction,
// bbox [x1,y1,x2,y2], application, platform, ui_type, group (and optionally
// subset, img_size, id). Malformed entries land in the skip report; entries
// whose image cannot be read load as unavailable tasks.
LoadedDataset load_dataset(const std::filesystem::path& root,
                           const std::filesystem::path& manifest);

struct CellStats {
    long n = 0;
    long hits = 0;
    double accuracy() const { return n > 0 ? static_cast<double>(hits) / n : 0.0; }
    bool operator==(const CellStats&) const = default;
};

struct EvalReport {
    // category -> ui_type -> stats; keys beyond the canonical sets are kept
    std::map<std::string, std::map<std::string, CellStats>> cells;
    std::string config_fingerprint;
    long scanner_calls = 0;
    long locator_calls = 0;

    CellStats cell(const std::string& category, const std::string& ui) const;
    CellStats category_total(const std::string& category) const;
    CellStats ui_total(const std::string& ui) const;
    CellStats overall() const;

    std::string to_markdown() const;
    std::string to_csv() const;
    static std::optional<EvalReport> from_csv(const std::string& text);

    bool operator==(const EvalReport&) const = default;
};

struct TaskOutcome {
    std::string task_id;
    geometry::PointPx point;
    int hit = 0;
    pipeline::FallbackLevel fallback = pipeline::FallbackLevel::FullPipeline;
    pipeline::CallCounts calls;
    bool failed = false;  // image unavailable or unrecoverable task error
};

struct BatchOptions {
    int parallelism = 1;
    std::filesystem::path trace_path;  // empty: no trace file
    bool direct_locator = false;       // baseline: one locator call on the full image
};

// Runs every task through the pipeline (or the direct-locator baseline) and
// returns outcomes in task order. Deterministic for oracle agents at any
// parallelism.
std::vector<TaskOutcome> run_batch(const std::vector<GroundingTask>& tasks,
                                   const pipeline::PipelineConfig& config,
                                   agents::ScannerAgent& scanner, agents::LocatorAgent& locator,
                                   const BatchOptions& options = {});

EvalReport make_report(const std::vector<GroundingTask>& tasks,
                       const std::vector<TaskOutcome>& outcomes,
                       const std::string& fingerprint);

// --- ablations ---------------------------------------------------------

enum class AblationVariant { Full, NoVerify, NoConsensus, NoEnhance };

std::string_view variant_name(AblationVariant v);
pipeline::PipelineConfig apply_variant(pipeline::PipelineConfig config, AblationVariant v);

std::map<AblationVariant, EvalReport> run_ablation(const std::vector<GroundingTask>& tasks,
                                                   const pipeline::PipelineConfig& config,
                                                   agents::ScannerAgent& scanner,
                                                   agents::LocatorAgent& locator,
                                                   const BatchOptions& options = {});

// --- sweeps ------------------------------------------------------------

enum class SweepAxis { TopK, Threshold };

struct SweepRow {
    SweepAxis axis = SweepAxis::TopK;
    int value = 0;
    EvalReport report;
};

std::vector<SweepRow> run_sweep(const std::vector<GroundingTask>& tasks,
                                const pipeline::PipelineConfig& config, SweepAxis axis,
                                const std::vector<int>& values, agents::ScannerAgent& scanner,
                                agents::LocatorAgent& locator, const BatchOptions& options = {});

std::string sweep_to_markdown(const std::vector<SweepRow>& rows);

// --- emitters ----------------------------------------------------------

bool emit_report(const EvalReport& report, const std::filesystem::path& path_md,
                 const std::filesystem::path& path_csv);

// Grid, explored leaves, candidate crops, ground truth and the final point
// (green on hit, red on miss) over the task screenshot.
bool emit_overlay(const GroundingTask& task, const pipeline::GroundingResult& result,
                  const std::filesystem::path& path);

// --- synthetic desk-scale dataset ---------------------------------------

struct SyntheticSpec {
    int count = 200;
    uint64_t seed = 1;
    int min_target = 24;
    int max_target = 72;
    // screenshots cycle through these sizes
    std::vector<geometry::ImageSize> sizes = {{1800, 1200}, {2560, 1440}, {3600, 2400}};
};

std::vector<GroundingTask> generate_synthetic(const SyntheticSpec& spec);

// Ground-truth index over a task set, for the oracle agents.
agents::GroundTruthIndexPtr build_truth_index(const std::vector<GroundingTask>& tasks);

}  // namespace scanloc::bench
