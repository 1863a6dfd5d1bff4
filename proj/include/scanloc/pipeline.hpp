#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scanloc/agents.hpp"
#include "scanloc/geometry.hpp"
#include "scanloc/image.hpp"
#include "scanloc/protocol.hpp"
#include "scanloc/trace.hpp"

namespace scanloc::pipeline {

// Knobs for the five-stage search. Defaults follow the main-experiment
// setting (600 px stop threshold, 125 px verification crops, x5 enhancement);
// top_k defaults to the sweep minimum.
struct PipelineConfig {
    int top_k = 3;                       // regions kept per selection level
    int stop_threshold_px = 600;         // leaf when width or height drops below
    int crop_side_px = 125;              // verification crop side
    int upscale_factor = 5;              // resolution-enhancement factor
    geometry::GridSpec coarse_grid{3, 3};
    geometry::GridSpec enhance_grid{5, 5};
    int max_depth = 6;
    int max_scanner_calls = 120;         // global scanner budget for one task
    int max_candidates = 16;             // cap on |candidate set|

    // ablation switches (each removes exactly one stage's mechanism)
    bool enable_verification = true;     // off: no crossmodal gate, all candidates eligible
    bool enable_consensus = true;        // off: highest stored confidence wins
    bool enable_enhancement = true;      // off: chosen candidate's locator point is final

    void validate() const;  // throws std::invalid_argument
    std::string fingerprint() const;
};

// A region on the DFS frontier.
struct SearchNode {
    geometry::RectPx rect;
    int depth = 0;
    int score = 0;
    std::string path;  // e.g. "r7/r3", 1-based region indices from the root
};

// A verified (or at least locator-proposed) crop, element of the candidate set.
struct CandidateCrop {
    geometry::RectPx crop;               // global frame
    geometry::PointPx locator_point;     // global frame
    bool verdict = false;
    bool verdict_known = false;          // false when verification was skipped/unavailable
    std::string provenance;              // node path
    int source_score = 0;                // scanner score of the source leaf
    geometry::RectPx source_rect;        // the leaf the locator searched
};

enum class FallbackLevel {
    FullPipeline,
    ConsensusSkipped,     // consensus resolved without a scanner pick
    LocatorOnly,          // final point taken from the locator without a Decide
    CenterOfBestRegion,   // no usable candidate or point at all
};

std::string_view fallback_name(FallbackLevel level);

struct CallCounts {
    int scanner = 0;
    int locator = 0;
};

struct GroundingResult {
    geometry::PointPx final_point;
    std::optional<geometry::PointPx> p_scanner;
    std::optional<geometry::PointPx> p_locator;
    std::optional<CandidateCrop> chosen_candidate;
    trace::Trace trace;
    CallCounts calls;
    FallbackLevel fallback = FallbackLevel::FullPipeline;
};

// What one grounding run needs to know about its task.
struct TaskInput {
    std::string task_id;
    std::string instruction;
    std::string application_name;
    std::string system_name;
    bool special_variant = false;
    img::ImagePtr screenshot;
};

// The five-stage coarse-to-fine controller. One instance is cheap and
// stateless across run() calls; agents must be thread-safe if instances are
// shared across concurrent tasks.
class GroundingPipeline {
public:
    GroundingPipeline(PipelineConfig config, agents::ScannerAgent& scanner,
                      agents::LocatorAgent& locator);

    // Per-run working state, exposed so stages can be exercised individually.
    struct Run {
        TaskInput task;
        trace::Trace trace;
        CallCounts calls;
        FallbackLevel fallback = FallbackLevel::FullPipeline;
        std::vector<CandidateCrop> candidates;
        bool budget_exhausted = false;
    };

    Run begin(const TaskInput& task) const;

    // Stage 1: hierarchical attention allocation over the full screenshot.
    std::vector<SearchNode> stage1_allocate(Run& run) const;

    // Stage 2: score-ordered DFS refinement. Calls on_leaf for each region
    // that reaches the stop condition; stops early when on_leaf returns
    // false or a budget runs out.
    void stage2_refine(Run& run, std::vector<SearchNode> frontier,
                       const std::function<bool(const SearchNode&)>& on_leaf) const;

    // Stage 3: locator proposal plus crossmodal verification for one leaf.
    std::optional<CandidateCrop> stage3_verify(Run& run, const SearchNode& leaf) const;

    // Stage 4: consensus pick over the candidate set. Never empty-handed:
    // callers must pass at least one candidate.
    CandidateCrop stage4_consensus(Run& run, const std::vector<CandidateCrop>& candidates) const;

    // Stage 5: adaptive resolution enhancement and the final decision.
    GroundingResult stage5_enhance(Run& run, const CandidateCrop& chosen) const;

    // All five stages; never throws, always yields an in-image point.
    GroundingResult run(const TaskInput& task) const;

    const PipelineConfig& config() const { return config_; }

private:
    bool leaf_reached(const SearchNode& node) const;
    std::optional<std::string> scanner_call(Run& run, const std::string& stage,
                                            const std::string& prompt,
                                            const std::vector<agents::AgentImage>& images) const;
    std::optional<geometry::PointPx> locator_call(Run& run, const std::string& stage,
                                                  const agents::AgentImage& image) const;
    agents::AgentImage make_view(const Run& run, const geometry::RectPx& rect,
                                 int upscale = 1) const;
    std::optional<protocol::RegionScores> score_region(Run& run, const SearchNode& node,
                                                       bool initial) const;
    std::vector<SearchNode> top_children(const Run& run, const SearchNode& parent,
                                         const protocol::RegionScores& scores) const;
    GroundingResult finish(Run& run, geometry::PointPx point, FallbackLevel level,
                           std::optional<CandidateCrop> chosen,
                           std::optional<geometry::PointPx> p_scanner,
                           std::optional<geometry::PointPx> p_locator) const;
    void degrade(Run& run, FallbackLevel level) const;
    protocol::RenderContext base_context(const Run& run) const;
    protocol::Variant variant(const Run& run) const;

    PipelineConfig config_;
    agents::ScannerAgent& scanner_;
    agents::LocatorAgent& locator_;
};

}  // namespace scanloc::pipeline
