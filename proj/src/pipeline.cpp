#include "scanloc/pipeline.hpp"

#include <algorithm>
#include <stdexcept>

#include "scanloc/common.hpp"

namespace scanloc::pipeline {

using geometry::PointPx;
using geometry::RectPx;

namespace {

nlohmann::json rect_json(const RectPx& r) {
    return {{"x1", r.x1}, {"y1", r.y1}, {"x2", r.x2}, {"y2", r.y2}};
}

nlohmann::json point_json(const PointPx& p) { return {{"x", p.x}, {"y", p.y}}; }

}  // namespace

void PipelineConfig::validate() const {
    if (top_k < 1 || top_k > coarse_grid.cells()) {
        throw std::invalid_argument("top_k must lie in [1, grid cells]");
    }
    if (crop_side_px < 1) throw std::invalid_argument("crop_side_px must be >= 1");
    if (stop_threshold_px < crop_side_px) {
        throw std::invalid_argument("stop_threshold_px must be >= crop_side_px");
    }
    if (upscale_factor < 1) throw std::invalid_argument("upscale_factor must be >= 1");
    if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
    if (max_scanner_calls < 0 || max_candidates < 0) {
        throw std::invalid_argument("budgets must be >= 0");
    }
    if (coarse_grid.rows < 1 || coarse_grid.cols < 1 || enhance_grid.rows < 1 ||
        enhance_grid.cols < 1) {
        throw std::invalid_argument("grid dimensions must be >= 1");
    }
}

std::string PipelineConfig::fingerprint() const {
    std::string blob;
    for (int v : {top_k, stop_threshold_px, crop_side_px, upscale_factor, coarse_grid.rows,
                  coarse_grid.cols, enhance_grid.rows, enhance_grid.cols, max_depth,
                  max_scanner_calls, max_candidates, static_cast<int>(enable_verification),
                  static_cast<int>(enable_consensus), static_cast<int>(enable_enhancement)}) {
        blob += std::to_string(v);
        blob += ';';
    }
    return to_hex(fnv1a(blob));
}

std::string_view fallback_name(FallbackLevel level) {
    switch (level) {
        case FallbackLevel::FullPipeline: return "full_pipeline";
        case FallbackLevel::ConsensusSkipped: return "consensus_skipped";
        case FallbackLevel::LocatorOnly: return "locator_only";
        case FallbackLevel::CenterOfBestRegion: return "center_of_best_region";
    }
    return "unknown";
}

GroundingPipeline::GroundingPipeline(PipelineConfig config, agents::ScannerAgent& scanner,
                                     agents::LocatorAgent& locator)
    : config_(config), scanner_(scanner), locator_(locator) {
    config_.validate();
}

GroundingPipeline::Run GroundingPipeline::begin(const TaskInput& task) const {
    if (!task.screenshot || task.screenshot->empty()) {
        throw std::invalid_argument("task screenshot missing");
    }
    Run run;
    run.task = task;
    return run;
}

protocol::Variant GroundingPipeline::variant(const Run& run) const {
    return run.task.special_variant ? protocol::Variant::Special : protocol::Variant::Normal;
}

protocol::RenderContext GroundingPipeline::base_context(const Run& run) const {
    protocol::RenderContext ctx;
    ctx.instruction = run.task.instruction;
    ctx.application_name = run.task.application_name;
    ctx.system_name = run.task.system_name;
    return ctx;
}

agents::AgentImage GroundingPipeline::make_view(const Run& run, const RectPx& rect,
                                                int upscale) const {
    const img::ImagePtr& shot = run.task.screenshot;
    agents::ImageMeta meta{run.task.task_id, rect, upscale, shot->size()};

    if (upscale == 1 && rect == shot->size().as_rect()) {
        return {shot, meta};  // whole screenshot: share, don't copy
    }
    img::Image view = img::crop(*shot, rect);
    if (upscale > 1) view = img::upscale_nn(view, upscale);
    return {std::make_shared<img::Image>(std::move(view)), meta};
}

void GroundingPipeline::degrade(Run& run, FallbackLevel level) const {
    if (static_cast<int>(level) > static_cast<int>(run.fallback)) run.fallback = level;
}

std::optional<std::string> GroundingPipeline::scanner_call(
    Run& run, const std::string& stage, const std::string& prompt,
    const std::vector<agents::AgentImage>& images) const {
    if (run.calls.scanner >= config_.max_scanner_calls) {
        run.budget_exhausted = true;
        run.trace.add(stage, "budget_exhausted",
                      {{"scanner_calls", run.calls.scanner},
                       {"limit", config_.max_scanner_calls}});
        return std::nullopt;
    }
    ++run.calls.scanner;

    nlohmann::json imgs = nlohmann::json::array();
    for (const auto& im : images) {
        imgs.push_back({{"rect_global", rect_json(im.meta.global_rect)},
                        {"upscale", im.meta.upscale}});
    }
    run.trace.add(stage, "prompt", {{"text", prompt}, {"images", imgs}});

    try {
        std::string reply = scanner_.complete(prompt, images);
        run.trace.add(stage, "reply", {{"text", reply}});
        return reply;
    } catch (const std::exception& e) {
        run.trace.add(stage, "agent_error", {{"what", e.what()}});
        return std::nullopt;
    }
}

std::optional<PointPx> GroundingPipeline::locator_call(Run& run, const std::string& stage,
                                                       const agents::AgentImage& image) const {
    ++run.calls.locator;
    run.trace.add(stage, "locator_request",
                  {{"rect_global", rect_json(image.meta.global_rect)},
                   {"upscale", image.meta.upscale}});
    try {
        PointPx p = locator_.ground(run.task.instruction, image);
        p = geometry::clamp_point(p, image.local_size());
        run.trace.add(stage, "locator_reply", {{"point_local", point_json(p)}});
        return p;
    } catch (const std::exception& e) {
        run.trace.add(stage, "agent_error", {{"what", e.what()}});
        return std::nullopt;
    }
}

std::optional<protocol::RegionScores> GroundingPipeline::score_region(Run& run,
                                                                      const SearchNode& node,
                                                                      bool initial) const {
    protocol::PromptKind kind{initial ? protocol::Stage::SelectionInitial
                                      : protocol::Stage::SelectionDeeper,
                              variant(run)};
    std::string stage(protocol::stage_name(kind.stage));
    std::string prompt = protocol::render_prompt(kind, base_context(run));

    auto reply = scanner_call(run, stage, prompt, {make_view(run, node.rect)});
    if (!reply) return std::nullopt;

    auto scores = protocol::parse_region_scores(*reply);
    if (!scores) {
        run.trace.add(stage, "parse_error", {{"node", node.path}});
        return std::nullopt;
    }
    if (scores->warning) {
        run.trace.add(stage, "parse_warning", {{"node", node.path}, {"notes", scores->notes}});
    }
    return scores;
}

std::vector<SearchNode> GroundingPipeline::top_children(
    const Run&, const SearchNode& parent, const protocol::RegionScores& scores) const {
    std::vector<RectPx> tiles = geometry::partition_grid(parent.rect, config_.coarse_grid);

    std::vector<int> order(tiles.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    // descending score, reading-order index breaks ties
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return scores.scores[static_cast<size_t>(a)] > scores.scores[static_cast<size_t>(b)];
    });

    std::vector<SearchNode> children;
    int take = std::min(config_.top_k, static_cast<int>(tiles.size()));
    children.reserve(static_cast<size_t>(take));
    for (int i = 0; i < take; ++i) {
        int idx = order[static_cast<size_t>(i)];
        std::string path = parent.path.empty() ? "r" + std::to_string(idx + 1)
                                               : parent.path + "/r" + std::to_string(idx + 1);
        children.push_back({tiles[static_cast<size_t>(idx)], parent.depth + 1,
                            scores.scores[static_cast<size_t>(idx)], std::move(path)});
    }
    return children;
}

std::vector<SearchNode> GroundingPipeline::stage1_allocate(Run& run) const {
    SearchNode root{run.task.screenshot->size().as_rect(), 0, 0, ""};

    std::optional<protocol::RegionScores> scores;
    for (int attempt = 0; attempt < 2 && !scores; ++attempt) {
        if (attempt > 0) run.trace.add("selection_initial", "retry", {{"attempt", attempt + 1}});
        scores = score_region(run, root, /*initial=*/true);
        if (run.budget_exhausted) break;
    }

    std::vector<SearchNode> frontier;
    if (!scores) {
        // all nine regions enter the frontier with score 0
        run.trace.add("selection_initial", "fallback", {{"reason", "selection unparseable"}});
        try {
            std::vector<RectPx> tiles =
                geometry::partition_grid(root.rect, config_.coarse_grid);
            for (size_t i = 0; i < tiles.size(); ++i) {
                frontier.push_back({tiles[i], 1, 0, "r" + std::to_string(i + 1)});
            }
        } catch (const std::exception&) {
            frontier.push_back({root.rect, 1, 0, "r1"});
        }
        return frontier;
    }

    frontier = top_children(run, root, *scores);
    nlohmann::json picked = nlohmann::json::array();
    for (const auto& n : frontier) {
        picked.push_back({{"path", n.path}, {"score", n.score}, {"rect_global", rect_json(n.rect)}});
    }
    run.trace.add("selection_initial", "decision", {{"frontier", picked}});
    return frontier;
}

bool GroundingPipeline::leaf_reached(const SearchNode& node) const {
    if (node.rect.width() < config_.stop_threshold_px ||
        node.rect.height() < config_.stop_threshold_px) {
        return true;
    }
    if (node.depth >= config_.max_depth) return true;
    // cannot be partitioned any further
    if (node.rect.width() < config_.coarse_grid.cols ||
        node.rect.height() < config_.coarse_grid.rows) {
        return true;
    }
    return false;
}

void GroundingPipeline::stage2_refine(Run& run, std::vector<SearchNode> frontier,
                                      const std::function<bool(const SearchNode&)>& on_leaf) const {
    // explicit DFS stack; frontier arrives best-first, so push in reverse
    std::vector<SearchNode> stack;
    for (auto it = frontier.rbegin(); it != frontier.rend(); ++it) stack.push_back(*it);

    while (!stack.empty()) {
        if (run.budget_exhausted) {
            run.trace.add("refine", "halt", {{"reason", "scanner budget exhausted"}});
            return;
        }
        SearchNode node = stack.back();
        stack.pop_back();

        if (leaf_reached(node)) {
            run.trace.add("refine", "leaf",
                          {{"path", node.path},
                           {"depth", node.depth},
                           {"score", node.score},
                           {"rect_global", rect_json(node.rect)}});
            if (!on_leaf(node)) return;
            continue;
        }

        auto scores = score_region(run, node, /*initial=*/false);
        if (!scores) {
            // keep the subtree reachable: the node itself becomes a leaf
            run.trace.add("refine", "leaf",
                          {{"path", node.path},
                           {"depth", node.depth},
                           {"score", node.score},
                           {"rect_global", rect_json(node.rect)},
                           {"note", "selection failed; node demoted to leaf"}});
            if (!on_leaf(node)) return;
            continue;
        }

        std::vector<SearchNode> children = top_children(run, node, *scores);
        for (auto it = children.rbegin(); it != children.rend(); ++it) stack.push_back(*it);
    }
}

std::optional<CandidateCrop> GroundingPipeline::stage3_verify(Run& run,
                                                              const SearchNode& leaf) const {
    agents::AgentImage leaf_view = make_view(run, leaf.rect);
    auto p_local = locator_call(run, "crossmodal_verify", leaf_view);
    if (!p_local) {
        run.trace.add("crossmodal_verify", "leaf_skipped",
                      {{"path", leaf.path}, {"reason", "locator failed"}});
        return std::nullopt;
    }

    PointPx p_global = geometry::to_global(*p_local, leaf.rect);
    RectPx crop =
        geometry::crop_centered(p_global, config_.crop_side_px, run.task.screenshot->size());

    CandidateCrop candidate;
    candidate.crop = crop;
    candidate.locator_point = p_global;
    candidate.provenance = leaf.path;
    candidate.source_score = leaf.score;
    candidate.source_rect = leaf.rect;

    if (config_.enable_verification) {
        protocol::PromptKind kind{protocol::Stage::CrossmodalVerify, variant(run)};
        std::string prompt = protocol::render_prompt(kind, base_context(run));
        auto reply =
            scanner_call(run, "crossmodal_verify", prompt,
                         {make_view(run, run.task.screenshot->size().as_rect()),
                          make_view(run, crop)});
        if (reply) {
            protocol::Verdict v =
                protocol::parse_tagged_yes_no(*reply, protocol::YesNoTag::Relevance);
            candidate.verdict = v.value;
            candidate.verdict_known = true;
            if (v.warning) {
                run.trace.add("crossmodal_verify", "parse_warning",
                              {{"path", leaf.path}, {"note", "verdict from fallback token"}});
            }
        }
    } else {
        run.trace.add("crossmodal_verify", "skipped", {{"reason", "verification disabled"}});
    }

    run.trace.add("crossmodal_verify", "candidate",
                  {{"path", leaf.path},
                   {"crop_global", rect_json(crop)},
                   {"point_global", point_json(p_global)},
                   {"verdict", candidate.verdict},
                   {"verdict_known", candidate.verdict_known}});
    return candidate;
}

CandidateCrop GroundingPipeline::stage4_consensus(
    Run& run, const std::vector<CandidateCrop>& candidates) const {
    if (candidates.empty()) throw std::logic_error("consensus requires candidates");

    std::vector<const CandidateCrop*> eligible;
    if (config_.enable_verification) {
        for (const auto& c : candidates) {
            if (c.verdict_known && c.verdict) eligible.push_back(&c);
        }
        if (eligible.empty()) {
            run.trace.add("consensus", "fallback",
                          {{"reason", "no verified candidate; considering all"}});
            for (const auto& c : candidates) eligible.push_back(&c);
        }
    } else {
        for (const auto& c : candidates) eligible.push_back(&c);
    }

    if (eligible.size() == 1) {
        run.trace.add("consensus", "decision",
                      {{"picked", eligible[0]->provenance}, {"note", "single candidate"}});
        return *eligible[0];
    }

    auto pick_by_score = [&]() -> const CandidateCrop* {
        const CandidateCrop* best = eligible[0];
        for (const auto* c : eligible) {
            if (c->source_score > best->source_score) best = c;
        }
        return best;
    };

    if (!config_.enable_consensus) {
        const CandidateCrop* best = pick_by_score();
        run.trace.add("consensus", "decision",
                      {{"picked", best->provenance}, {"note", "consensus disabled"}});
        return *best;
    }

    protocol::PromptKind kind{protocol::Stage::ConsensusEval, variant(run)};
    protocol::RenderContext ctx = base_context(run);
    ctx.candidate_count = std::to_string(eligible.size());
    std::string prompt = protocol::render_prompt(kind, ctx);

    std::vector<agents::AgentImage> views;
    views.reserve(eligible.size());
    for (const auto* c : eligible) views.push_back(make_view(run, c->crop));

    auto reply = scanner_call(run, "consensus", prompt, views);
    std::optional<int> choice;
    if (reply) choice = protocol::parse_choice(*reply, static_cast<int>(eligible.size()));

    if (!choice) {
        const CandidateCrop* best = pick_by_score();
        degrade(run, FallbackLevel::ConsensusSkipped);
        run.trace.add("consensus", "fallback",
                      {{"picked", best->provenance},
                       {"reason", reply ? "pick unparseable" : "scanner unavailable"}});
        return *best;
    }

    const CandidateCrop* picked = eligible[static_cast<size_t>(*choice - 1)];
    run.trace.add("consensus", "decision", {{"picked", picked->provenance}, {"choice", *choice}});
    return *picked;
}

GroundingResult GroundingPipeline::finish(Run& run, PointPx point, FallbackLevel level,
                                          std::optional<CandidateCrop> chosen,
                                          std::optional<PointPx> p_scanner,
                                          std::optional<PointPx> p_locator) const {
    degrade(run, level);
    GroundingResult result;
    result.final_point = geometry::clamp_point(point, run.task.screenshot->size());
    result.p_scanner = p_scanner;
    result.p_locator = p_locator;
    result.chosen_candidate = std::move(chosen);
    result.calls = run.calls;
    result.fallback = run.fallback;
    run.trace.add("result", "final",
                  {{"point_global", point_json(result.final_point)},
                   {"fallback_level", std::string(fallback_name(result.fallback))},
                   {"scanner_calls", run.calls.scanner},
                   {"locator_calls", run.calls.locator}});
    result.trace = std::move(run.trace);
    return result;
}

GroundingResult GroundingPipeline::stage5_enhance(Run& run, const CandidateCrop& chosen) const {
    if (!config_.enable_enhancement) {
        run.trace.add("enhance", "skipped", {{"reason", "enhancement disabled"}});
        return finish(run, chosen.locator_point, run.fallback, chosen, std::nullopt,
                      chosen.locator_point);
    }

    const int factor = config_.upscale_factor;
    agents::AgentImage up_view = make_view(run, chosen.crop, factor);
    RectPx up_rect = up_view.local_size().as_rect();
    run.trace.add("enhance", "upscale",
                  {{"crop_global", rect_json(chosen.crop)},
                   {"factor", factor},
                   {"method", "nearest-neighbor"}});

    // scanner's coarse estimate: 5x5 cell, then one of 9 inner zones
    std::optional<PointPx> p_scanner;
    {
        protocol::PromptKind kind{protocol::Stage::ResolutionEnhance, variant(run)};
        std::string prompt = protocol::render_prompt(kind, base_context(run));
        auto reply = scanner_call(run, "resolution_enhance", prompt, {up_view});
        if (reply) {
            auto parsed =
                protocol::parse_index_location(*reply, config_.enhance_grid.cells());
            if (parsed) {
                try {
                    auto cells = geometry::partition_grid(up_rect, config_.enhance_grid);
                    PointPx zc =
                        geometry::zone_center(cells[static_cast<size_t>(parsed->index - 1)],
                                              parsed->zone);
                    PointPx local = geometry::scale_point_down(zc, factor);
                    p_scanner = geometry::clamp_point(
                        geometry::to_global(local, chosen.crop), run.task.screenshot->size());
                    run.trace.add("resolution_enhance", "decision",
                                  {{"index", parsed->index},
                                   {"zone", std::string(geometry::zone_name(parsed->zone))},
                                   {"point_global", point_json(*p_scanner)}});
                } catch (const std::exception& e) {
                    run.trace.add("resolution_enhance", "parse_error", {{"what", e.what()}});
                }
            } else {
                run.trace.add("resolution_enhance", "parse_error",
                              {{"note", "index/location missing"}});
            }
        }
    }

    // locator's direct prediction on the upscaled crop
    std::optional<PointPx> p_locator;
    {
        auto p_up = locator_call(run, "resolution_enhance", up_view);
        if (p_up) {
            PointPx local = geometry::scale_point_down(*p_up, factor);
            p_locator = geometry::clamp_point(geometry::to_global(local, chosen.crop),
                                              run.task.screenshot->size());
            run.trace.add("resolution_enhance", "locator_point",
                          {{"point_global", point_json(*p_locator)}});
        }
    }

    if (p_scanner && p_locator) {
        if (*p_scanner == *p_locator) {
            run.trace.add("decide", "decision", {{"note", "points identical"}});
            return finish(run, *p_locator, run.fallback, chosen, p_scanner, p_locator);
        }
        protocol::PromptKind kind{protocol::Stage::FinalDecide, variant(run)};
        protocol::RenderContext ctx = base_context(run);
        ctx.point_a = geometry::to_string(*p_scanner);
        ctx.point_b = geometry::to_string(*p_locator);
        std::string prompt = protocol::render_prompt(kind, ctx);
        auto reply = scanner_call(run, "decide", prompt, {up_view});
        std::optional<protocol::ParsedPoint> parsed;
        if (reply) parsed = protocol::parse_point(*reply);
        if (parsed) {
            // snap the reply to the nearer of the two candidates; ties favor
            // the locator, the spatial specialist
            auto d2 = [&](const PointPx& p) {
                long long dx = p.x - parsed->point.x, dy = p.y - parsed->point.y;
                return dx * dx + dy * dy;
            };
            PointPx final = d2(*p_scanner) < d2(*p_locator) ? *p_scanner : *p_locator;
            run.trace.add("decide", "decision",
                          {{"reply_point", point_json(parsed->point)},
                           {"final", point_json(final)}});
            return finish(run, final, run.fallback, chosen, p_scanner, p_locator);
        }
        run.trace.add("decide", "fallback", {{"reason", "decide unparseable; using locator"}});
        return finish(run, *p_locator, FallbackLevel::LocatorOnly, chosen, p_scanner, p_locator);
    }

    if (p_locator) {
        run.trace.add("decide", "fallback", {{"reason", "scanner estimate unavailable"}});
        return finish(run, *p_locator, FallbackLevel::LocatorOnly, chosen, std::nullopt,
                      p_locator);
    }
    if (p_scanner) {
        run.trace.add("decide", "fallback", {{"reason", "locator unavailable"}});
        return finish(run, *p_scanner, run.fallback, chosen, p_scanner, std::nullopt);
    }

    run.trace.add("decide", "fallback", {{"reason", "no stage-5 estimate; crop center"}});
    return finish(run, geometry::rect_center(chosen.crop), FallbackLevel::CenterOfBestRegion,
                  chosen, std::nullopt, std::nullopt);
}

GroundingResult GroundingPipeline::run(const TaskInput& task) const {
    try {
        Run state = begin(task);

        if (config_.max_scanner_calls <= 0) {
            state.trace.add("pipeline", "fallback", {{"reason", "zero scanner budget"}});
            return finish(state, geometry::rect_center(task.screenshot->size().as_rect()),
                          FallbackLevel::CenterOfBestRegion, std::nullopt, std::nullopt,
                          std::nullopt);
        }

        std::vector<SearchNode> frontier = stage1_allocate(state);

        std::vector<CandidateCrop> candidates;
        stage2_refine(state, frontier, [&](const SearchNode& leaf) {
            if (static_cast<int>(candidates.size()) >= config_.max_candidates) return false;
            auto candidate = stage3_verify(state, leaf);
            if (candidate) candidates.push_back(std::move(*candidate));
            return static_cast<int>(candidates.size()) < config_.max_candidates;
        });

        if (candidates.empty()) {
            RectPx best = frontier.empty() ? task.screenshot->size().as_rect() : frontier[0].rect;
            state.trace.add("pipeline", "fallback",
                            {{"reason", "no candidates; center of best region"}});
            return finish(state, geometry::rect_center(best),
                          FallbackLevel::CenterOfBestRegion, std::nullopt, std::nullopt,
                          std::nullopt);
        }

        CandidateCrop chosen = stage4_consensus(state, candidates);
        return stage5_enhance(state, chosen);
    } catch (const std::exception& e) {
        // a batch never dies on one task
        Run state;
        state.task = task;
        state.trace.add("pipeline", "unrecoverable", {{"what", e.what()}});
        GroundingResult result;
        if (task.screenshot && !task.screenshot->empty()) {
            result.final_point = geometry::rect_center(task.screenshot->size().as_rect());
        }
        result.fallback = FallbackLevel::CenterOfBestRegion;
        result.calls = state.calls;
        result.trace = std::move(state.trace);
        return result;
    }
}

}  // namespace scanloc::pipeline
