#include "scanloc/agents.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include "scanloc/common.hpp"

namespace scanloc::agents {

namespace {

std::string rect_key(const geometry::RectPx& r) {
    return std::to_string(r.x1) + "," + std::to_string(r.y1) + "," + std::to_string(r.x2) + "," +
           std::to_string(r.y2);
}

// RNG streams are keyed by (seed, task, stage tag, geometric payload) so a
// given question always gets the same answer regardless of call order,
// concurrency, or how many other calls a particular budget allows.
Rng keyed_rng(uint64_t seed, const ImageMeta& meta, std::string_view tag,
              const std::string& extra = {}) {
    std::string key = meta.task_id;
    key += '|';
    key += tag;
    key += '|';
    key += rect_key(meta.global_rect);
    key += '|';
    key += std::to_string(meta.upscale);
    if (!extra.empty()) {
        key += '|';
        key += extra;
    }
    return derive_rng(seed, key);
}

int clamp_score(double v) {
    return std::clamp(static_cast<int>(std::lround(v)), 0, 100);
}

geometry::PointPx local_of_global(const geometry::PointPx& global, const ImageMeta& meta) {
    return {(global.x - meta.global_rect.x1) * meta.upscale + meta.upscale / 2,
            (global.y - meta.global_rect.y1) * meta.upscale + meta.upscale / 2};
}

}  // namespace

void OracleConfig::validate() const {
    if (scanner_flip_prob < 0 || scanner_flip_prob > 1 || locator_miss_prob < 0 ||
        locator_miss_prob > 1) {
        throw std::invalid_argument("oracle probabilities must lie in [0,1]");
    }
    if (scanner_score_noise < 0 || locator_sigma < 0) {
        throw std::invalid_argument("oracle noise stddevs must be >= 0");
    }
}

void GroundTruthIndex::add(const std::string& task_id, const geometry::RectPx& bbox_halfopen) {
    if (!bbox_halfopen.valid()) throw std::invalid_argument("ground-truth bbox must be valid");
    boxes_[task_id] = bbox_halfopen;
}

std::optional<geometry::RectPx> GroundTruthIndex::lookup(const std::string& task_id) const {
    auto it = boxes_.find(task_id);
    if (it == boxes_.end()) return std::nullopt;
    return it->second;
}

OracleScanner::OracleScanner(OracleConfig config, GroundTruthIndexPtr truth)
    : config_(config), truth_(std::move(truth)) {
    config_.validate();
    if (!truth_) throw std::invalid_argument("oracle scanner needs a ground-truth index");
}

geometry::RectPx OracleScanner::truth_for(const ImageMeta& meta) const {
    auto gt = truth_->lookup(meta.task_id);
    if (!gt) throw AgentError("oracle has no ground truth for task " + meta.task_id);
    return *gt;
}

std::string OracleScanner::complete(const std::string& prompt,
                                    const std::vector<AgentImage>& images) {
    if (images.empty()) throw AgentError("oracle scanner expects at least one image");

    if (prompt.find("Provide the possibilities for each region") != std::string::npos) {
        return answer_selection(images.front());
    }
    if (prompt.find("You need to check if the image region") != std::string::npos) {
        return answer_region_verify(images.front());
    }
    if (prompt.find("determine whether this cropped region") != std::string::npos) {
        return answer_crossmodal(images.back());
    }
    if (prompt.find("divided it into 5x5 smaller regions") != std::string::npos) {
        return answer_enhance(images.front());
    }
    if (prompt.find("cropped regions taken from my desktop screenshot") != std::string::npos) {
        return answer_consensus(images);
    }
    if (prompt.find("Two candidate click points") != std::string::npos) {
        return answer_decide(prompt, images.front());
    }
    throw AgentError("oracle scanner: unrecognized prompt template");
}

std::string OracleScanner::answer_selection(const AgentImage& region) const {
    geometry::RectPx gt = truth_for(region.meta);
    const geometry::RectPx& rect = region.meta.global_rect;

    std::vector<geometry::RectPx> tiles;
    try {
        tiles = geometry::partition_grid(rect, {3, 3});
    } catch (const std::exception&) {
        // region too small to matter; score everything flat
        std::string out;
        for (int i = 1; i <= 9; ++i) {
            out += "Region " + std::to_string(i) + ": 10 (region too small to judge)\n";
        }
        return out;
    }

    std::string out;
    for (int i = 0; i < 9; ++i) {
        const auto& tile = tiles[static_cast<size_t>(i)];
        double base = tile.intersects(gt) ? 90.0 : 10.0;
        Rng rng = keyed_rng(config_.seed, region.meta, "select", rect_key(tile));
        int score = clamp_score(base + rng.gauss(config_.scanner_score_noise));
        out += "Region " + std::to_string(i + 1) + ": " + std::to_string(score) +
               (base > 50 ? " (plausible area for the target)\n" : " (unlikely area)\n");
    }
    return out;
}

std::string OracleScanner::answer_region_verify(const AgentImage& region) const {
    geometry::RectPx gt = truth_for(region.meta);
    bool verdict = region.meta.global_rect.intersects(gt);
    Rng rng = keyed_rng(config_.seed, region.meta, "region_verify");
    if (rng.bernoulli(config_.scanner_flip_prob)) verdict = !verdict;
    return std::string("Checked the region against the requested operation.\n<answer>") +
           (verdict ? "yes" : "no") + "</answer>";
}

std::string OracleScanner::answer_crossmodal(const AgentImage& crop) const {
    geometry::RectPx gt = truth_for(crop.meta);
    bool verdict = crop.meta.global_rect.intersects(gt);
    Rng rng = keyed_rng(config_.seed, crop.meta, "crossmodal");
    if (rng.bernoulli(config_.scanner_flip_prob)) verdict = !verdict;
    return std::string("<relevance>") + (verdict ? "yes" : "no") +
           "</relevance>\n<reasoning>compared the crop with the target element</reasoning>";
}

std::string OracleScanner::answer_enhance(const AgentImage& upscaled) const {
    geometry::RectPx gt = truth_for(upscaled.meta);
    geometry::ImageSize local = upscaled.local_size();
    geometry::RectPx local_rect = local.as_rect();

    Rng rng = keyed_rng(config_.seed, upscaled.meta, "enhance");

    int index;
    geometry::ZoneId zone;
    bool confused = rng.bernoulli(config_.scanner_flip_prob);
    std::vector<geometry::RectPx> cells;
    bool partitioned = true;
    try {
        cells = geometry::partition_grid(local_rect, {5, 5});
    } catch (const std::exception&) {
        partitioned = false;
    }

    if (confused || !partitioned) {
        index = rng.uniform_int(1, 25);
        zone = static_cast<geometry::ZoneId>(rng.uniform_int(0, geometry::kZoneCount - 1));
    } else {
        geometry::PointPx gc = geometry::rect_center(gt);
        geometry::PointPx p =
            geometry::clamp_point(local_of_global(gc, upscaled.meta), local_rect);
        index = 1;
        for (int i = 0; i < 25; ++i) {
            if (cells[static_cast<size_t>(i)].contains(p)) {
                index = i + 1;
                break;
            }
        }
        zone = geometry::ZoneId::Center;
        try {
            auto zones = geometry::partition_grid(cells[static_cast<size_t>(index - 1)], {3, 3});
            for (int i = 0; i < 9; ++i) {
                if (zones[static_cast<size_t>(i)].contains(p)) {
                    zone = static_cast<geometry::ZoneId>(i);
                    break;
                }
            }
        } catch (const std::exception&) {
            // cell too small to subdivide; center is the best guess
        }
    }

    return "The target sits in cell " + std::to_string(index) + ".\n<index>" +
           std::to_string(index) + "</index>\n<location>" + std::string(geometry::zone_name(zone)) +
           "</location>";
}

std::string OracleScanner::answer_consensus(const std::vector<AgentImage>& crops) const {
    if (crops.empty()) throw AgentError("oracle consensus expects candidate crops");
    geometry::RectPx gt = truth_for(crops.front().meta);
    geometry::PointPx gc = geometry::rect_center(gt);

    // pick the crop containing the target center; otherwise the closest one
    int best = 0;
    long long best_d2 = -1;
    for (size_t i = 0; i < crops.size(); ++i) {
        const auto& r = crops[i].meta.global_rect;
        if (r.contains(gc)) {
            best = static_cast<int>(i);
            best_d2 = 0;
            break;
        }
        geometry::PointPx c = geometry::rect_center(r);
        long long dx = c.x - gc.x, dy = c.y - gc.y;
        long long d2 = dx * dx + dy * dy;
        if (best_d2 < 0 || d2 < best_d2) {
            best = static_cast<int>(i);
            best_d2 = d2;
        }
    }

    // Evaluation reliability degrades with candidate-set size: each extra
    // crop adds an independent chance of confusing the judgement, after which
    // the pick is uniform.
    std::string set_key;
    for (const auto& c : crops) set_key += rect_key(c.meta.global_rect) + ";";
    Rng rng = keyed_rng(config_.seed, crops.front().meta, "eval", set_key);
    bool confused = false;
    for (size_t i = 1; i < crops.size(); ++i) {
        if (rng.bernoulli(config_.scanner_flip_prob)) confused = true;
    }
    int pick = confused ? rng.uniform_int(1, static_cast<int>(crops.size())) : best + 1;

    return "Compared all candidate crops against the operation.\n<choice>" +
           std::to_string(pick) + "</choice>";
}

std::string OracleScanner::answer_decide(const std::string& prompt,
                                         const AgentImage& crop) const {
    geometry::RectPx gt = truth_for(crop.meta);
    geometry::PointPx gc = geometry::rect_center(gt);

    static const std::regex point_re(
        R"(Point\s+([12]):\s*\((-?\d+),\s*(-?\d+)\))", std::regex::optimize);
    geometry::PointPx pts[2] = {gc, gc};
    bool have[2] = {false, false};
    auto begin = std::sregex_iterator(prompt.begin(), prompt.end(), point_re);
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
        int which = std::stoi((*it)[1].str()) - 1;
        pts[which] = {std::stoi((*it)[2].str()), std::stoi((*it)[3].str())};
        have[which] = true;
    }
    if (!have[0] || !have[1]) throw AgentError("oracle decide: candidate points not found");

    auto d2 = [&](const geometry::PointPx& p) {
        long long dx = p.x - gc.x, dy = p.y - gc.y;
        return dx * dx + dy * dy;
    };
    int closer = d2(pts[0]) <= d2(pts[1]) ? 0 : 1;
    Rng rng = keyed_rng(config_.seed, crop.meta, "decide");
    if (rng.bernoulli(config_.scanner_flip_prob)) closer = 1 - closer;

    return "Point " + std::to_string(closer + 1) + " aligns better with the target.\n" +
           geometry::to_string(pts[closer]);
}

OracleLocator::OracleLocator(OracleConfig config, GroundTruthIndexPtr truth)
    : config_(config), truth_(std::move(truth)) {
    config_.validate();
    if (!truth_) throw std::invalid_argument("oracle locator needs a ground-truth index");
}

geometry::PointPx OracleLocator::ground(const std::string& /*instruction*/,
                                        const AgentImage& image) {
    auto gt = truth_->lookup(image.meta.task_id);
    if (!gt) throw AgentError("oracle has no ground truth for task " + image.meta.task_id);

    geometry::ImageSize local = image.local_size();
    geometry::RectPx local_rect = local.as_rect();
    Rng rng = keyed_rng(config_.seed, image.meta, "locate");

    bool miss = rng.bernoulli(config_.locator_miss_prob);
    bool target_visible = image.meta.global_rect.intersects(*gt) &&
                          image.meta.global_rect.contains(geometry::rect_center(*gt));
    if (miss || !target_visible) {
        // decoy: somewhere in the supplied frame
        return {rng.uniform_int(0, local.width - 1), rng.uniform_int(0, local.height - 1)};
    }

    geometry::PointPx target = local_of_global(geometry::rect_center(*gt), image.meta);
    geometry::PointPx noisy{
        target.x + static_cast<int>(std::lround(rng.gauss(config_.locator_sigma))),
        target.y + static_cast<int>(std::lround(rng.gauss(config_.locator_sigma)))};
    return geometry::clamp_point(noisy, local_rect);
}

}  // namespace scanloc::agents
