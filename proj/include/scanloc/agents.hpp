#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "scanloc/geometry.hpp"
#include "scanloc/image.hpp"

namespace scanloc::agents {

// Frame bookkeeping attached to every image handed to an agent. Remote
// backends ignore it (they see pixels only); trace records it; the oracle
// agents use it to relate what they are shown back to ground truth.
struct ImageMeta {
    std::string task_id;
    geometry::RectPx global_rect{};       // screenshot region this image shows
    int upscale = 1;                      // resampling factor applied after cropping
    geometry::ImageSize full_size{};      // original screenshot dimensions
};

struct AgentImage {
    img::ImagePtr pixels;
    ImageMeta meta;

    geometry::ImageSize local_size() const {
        return {meta.global_rect.width() * meta.upscale,
                meta.global_rect.height() * meta.upscale};
    }
};

struct AgentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Generalist multimodal agent: free-form text in, free-form text out.
// Implementations must be safe to call from multiple threads.
class ScannerAgent {
public:
    virtual ~ScannerAgent() = default;
    virtual std::string name() const = 0;
    virtual std::string complete(const std::string& prompt,
                                 const std::vector<AgentImage>& images) = 0;
};

// Specialist grounding agent: returns a point in the supplied image's local
// pixel frame, already clamped inside it.
class LocatorAgent {
public:
    virtual ~LocatorAgent() = default;
    virtual std::string name() const = 0;
    virtual geometry::PointPx ground(const std::string& instruction,
                                     const AgentImage& image) = 0;
};

// ---------------------------------------------------------------------
// Deterministic ground-truth oracles with tunable noise. These stand in for
// real VLMs in desk-scale runs: they answer through exactly the same prompt
// and reply formats the real agents use, detecting the stage from template
// markers, and read the ground truth from an out-of-band index keyed by the
// task id stamped on each image.

struct OracleConfig {
    double scanner_score_noise = 0.0;  // stddev of additive region-score noise
    double scanner_flip_prob = 0.0;    // chance a verdict/choice is corrupted
    double locator_sigma = 0.0;        // stddev (px, input frame) of locator error
    double locator_miss_prob = 0.0;    // chance the locator points at a decoy
    uint64_t seed = 0;

    void validate() const;
};

// task id -> ground-truth bbox (closed, converted to half-open internally).
class GroundTruthIndex {
public:
    void add(const std::string& task_id, const geometry::RectPx& bbox_halfopen);
    std::optional<geometry::RectPx> lookup(const std::string& task_id) const;

private:
    std::unordered_map<std::string, geometry::RectPx> boxes_;
};

using GroundTruthIndexPtr = std::shared_ptr<const GroundTruthIndex>;

class OracleScanner : public ScannerAgent {
public:
    OracleScanner(OracleConfig config, GroundTruthIndexPtr truth);

    std::string name() const override { return "oracle-scanner"; }
    std::string complete(const std::string& prompt,
                         const std::vector<AgentImage>& images) override;

private:
    std::string answer_selection(const AgentImage& region) const;
    std::string answer_region_verify(const AgentImage& region) const;
    std::string answer_crossmodal(const AgentImage& crop) const;
    std::string answer_enhance(const AgentImage& upscaled) const;
    std::string answer_consensus(const std::vector<AgentImage>& crops) const;
    std::string answer_decide(const std::string& prompt, const AgentImage& crop) const;

    geometry::RectPx truth_for(const ImageMeta& meta) const;

    OracleConfig config_;
    GroundTruthIndexPtr truth_;
};

class OracleLocator : public LocatorAgent {
public:
    OracleLocator(OracleConfig config, GroundTruthIndexPtr truth);

    std::string name() const override { return "oracle-locator"; }
    geometry::PointPx ground(const std::string& instruction,
                             const AgentImage& image) override;

private:
    OracleConfig config_;
    GroundTruthIndexPtr truth_;
};

}  // namespace scanloc::agents
