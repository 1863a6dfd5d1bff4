#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scanloc/geometry.hpp"

namespace scanloc::protocol {

// One pipeline stage's prompt family. Selection prompts differ between the
// initial level (screenshot framing sentence) and deeper levels.
enum class Stage {
    SelectionInitial,
    SelectionDeeper,
    RegionVerify,
    CrossmodalVerify,
    ResolutionEnhance,
    ConsensusEval,
    FinalDecide,
    LocatorGround,
    BaselineGround,
};

// Most templates ship in two versions; the special one drops the application
// clause and is used for the common_linux / common_windows / common_macos
// subsets, which carry no application name.
enum class Variant { Normal, Special };

struct PromptKind {
    Stage stage = Stage::SelectionInitial;
    Variant variant = Variant::Normal;
};

// Grounding prompt flavors for the specialist models (plus the generic
// baseline wording).
enum class LocatorStyle { OsAtlas, UGround, UGroundV1, Baseline };

Variant variant_for_subset(std::string_view subset_id);

std::string_view stage_name(Stage stage);

// Values substituted for {placeholder} markers. Fields a template does not
// reference may stay empty.
struct RenderContext {
    std::string instruction;
    std::string application_name;
    std::string system_name;
    // stage-specific extras
    std::string candidate_count;  // consensus_eval
    std::string point_a;          // final_decide
    std::string point_b;          // final_decide
    LocatorStyle locator_style = LocatorStyle::OsAtlas;
};

// Template id (data/prompts/<id>.txt) for a kind; LocatorGround resolves via
// the context's locator_style.
std::string template_id(PromptKind kind, LocatorStyle style = LocatorStyle::OsAtlas);

// Byte-exact instantiation of the template. Throws std::invalid_argument
// naming the field when a referenced placeholder is missing/empty.
std::string render_prompt(PromptKind kind, const RenderContext& ctx);

// --- parsers -----------------------------------------------------------
//
// All parsers are total: they never throw on arbitrary text, returning
// nullopt (or a warning-carrying value) instead.

struct RegionScores {
    std::array<int, 9> scores{};  // index 0 = Region 1
    bool warning = false;
    std::vector<std::string> notes;

    int score(int region_1based) const { return scores[static_cast<size_t>(region_1based - 1)]; }
};

// Extracts "Region <n>: <score>" lines (markdown bold, stray whitespace and
// trailing explanations tolerated). Missing regions default to 0 with a
// warning; scores clamp to [0,100]. Zero recognized regions -> nullopt.
std::optional<RegionScores> parse_region_scores(std::string_view text);

struct Verdict {
    bool value = false;
    bool warning = false;
    std::string raw_reasoning;
};

enum class YesNoTag { Answer, Relevance };

// <tag>yes|no</tag>, case-insensitive; falls back to the last standalone
// yes/no token; if neither, verdict=no with warning.
Verdict parse_tagged_yes_no(std::string_view text, YesNoTag tag);

struct CellZoneChoice {
    int index = 0;  // 1-based cell index
    geometry::ZoneId zone = geometry::ZoneId::Center;
};

// <index>n</index> + <location>zone</location>, any order, hyphen/case
// tolerant zone phrases. Out-of-range index or missing tag -> nullopt.
std::optional<CellZoneChoice> parse_index_location(std::string_view text, int max_index = 25);

struct ParsedPoint {
    geometry::PointPx point;
    bool from_box = false;  // reply was a 4-number box; point is its center
    bool warning = false;
};

// First coordinate construct in the text: either a 4-number box (center
// taken) or a comma-separated integer pair, optionally parenthesized or
// bracketed. Decimal values are floored with a warning.
std::optional<ParsedPoint> parse_point(std::string_view text);

// <choice>k</choice> with 1 <= k <= max_choice; falls back to the first
// standalone integer in range when the tag is absent.
std::optional<int> parse_choice(std::string_view text, int max_choice);

}  // namespace scanloc::protocol
