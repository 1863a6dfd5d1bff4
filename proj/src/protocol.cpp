#include "scanloc/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>
#include <stdexcept>

#include "scanloc/prompts.hpp"

namespace scanloc::protocol {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

const std::string* context_value(const RenderContext& ctx, std::string_view name) {
    if (name == "instruction") return &ctx.instruction;
    if (name == "application_name" || name == "application") return &ctx.application_name;
    if (name == "system_name") return &ctx.system_name;
    if (name == "candidate_count") return &ctx.candidate_count;
    if (name == "point_a") return &ctx.point_a;
    if (name == "point_b") return &ctx.point_b;
    return nullptr;
}

}  // namespace

Variant variant_for_subset(std::string_view subset_id) {
    if (subset_id == "common_linux" || subset_id == "common_windows" ||
        subset_id == "common_macos") {
        return Variant::Special;
    }
    return Variant::Normal;
}

std::string_view stage_name(Stage stage) {
    switch (stage) {
        case Stage::SelectionInitial: return "selection_initial";
        case Stage::SelectionDeeper: return "selection_deeper";
        case Stage::RegionVerify: return "region_verify";
        case Stage::CrossmodalVerify: return "crossmodal_verify";
        case Stage::ResolutionEnhance: return "resolution_enhance";
        case Stage::ConsensusEval: return "consensus_eval";
        case Stage::FinalDecide: return "final_decide";
        case Stage::LocatorGround: return "locator_ground";
        case Stage::BaselineGround: return "baseline_ground";
    }
    return "unknown";
}

std::string template_id(PromptKind kind, LocatorStyle style) {
    const char* suffix = kind.variant == Variant::Special ? "_special" : "_normal";
    switch (kind.stage) {
        case Stage::SelectionInitial: return std::string("selection_initial") + suffix;
        case Stage::SelectionDeeper: return std::string("selection_deeper") + suffix;
        case Stage::RegionVerify: return std::string("region_verify") + suffix;
        case Stage::CrossmodalVerify: return std::string("crossmodal_verify") + suffix;
        case Stage::ResolutionEnhance: return std::string("resolution_enhance") + suffix;
        case Stage::ConsensusEval: return std::string("consensus_eval") + suffix;
        case Stage::FinalDecide: return std::string("final_decide") + suffix;
        case Stage::LocatorGround:
            switch (style) {
                case LocatorStyle::OsAtlas: return "locator_os_atlas";
                case LocatorStyle::UGround: return "locator_uground";
                case LocatorStyle::UGroundV1: return "locator_uground_v1";
                case LocatorStyle::Baseline: return "baseline_ground";
            }
            return "locator_os_atlas";
        case Stage::BaselineGround: return "baseline_ground";
    }
    throw std::invalid_argument("unknown prompt kind");
}

std::string render_prompt(PromptKind kind, const RenderContext& ctx) {
    std::string_view tpl = prompts::text(template_id(kind, ctx.locator_style));
    std::string out;
    out.reserve(tpl.size() + 64);

    size_t i = 0;
    while (i < tpl.size()) {
        char c = tpl[i];
        if (c != '{') {
            out.push_back(c);
            ++i;
            continue;
        }
        size_t close = tpl.find('}', i + 1);
        if (close == std::string_view::npos) {
            out.push_back(c);
            ++i;
            continue;
        }
        std::string_view name = tpl.substr(i + 1, close - i - 1);
        const std::string* value = context_value(ctx, name);
        if (value == nullptr) {
            // not a known placeholder; emit literally
            out.append(tpl.substr(i, close - i + 1));
        } else if (value->empty()) {
            throw std::invalid_argument("missing template field: " + std::string(name));
        } else {
            out.append(*value);
        }
        i = close + 1;
    }
    return out;
}

std::optional<RegionScores> parse_region_scores(std::string_view text) {
    static const std::regex re(
        R"(region\s*#?\s*(\d{1,2})\s*\**\s*[:=]\s*\**\s*(\d{1,3}))",
        std::regex::icase | std::regex::optimize);

    RegionScores result;
    std::array<bool, 9> seen{};
    std::string s(text);
    auto begin = std::sregex_iterator(s.begin(), s.end(), re);
    auto end = std::sregex_iterator();
    int recognized = 0;
    for (auto it = begin; it != end; ++it) {
        int region = std::stoi((*it)[1].str());
        int score = std::stoi((*it)[2].str());
        if (region < 1 || region > 9) {
            result.notes.push_back("ignored out-of-range region " + std::to_string(region));
            result.warning = true;
            continue;
        }
        if (score > 100) {
            result.notes.push_back("clamped score for region " + std::to_string(region));
            result.warning = true;
            score = 100;
        }
        if (seen[static_cast<size_t>(region - 1)]) {
            result.notes.push_back("duplicate score for region " + std::to_string(region) +
                                   "; keeping the last");
            result.warning = true;
        } else {
            ++recognized;
        }
        seen[static_cast<size_t>(region - 1)] = true;
        result.scores[static_cast<size_t>(region - 1)] = score;
    }

    if (recognized == 0) return std::nullopt;
    if (recognized < 9) {
        result.warning = true;
        result.notes.push_back(std::to_string(9 - recognized) +
                               " region(s) missing; defaulted to 0");
    }
    return result;
}

Verdict parse_tagged_yes_no(std::string_view text, YesNoTag tag) {
    const char* tag_name = tag == YesNoTag::Answer ? "answer" : "relevance";
    Verdict verdict;

    std::string s(text);
    {
        static const std::regex reasoning_re(R"(<\s*reasoning\s*>([\s\S]*?)<\s*/\s*reasoning\s*>)",
                                             std::regex::icase | std::regex::optimize);
        std::smatch m;
        verdict.raw_reasoning = std::regex_search(s, m, reasoning_re) ? m[1].str() : s;
    }

    std::regex tag_re(std::string(R"(<\s*)") + tag_name + R"(\s*>\s*(yes|no)\s*<\s*/\s*)" +
                          tag_name + R"(\s*>)",
                      std::regex::icase | std::regex::optimize);
    std::smatch m;
    if (std::regex_search(s, m, tag_re)) {
        verdict.value = lower(m[1].str()) == "yes";
        return verdict;
    }

    // fall back to the last standalone yes/no token
    static const std::regex word_re(R"(\b(yes|no)\b)", std::regex::icase | std::regex::optimize);
    auto begin = std::sregex_iterator(s.begin(), s.end(), word_re);
    auto end = std::sregex_iterator();
    std::string last;
    for (auto it = begin; it != end; ++it) last = lower((*it)[1].str());
    if (!last.empty()) {
        verdict.value = last == "yes";
        verdict.warning = true;
        return verdict;
    }

    verdict.value = false;
    verdict.warning = true;
    return verdict;
}

std::optional<CellZoneChoice> parse_index_location(std::string_view text, int max_index) {
    static const std::regex index_re(R"(<\s*index\s*>\s*(\d{1,4})\s*<\s*/\s*index\s*>)",
                                     std::regex::icase | std::regex::optimize);
    static const std::regex loc_re(R"(<\s*location\s*>\s*([^<]{1,64}?)\s*<\s*/\s*location\s*>)",
                                   std::regex::icase | std::regex::optimize);

    std::string s(text);
    std::smatch mi, ml;
    if (!std::regex_search(s, mi, index_re)) return std::nullopt;
    if (!std::regex_search(s, ml, loc_re)) return std::nullopt;

    int index = std::stoi(mi[1].str());
    if (index < 1 || index > max_index) return std::nullopt;

    auto zone = geometry::zone_from_text(ml[1].str());
    if (!zone) return std::nullopt;

    return CellZoneChoice{index, *zone};
}

namespace {

struct NumberToken {
    double value = 0;
    bool is_integer = true;
    size_t end = 0;  // index just past the token
};

std::optional<NumberToken> read_number(std::string_view s, size_t pos) {
    size_t i = pos;
    bool neg = false;
    if (i < s.size() && (s[i] == '-' || s[i] == '+')) {
        neg = s[i] == '-';
        ++i;
    }
    if (i >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
    double value = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
        value = value * 10 + (s[i] - '0');
        ++i;
    }
    bool is_int = true;
    if (i < s.size() && s[i] == '.' && i + 1 < s.size() &&
        std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
        is_int = false;
        ++i;
        double frac = 0.1;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
            value += (s[i] - '0') * frac;
            frac *= 0.1;
            ++i;
        }
    }
    return NumberToken{neg ? -value : value, is_int, i};
}

size_t skip_soft(std::string_view s, size_t pos) {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t' || s[pos] == '\n' || s[pos] == '\r'))
        ++pos;
    return pos;
}

}  // namespace

std::optional<ParsedPoint> parse_point(std::string_view text) {
    // scan for the first comma-separated run of numbers
    for (size_t i = 0; i < text.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(text[i])) && text[i] != '-') continue;
        // keep "v1.2" or "5x5" style fragments out: token must not be glued to
        // an identifier character on the left
        if (i > 0) {
            unsigned char prev = static_cast<unsigned char>(text[i - 1]);
            if (std::isalnum(prev) || prev == '.' || prev == '_') continue;
        }

        std::vector<NumberToken> run;
        size_t pos = i;
        while (run.size() < 4) {
            auto num = read_number(text, pos);
            if (!num) break;
            run.push_back(*num);
            size_t after = skip_soft(text, num->end);
            if (after < text.size() && text[after] == ',') {
                pos = skip_soft(text, after + 1);
            } else {
                break;
            }
        }

        if (run.size() >= 2) {
            ParsedPoint out;
            bool fractional = false;
            if (run.size() == 4) {
                out.from_box = true;
                double cx = (run[0].value + run[2].value) / 2.0;
                double cy = (run[1].value + run[3].value) / 2.0;
                out.point = {static_cast<int>(std::floor(cx)), static_cast<int>(std::floor(cy))};
                fractional = !run[0].is_integer || !run[1].is_integer || !run[2].is_integer ||
                             !run[3].is_integer;
            } else {
                out.point = {static_cast<int>(std::floor(run[0].value)),
                             static_cast<int>(std::floor(run[1].value))};
                fractional = !run[0].is_integer || !run[1].is_integer;
            }
            out.warning = fractional || run.size() == 3;
            return out;
        }
        if (!run.empty()) {
            i = run.back().end - 1;  // single number; resume after it
        }
    }
    return std::nullopt;
}

std::optional<int> parse_choice(std::string_view text, int max_choice) {
    static const std::regex choice_re(R"(<\s*choice\s*>\s*(\d{1,4})\s*<\s*/\s*choice\s*>)",
                                      std::regex::icase | std::regex::optimize);
    std::string s(text);
    std::smatch m;
    if (std::regex_search(s, m, choice_re)) {
        int v = std::stoi(m[1].str());
        if (v >= 1 && v <= max_choice) return v;
        return std::nullopt;
    }
    // fallback: first standalone integer in range
    static const std::regex int_re(R"((?:^|[^\w.])(\d{1,4})(?:[^\w.]|$))", std::regex::optimize);
    auto begin = std::sregex_iterator(s.begin(), s.end(), int_re);
    auto end = std::sregex_iterator();
    for (auto it = begin; it != end; ++it) {
        int v = std::stoi((*it)[1].str());
        if (v >= 1 && v <= max_choice) return v;
    }
    return std::nullopt;
}

}  // namespace scanloc::protocol
