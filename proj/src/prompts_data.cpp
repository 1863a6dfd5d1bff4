#include "scanloc/prompts.hpp"

#include <array>
#include <stdexcept>
#include <string>

namespace scanloc::prompts {

namespace {

constexpr std::string_view kSelectionInitialNormal =
    R"PT(I have provided you a screenshot of my desktop containing the interface of the {application_name} application running on the {system_name} system. Where should I click if I want to DIRECTLY perform the following operation in the {application_name}: **{instruction}**? Provide the possibilities for each region (Region 1 to Region 9, ordered from left to right, top to bottom) with a score between 0 and 100. Your output MUST follow this format: "Region X: SCORE (explanation)".)PT";

constexpr std::string_view kSelectionInitialSpecial =
    R"PT(I have provided you a screenshot of my desktop using {system_name} system. Where should I click if I want to DIRECTLY perform the following operation in the {application_name}: **{instruction}**? Provide the possibilities for each region (Region 1 to Region 9, ordered from left to right, top to bottom) with a score between 0 and 100. Your output MUST follow this format: "Region X: SCORE (explanation)".)PT";

constexpr std::string_view kSelectionDeeperNormal =
    R"PT(Where should I click if I want to DIRECTLY perform the following operation in the {application_name}: **{instruction}**? Provide the possibilities for each region (Region 1 to Region 9, ordered from left to right, top to bottom) with a score between 0 and 100. Your output MUST follow this format: "Region X: SCORE (explanation)".)PT";

constexpr std::string_view kSelectionDeeperSpecial =
    R"PT(Where should I click if I want to DIRECTLY perform the following operation: **{instruction}**? Provide the possibilities for each region (Region 1 to Region 9, ordered from left to right, top to bottom) with a score between 0 and 100. Your output MUST follow this format: "Region X: SCORE (explanation)".)PT";

constexpr std::string_view kRegionVerifyNormal =
    R"PT(You need to check if the image region from my desktop screenshot contains the button or icon for me to DIRECTLY perform the following operation in the {application}: **{instruction}**. You are required to output your reasoning process first, and then provide your final answer in the format: <answer>yes/no</answer>.)PT";

constexpr std::string_view kRegionVerifySpecial =
    R"PT(You need to check if the image region from my desktop screenshot contains the button or icon for me to DIRECTLY perform the following operation: **{instruction}**. You are required to output your reasoning process first, and then provide your final answer in the format: <answer>yes/no</answer>.)PT";

constexpr std::string_view kCrossmodalVerifyNormal =
    R"PT(I want to DIRECTLY perform the following operation in the {application}: **{instruction}**. First, I'm showing you the original screenshot image, followed by a cropped region from it. You need to determine whether this cropped region is likely to contain the target button, area, or icon for the operation. Answer with <relevance>yes/no</relevance> and provide your reasoning within <reasoning>...</reasoning>.

This is the original screenshot image: <Image1>

And this is the cropped region from the original screenshot image: <Image2>)PT";

constexpr std::string_view kCrossmodalVerifySpecial =
    R"PT(I want to DIRECTLY perform the following operation: **{instruction}**. First, I'm showing you the original screenshot image, followed by a cropped region from it. You need to determine whether this cropped region is likely to contain the target button, area, or icon for the operation. Answer with <relevance>yes/no</relevance> and provide your reasoning within <reasoning>...</reasoning>.

This is the original screenshot image: <Image1>

And this is the cropped region from the original screenshot image: <Image2>)PT";

constexpr std::string_view kResolutionEnhanceNormal =
    R"PT(I want to DIRECTLY perform this operation in the {application} on my desktop: **{instruction}**.

I have extracted a candidate region and divided it into 5x5 smaller regions (numbered 1 to 25 from left to right, top to bottom). Please identify which of the 25 regions is the most relevant (return only one region you are most confident about). Then, within that region, tell me which of the 9 inner zones the target click point is closest to. (Choose from: top left, top center, top right, center left, center, center right, bottom left, bottom center, bottom right)

First, provide your reasoning process, and then return your final answer in the following format:

<index>xxx</index>

<location>xxx</location>)PT";

constexpr std::string_view kResolutionEnhanceSpecial =
    R"PT(I want to DIRECTLY perform this operation on my desktop: **{instruction}**.

I have extracted a candidate region and divided it into 5x5 smaller regions (numbered 1 to 25 from left to right, top to bottom). Please identify which of the 25 regions is the most relevant (return only one region you are most confident about). Then, within that region, tell me which of the 9 inner zones the target click point is closest to. (Choose from: top left, top center, top right, center left, center, center right, bottom left, bottom center, bottom right)

First, provide your reasoning process, and then return your final answer in the following format:

<index>xxx</index>

<location>xxx</location>)PT";

constexpr std::string_view kLocatorOsAtlas =
    R"PT(In the screenshot of this web page, please give me the coordinates of the element I want to click on according to my instructions(with point).
"{instruction}")PT";

constexpr std::string_view kLocatorUGround =
    R"PT(In the screenshot, where are the pixel coordinates (x, y) of the element corresponding to "{instruction}"?)PT";

constexpr std::string_view kLocatorUGroundV1 =
    R"PT(Your task is to help the user identify the precise coordinates (x, y) of a specific area/element/object on the screen based on a description.

- Your response should aim to point to the center or a representative point within the described area/element/object as accurately as possible.

- If the description is unclear or ambiguous, infer the most relevant area or element based on its likely context or purpose.

- Your answer should be a single string (x, y) corresponding to the point of the interest.

Description: {instruction}

Answer:)PT";

constexpr std::string_view kBaselineGround =
    R"PT(I want to DIRECTLY perform this operation in the {application} on my desktop: **{instruction}**. You should provide the target CLICK pixel coordinate (x, y) in the ORIGINAL image. You must output only integer coordinate values. For example: '123, 456' or '(123, 456)'.)PT";

constexpr std::string_view kConsensusEvalNormal =
    R"PT(I want to DIRECTLY perform the following operation in the {application}: **{instruction}**. I am showing you {candidate_count} cropped regions taken from my desktop screenshot, numbered 1 to {candidate_count} in the order they are provided. Identify which cropped region is most likely to contain the target button, area, or icon for the operation (return only one region index). First, provide your reasoning process, and then return your final answer in the following format:

<choice>xxx</choice>)PT";

constexpr std::string_view kConsensusEvalSpecial =
    R"PT(I want to DIRECTLY perform the following operation: **{instruction}**. I am showing you {candidate_count} cropped regions taken from my desktop screenshot, numbered 1 to {candidate_count} in the order they are provided. Identify which cropped region is most likely to contain the target button, area, or icon for the operation (return only one region index). First, provide your reasoning process, and then return your final answer in the following format:

<choice>xxx</choice>)PT";

constexpr std::string_view kFinalDecideNormal =
    R"PT(I want to DIRECTLY perform the following operation in the {application}: **{instruction}**. I am showing you a candidate region cropped from my desktop screenshot. Two candidate click points are given in the ORIGINAL screenshot's pixel coordinates: Point 1: {point_a} and Point 2: {point_b}. Choose the candidate point that is more likely to land exactly on the target element. You must output only integer coordinate values for the chosen point. For example: '123, 456' or '(123, 456)'.)PT";

constexpr std::string_view kFinalDecideSpecial =
    R"PT(I want to DIRECTLY perform the following operation: **{instruction}**. I am showing you a candidate region cropped from my desktop screenshot. Two candidate click points are given in the ORIGINAL screenshot's pixel coordinates: Point 1: {point_a} and Point 2: {point_b}. Choose the candidate point that is more likely to land exactly on the target element. You must output only integer coordinate values for the chosen point. For example: '123, 456' or '(123, 456)'.)PT";

constexpr std::array<TemplateInfo, 18> kTemplates = {{
    {"selection_initial_normal", kSelectionInitialNormal},
    {"selection_initial_special", kSelectionInitialSpecial},
    {"selection_deeper_normal", kSelectionDeeperNormal},
    {"selection_deeper_special", kSelectionDeeperSpecial},
    {"region_verify_normal", kRegionVerifyNormal},
    {"region_verify_special", kRegionVerifySpecial},
    {"crossmodal_verify_normal", kCrossmodalVerifyNormal},
    {"crossmodal_verify_special", kCrossmodalVerifySpecial},
    {"resolution_enhance_normal", kResolutionEnhanceNormal},
    {"resolution_enhance_special", kResolutionEnhanceSpecial},
    {"locator_os_atlas", kLocatorOsAtlas},
    {"locator_uground", kLocatorUGround},
    {"locator_uground_v1", kLocatorUGroundV1},
    {"baseline_ground", kBaselineGround},
    {"consensus_eval_normal", kConsensusEvalNormal},
    {"consensus_eval_special", kConsensusEvalSpecial},
    {"final_decide_normal", kFinalDecideNormal},
    {"final_decide_special", kFinalDecideSpecial},
}};

}  // namespace

std::span<const TemplateInfo> all() { return kTemplates; }

std::string_view text(std::string_view id) {
    for (const auto& t : kTemplates) {
        if (t.id == id) return t.text;
    }
    throw std::invalid_argument("unknown prompt template: " + std::string(id));
}

bool exists(std::string_view id) {
    for (const auto& t : kTemplates) {
        if (t.id == id) return true;
    }
    return false;
}

}  // namespace scanloc::prompts
