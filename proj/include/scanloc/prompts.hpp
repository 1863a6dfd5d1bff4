#pragma once

#include <span>
#include <string_view>

namespace scanloc::prompts {

// One entry per template shipped under data/prompts/. The embedded text is
// byte-identical to the data file (minus the file's single trailing newline);
// a unit test enforces the equivalence.
struct TemplateInfo {
    std::string_view id;
    std::string_view text;
};

std::span<const TemplateInfo> all();

// Throws std::invalid_argument for unknown ids.
std::string_view text(std::string_view id);

bool exists(std::string_view id);

}  // namespace scanloc::prompts
