#include "scanloc/geometry.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <stdexcept>

namespace scanloc::geometry {

namespace {

constexpr std::array<std::string_view, kZoneCount> kZoneNames = {
    "top left",    "top center",    "top right",
    "center left", "center",        "center right",
    "bottom left", "bottom center", "bottom right",
};

std::string normalize_zone_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        unsigned char u = static_cast<unsigned char>(c);
        if (c == '-' || c == '_') {
            out.push_back(' ');
        } else {
            out.push_back(static_cast<char>(std::tolower(u)));
        }
    }
    // collapse whitespace runs, trim ends
    std::string collapsed;
    bool in_space = true;
    for (char c : out) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!in_space) collapsed.push_back(' ');
            in_space = true;
        } else {
            collapsed.push_back(c);
            in_space = false;
        }
    }
    while (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();
    return collapsed;
}

}  // namespace

std::string_view zone_name(ZoneId zone) {
    return kZoneNames[static_cast<size_t>(zone)];
}

std::optional<ZoneId> zone_from_text(std::string_view text) {
    std::string norm = normalize_zone_text(text);
    if (norm == "middle" || norm == "middle center" || norm == "center center") {
        return ZoneId::Center;
    }
    if (norm == "middle left") return ZoneId::CenterLeft;
    if (norm == "middle right") return ZoneId::CenterRight;
    for (int i = 0; i < kZoneCount; ++i) {
        if (norm == kZoneNames[static_cast<size_t>(i)]) return static_cast<ZoneId>(i);
    }
    return std::nullopt;
}

ZoneId zone_from_row_col(int row, int col) {
    if (row < 0 || row > 2 || col < 0 || col > 2) {
        throw std::invalid_argument("zone row/col out of range");
    }
    return static_cast<ZoneId>(row * 3 + col);
}

int zone_row(ZoneId zone) { return static_cast<int>(zone) / 3; }
int zone_col(ZoneId zone) { return static_cast<int>(zone) % 3; }

std::vector<RectPx> partition_grid(const RectPx& rect, const GridSpec& grid) {
    if (grid.rows < 1 || grid.cols < 1) {
        throw std::invalid_argument("grid must have at least one row and column");
    }
    if (!rect.valid() || rect.width() < grid.cols || rect.height() < grid.rows) {
        throw std::invalid_argument("region too small to partition");
    }

    // Leading rows/cols absorb the remainder pixels.
    auto edges = [](int start, int extent, int parts) {
        std::vector<int> e;
        e.reserve(static_cast<size_t>(parts) + 1);
        int base = extent / parts;
        int rem = extent % parts;
        int pos = start;
        e.push_back(pos);
        for (int i = 0; i < parts; ++i) {
            pos += base + (i < rem ? 1 : 0);
            e.push_back(pos);
        }
        return e;
    };

    std::vector<int> xs = edges(rect.x1, rect.width(), grid.cols);
    std::vector<int> ys = edges(rect.y1, rect.height(), grid.rows);

    std::vector<RectPx> tiles;
    tiles.reserve(static_cast<size_t>(grid.cells()));
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            tiles.push_back({xs[static_cast<size_t>(c)], ys[static_cast<size_t>(r)],
                             xs[static_cast<size_t>(c) + 1], ys[static_cast<size_t>(r) + 1]});
        }
    }
    return tiles;
}

PointPx to_global(PointPx p_local, const RectPx& crop) {
    if (!crop.valid()) throw std::invalid_argument("invalid crop rect");
    if (p_local.x < 0 || p_local.y < 0 || p_local.x >= crop.width() ||
        p_local.y >= crop.height()) {
        throw std::invalid_argument("locator point outside crop");
    }
    return {crop.x1 + p_local.x, crop.y1 + p_local.y};
}

PointPx to_local(PointPx p_global, const RectPx& crop) {
    if (!crop.valid()) throw std::invalid_argument("invalid crop rect");
    if (!crop.contains(p_global)) {
        throw std::invalid_argument("point outside crop");
    }
    return {p_global.x - crop.x1, p_global.y - crop.y1};
}

RectPx crop_centered(PointPx center, int side, const ImageSize& bounds) {
    if (!bounds.valid()) throw std::invalid_argument("invalid image bounds");
    if (side < 1) throw std::invalid_argument("crop side must be >= 1");
    if (!bounds.as_rect().contains(center)) {
        throw std::invalid_argument("crop center outside image bounds");
    }

    int w = std::min(side, bounds.width);
    int h = std::min(side, bounds.height);
    int x1 = std::clamp(center.x - w / 2, 0, bounds.width - w);
    int y1 = std::clamp(center.y - h / 2, 0, bounds.height - h);
    return {x1, y1, x1 + w, y1 + h};
}

RectPx scale_rect(const RectPx& rect, int factor) {
    if (factor < 1) throw std::invalid_argument("scale factor must be >= 1");
    return {rect.x1 * factor, rect.y1 * factor, rect.x2 * factor, rect.y2 * factor};
}

PointPx scale_point_up(PointPx p, int factor) {
    if (factor < 1) throw std::invalid_argument("scale factor must be >= 1");
    return {p.x * factor, p.y * factor};
}

PointPx scale_point_down(PointPx p, int factor) {
    if (factor < 1) throw std::invalid_argument("scale factor must be >= 1");
    auto div_floor = [](int v, int f) {
        // pixel coordinates are non-negative in practice, but keep floor
        // semantics for negatives anyway
        return v >= 0 ? v / f : -((-v + f - 1) / f);
    };
    return {div_floor(p.x, factor), div_floor(p.y, factor)};
}

PointPx rect_center(const RectPx& rect) {
    if (!rect.valid()) throw std::invalid_argument("invalid rect");
    return {(rect.x1 + rect.x2 - 1) / 2, (rect.y1 + rect.y2 - 1) / 2};
}

PointPx zone_center(const RectPx& cell, ZoneId zone) {
    if (!cell.valid() || cell.width() < 3 || cell.height() < 3) {
        throw std::invalid_argument("cell too small for zone subdivision");
    }
    std::vector<RectPx> zones = partition_grid(cell, {3, 3});
    return rect_center(zones[static_cast<size_t>(zone)]);
}

PointPx clamp_point(PointPx p, const RectPx& rect) {
    return {std::clamp(p.x, rect.x1, rect.x2 - 1), std::clamp(p.y, rect.y1, rect.y2 - 1)};
}

PointPx clamp_point(PointPx p, const ImageSize& bounds) {
    return clamp_point(p, bounds.as_rect());
}

std::string to_string(const PointPx& p) {
    return "(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")";
}

std::string to_string(const RectPx& r) {
    return "[" + std::to_string(r.x1) + "," + std::to_string(r.y1) + "," +
           std::to_string(r.x2) + "," + std::to_string(r.y2) + ")";
}

}  // namespace scanloc::geometry
