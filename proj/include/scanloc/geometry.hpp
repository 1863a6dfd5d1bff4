#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scanloc::geometry {

struct PointPx {
    int x = 0;
    int y = 0;
    bool operator==(const PointPx&) const = default;
};

// Half-open pixel rectangle: [x1,x2) x [y1,y2). The tiling currency.
// The benchmark metric uses a separate closed-box type (bench::BBoxClosed);
// conversions between the two conventions are always explicit.
struct RectPx {
    int x1 = 0;
    int y1 = 0;
    int x2 = 0;
    int y2 = 0;

    int width() const { return x2 - x1; }
    int height() const { return y2 - y1; }
    long long area() const { return static_cast<long long>(width()) * height(); }
    bool valid() const { return x1 < x2 && y1 < y2; }
    bool contains(PointPx p) const { return p.x >= x1 && p.x < x2 && p.y >= y1 && p.y < y2; }
    bool intersects(const RectPx& o) const {
        return x1 < o.x2 && o.x1 < x2 && y1 < o.y2 && o.y1 < y2;
    }
    bool operator==(const RectPx&) const = default;
};

struct ImageSize {
    int width = 0;
    int height = 0;
    bool valid() const { return width >= 1 && height >= 1; }
    RectPx as_rect() const { return {0, 0, width, height}; }
    bool operator==(const ImageSize&) const = default;
};

struct GridSpec {
    int rows = 3;
    int cols = 3;
    int cells() const { return rows * cols; }
    bool operator==(const GridSpec&) const = default;
};

// The nine inner-zone labels used by the resolution-enhancement reply format.
enum class ZoneId {
    TopLeft,
    TopCenter,
    TopRight,
    CenterLeft,
    Center,
    CenterRight,
    BottomLeft,
    BottomCenter,
    BottomRight,
};

constexpr int kZoneCount = 9;

// Canonical phrase, e.g. "top left", "center right".
std::string_view zone_name(ZoneId zone);

// Tolerant lookup: case-insensitive, hyphen/underscore treated as spaces,
// surrounding whitespace ignored. "middle" accepted for "center".
std::optional<ZoneId> zone_from_text(std::string_view text);

// (row, col) in {0,1,2}^2, reading order.
ZoneId zone_from_row_col(int row, int col);
int zone_row(ZoneId zone);
int zone_col(ZoneId zone);

// Splits rect into rows*cols disjoint tiles covering it exactly, ordered
// left-to-right then top-to-bottom. When a dimension is not divisible the
// remainder pixels go to the leading columns/rows, keeping tile sizes within
// one pixel of each other. Throws std::invalid_argument when the rect is
// smaller than the grid ("region too small to partition").
std::vector<RectPx> partition_grid(const RectPx& rect, const GridSpec& grid);

// Crop-local -> global. Throws when p_local is outside [0,w) x [0,h).
PointPx to_global(PointPx p_local, const RectPx& crop);

// Global -> crop-local. Throws when p_global is outside the crop.
PointPx to_local(PointPx p_global, const RectPx& crop);

// A side x side rect containing `center`, centered with x1 = cx - side/2.
// When the ideal placement overflows an image edge the rect is shifted (not
// shrunk) back inside; a side larger than an image dimension clamps that
// dimension to the full extent. Total for any center inside bounds.
RectPx crop_centered(PointPx center, int side, const ImageSize& bounds);

RectPx scale_rect(const RectPx& rect, int factor);
PointPx scale_point_up(PointPx p, int factor);
PointPx scale_point_down(PointPx p, int factor);  // floor division

// Integer center of a rect under the floor rule: ((x1 + x2 - 1) / 2, ...).
PointPx rect_center(const RectPx& rect);

// Partitions `cell` 3x3 and returns the integer center of the sub-tile named
// by `zone`. Throws on cells smaller than 3x3.
PointPx zone_center(const RectPx& cell, ZoneId zone);

PointPx clamp_point(PointPx p, const RectPx& rect);
PointPx clamp_point(PointPx p, const ImageSize& bounds);

std::string to_string(const PointPx& p);
std::string to_string(const RectPx& r);

}  // namespace scanloc::geometry
