#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "scanloc/geometry.hpp"

namespace scanloc::img {

struct Color {
    uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Color&) const = default;
};

// Plain 8-bit RGB raster. Coordinate-space math lives in geometry; this type
// only owns pixels and the handful of pixel operations the pipeline needs
// (crop, nearest-neighbor rescale, simple drawing for overlays).
class Image {
public:
    Image() = default;
    Image(int width, int height, Color fill = {0, 0, 0});

    int width() const { return width_; }
    int height() const { return height_; }
    geometry::ImageSize size() const { return {width_, height_}; }
    bool empty() const { return width_ == 0 || height_ == 0; }

    Color pixel(int x, int y) const;
    void set_pixel(int x, int y, Color c);

    void fill_rect(const geometry::RectPx& rect, Color c);
    // outline drawn inside the rect edges
    void draw_rect_outline(const geometry::RectPx& rect, Color c, int thickness = 1);
    void draw_marker(geometry::PointPx p, Color c, int radius = 6);

    const std::vector<uint8_t>& data() const { return rgb_; }
    std::vector<uint8_t>& data() { return rgb_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<uint8_t> rgb_;  // 3 bytes per pixel, row-major
};

using ImagePtr = std::shared_ptr<const Image>;

// Throws std::invalid_argument when rect falls outside the source.
Image crop(const Image& src, const geometry::RectPx& rect);

Image upscale_nn(const Image& src, int factor);
Image downscale_nn(const Image& src, int factor);

std::vector<uint8_t> encode_png(const Image& image);
std::optional<Image> decode_png(const uint8_t* bytes, size_t len);

bool write_png(const Image& image, const std::filesystem::path& path);
std::optional<Image> read_png(const std::filesystem::path& path);

}  // namespace scanloc::img
