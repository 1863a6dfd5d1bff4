#include "scanloc/image.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace scanloc::img {

Image::Image(int width, int height, Color fill) : width_(width), height_(height) {
    if (width < 1 || height < 1) throw std::invalid_argument("image dimensions must be >= 1");
    rgb_.resize(static_cast<size_t>(width) * height * 3);
    for (size_t i = 0; i < rgb_.size(); i += 3) {
        rgb_[i] = fill.r;
        rgb_[i + 1] = fill.g;
        rgb_[i + 2] = fill.b;
    }
}

Color Image::pixel(int x, int y) const {
    size_t idx = (static_cast<size_t>(y) * width_ + x) * 3;
    return {rgb_[idx], rgb_[idx + 1], rgb_[idx + 2]};
}

void Image::set_pixel(int x, int y, Color c) {
    if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
    size_t idx = (static_cast<size_t>(y) * width_ + x) * 3;
    rgb_[idx] = c.r;
    rgb_[idx + 1] = c.g;
    rgb_[idx + 2] = c.b;
}

void Image::fill_rect(const geometry::RectPx& rect, Color c) {
    int x1 = std::max(rect.x1, 0), y1 = std::max(rect.y1, 0);
    int x2 = std::min(rect.x2, width_), y2 = std::min(rect.y2, height_);
    for (int y = y1; y < y2; ++y) {
        size_t idx = (static_cast<size_t>(y) * width_ + x1) * 3;
        for (int x = x1; x < x2; ++x) {
            rgb_[idx] = c.r;
            rgb_[idx + 1] = c.g;
            rgb_[idx + 2] = c.b;
            idx += 3;
        }
    }
}

void Image::draw_rect_outline(const geometry::RectPx& rect, Color c, int thickness) {
    int t = std::max(1, thickness);
    fill_rect({rect.x1, rect.y1, rect.x2, rect.y1 + t}, c);
    fill_rect({rect.x1, rect.y2 - t, rect.x2, rect.y2}, c);
    fill_rect({rect.x1, rect.y1, rect.x1 + t, rect.y2}, c);
    fill_rect({rect.x2 - t, rect.y1, rect.x2, rect.y2}, c);
}

void Image::draw_marker(geometry::PointPx p, Color c, int radius) {
    // filled disc plus crosshair arms, visible at screenshot scale
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            if (dx * dx + dy * dy <= radius * radius) set_pixel(p.x + dx, p.y + dy, c);
        }
    }
    for (int d = -3 * radius; d <= 3 * radius; ++d) {
        set_pixel(p.x + d, p.y, c);
        set_pixel(p.x, p.y + d, c);
    }
}

Image crop(const Image& src, const geometry::RectPx& rect) {
    if (!rect.valid() || rect.x1 < 0 || rect.y1 < 0 || rect.x2 > src.width() ||
        rect.y2 > src.height()) {
        throw std::invalid_argument("crop rect outside image");
    }
    Image out(rect.width(), rect.height());
    for (int y = 0; y < rect.height(); ++y) {
        const uint8_t* from = src.data().data() +
                              ((static_cast<size_t>(y) + rect.y1) * src.width() + rect.x1) * 3;
        uint8_t* to = out.data().data() + static_cast<size_t>(y) * rect.width() * 3;
        std::memcpy(to, from, static_cast<size_t>(rect.width()) * 3);
    }
    return out;
}

Image upscale_nn(const Image& src, int factor) {
    if (factor < 1) throw std::invalid_argument("scale factor must be >= 1");
    if (factor == 1) return src;
    Image out(src.width() * factor, src.height() * factor);
    for (int y = 0; y < out.height(); ++y) {
        int sy = y / factor;
        const uint8_t* srow = src.data().data() + static_cast<size_t>(sy) * src.width() * 3;
        uint8_t* drow = out.data().data() + static_cast<size_t>(y) * out.width() * 3;
        for (int x = 0; x < out.width(); ++x) {
            std::memcpy(drow + static_cast<size_t>(x) * 3,
                        srow + static_cast<size_t>(x / factor) * 3, 3);
        }
    }
    return out;
}

Image downscale_nn(const Image& src, int factor) {
    if (factor < 1) throw std::invalid_argument("scale factor must be >= 1");
    if (factor == 1) return src;
    int w = std::max(1, src.width() / factor);
    int h = std::max(1, src.height() / factor);
    Image out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            out.set_pixel(x, y, src.pixel(x * factor, y * factor));
        }
    }
    return out;
}

namespace {

struct PngWriteBuffer {
    std::vector<uint8_t>* out;
};

void png_buffer_write(png_structp png, png_bytep data, png_size_t len) {
    auto* buf = static_cast<PngWriteBuffer*>(png_get_io_ptr(png));
    buf->out->insert(buf->out->end(), data, data + len);
}

void png_buffer_flush(png_structp) {}

struct PngReadBuffer {
    const uint8_t* bytes;
    size_t len;
    size_t pos;
};

void png_buffer_read(png_structp png, png_bytep data, png_size_t len) {
    auto* buf = static_cast<PngReadBuffer*>(png_get_io_ptr(png));
    if (buf->pos + len > buf->len) {
        png_error(png, "read past end of png buffer");
    }
    std::memcpy(data, buf->bytes + buf->pos, len);
    buf->pos += len;
}

}  // namespace

std::vector<uint8_t> encode_png(const Image& image) {
    if (image.empty()) throw std::invalid_argument("cannot encode empty image");
    std::vector<uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("png encode failed");
    }

    PngWriteBuffer buf{&out};
    png_set_write_fn(png, &buf, png_buffer_write, png_buffer_flush);
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()),
                 static_cast<png_uint_32>(image.height()), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    // crops are small and synthetic screenshots are flat-colored; favor speed
    png_set_compression_level(png, 1);
    png_write_info(png, info);

    std::vector<png_bytep> rows(static_cast<size_t>(image.height()));
    for (int y = 0; y < image.height(); ++y) {
        rows[static_cast<size_t>(y)] = const_cast<png_bytep>(
            image.data().data() + static_cast<size_t>(y) * image.width() * 3);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

std::optional<Image> decode_png(const uint8_t* bytes, size_t len) {
    if (len < 8 || png_sig_cmp(bytes, 0, 8) != 0) return std::nullopt;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) return std::nullopt;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        return std::nullopt;
    }

    Image result;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return std::nullopt;
    }

    PngReadBuffer buf{bytes, len, 0};
    png_set_read_fn(png, &buf, png_buffer_read);
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int color_type = png_get_color_type(png, info);
    int bit_depth = png_get_bit_depth(png, info);

    // normalize everything to 8-bit RGB
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(png);
    }
    if (color_type & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) {
        png_set_strip_alpha(png);
    }
    png_read_update_info(png, info);

    result = Image(static_cast<int>(w), static_cast<int>(h));
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) {
        rows[y] = result.data().data() + static_cast<size_t>(y) * w * 3;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return result;
}

bool write_png(const Image& image, const std::filesystem::path& path) {
    std::vector<uint8_t> bytes;
    try {
        bytes = encode_png(image);
    } catch (const std::exception&) {
        return false;
    }
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f) return false;
    size_t written = std::fwrite(bytes.data(), 1, bytes.size(), f);
    std::fclose(f);
    return written == bytes.size();
}

std::optional<Image> read_png(const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.string().c_str(), "rb");
    if (!f) return std::nullopt;
    std::fseek(f, 0, SEEK_END);
    long len = std::ftell(f);
    if (len <= 0) {
        std::fclose(f);
        return std::nullopt;
    }
    std::fseek(f, 0, SEEK_SET);
    std::vector<uint8_t> bytes(static_cast<size_t>(len));
    size_t got = std::fread(bytes.data(), 1, bytes.size(), f);
    std::fclose(f);
    if (got != bytes.size()) return std::nullopt;
    return decode_png(bytes.data(), bytes.size());
}

}  // namespace scanloc::img
