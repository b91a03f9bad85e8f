#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace skipvar {

// Single-channel raster, row-major. Values are nominally in [0,1]; intermediate
// results (Sobel maps, unclamped branches) may leave that range.
struct Image {
    int width  = 0;
    int height = 0;
    std::vector<float> data;

    Image() = default;
    Image(int w, int h, float fill = 0.0f);
    Image(int w, int h, std::vector<float> values);

    float& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return data.size(); }
    bool same_shape(const Image& other) const {
        return width == other.width && height == other.height;
    }

    friend bool operator==(const Image&, const Image&) = default;
};

// Interleaved RGB raster.
struct ColorImage {
    int width  = 0;
    int height = 0;
    std::vector<float> data;  // r,g,b,r,g,b,...

    ColorImage() = default;
    ColorImage(int w, int h, std::vector<float> rgb);
};

using AnyImage = std::variant<Image, ColorImage>;

enum class ImageFormat { pgm8, rawf32 };

ImageFormat parse_image_format(const std::string& name);

// Rec.601 luma, clamped to [0,1].
Image to_grayscale(const ColorImage& c);

// Clamps every value into [0,1]; applied when an image is emitted.
Image clamp_unit(Image img);

// Exact area-weighted downsampling. Throws ConfigError if asked to upscale.
Image resize_area(const Image& img, int w, int h);

// Bilinear interpolation with corner-aligned sampling (align_corners=true).
Image resize_bilinear(const Image& img, int w, int h);

AnyImage load_image(const std::filesystem::path& path);

// Loads any supported file and converts it to grayscale if needed.
Image load_grayscale(const std::filesystem::path& path);

void save_image(const Image& img, const std::filesystem::path& path, ImageFormat format);

// In-memory codecs backing load/save.
std::vector<unsigned char> encode_pgm8(const Image& img);
std::vector<unsigned char> encode_rawf32(const Image& img);
AnyImage decode_image(std::span<const unsigned char> bytes);

}  // namespace skipvar
