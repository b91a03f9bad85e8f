#include "skipvar/imagecore.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "skipvar/errors.hpp"

namespace skipvar {

namespace {

void check_dims(int w, int h, const char* who) {
    if (w < 1 || h < 1) {
        throw ConfigError(std::string(who) + ": dimensions must be >= 1, got " +
                          std::to_string(w) + "x" + std::to_string(h));
    }
}

struct AxisWeights {
    // For each output index, the contributing source range and weights.
    std::vector<int> first;
    std::vector<std::vector<double>> weights;
};

// Overlap of source cells [i, i+1) with the output cell's source interval.
AxisWeights area_axis(int in, int out) {
    AxisWeights aw;
    aw.first.resize(out);
    aw.weights.resize(out);
    for (int o = 0; o < out; ++o) {
        const double lo = static_cast<double>(static_cast<long long>(o) * in) / out;
        const double hi = static_cast<double>(static_cast<long long>(o + 1) * in) / out;
        const int i0 = static_cast<int>(std::floor(lo));
        const int i1 = std::min(in, static_cast<int>(std::ceil(hi)));
        aw.first[o] = i0;
        for (int i = i0; i < i1; ++i) {
            const double w = std::min(hi, static_cast<double>(i + 1)) - std::max(lo, static_cast<double>(i));
            aw.weights[o].push_back(w);
        }
    }
    return aw;
}

struct Cursor {
    std::span<const unsigned char> bytes;
    size_t pos = 0;

    bool done() const { return pos >= bytes.size(); }
    unsigned char peek() const { return bytes[pos]; }
};

void skip_space_and_comments(Cursor& c) {
    while (!c.done()) {
        const unsigned char ch = c.peek();
        if (ch == '#') {
            while (!c.done() && c.peek() != '\n') ++c.pos;
        } else if (std::isspace(ch)) {
            ++c.pos;
        } else {
            break;
        }
    }
}

int read_header_int(Cursor& c, const char* field) {
    skip_space_and_comments(c);
    if (c.done() || !std::isdigit(c.peek())) {
        throw DataError(std::string("malformed header: expected ") + field);
    }
    long long v = 0;
    while (!c.done() && std::isdigit(c.peek())) {
        v = v * 10 + (c.peek() - '0');
        if (v > (1 << 24)) throw DataError(std::string("malformed header: ") + field + " too large");
        ++c.pos;
    }
    return static_cast<int>(v);
}

AnyImage decode_pnm(std::span<const unsigned char> bytes, bool color) {
    Cursor c{bytes, 2};
    const int w      = read_header_int(c, "width");
    const int h      = read_header_int(c, "height");
    const int maxval = read_header_int(c, "maxval");
    if (w < 1 || h < 1) throw DataError("malformed header: zero dimension");
    if (maxval != 255) {
        throw DataError("unsupported maxval " + std::to_string(maxval) + " (only 255 is supported)");
    }
    if (c.done() || !std::isspace(c.peek())) throw DataError("malformed header: missing separator");
    ++c.pos;

    const size_t channels = color ? 3 : 1;
    const size_t need     = static_cast<size_t>(w) * h * channels;
    if (bytes.size() - c.pos < need) {
        throw DataError("truncated pixel data: expected " + std::to_string(need) + " bytes, got " +
                        std::to_string(bytes.size() - c.pos));
    }
    std::vector<float> values(need);
    for (size_t i = 0; i < need; ++i) values[i] = static_cast<float>(bytes[c.pos + i] / 255.0);
    if (color) return ColorImage(w, h, std::move(values));
    return Image(w, h, std::move(values));
}

AnyImage decode_rawf32(std::span<const unsigned char> bytes) {
    const auto nl = std::find(bytes.begin(), bytes.end(), static_cast<unsigned char>('\n'));
    if (nl == bytes.end()) throw DataError("malformed header: missing newline");
    const std::string header(bytes.begin(), nl);
    std::istringstream is(header);
    std::string magic;
    long long w = 0, h = 0;
    if (!(is >> magic >> w >> h) || magic != "SKVR1") throw DataError("malformed header: '" + header + "'");
    std::string rest;
    if (is >> rest) throw DataError("malformed header: trailing tokens");
    if (w < 1 || h < 1 || w > (1 << 20) || h > (1 << 20)) throw DataError("malformed header: bad dimensions");

    const size_t offset = static_cast<size_t>(nl - bytes.begin()) + 1;
    const size_t count  = static_cast<size_t>(w) * static_cast<size_t>(h);
    if (bytes.size() - offset != count * 4) {
        throw DataError("truncated pixel data: expected " + std::to_string(count * 4) + " bytes, got " +
                        std::to_string(bytes.size() - offset));
    }
    std::vector<float> values(count);
    for (size_t i = 0; i < count; ++i) {
        const unsigned char* p = bytes.data() + offset + 4 * i;
        const uint32_t bits    = static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
                              (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
        values[i] = std::bit_cast<float>(bits);
    }
    return Image(static_cast<int>(w), static_cast<int>(h), std::move(values));
}

}  // namespace

Image::Image(int w, int h, float fill) : width(w), height(h) {
    check_dims(w, h, "Image");
    data.assign(static_cast<size_t>(w) * h, fill);
}

Image::Image(int w, int h, std::vector<float> values) : width(w), height(h), data(std::move(values)) {
    check_dims(w, h, "Image");
    if (data.size() != static_cast<size_t>(w) * h) {
        throw ConfigError("Image: data length " + std::to_string(data.size()) + " != " + std::to_string(w) +
                          "x" + std::to_string(h));
    }
}

ColorImage::ColorImage(int w, int h, std::vector<float> rgb) : width(w), height(h), data(std::move(rgb)) {
    check_dims(w, h, "ColorImage");
    if (data.size() != static_cast<size_t>(w) * h * 3) {
        throw ConfigError("ColorImage: data length does not match 3*width*height");
    }
}

ImageFormat parse_image_format(const std::string& name) {
    if (name == "pgm8") return ImageFormat::pgm8;
    if (name == "rawf32") return ImageFormat::rawf32;
    throw ConfigError("unknown image format '" + name + "' (expected pgm8 or rawf32)");
}

Image to_grayscale(const ColorImage& c) {
    Image out(c.width, c.height);
    for (size_t i = 0; i < out.size(); ++i) {
        const double g = 0.299 * c.data[3 * i] + 0.587 * c.data[3 * i + 1] + 0.114 * c.data[3 * i + 2];
        out.data[i]    = static_cast<float>(std::clamp(g, 0.0, 1.0));
    }
    return out;
}

Image clamp_unit(Image img) {
    for (float& v : img.data) v = std::clamp(v, 0.0f, 1.0f);
    return img;
}

Image resize_area(const Image& img, int w, int h) {
    check_dims(w, h, "resize_area");
    if (w > img.width || h > img.height) {
        throw ConfigError("resize_area: cannot upscale " + std::to_string(img.width) + "x" +
                          std::to_string(img.height) + " to " + std::to_string(w) + "x" + std::to_string(h) +
                          " (use resize_bilinear)");
    }
    if (w == img.width && h == img.height) return img;

    const AxisWeights ax = area_axis(img.width, w);
    const AxisWeights ay = area_axis(img.height, h);

    std::vector<double> rows(static_cast<size_t>(img.height) * w);
    for (int y = 0; y < img.height; ++y) {
        const float* src = img.data.data() + static_cast<size_t>(y) * img.width;
        for (int ox = 0; ox < w; ++ox) {
            double acc = 0.0;
            const auto& wts = ax.weights[ox];
            for (size_t j = 0; j < wts.size(); ++j) acc += wts[j] * src[ax.first[ox] + j];
            rows[static_cast<size_t>(y) * w + ox] = acc;
        }
    }

    const double norm = (static_cast<double>(img.width) / w) * (static_cast<double>(img.height) / h);
    Image out(w, h);
    for (int oy = 0; oy < h; ++oy) {
        const auto& wts = ay.weights[oy];
        for (int ox = 0; ox < w; ++ox) {
            double acc = 0.0;
            for (size_t j = 0; j < wts.size(); ++j) {
                acc += wts[j] * rows[static_cast<size_t>(ay.first[oy] + j) * w + ox];
            }
            out.at(ox, oy) = static_cast<float>(acc / norm);
        }
    }
    return out;
}

Image resize_bilinear(const Image& img, int w, int h) {
    check_dims(w, h, "resize_bilinear");
    if (w == img.width && h == img.height) return img;

    auto source_coord = [](int o, int out, int in) {
        if (out == 1) return (in - 1) / 2.0;
        return static_cast<double>(o) * (in - 1) / (out - 1);
    };

    Image out(w, h);
    for (int oy = 0; oy < h; ++oy) {
        const double sy = source_coord(oy, h, img.height);
        const int y0    = std::min(static_cast<int>(std::floor(sy)), img.height - 1);
        const int y1    = std::min(y0 + 1, img.height - 1);
        const double ty = sy - y0;
        for (int ox = 0; ox < w; ++ox) {
            const double sx = source_coord(ox, w, img.width);
            const int x0    = std::min(static_cast<int>(std::floor(sx)), img.width - 1);
            const int x1    = std::min(x0 + 1, img.width - 1);
            const double tx = sx - x0;
            const double a  = img.at(x0, y0);
            const double b  = img.at(x1, y0);
            const double c  = img.at(x0, y1);
            const double d  = img.at(x1, y1);
            // a + t*(b-a) keeps constant regions exact.
            const double top    = a + tx * (b - a);
            const double bottom = c + tx * (d - c);
            out.at(ox, oy)      = static_cast<float>(top + ty * (bottom - top));
        }
    }
    return out;
}

std::vector<unsigned char> encode_pgm8(const Image& img) {
    const std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    std::vector<unsigned char> out(header.begin(), header.end());
    out.reserve(header.size() + img.size());
    for (float v : img.data) {
        // Round half up, then clamp.
        const double q = std::floor(static_cast<double>(v) * 255.0 + 0.5);
        out.push_back(static_cast<unsigned char>(std::clamp(q, 0.0, 255.0)));
    }
    return out;
}

std::vector<unsigned char> encode_rawf32(const Image& img) {
    const std::string header = "SKVR1 " + std::to_string(img.width) + " " + std::to_string(img.height) + "\n";
    std::vector<unsigned char> out(header.begin(), header.end());
    out.reserve(header.size() + 4 * img.size());
    for (float v : img.data) {
        const uint32_t bits = std::bit_cast<uint32_t>(v);
        for (int s = 0; s < 32; s += 8) out.push_back(static_cast<unsigned char>((bits >> s) & 0xffu));
    }
    return out;
}

AnyImage decode_image(std::span<const unsigned char> bytes) {
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return decode_pnm(bytes, false);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_pnm(bytes, true);
    if (bytes.size() >= 5 && std::memcmp(bytes.data(), "SKVR1", 5) == 0) return decode_rawf32(bytes);
    throw DataError("unrecognized image format (expected P5, P6 or SKVR1)");
}

AnyImage load_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image '" + path.string() + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_image(bytes);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

Image load_grayscale(const std::filesystem::path& path) {
    AnyImage any = load_image(path);
    if (auto* c = std::get_if<ColorImage>(&any)) return to_grayscale(*c);
    return std::get<Image>(std::move(any));
}

void save_image(const Image& img, const std::filesystem::path& path, ImageFormat format) {
    const std::vector<unsigned char> bytes = format == ImageFormat::pgm8 ? encode_pgm8(img) : encode_rawf32(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write image '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

}  // namespace skipvar
