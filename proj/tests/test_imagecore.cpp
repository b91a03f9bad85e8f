#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <string>

#include "oracles.hpp"
#include "skipvar/errors.hpp"
#include "skipvar/imagecore.hpp"

using namespace skipvar;

namespace {

std::vector<unsigned char> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_CASE("to_grayscale uses Rec.601 weights") {
    const ColorImage c(3, 1, {1, 1, 1, 0, 0, 0, 0, 1, 0});
    const Image g = to_grayscale(c);
    CHECK(g.data[0] == doctest::Approx(1.0));
    CHECK(g.data[1] == 0.0f);
    CHECK(g.data[2] == doctest::Approx(0.587).epsilon(1e-6));
}

TEST_CASE("to_grayscale stays in the unit interval") {
    const Image noise = oracle::random_image(16, 16, 3);
    std::vector<float> rgb;
    for (float v : noise.data) {
        rgb.insert(rgb.end(), {v, 1.0f - v, v * v});
    }
    for (float v : to_grayscale(ColorImage(16, 16, rgb)).data) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("resize_area examples") {
    CHECK(resize_area(Image(2, 2, {0, 1, 1, 0}), 1, 1).data[0] == 0.5f);

    const Image noise = oracle::random_image(7, 5, 11);
    CHECK(resize_area(noise, 7, 5) == noise);

    Image rows(4, 4);
    for (int y = 0; y < 4; ++y) {
        rows.at(2, y) = 1;
        rows.at(3, y) = 1;
    }
    CHECK(resize_area(rows, 2, 2).data == std::vector<float>{0, 1, 0, 1});
    CHECK_THROWS_AS(resize_area(rows, 5, 4), ConfigError);
}

TEST_CASE("resize_area matches the overlap-weighted oracle on fractional grids") {
    const Image img = oracle::random_image(23, 17, 5);
    for (auto [w, h] : {std::pair{7, 5}, {10, 16}, {1, 1}, {22, 3}}) {
        const Image got  = resize_area(img, w, h);
        const auto want  = oracle::resize_area(img, w, h);
        for (size_t i = 0; i < want.size(); ++i) CHECK(got.data[i] == doctest::Approx(want[i]).epsilon(1e-6));
    }
}

TEST_CASE("resize_area preserves the mean on divisible sizes") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
        const Image img = oracle::random_image(64, 48, seed);
        const double before = oracle::mean(oracle::to_double(img));
        const double after  = oracle::mean(oracle::to_double(resize_area(img, 16, 12)));
        CHECK(std::abs(after - before) <= 1e-6 * before);
    }
}

TEST_CASE("resize_bilinear examples") {
    const Image one = resize_bilinear(Image(1, 1, {0.3f}), 5, 4);
    for (float v : one.data) CHECK(v == 0.3f);

    const Image line = resize_bilinear(Image(2, 1, {0.0f, 1.0f}), 3, 1);
    CHECK(line.data == std::vector<float>{0.0f, 0.5f, 1.0f});

    const Image flat(6, 6, 0.42f);
    CHECK(resize_area(resize_bilinear(flat, 18, 18), 6, 6) == flat);
}

TEST_CASE("resize_bilinear stays within the input range") {
    const Image img = oracle::random_image(9, 9, 21, 0.2f, 0.7f);
    const Image up  = resize_bilinear(img, 31, 40);
    const auto [lo, hi] = std::minmax_element(img.data.begin(), img.data.end());
    for (float v : up.data) {
        CHECK(v >= *lo);
        CHECK(v <= *hi);
    }
}

TEST_CASE("rawf32 round trip is bit exact") {
    Image img = oracle::random_image(13, 9, 8, -2.0f, 3.0f);
    img.data[4] = 1e-30f;
    const AnyImage back = decode_image(encode_rawf32(img));
    REQUIRE(std::holds_alternative<Image>(back));
    const Image& got = std::get<Image>(back);
    CHECK(got.width == 13);
    CHECK(std::memcmp(got.data.data(), img.data.data(), img.data.size() * sizeof(float)) == 0);

    const auto path = std::filesystem::temp_directory_path() / "skipvar_rt.f32";
    save_image(img, path, ImageFormat::rawf32);
    CHECK(load_grayscale(path) == img);
    std::filesystem::remove(path);
}

TEST_CASE("pgm8 quantizes with round half up and clamps") {
    const Image img(4, 1, {0.5f, -0.2f, 1.7f, 1.0f});
    const auto enc = encode_pgm8(img);
    const std::string header = "P5\n4 1\n255\n";
    REQUIRE(enc.size() == header.size() + 4);
    CHECK(std::string(enc.begin(), enc.begin() + header.size()) == header);
    CHECK(enc[header.size() + 0] == 128);
    CHECK(enc[header.size() + 1] == 0);
    CHECK(enc[header.size() + 2] == 255);
    CHECK(enc[header.size() + 3] == 255);
    const Image back = std::get<Image>(decode_image(enc));
    CHECK(back.data[0] == doctest::Approx(128.0 / 255.0));
}

TEST_CASE("PPM decodes to color and PGM comments are skipped") {
    auto ppm = bytes_of("P6\n2 1\n255\n");
    ppm.insert(ppm.end(), {255, 0, 0, 0, 0, 255});
    const AnyImage c = decode_image(ppm);
    REQUIRE(std::holds_alternative<ColorImage>(c));
    CHECK(std::get<ColorImage>(c).data[0] == 1.0f);
    CHECK(std::get<ColorImage>(c).data[5] == 1.0f);

    auto pgm = bytes_of("P5\n# made by hand\n1 1\n255\n");
    pgm.push_back(51);
    CHECK(std::get<Image>(decode_image(pgm)).data[0] == doctest::Approx(0.2));
}

TEST_CASE("malformed image files are data errors") {
    auto truncated = bytes_of("P5\n2 2\n255\n");
    truncated.push_back(1);
    CHECK_THROWS_AS(decode_image(truncated), DataError);
    auto wide = bytes_of("P5\n1 1\n65535\n");
    wide.insert(wide.end(), {0, 0});
    CHECK_THROWS_AS(decode_image(wide), DataError);
    CHECK_THROWS_AS(decode_image(bytes_of("P3\n1 1\n255\n0\n")), DataError);
    CHECK_THROWS_AS(decode_image(bytes_of("SKVR1 2 2\n")), DataError);
    CHECK_THROWS_AS(decode_image(bytes_of("")), DataError);
    CHECK_THROWS_AS(load_image("/nonexistent/skipvar.pgm"), DataError);
    CHECK_THROWS_AS(parse_image_format("png"), ConfigError);
}
