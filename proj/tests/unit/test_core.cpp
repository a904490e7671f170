#include <doctest.h>

#include "melroi/grid.hpp"
#include "melroi/patch_csv.hpp"
#include "melroi/rng.hpp"

using namespace melroi;

namespace {

SlideRaster make_slide(int w, int h, std::uint8_t fill = 200) {
    SlideRaster s;
    s.slide_id = "s";
    s.pixels = Image8(w, h, 3, fill);
    return s;
}

} // namespace

TEST_CASE("build_grid exact division") {
    const PatchGrid g = build_grid(make_slide(512, 512));
    CHECK(g.cols == 2);
    CHECK(g.rows == 2);
}

TEST_CASE("build_grid discards residual border") {
    const PatchGrid g = build_grid(make_slide(600, 300));
    CHECK(g.cols == 2);
    CHECK(g.rows == 1);
}

TEST_CASE("build_grid rejects sub-patch slides") {
    CHECK_THROWS_AS(build_grid(make_slide(255, 255)), InvalidSlide);
    CHECK_THROWS_AS(build_grid(make_slide(255, 512)), InvalidSlide);
}

TEST_CASE("build_grid is independent of pixel content") {
    SlideRaster a = make_slide(600, 300, 0);
    SlideRaster b = make_slide(600, 300, 255);
    const PatchGrid ga = build_grid(a);
    const PatchGrid gb = build_grid(b);
    CHECK(ga.cols == gb.cols);
    CHECK(ga.rows == gb.rows);
}

TEST_CASE("grid tiling partitions the retained pixels") {
    // Unique pixel values per location mod 251 let us verify each retained
    // pixel lands in exactly one patch.
    SlideRaster s = make_slide(600, 517);
    for (int y = 0; y < 517; ++y)
        for (int x = 0; x < 600; ++x)
            s.pixels.at(x, y)[0] = static_cast<std::uint8_t>((x * 31 + y * 17) % 251);
    const PatchGrid g = build_grid(s);
    long covered = 0;
    for (int gy = 0; gy < g.rows; ++gy) {
        for (int gx = 0; gx < g.cols; ++gx) {
            const Image8 block = patch_pixels(s, gx, gy);
            REQUIRE(block.width == kPatchSize);
            REQUIRE(block.height == kPatchSize);
            covered += block.width * block.height;
            for (int y = 0; y < 4; ++y)
                for (int x = 0; x < 4; ++x)
                    CHECK(block.at(x, y)[0] ==
                          static_cast<std::uint8_t>(((gx * 256 + x) * 31 + (gy * 256 + y) * 17) % 251));
        }
    }
    CHECK(covered == 256L * 256L * g.cols * g.rows);
}

TEST_CASE("patch_pixels origin and offset blocks") {
    SlideRaster s = make_slide(512, 256);
    for (int x = 0; x < 512; ++x) s.pixels.at(x, 0)[1] = static_cast<std::uint8_t>(x % 256);
    const Image8 left = patch_pixels(s, 0, 0);
    const Image8 right = patch_pixels(s, 1, 0);
    CHECK(left.at(0, 0)[1] == 0);
    CHECK(right.at(0, 0)[1] == 0); // column 256 -> 256 % 256
    CHECK(right.at(255, 0)[1] == 255);
    CHECK_THROWS_AS(patch_pixels(s, 2, 0), IndexError);
    CHECK_THROWS_AS(patch_pixels(s, 0, 1), IndexError);
    CHECK_THROWS_AS(patch_pixels(s, -1, 0), IndexError);
}

TEST_CASE("score triplet validity and argmax tie order") {
    ScoreTriplet t{1.0 / 3, 1.0 / 3, 1.0 / 3};
    CHECK(t.valid());
    CHECK(t.argmax() == PatchClass::Melanoma); // ties resolve to lower index
    ScoreTriplet bad{0.5, 0.2, 0.2};
    CHECK_FALSE(bad.valid());
    ScoreTriplet nev{0.2, 0.5, 0.3};
    CHECK(nev.argmax() == PatchClass::Nevus);
}

TEST_CASE("patch CSV round-trips rows") {
    std::vector<PatchCsvRow> rows;
    PatchCsvRow a;
    a.slide_id = "slide_a";
    a.grid_x = 3;
    a.grid_y = 7;
    a.tissue = true;
    a.label = PatchClass::Melanoma;
    a.scores = {{0.5, 0.25, 0.25}};
    a.in_annotation = true;
    rows.push_back(a);
    PatchCsvRow b;
    b.slide_id = "slide_b";
    b.grid_x = 0;
    b.grid_y = 0;
    rows.push_back(b);

    const std::string text = write_patch_csv(rows);
    const auto parsed = parse_patch_csv(text);
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0].slide_id == "slide_a");
    CHECK(parsed[0].grid_x == 3);
    CHECK(parsed[0].label == PatchClass::Melanoma);
    REQUIRE(parsed[0].scores.has_value());
    CHECK((*parsed[0].scores)[0] == 0.5);
    CHECK(parsed[0].in_annotation);
    CHECK_FALSE(parsed[1].tissue);
    CHECK_FALSE(parsed[1].label.has_value());
    CHECK_FALSE(parsed[1].scores.has_value());
}

TEST_CASE("patch CSV rejects malformed rows") {
    CHECK_THROWS_AS(parse_patch_csv("bogus header\n"), ValidationError);
    const std::string header =
        "slide_id,grid_x,grid_y,tissue,label,s_mel,s_nev,s_other,in_annotation\n";
    CHECK_THROWS_AS(parse_patch_csv(header + "s,1,2,1,zebra,,,,0\n"), ValidationError);
    CHECK_THROWS_AS(parse_patch_csv(header + "s,1,2,1,,0.5,,0.5,0\n"), ValidationError);
    CHECK_THROWS_AS(parse_patch_csv(header + "s,1\n"), ValidationError);
}

TEST_CASE("rng determinism and seed separation") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        const double va = a.uniform();
        CHECK(va == b.uniform());
        CHECK(va >= 0.0);
        CHECK(va < 1.0);
    }
    CHECK(Rng(seed_for(1, "x")).next_u64() != Rng(seed_for(1, "y")).next_u64());
    CHECK(seed_for(1, "stage", 0) != seed_for(1, "stage", 1));
    (void)c;
}

TEST_CASE("rng uniform_int covers range uniformly enough") {
    Rng rng(7);
    std::array<int, 5> counts{};
    for (int i = 0; i < 5000; ++i) ++counts[rng.uniform_int(0, 4)];
    for (int c : counts) CHECK(c > 800);
}
