#include "climreg/errors.hpp"
#include "climreg/views.hpp"

#include "support/test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace climreg;

namespace {

DailyField linear_field(const GridGeometry& g, int channels, double a, double b, double c) {
    DailyField f;
    f.date = {2000, 1, 1};
    const std::size_t cells = static_cast<std::size_t>(g.height) * g.width;
    f.values.resize(cells * channels);
    f.missing.assign(cells, 0);
    for (int ch = 0; ch < channels; ++ch) {
        for (int i = 0; i < g.height; ++i) {
            for (int j = 0; j < g.width; ++j) {
                f.values[(static_cast<std::size_t>(ch) * g.height + i) * g.width + j] =
                    a * i + b * j + c * (ch + 1);
            }
        }
    }
    return f;
}

} // namespace

TEST_SUITE("views") {

TEST_CASE("full-scale crop of a matching square field is the identity") {
    const GridGeometry g{0.0, 0.0, 1.0, 8, 8};
    const DailyFieldSeries s = testutil::random_series(8, 8, 2, 1, 31);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        const View v = random_resized_crop(s.fields[0], g, 2, ScaleRange{1.0, 1.0}, 8, rng);
        CHECK(v.crop_box.top == 0);
        CHECK(v.crop_box.left == 0);
        CHECK(v.crop_box.height == 8);
        CHECK(v.crop_box.width == 8);
        REQUIRE(v.values.size() == s.fields[0].values.size());
        for (std::size_t i = 0; i < v.values.size(); ++i) {
            CHECK(v.values[i] == s.fields[0].values[i]);
        }
    }
}

TEST_CASE("crop of a constant field is constant") {
    const GridGeometry g{0.0, 0.0, 1.0, 9, 7};
    DailyField f = linear_field(g, 1, 0.0, 0.0, 3.25);
    Rng rng(7);
    const View v = random_resized_crop(f, g, 1, ScaleRange{0.2, 0.6}, 12, rng);
    for (const double x : v.values) {
        CHECK(x == doctest::Approx(3.25).epsilon(1e-12));
    }
}

TEST_CASE("bilinear resampling is exact on linear fields") {
    const GridGeometry g{0.0, 0.0, 1.0, 10, 11};
    const DailyField f = linear_field(g, 2, 0.7, -0.3, 1.5);
    Rng rng(19);
    const View v = random_resized_crop(f, g, 2, ScaleRange{0.3, 0.9}, 16, rng);
    const CropBox& box = v.crop_box;
    const double sy = static_cast<double>(box.height - 1) / 15.0;
    const double sx = static_cast<double>(box.width - 1) / 15.0;
    for (int ch = 0; ch < 2; ++ch) {
        for (int i = 0; i < 16; ++i) {
            for (int j = 0; j < 16; ++j) {
                const double y = box.top + i * sy;
                const double x = box.left + j * sx;
                const double expected = 0.7 * y - 0.3 * x + 1.5 * (ch + 1);
                const double got = v.values[(static_cast<std::size_t>(ch) * 16 + i) * 16 + j];
                CHECK(got == doctest::Approx(expected).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("crops are deterministic per seed") {
    const DailyFieldSeries s = testutil::random_series(12, 12, 1, 1, 5);
    Rng a(123), b(123);
    const View va = random_resized_crop(s.fields[0], s.geometry, 1, ScaleRange{0.2, 0.8}, 8, a);
    const View vb = random_resized_crop(s.fields[0], s.geometry, 1, ScaleRange{0.2, 0.8}, 8, b);
    CHECK(va.crop_box.top == vb.crop_box.top);
    CHECK(va.crop_box.left == vb.crop_box.left);
    CHECK(va.values == vb.values);
}

TEST_CASE("mask_patches marks round(ratio * n_patches) patches") {
    const DailyFieldSeries s = testutil::random_series(8, 8, 1, 1, 13);
    Rng crop_rng(1);
    View v = random_resized_crop(s.fields[0], s.geometry, 1, ScaleRange{1.0, 1.0}, 8, crop_rng);

    SUBCASE("ratio 0 leaves everything untouched") {
        Rng rng(2);
        const View m = mask_patches(v, 2, 0.0, rng);
        long masked = 0;
        for (const auto b : m.patch_mask) {
            masked += b;
        }
        CHECK(masked == 0);
        CHECK(m.values == v.values);
    }
    SUBCASE("16 patches at ratio 0.15 mask exactly round(2.4) = 2") {
        Rng rng(3);
        const View m = mask_patches(v, 2, 0.15, rng); // 8/2 = 4 per side -> 16 patches
        long masked = 0;
        for (const auto b : m.patch_mask) {
            masked += b;
        }
        CHECK(masked == 2);
    }
    SUBCASE("masking everything zeroes all values") {
        Rng rng(4);
        const View m = mask_patches(v, 2, 0.999, rng); // round(15.98) = 16 of 16
        long masked = 0;
        for (const auto b : m.patch_mask) {
            masked += b;
        }
        CHECK(masked == 16);
        for (const double x : m.values) {
            CHECK(x == 0.0);
        }
    }
    SUBCASE("masked patches are zero, unmasked preserved") {
        Rng rng(5);
        const View m = mask_patches(v, 4, 0.5, rng); // 4 patches, 2 masked
        const int per_side = 8 / 4;
        for (int p = 0; p < 4; ++p) {
            const int pi = (p / per_side) * 4;
            const int pj = (p % per_side) * 4;
            for (int i = pi; i < pi + 4; ++i) {
                for (int j = pj; j < pj + 4; ++j) {
                    const double got = m.values[static_cast<std::size_t>(i) * 8 + j];
                    if (m.patch_mask[p]) {
                        CHECK(got == 0.0);
                    } else {
                        CHECK(got == v.values[static_cast<std::size_t>(i) * 8 + j]);
                    }
                }
            }
        }
    }
}

TEST_CASE("mask fraction is exact over many draws") {
    const DailyFieldSeries s = testutil::random_series(16, 16, 1, 1, 99);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng crop_rng(seed);
        View v = random_resized_crop(s.fields[0], s.geometry, 1, ScaleRange{0.5, 1.0}, 16,
                                     crop_rng);
        const double ratio = Rng(seed).fork(9).uniform(0.0, 0.9);
        Rng mask_rng(seed + 1000);
        const View m = mask_patches(v, 4, ratio, mask_rng); // 16 patches
        long masked = 0;
        for (const auto b : m.patch_mask) {
            masked += b;
        }
        CHECK(masked == std::llround(ratio * 16));
    }
}

TEST_CASE("make_views produces one unmasked target and M masked anchors") {
    const DailyFieldSeries s = testutil::random_series(10, 10, 2, 1, 77);
    ViewConfig cfg;
    cfg.out_size = 8;
    cfg.patch_size = 2;
    cfg.n_anchors = 3;
    cfg.mask_ratio = 0.15;
    const SampleViews views = make_views(s.fields[0], s.geometry, 2, cfg, Rng(5));

    CHECK(views.anchors.size() == 3);
    CHECK(views.target.kind == ViewKind::target);
    for (const auto b : views.target.patch_mask) {
        CHECK(b == 0);
    }
    for (const View& a : views.anchors) {
        CHECK(a.kind == ViewKind::anchor);
        long masked = 0;
        for (const auto b : a.patch_mask) {
            masked += b;
        }
        CHECK(masked == std::llround(0.15 * 16));
    }
}

TEST_CASE("single anchor configuration") {
    const DailyFieldSeries s = testutil::random_series(10, 10, 1, 1, 78);
    ViewConfig cfg;
    cfg.out_size = 8;
    cfg.patch_size = 4;
    cfg.n_anchors = 1;
    const SampleViews views = make_views(s.fields[0], s.geometry, 1, cfg, Rng(6));
    CHECK(views.anchors.size() == 1);
}

TEST_CASE("distinct rng streams give distinct anchors on non-constant fields") {
    const DailyFieldSeries s = testutil::random_series(12, 12, 1, 1, 79);
    ViewConfig cfg;
    cfg.out_size = 8;
    cfg.patch_size = 2;
    cfg.n_anchors = 2;
    const SampleViews views = make_views(s.fields[0], s.geometry, 1, cfg, Rng(7));
    CHECK(views.anchors[0].values != views.anchors[1].values);

    // Same base stream, same result; different stream, different result.
    const SampleViews again = make_views(s.fields[0], s.geometry, 1, cfg, Rng(7));
    CHECK(again.anchors[0].values == views.anchors[0].values);
    const SampleViews other = make_views(s.fields[0], s.geometry, 1, cfg, Rng(7).fork(1));
    CHECK(other.anchors[0].values != views.anchors[0].values);
}

TEST_CASE("view config validation") {
    ViewConfig cfg;
    cfg.out_size = 9;
    cfg.patch_size = 2;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.out_size = 8;
    cfg.mask_ratio = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.mask_ratio = 0.15;
    cfg.n_anchors = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.n_anchors = 1;
    cfg.anchor_scale = {0.0, 0.5};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

} // TEST_SUITE
