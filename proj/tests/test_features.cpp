#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>
#include <tuple>
#include <vector>

#include "nlbp/features.hpp"
#include "nlbp/integral.hpp"
#include "nlbp/rng.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace nlbp;

namespace {

GrayImage from_rows(const std::vector<std::vector<int>>& rows) {
  GrayImage img(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()));
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      img.at(x, y) = static_cast<std::uint8_t>(rows[static_cast<std::size_t>(y)]
                                                   [static_cast<std::size_t>(x)]);
  return img;
}

Rect random_rect(Rng& rng, int img_w, int img_h, int min_w, int min_h) {
  int w = rng.uniform_int(min_w, img_w);
  int h = rng.uniform_int(min_h, img_h);
  int x = rng.uniform_int(0, img_w - w);
  int y = rng.uniform_int(0, img_h - h);
  return Rect{x, y, w, h};
}

}  // namespace

TEST_CASE("census code on constant image sets all nine bits") {
  GrayImage img(10, 8, 42);
  IntegralImage ii(img);
  CHECK(census_code(ii, Rect{0, 0, 10, 8}) == 511);
  CHECK(census_code(ii, Rect{2, 1, 5, 6}) == 511);
}

TEST_CASE("census code on 3x3 with dark center clears only bit 4") {
  GrayImage img = from_rows({{9, 9, 9}, {9, 0, 9}, {9, 9, 9}});
  IntegralImage ii(img);
  // whole mean 8; center cell 0 < 8, every other cell 9 >= 8
  CHECK(census_code(ii, Rect{0, 0, 3, 3}) == 495);
}

TEST_CASE("lbp code on constant image and dark-center pattern is 255") {
  GrayImage flat(6, 6, 100);
  CHECK(lbp_code(IntegralImage(flat), Rect{0, 0, 6, 6}) == 255);
  GrayImage img = from_rows({{9, 9, 9}, {9, 0, 9}, {9, 9, 9}});
  CHECK(lbp_code(IntegralImage(img), Rect{0, 0, 3, 3}) == 255);
}

TEST_CASE("census and lbp match the pixel-loop reference on random rects") {
  Rng rng(0x5eed0001);
  for (int trial = 0; trial < 200; ++trial) {
    int w = rng.uniform_int(3, 24);
    int h = rng.uniform_int(3, 24);
    GrayImage img = synth::noise_image(rng, w, h);
    IntegralImage ii(img);
    Rect r = random_rect(rng, w, h, 3, 3);
    CAPTURE(trial, w, h, r.x, r.y, r.w, r.h);
    REQUIRE(census_code(ii, r) == oracle::census_code(img, r));
    REQUIRE(lbp_code(ii, r) == oracle::lbp_code(img, r));
  }
}

TEST_CASE("codes stay in range and undersized rects are rejected") {
  Rng rng(7);
  GrayImage img = synth::noise_image(rng, 20, 20);
  IntegralImage ii(img);
  for (int trial = 0; trial < 100; ++trial) {
    Rect r = random_rect(rng, 20, 20, 3, 3);
    int cs = census_code(ii, r);
    int lbp = lbp_code(ii, r);
    REQUIRE((cs >= 0 && cs < 512));
    REQUIRE((lbp >= 0 && lbp < 256));
  }
  CHECK_THROWS_AS(census_code(ii, Rect{0, 0, 2, 5}), std::invalid_argument);
  CHECK_THROWS_AS(lbp_code(ii, Rect{0, 0, 5, 2}), std::invalid_argument);
  CHECK_THROWS_AS(census_code(ii, Rect{18, 0, 5, 5}), std::out_of_range);
}

TEST_CASE("census and lbp are invariant under exact brightness rescales") {
  Rng rng(0xAF01);
  // Base pixels are even and small enough that every transform below stays
  // integral and inside [0, 255], so no rounding or clamping interferes.
  GrayImage base(15, 11);
  for (int y = 0; y < 11; ++y)
    for (int x = 0; x < 15; ++x)
      base.at(x, y) = static_cast<std::uint8_t>(2 * rng.uniform_int(10, 50));
  struct Transform {
    double a;
    int b;
  };
  for (Transform t : {Transform{0.5, 0}, Transform{1.0, 7}, Transform{1.5, 10},
                      Transform{2.0, 40}}) {
    GrayImage mapped(15, 11);
    for (int y = 0; y < 11; ++y)
      for (int x = 0; x < 15; ++x) {
        double v = t.a * base.at(x, y) + t.b;
        REQUIRE(v == static_cast<int>(v));
        REQUIRE(v <= 255.0);
        mapped.at(x, y) = static_cast<std::uint8_t>(v);
      }
    IntegralImage ib(base), im(mapped);
    for (int trial = 0; trial < 50; ++trial) {
      Rect r = random_rect(rng, 15, 11, 3, 3);
      CAPTURE(t.a, t.b, r.x, r.y, r.w, r.h);
      REQUIRE(census_code(ib, r) == census_code(im, r));
      REQUIRE(lbp_code(ib, r) == lbp_code(im, r));
    }
  }
}

TEST_CASE("codes are translation-equivariant") {
  Rng rng(0xBEEF);
  GrayImage patch = synth::noise_image(rng, 9, 7);
  GrayImage canvas_a = synth::paste_into_frame(patch, 40, 30, 3, 5);
  GrayImage canvas_b = synth::paste_into_frame(patch, 40, 30, 21, 14);
  IntegralImage ia(canvas_a), ib(canvas_b);
  for (int trial = 0; trial < 40; ++trial) {
    Rect local = random_rect(rng, 9, 7, 3, 3);
    Rect ra{local.x + 3, local.y + 5, local.w, local.h};
    Rect rb{local.x + 21, local.y + 14, local.w, local.h};
    REQUIRE(census_code(ia, ra) == census_code(ib, rb));
    REQUIRE(lbp_code(ia, ra) == lbp_code(ib, rb));
  }
}

TEST_CASE("haar response on constant image vanishes for balanced templates") {
  GrayImage img(24, 24, 77);
  IntegralImage ii(img);
  CHECK(haar_response(ii, Rect{2, 2, 8, 6}, HaarTemplate::kEdgeHorizontal) == 0);
  CHECK(haar_response(ii, Rect{2, 2, 8, 6}, HaarTemplate::kEdgeVertical) == 0);
  CHECK(haar_response(ii, Rect{2, 2, 8, 6}, HaarTemplate::kDiagonal) == 0);
}

TEST_CASE("edge-vertical response on a half-bright image is closed-form") {
  // Left half 255, right half 0. A centered vertical edge sees the full
  // contrast: 255 * (w/2) * h.
  GrayImage img(16, 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 16; ++x) img.at(x, y) = x < 8 ? 255 : 0;
  IntegralImage ii(img);
  CHECK(haar_response(ii, Rect{0, 0, 16, 10}, HaarTemplate::kEdgeVertical) ==
        255LL * 8 * 10);
  CHECK(haar_response(ii, Rect{4, 2, 8, 6}, HaarTemplate::kEdgeVertical) ==
        255LL * 4 * 6);
}

TEST_CASE("haar responses match the region-sum reference") {
  Rng rng(0xCAFE);
  for (int trial = 0; trial < 150; ++trial) {
    GrayImage img = synth::noise_image(rng, 30, 26);
    IntegralImage ii(img);
    HaarTemplate t = kAllHaarTemplates[rng.below(5)];
    auto [uw, uh] = haar_units(t);
    int bw = rng.uniform_int(1, 30 / uw);
    int bh = rng.uniform_int(1, 26 / uh);
    Rect r{rng.uniform_int(0, 30 - bw * uw), rng.uniform_int(0, 26 - bh * uh),
           bw * uw, bh * uh};
    CAPTURE(trial, to_string(t), r.x, r.y, r.w, r.h);
    REQUIRE(haar_response(ii, r, t) == oracle::haar_response(img, r, t));
  }
}

TEST_CASE("haar rejects rects incompatible with the template") {
  GrayImage img(12, 12, 0);
  IntegralImage ii(img);
  CHECK_THROWS_AS(haar_response(ii, Rect{0, 0, 5, 4}, HaarTemplate::kEdgeVertical),
                  std::invalid_argument);
  CHECK_THROWS_AS(haar_response(ii, Rect{0, 0, 6, 5}, HaarTemplate::kEdgeHorizontal),
                  std::invalid_argument);
  CHECK_THROWS_AS(haar_response(ii, Rect{0, 0, 4, 6}, HaarTemplate::kLineVertical),
                  std::invalid_argument);
  CHECK_THROWS_AS(haar_response(ii, Rect{8, 8, 6, 6}, HaarTemplate::kDiagonal),
                  std::out_of_range);
}

TEST_CASE("haar responses scale linearly; shifts cancel on balanced templates") {
  Rng rng(0x11AA);
  GrayImage base(20, 18);
  for (int y = 0; y < 18; ++y)
    for (int x = 0; x < 20; ++x)
      base.at(x, y) = static_cast<std::uint8_t>(rng.uniform_int(10, 100));
  GrayImage doubled(20, 18), shifted(20, 18);
  for (int y = 0; y < 18; ++y)
    for (int x = 0; x < 20; ++x) {
      doubled.at(x, y) = static_cast<std::uint8_t>(2 * base.at(x, y));
      shifted.at(x, y) = static_cast<std::uint8_t>(base.at(x, y) + 31);
    }
  IntegralImage ib(base), id(doubled), is(shifted);
  for (int trial = 0; trial < 60; ++trial) {
    HaarTemplate t = kAllHaarTemplates[rng.below(5)];
    auto [uw, uh] = haar_units(t);
    int bw = rng.uniform_int(1, 20 / uw);
    int bh = rng.uniform_int(1, 18 / uh);
    Rect r{rng.uniform_int(0, 20 - bw * uw), rng.uniform_int(0, 18 - bh * uh),
           bw * uw, bh * uh};
    CAPTURE(to_string(t), r.x, r.y, r.w, r.h);
    REQUIRE(haar_response(id, r, t) == 2 * haar_response(ib, r, t));
    bool balanced = t == HaarTemplate::kEdgeHorizontal ||
                    t == HaarTemplate::kEdgeVertical ||
                    t == HaarTemplate::kDiagonal;
    std::int64_t expected_shift =
        balanced ? 0 : 31LL * r.area() / 3;  // line templates keep 1/3 net weight
    REQUIRE(haar_response(is, r, t) == haar_response(ib, r, t) + expected_shift);
  }
}

TEST_CASE("enumeration: a 3x3 aperture admits exactly the full-aperture rect") {
  auto fs = enumerate_features(Aperture{3, 3}, FeatureKind::kCensus,
                               default_lattice(FeatureKind::kCensus));
  REQUIRE(fs.size() == 1);
  CHECK(fs[0].rect == Rect{0, 0, 3, 3});
  CHECK(fs[0].kind == FeatureKind::kCensus);
}

TEST_CASE("enumeration: 4x3 aperture with unit size step yields 3 descriptors") {
  auto fs = enumerate_features(Aperture{4, 3}, FeatureKind::kCensus,
                               FeatureLattice{1, 3, 3, 1, 1});
  REQUIRE(fs.size() == 3);
  CHECK(fs[0].rect == Rect{0, 0, 3, 3});
  CHECK(fs[1].rect == Rect{1, 0, 3, 3});
  CHECK(fs[2].rect == Rect{0, 0, 4, 3});
}

TEST_CASE("enumeration matches a brute-force generator and has no duplicates") {
  Aperture ap = kDigitAperture;
  for (FeatureKind kind : {FeatureKind::kCensus, FeatureKind::kLbp}) {
    FeatureLattice lat = default_lattice(kind);
    auto fs = enumerate_features(ap, kind, lat);
    std::vector<Rect> expected;
    for (int h = lat.min_h; h <= ap.height; h += lat.step_h)
      for (int w = lat.min_w; w <= ap.width; w += lat.step_w)
        for (int y = 0; y + h <= ap.height; y += lat.stride)
          for (int x = 0; x + w <= ap.width; x += lat.stride)
            expected.push_back(Rect{x, y, w, h});
    REQUIRE(fs.size() == expected.size());
    std::set<std::tuple<int, int, int, int>> seen;
    for (std::size_t i = 0; i < fs.size(); ++i) {
      REQUIRE(fs[i].rect == expected[i]);
      seen.insert({fs[i].rect.x, fs[i].rect.y, fs[i].rect.w, fs[i].rect.h});
    }
    REQUIRE(seen.size() == fs.size());
  }
}

TEST_CASE("enumeration respects haar divisibility and rejects empty pools") {
  auto fs = enumerate_features(Aperture{12, 24}, FeatureKind::kHaar,
                               default_lattice(FeatureKind::kHaar,
                                               HaarTemplate::kLineVertical),
                               HaarTemplate::kLineVertical);
  REQUIRE(!fs.empty());
  for (const auto& f : fs) {
    CHECK(f.rect.w % 3 == 0);
    CHECK(f.rect.right() <= 12);
    CHECK(f.rect.bottom() <= 24);
  }
  CHECK_THROWS_AS(enumerate_features(Aperture{2, 2}, FeatureKind::kCensus,
                                     default_lattice(FeatureKind::kCensus)),
                  std::invalid_argument);
  CHECK_THROWS_AS(enumerate_features(Aperture{8, 8}, FeatureKind::kCensus,
                                     FeatureLattice{1, 2, 3, 3, 3}),
                  std::invalid_argument);
}

TEST_CASE("default pools are non-empty for every family at both apertures") {
  for (Aperture ap : {kNumberAperture, kDigitAperture}) {
    CHECK(!default_feature_pool(ap, FeatureKind::kCensus).empty());
    CHECK(!default_feature_pool(ap, FeatureKind::kLbp).empty());
    auto haar = default_feature_pool(ap, FeatureKind::kHaar);
    CHECK(!haar.empty());
    // all five templates present
    std::set<HaarTemplate> seen;
    for (const auto& f : haar) seen.insert(f.tmpl);
    CHECK(seen.size() == 5);
  }
}

TEST_CASE("kind and template names round-trip through strings") {
  for (FeatureKind k : {FeatureKind::kCensus, FeatureKind::kLbp, FeatureKind::kHaar})
    CHECK(feature_kind_from_string(to_string(k)) == k);
  for (HaarTemplate t : kAllHaarTemplates)
    CHECK(haar_template_from_string(to_string(t)) == t);
  CHECK_THROWS_AS(feature_kind_from_string("sift"), std::invalid_argument);
  CHECK_THROWS_AS(haar_template_from_string("ring"), std::invalid_argument);
}

TEST_CASE("scan scales form a geometric ladder that fits the frame") {
  auto scales = scan_scales(kDigitAperture, 64, 64, 1.0, 1.25,
                            std::numeric_limits<double>::infinity());
  REQUIRE(scales.size() == 5);
  CHECK(scales[0] == 1.0);
  CHECK(scales[4] == Catch::Approx(2.44140625));
  for (double s : scales) {
    auto [w, h] = scaled_window_size(kDigitAperture, s);
    CHECK(w <= 64);
    CHECK(h <= 64);
  }
  auto next = scaled_window_size(kDigitAperture, scales.back() * 1.25);
  CHECK((next[0] > 64 || next[1] > 64));

  CHECK(scan_scales(kDigitAperture, 10, 10, 1.0, 1.25, 4.0).empty());
  CHECK(scan_scales(kDigitAperture, 100, 100, 1.0, 1.25, 1.0).size() == 1);
  CHECK_THROWS_AS(scan_scales(kDigitAperture, 64, 64, 1.0, 1.0, 4.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(scan_scales(kDigitAperture, 64, 64, 0.0, 2.0, 4.0),
                  std::invalid_argument);
}

TEST_CASE("effective stride scales with the window and never drops below 1") {
  CHECK(effective_stride(2, 1.0) == 2);
  CHECK(effective_stride(2, 1.25) == 3);  // round-half-up of 2.5
  CHECK(effective_stride(1, 1.25) == 1);
  CHECK(effective_stride(2, 0.3) == 1);
  CHECK(effective_stride(4, 2.0) == 8);
}

TEST_CASE("placed code rects follow the window and stay inside it") {
  GrayImage img(200, 200, 0);
  IntegralImage ii(img);
  CHECK(place_code_rect(Rect{1, 2, 3, 4}, kDigitAperture,
                        WindowView{&ii, 10, 20, 1.0}) == Rect{11, 22, 3, 4});
  CHECK(place_code_rect(Rect{1, 2, 3, 4}, kDigitAperture,
                        WindowView{&ii, 10, 20, 2.0}) == Rect{12, 24, 6, 8});
  Rng rng(99);
  for (double scale : {0.8, 1.0, 1.3, 1.7, 2.5}) {
    auto [ww, wh] = scaled_window_size(kDigitAperture, scale);
    for (int trial = 0; trial < 60; ++trial) {
      Rect local = random_rect(rng, kDigitAperture.width, kDigitAperture.height, 3, 3);
      Rect placed =
          place_code_rect(local, kDigitAperture, WindowView{&ii, 7, 9, scale});
      CAPTURE(scale, local.x, local.y, local.w, local.h);
      REQUIRE(placed.w >= 3);
      REQUIRE(placed.h >= 3);
      REQUIRE(placed.x >= 7);
      REQUIRE(placed.y >= 9);
      REQUIRE(placed.right() <= 7 + ww);
      REQUIRE(placed.bottom() <= 9 + wh);
    }
  }
}

TEST_CASE("placed haar rects keep template divisibility at every scale") {
  GrayImage img(200, 200, 0);
  IntegralImage ii(img);
  Rng rng(0x7777);
  for (HaarTemplate t : kAllHaarTemplates) {
    auto [uw, uh] = haar_units(t);
    for (double scale : {0.7, 1.0, 1.3, 2.0, 2.6}) {
      auto [ww, wh] = scaled_window_size(kDigitAperture, scale);
      for (int trial = 0; trial < 30; ++trial) {
        int bw = rng.uniform_int(1, kDigitAperture.width / uw);
        int bh = rng.uniform_int(1, kDigitAperture.height / uh);
        Rect local{rng.uniform_int(0, kDigitAperture.width - bw * uw),
                   rng.uniform_int(0, kDigitAperture.height - bh * uh),
                   bw * uw, bh * uh};
        Rect placed = place_haar_rect(local, t, kDigitAperture,
                                      WindowView{&ii, 5, 6, scale});
        CAPTURE(to_string(t), scale, local.x, local.y, local.w, local.h);
        REQUIRE(placed.w % uw == 0);
        REQUIRE(placed.h % uh == 0);
        REQUIRE(placed.w >= uw);
        REQUIRE(placed.h >= uh);
        REQUIRE(placed.x >= 5);
        REQUIRE(placed.y >= 6);
        REQUIRE(placed.right() <= 5 + ww);
        REQUIRE(placed.bottom() <= 6 + wh);
      }
    }
  }
}

TEST_CASE("code range per family") {
  CHECK(code_range(FeatureKind::kCensus) == 512);
  CHECK(code_range(FeatureKind::kLbp) == 256);
  CHECK(code_range(FeatureKind::kHaar, 64) == 64);
}
