#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "temporef/augmentation.hpp"
#include "temporef/error.hpp"
#include "test_support.hpp"

using namespace temporef;

namespace {

MelSpectrogram smooth_track(std::size_t frames, std::uint64_t seed) {
  MelSpectrogram s;
  s.data = temporef::testing::smooth_matrix(frames, 8, seed);
  s.frame_rate = 100.0;
  return s;
}

double max_rel_error(const FrameMatrix& got, const FrameMatrix& want, std::size_t frames) {
  double worst = 0.0;
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t b = 0; b < want.bands(); ++b) {
      worst = std::max(worst, static_cast<double>(std::fabs(got(t, b) - want(t, b)) / std::fabs(want(t, b))));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("excerpt length is round(3 s * frame_rate)") {
  CHECK(excerpt_length(100.0) == 300);
  CHECK(excerpt_length(86.1328125) == 258);
  for (double fr = 20.0; fr < 200.0; fr += 3.7) CHECK(excerpt_length(fr) == std::llround(3.0 * fr));
}

TEST_CASE("stretch by 1 is a bit-exact copy") {
  const auto m = temporef::testing::smooth_matrix(137, 5, 1);
  CHECK(time_stretch(m, {1.0}) == m);
}

TEST_CASE("stretch frame counts") {
  const auto m = temporef::testing::smooth_matrix(300, 3, 2);
  CHECK(time_stretch(m, {1.5}).frames() == 200);
  for (double f : {0.75, 1.0, 1.25, 1.5}) {
    CAPTURE(f);
    CHECK(time_stretch(m, {f}).frames() == static_cast<std::size_t>(std::llround(300 / f)));
  }
  for (std::size_t n : {10u, 77u, 301u, 1000u}) {
    const auto x = temporef::testing::smooth_matrix(n, 1, n);
    CHECK(time_stretch(x, {0.8}).frames() > n);
    CHECK(time_stretch(x, {1.2}).frames() < n);
  }
}

TEST_CASE("stretch of a constant is constant") {
  const FrameMatrix c(120, 4, 2.5f);
  for (double f : {0.75, 0.9, 1.1, 1.333, 1.5}) {
    const auto out = time_stretch(c, {f});
    for (float v : out.values()) REQUIRE(v == doctest::Approx(2.5f).epsilon(1e-6));
  }
}

TEST_CASE("stretch interpolates on the input grid") {
  // With f = 2 every output frame sits on an input knot.
  const auto m = temporef::testing::smooth_matrix(64, 3, 9);
  const auto out = time_stretch(m, {2.0});
  REQUIRE(out.frames() == 32);
  for (std::size_t j = 0; j < 32; ++j) {
    for (std::size_t b = 0; b < 3; ++b) CHECK(out(j, b) == m(2 * j, b));
  }
}

TEST_CASE("stretch round trip on smooth spectrograms stays within 5%") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto m = temporef::testing::smooth_matrix(400, 6, seed);
    for (double f : {0.75, 0.8, 1.25, 1.5}) {
      CAPTURE(seed);
      CAPTURE(f);
      const auto there = time_stretch(m, {f});
      const auto back = time_stretch(there, {1.0 / f});
      const auto diff = static_cast<long>(back.frames()) - static_cast<long>(m.frames());
      CHECK(std::labs(diff) <= 1);
      CHECK(max_rel_error(back, m, std::min(back.frames(), m.frames())) <= 0.05);
    }
  }
}

TEST_CASE("stretch rejects bad inputs") {
  const auto m = temporef::testing::smooth_matrix(50, 2, 1);
  CHECK_THROWS_AS(time_stretch(m, {0.0}), Error);
  CHECK_THROWS_AS(time_stretch(m, {-1.0}), Error);
  CHECK_THROWS_AS(time_stretch(FrameMatrix(3, 2), {1.2}), Error);
}

TEST_CASE("stretch factor sampling is log-uniform on the range") {
  Rng rng(11);
  const int n = 100000;
  double sum = 0.0, lo = 10.0, hi = 0.0;
  for (int i = 0; i < n; ++i) {
    const double f = sample_stretch_factor(rng, {0.75, 1.5}).value;
    sum += std::log(f);
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  CHECK(std::fabs(sum / n - (std::log(0.75) + std::log(1.5)) / 2) <= 0.01);
  CHECK(lo >= 0.75);
  CHECK(hi <= 1.5);
  for (int i = 0; i < 100; ++i) CHECK(sample_stretch_factor(rng, {1.0, 1.0}).value == 1.0);
}

TEST_CASE("source window and track length precondition") {
  PairSamplerConfig cfg;
  CHECK(source_window_frames(cfg, 100.0) == 450);
  Rng rng(0);
  CHECK_THROWS_AS(sample_pair(smooth_track(899, 1), cfg, rng), Error);
  CHECK_NOTHROW(sample_pair(smooth_track(900, 1), cfg, rng));
}

TEST_CASE("sampler configuration validation") {
  PairSamplerConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.p_same = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.p_same = 1.0;
  CHECK_NOTHROW(cfg.validate());
  cfg = {};
  cfg.min_factor_ratio_for_different = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.factor_range = {1.0, 1.02};
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("pairs: labels, factors and shapes") {
  const auto track = smooth_track(1200, 3);
  PairSamplerConfig cfg;
  Rng rng(5);
  std::size_t same = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto p = sample_pair(track, cfg, rng);
    REQUIRE(p.a.data.frames() == 300);
    REQUIRE(p.b.data.frames() == 300);
    REQUIRE(p.offset_a != p.offset_b);
    REQUIRE(p.offset_a + 450 <= track.frames());
    REQUIRE(p.offset_b + 450 <= track.frames());
    if (p.label == 1) {
      ++same;
      REQUIRE(p.factor_a == p.factor_b);
    } else {
      REQUIRE(std::max(p.factor_a, p.factor_b) / std::min(p.factor_a, p.factor_b) >= 1.04);
    }
    REQUIRE(p.factor_a >= 0.75);
    REQUIRE(p.factor_a <= 1.5);
  }
  const double frac = static_cast<double>(same) / n;
  CHECK(frac >= 0.48);
  CHECK(frac <= 0.52);
}

TEST_CASE("pairs: excerpt content equals the stretched source window") {
  const auto track = smooth_track(1000, 4);
  Rng rng(9);
  const auto p = sample_pair(track, {}, rng);
  const auto expect = time_stretch(track.data.slice(p.offset_a, 450), {p.factor_a});
  for (std::size_t t = 0; t < 300; ++t) {
    for (std::size_t b = 0; b < track.bands(); ++b) REQUIRE(p.a.data(t, b) == expect(t, b));
  }
}

TEST_CASE("pairs: p_same = 1 always labels same") {
  const auto track = smooth_track(950, 6);
  PairSamplerConfig cfg;
  cfg.p_same = 1.0;
  Rng rng(1);
  for (int i = 0; i < 500; ++i) REQUIRE(sample_pair(track, cfg, rng).label == 1);
}

TEST_CASE("pairs: same seed, same pairs") {
  const auto track = smooth_track(1000, 7);
  Rng r1(77), r2(77);
  for (int i = 0; i < 20; ++i) {
    const auto a = sample_pair(track, {}, r1);
    const auto b = sample_pair(track, {}, r2);
    REQUIRE(a.a.data == b.a.data);
    REQUIRE(a.b.data == b.b.data);
    REQUIRE(a.label == b.label);
  }
}

TEST_CASE("crop_excerpt bounds") {
  MelSpectrogram s;
  s.data = temporef::testing::smooth_matrix(300, 4, 1);
  s.frame_rate = 100.0;
  CHECK(crop_excerpt(s, 0).data == s.data);
  CHECK_THROWS_AS(crop_excerpt(s, 1), Error);
  CHECK_THROWS_AS(crop_excerpt(s, 301), Error);
  s.data = temporef::testing::smooth_matrix(500, 4, 1);
  const auto e = crop_excerpt(s, 200);
  CHECK(e.data.frames() == 300);
  CHECK(e.data(0, 2) == s.data(200, 2));
}
