#include <doctest.h>

#include <cmath>

#include "synct/adain.hpp"
#include "synct/rng.hpp"

using namespace synct;

namespace {

Tensor random_tensor(int c, int h, int w, Rng& rng, double mean = 0.0, double stddev = 1.0) {
  Tensor t(c, h, w);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal(mean, stddev);
  return t;
}

// scalar-loop statistics oracle
void loop_stats(const Tensor& t, int c, double& mean, double& stddev) {
  double s = 0;
  for (int i = 0; i < t.plane(); ++i) s += t.channel(c)[i];
  mean = s / t.plane();
  double v = 0;
  for (int i = 0; i < t.plane(); ++i) {
    const double d = t.channel(c)[i] - mean;
    v += d * d;
  }
  stddev = std::sqrt(v / t.plane());
}

}  // namespace

TEST_CASE("adain self-style is the identity") {
  Rng rng(1);
  const Tensor x = random_tensor(4, 6, 6, rng, 0.3, 1.7);
  const AdainResult r = adain(x, x);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(r.out[i] - x[i]) < 1e-6);
  CHECK(r.degenerate_channels.empty());
}

TEST_CASE("adain aligns statistics to the style input") {
  Rng rng(2);
  const Tensor content = random_tensor(3, 8, 8, rng, 0.0, 1.0);
  const Tensor style = random_tensor(3, 8, 8, rng, 3.0, 2.0);
  const AdainResult r = adain(content, style);
  for (int c = 0; c < 3; ++c) {
    double mc, sc, ms, ss;
    loop_stats(r.out, c, mc, sc);
    loop_stats(style, c, ms, ss);
    CHECK(std::abs(mc - ms) < 1e-5);
    CHECK(std::abs(sc - ss) < 1e-4);
  }
}

TEST_CASE("adain output statistics match the scalar-loop oracle on random pairs") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor content = random_tensor(3, 5, 5, rng, rng.uniform(-1, 1), rng.uniform(0.5, 2));
    const Tensor style = random_tensor(3, 5, 5, rng, rng.uniform(-2, 2), rng.uniform(0.5, 3));
    const AdainResult r = adain(content, style);
    for (int c = 0; c < 3; ++c) {
      double mo, so, ms, ss;
      loop_stats(r.out, c, mo, so);
      loop_stats(style, c, ms, ss);
      CHECK(std::abs(mo - ms) < 1e-5);
      CHECK(std::abs(so - ss) < 1e-4);
    }
  }
}

TEST_CASE("adain is idempotent in statistics") {
  Rng rng(4);
  const Tensor x = random_tensor(3, 6, 6, rng, 1.0, 2.0);
  const Tensor y = random_tensor(3, 6, 6, rng, -1.0, 0.5);
  const Tensor once = adain(x, y).out;
  const Tensor twice = adain(once, y).out;
  for (int c = 0; c < 3; ++c) {
    double m1, s1, m2, s2;
    loop_stats(once, c, m1, s1);
    loop_stats(twice, c, m2, s2);
    CHECK(std::abs(m1 - m2) < 1e-5);
    CHECK(std::abs(s1 - s2) < 1e-5);
  }
}

TEST_CASE("zero-variance content channel is flagged") {
  Rng rng(5);
  Tensor content = random_tensor(2, 4, 4, rng);
  for (int i = 0; i < content.plane(); ++i) content.channel(1)[i] = 0.7;
  const Tensor style = random_tensor(2, 4, 4, rng);
  const AdainResult r = adain(content, style);
  REQUIRE(r.degenerate_channels.size() == 1);
  CHECK(r.degenerate_channels[0] == 1);
  CHECK(r.out.all_finite());
}

TEST_CASE("masked statistics") {
  Rng rng(6);
  SUBCASE("constant value under any mask -> mean v, std 0") {
    const Tensor feats = Tensor::full(2, 4, 4, 0.42);
    Mask m(4, 4);
    m.at(0, 0) = m.at(2, 3) = m.at(3, 1) = 1;
    const ChannelStats st = masked_statistics(feats, m);
    CHECK(st.mean[0] == doctest::Approx(0.42));
    CHECK(st.stddev[0] == 0.0);
  }
  SUBCASE("all-ones mask equals unmasked statistics") {
    const Tensor feats = random_tensor(3, 5, 5, rng);
    Mask m(5, 5);
    for (auto& v : m.v) v = 1;
    const ChannelStats a = masked_statistics(feats, m);
    const ChannelStats b = channel_statistics(feats);
    for (int c = 0; c < 3; ++c) {
      CHECK(a.mean[c] == doctest::Approx(b.mean[c]).epsilon(1e-12));
      CHECK(a.stddev[c] == doctest::Approx(b.stddev[c]).epsilon(1e-12));
    }
  }
  SUBCASE("checkerboard mask on a gradient matches the loop oracle") {
    Tensor feats(1, 6, 6);
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 6; ++x) feats.at(0, y, x) = 0.1 * x + 0.05 * y;
    Mask m(6, 6);
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 6; ++x) m.at(y, x) = (x + y) % 2;
    const ChannelStats st = masked_statistics(feats, m);
    double s = 0;
    int n = 0;
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 6; ++x)
        if ((x + y) % 2) {
          s += feats.at(0, y, x);
          ++n;
        }
    const double mean = s / n;
    double var = 0;
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 6; ++x)
        if ((x + y) % 2) var += (feats.at(0, y, x) - mean) * (feats.at(0, y, x) - mean);
    CHECK(std::abs(st.mean[0] - mean) < 1e-10);
    CHECK(std::abs(st.stddev[0] - std::sqrt(var / n)) < 1e-10);
  }
  SUBCASE("empty and single-pixel masks raise distinct errors") {
    const Tensor feats = random_tensor(1, 4, 4, rng);
    Mask empty(4, 4), single(4, 4);
    single.at(2, 2) = 1;
    CHECK_THROWS_AS(masked_statistics(feats, empty), EmptyMaskError);
    CHECK_THROWS_AS(masked_statistics(feats, single), DegenerateMaskError);
  }
}

namespace {

struct LocalFixture {
  std::array<AdaonModule, kOrganCount> modules{AdaonModule("adaon.B"), AdaonModule("adaon.R"),
                                               AdaonModule("adaon.G")};
  OrganStyleBank bank;
  Tensor mr;

  LocalFixture() {
    Rng rng(7);
    for (auto& m : modules) {
      m.f.init(rng, 0.02);
      m.g.init(rng, 0.02);
    }
    mr = random_tensor(1, 16, 16, rng, 0.0, 0.5);
  }
};

}  // namespace

TEST_CASE("local stream composition") {
  LocalFixture fx;
  std::array<Mask, kOrganCount> masks;
  for (auto& m : masks) m = Mask(16, 16);

  SUBCASE("all masks empty -> combined all zeros") {
    const LocalStreamOutput out = local_stream(fx.mr, masks, fx.bank, fx.modules, true);
    for (std::size_t i = 0; i < out.combined.size(); ++i) CHECK(out.combined[i] == 0.0);
  }
  SUBCASE("single organ equals its own output; support inside the mask") {
    for (int y = 4; y < 8; ++y)
      for (int x = 4; x < 8; ++x) masks[2].at(y, x) = 1;
    const LocalStreamOutput out = local_stream(fx.mr, masks, fx.bank, fx.modules, true);
    for (std::size_t i = 0; i < out.combined.size(); ++i) {
      CHECK(out.combined[i] == out.per_organ[2][i]);
      if (!masks[2].v[i]) CHECK(out.combined[i] == 0.0);
    }
  }
  SUBCASE("two disjoint organs sum, each zero on the other's support") {
    for (int y = 2; y < 6; ++y)
      for (int x = 2; x < 6; ++x) masks[0].at(y, x) = 1;
    for (int y = 9; y < 13; ++y)
      for (int x = 9; x < 13; ++x) masks[2].at(y, x) = 1;
    const LocalStreamOutput both = local_stream(fx.mr, masks, fx.bank, fx.modules, true);

    std::array<Mask, kOrganCount> only_b = masks, only_g = masks;
    only_b[2] = Mask(16, 16);
    only_g[0] = Mask(16, 16);
    const LocalStreamOutput ob = local_stream(fx.mr, only_b, fx.bank, fx.modules, true);
    const LocalStreamOutput og = local_stream(fx.mr, only_g, fx.bank, fx.modules, true);
    for (std::size_t i = 0; i < both.combined.size(); ++i) {
      CHECK(both.combined[i] == doctest::Approx(ob.combined[i] + og.combined[i]).epsilon(1e-12));
      if (masks[0].v[i]) CHECK(og.combined[i] == 0.0);
      if (masks[2].v[i]) CHECK(ob.combined[i] == 0.0);
    }
  }
  SUBCASE("overlapping masks rejected") {
    masks[0].at(5, 5) = 1;
    masks[1].at(5, 5) = 1;
    CHECK_THROWS_AS(local_stream(fx.mr, masks, fx.bank, fx.modules, true),
                    std::invalid_argument);
  }
}

TEST_CASE("fuse semantics") {
  LocalFixture fx;
  std::array<Mask, kOrganCount> masks;
  for (auto& m : masks) m = Mask(16, 16);
  Rng rng(8);
  const Tensor global = random_tensor(1, 16, 16, rng);

  SUBCASE("empty organ mask passes the global stream through bit-identically") {
    const LocalStreamOutput local = local_stream(fx.mr, masks, fx.bank, fx.modules, true);
    const Tensor out = fuse(global, local, local.union_mask);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == global[i]);
  }
  SUBCASE("full-frame organ mask -> output equals the local stream") {
    for (auto& v : masks[1].v) v = 1;
    const LocalStreamOutput local = local_stream(fx.mr, masks, fx.bank, fx.modules, true);
    const Tensor out = fuse(global, local, local.union_mask);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == local.combined[i]);
  }
  SUBCASE("pointwise: inside mask local value, outside global value") {
    for (int y = 3; y < 6; ++y)
      for (int x = 3; x < 6; ++x) masks[2].at(y, x) = 1;
    const LocalStreamOutput local = local_stream(fx.mr, masks, fx.bank, fx.modules, true);
    const Tensor out = fuse(global, local, local.union_mask);
    CHECK(out.at(0, 4, 4) == local.combined.at(0, 4, 4));
    CHECK(out.at(0, 4, 6) == global.at(0, 4, 6));
    for (std::size_t i = 0; i < out.size(); ++i)
      CHECK(out[i] == (local.union_mask.v[i] ? local.combined[i] : global[i]));
  }
}

TEST_CASE("adaon training reduces the content loss on synthetic organ patches") {
  AdaonModule module("adaon.G");
  Rng rng(9);
  module.f.init(rng, 0.02);
  module.g.init(rng, 0.02);

  // content: dark blob around -0.9; style: constant -1 region (gas-like)
  std::vector<MaskedPatch> contents, styles;
  for (int k = 0; k < 3; ++k) {
    MaskedPatch c, s;
    c.mask = Mask(32, 32);
    s.mask = Mask(32, 32);
    c.image = Tensor(1, 32, 32);
    s.image = Tensor(1, 32, 32);
    for (int y = 8; y < 24; ++y)
      for (int x = 8; x < 24; ++x) {
        c.mask.at(y, x) = 1;
        s.mask.at(y, x) = 1;
        c.image.at(0, y, x) = -0.9 + 0.05 * rng.normal();
        s.image.at(0, y, x) = -1.0;
      }
    contents.push_back(std::move(c));
    styles.push_back(std::move(s));
  }

  const OrganStyle style = build_organ_style(module.f, styles);
  REQUIRE(style.available());
  AdaonTrainConfig cfg;
  cfg.steps = 120;
  const AdaonTrainResult res = train_adaon(module, style, contents, cfg);
  REQUIRE_FALSE(res.aborted_non_finite);
  REQUIRE(res.content_curve.size() == 120);
  CHECK(res.content_curve.back() < res.content_curve.front());
  CHECK(module.trained);
}
