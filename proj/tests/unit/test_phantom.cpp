#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <map>

#include "synct/losses.hpp"
#include "synct/phantom.hpp"

using namespace synct;

namespace {

PhantomConfig base_config(int size = 64) {
  PhantomConfig c;
  c.size = size;
  c.seed = 99;
  return c;
}

std::map<float, std::size_t> histogram(const ImageSlice& img) {
  std::map<float, std::size_t> h;
  for (float v : img.px) ++h[v];
  return h;
}

}  // namespace

TEST_CASE("gas present only per modality flags") {
  PhantomConfig c = base_config();
  c.gas_present_mr = true;
  c.gas_present_ct = false;
  const PhantomPair p = generate_phantom(c);
  CHECK(p.label_mr.count(kRectalGas) > 0);
  CHECK(p.label_ct.count(kRectalGas) == 0);
}

TEST_CASE("no injected inconsistency -> identical label maps") {
  PhantomConfig c = base_config();
  c.bladder_scale_mr = c.bladder_scale_ct = 1.1;
  c.gas_present_mr = c.gas_present_ct = true;
  c.noise_sigma = 0.0;
  const PhantomPair p = generate_phantom(c);
  CHECK(p.label_mr.cls == p.label_ct.cls);
}

TEST_CASE("same config and seed -> bit-identical outputs") {
  PhantomConfig c = base_config();
  c.gas_present_mr = true;
  c.noise_sigma = 0.02;
  c.mr_bias_field_amplitude = 0.1;
  const PhantomPair a = generate_phantom(c);
  const PhantomPair b = generate_phantom(c);
  CHECK(a.mr.px == b.mr.px);
  CHECK(a.ct.px == b.ct.px);
  CHECK(a.label_mr.cls == b.label_mr.cls);
  CHECK(a.label_ct.cls == b.label_ct.cls);
}

TEST_CASE("scaled organs escaping the body are rejected") {
  PhantomConfig c = base_config();
  c.bladder_scale_mr = 4.0;
  CHECK_THROWS_AS(generate_phantom(c), std::invalid_argument);
}

TEST_CASE("gas escaping the rectum is rejected") {
  PhantomConfig c = base_config();
  c.gas_present_mr = true;
  c.gas_dx_mr = 0.2;
  CHECK_THROWS_AS(generate_phantom(c), std::invalid_argument);
}

TEST_CASE("rendered intensities follow the modality contracts") {
  PhantomConfig c = base_config(128);
  c.gas_present_mr = true;
  c.gas_present_ct = true;
  const PhantomPair p = generate_phantom(c);

  double gas_sum = 0.0;
  std::size_t gas_n = 0;
  for (int y = 0; y < p.ct.h; ++y)
    for (int x = 0; x < p.ct.w; ++x)
      if (p.label_ct.at(y, x) == kRectalGas) {
        gas_sum += p.ct.at(y, x);
        ++gas_n;
      }
  REQUIRE(gas_n > 0);
  CHECK(gas_sum / gas_n == -1000.0);  // exact with noise_sigma = 0

  // bladder bright in MR, near-water in CT; bone dark in MR, high in CT
  for (int y = 0; y < p.ct.h; ++y)
    for (int x = 0; x < p.ct.w; ++x) {
      if (p.label_mr.at(y, x) == kBladder) CHECK(p.mr.at(y, x) > 0.8f);
      if (p.label_ct.at(y, x) == kBladder) CHECK(p.ct.at(y, x) == phantom_hu::kBladder);
    }

  bool has_bone = false;
  for (float v : p.ct.px) has_bone = has_bone || v == phantom_hu::kBone;
  CHECK(has_bone);

  p.mr.validate();
  p.ct.validate();
  p.label_mr.validate();
  p.label_ct.validate();
}

TEST_CASE("labels trace geometry: organ classes are interior, never on the border") {
  PhantomConfig c = base_config();
  c.gas_present_mr = true;
  c.bladder_scale_mr = 1.2;
  const PhantomPair p = generate_phantom(c);
  for (int x = 0; x < p.label_mr.w; ++x) {
    CHECK(p.label_mr.at(0, x) == kBackground);
    CHECK(p.label_mr.at(p.label_mr.h - 1, x) == kBackground);
  }
  for (int y = 0; y < p.label_mr.h; ++y) {
    CHECK(p.label_mr.at(y, 0) == kBackground);
    CHECK(p.label_mr.at(y, p.label_mr.w - 1) == kBackground);
  }
}

TEST_CASE("label disagreement is confined to organ pixels") {
  PhantomConfig c = base_config();
  c.bladder_scale_mr = 1.25;
  c.bladder_scale_ct = 0.8;
  c.gas_present_mr = true;
  c.gas_dx_mr = 0.01;
  const PhantomPair p = generate_phantom(c);
  for (std::size_t i = 0; i < p.label_mr.cls.size(); ++i) {
    if (p.label_mr.cls[i] != p.label_ct.cls[i])
      CHECK((p.label_mr.cls[i] != kBackground || p.label_ct.cls[i] != kBackground));
  }
  // and the exclusion mask zeroes exactly those pixels
  const ExclusionMask u = exclusion_mask(p.label_mr, p.label_ct);
  for (std::size_t i = 0; i < u.m.size(); ++i)
    CHECK(u.m[i] == ((p.label_mr.cls[i] == 0 && p.label_ct.cls[i] == 0) ? 1 : 0));
}

TEST_CASE("flip augmentation") {
  PhantomConfig c = base_config();
  c.gas_present_mr = true;
  c.noise_sigma = 0.01;
  const PhantomPair p = generate_phantom(c);
  const auto aug = augment_flip(p);

  SUBCASE("produces four variants, first is identity") {
    CHECK(aug.size() == 4);
    CHECK(aug[0].mr.px == p.mr.px);
    CHECK(aug[0].label_ct.cls == p.label_ct.cls);
  }
  SUBCASE("double horizontal flip restores the original") {
    const ImageSlice again = flip_image(aug[1].mr, true, false);
    CHECK(again.px == aug[0].mr.px);
  }
  SUBCASE("per-class pixel counts are flip-invariant") {
    for (const auto& a : aug)
      for (std::uint8_t cls = 0; cls < kNumClasses; ++cls)
        CHECK(a.label_mr.count(cls) == p.label_mr.count(cls));
  }
  SUBCASE("histogram preserved exactly") {
    for (const auto& a : aug) {
      CHECK(histogram(a.mr) == histogram(p.mr));
      CHECK(histogram(a.ct) == histogram(p.ct));
    }
  }
}

TEST_CASE("normalization endpoints and inverse") {
  ImageSlice ct(32, 32, Modality::CT);
  ct.px[0] = -1000.f;
  ct.px[1] = 2000.f;
  ct.px[2] = 500.f;
  const Tensor t = normalize_for_training(ct);
  CHECK(t[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(t[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(t[2] == doctest::Approx(0.0).epsilon(1e-15));

  SUBCASE("denormalize inverts within 1e-5 HU") {
    Rng rng(1);
    ImageSlice img(32, 32, Modality::CT);
    for (auto& v : img.px) v = static_cast<float>(rng.uniform(-1000.0, 2000.0));
    const ImageSlice back = denormalize_ct(normalize_for_training(img));
    for (std::size_t i = 0; i < img.px.size(); ++i)
      CHECK(std::abs(back.px[i] - img.px[i]) < 1e-5f);
  }
  SUBCASE("MR maps [0,1] -> [-1,1]") {
    ImageSlice mr(32, 32, Modality::MR);
    mr.px[0] = 0.f;
    mr.px[1] = 1.f;
    mr.px[2] = 0.5f;
    const Tensor m = normalize_for_training(mr);
    CHECK(m[0] == doctest::Approx(-1.0));
    CHECK(m[1] == doctest::Approx(1.0));
    CHECK(m[2] == doctest::Approx(0.0));
  }
  SUBCASE("out-of-range input rejected") {
    ImageSlice bad(32, 32, Modality::CT);
    bad.px[5] = 3000.f;
    CHECK_THROWS_AS(normalize_for_training(bad), std::invalid_argument);
  }
}

TEST_CASE("bias field and noise stay within the valid ranges") {
  PhantomConfig c = base_config();
  c.noise_sigma = 0.05;
  c.mr_bias_field_amplitude = 0.2;
  c.gas_present_mr = true;
  c.gas_present_ct = true;
  const PhantomPair p = generate_phantom(c);
  p.mr.validate();
  p.ct.validate();
  // different seeds give different noise
  PhantomConfig c2 = c;
  c2.seed = c.seed + 1;
  const PhantomPair q = generate_phantom(c2);
  CHECK(p.mr.px != q.mr.px);
}
