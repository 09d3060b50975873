#include <doctest.h>

#include <cmath>

#include "synct/metrics.hpp"
#include "synct/rng.hpp"

using namespace synct;

namespace {

ImageSlice random_ct(int size, Rng& rng) {
  ImageSlice img(size, size, Modality::CT);
  for (auto& v : img.px) v = static_cast<float>(rng.uniform(-1000.0, 2000.0));
  return img;
}

ImageSlice unit_image(int size, const std::vector<double>& vals) {
  ImageSlice img(size, size, Modality::MR);
  for (std::size_t i = 0; i < img.px.size(); ++i) img.px[i] = static_cast<float>(vals[i]);
  return img;
}

// naive reference SSIM with the same window definition
double ssim_reference(const std::vector<double>& a, const std::vector<double>& b, int h, int w) {
  const int win = 11;
  const double sigma = 1.5, c1 = 1e-4, c2 = 9e-4;
  std::vector<double> k(win * win);
  double ks = 0;
  for (int y = 0; y < win; ++y)
    for (int x = 0; x < win; ++x) {
      const double dy = y - 5, dx = x - 5;
      k[y * win + x] = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
      ks += k[y * win + x];
    }
  for (auto& v : k) v /= ks;
  double total = 0;
  int n = 0;
  for (int oy = 0; oy + win <= h; ++oy)
    for (int ox = 0; ox + win <= w; ++ox) {
      double ma = 0, mb = 0, va = 0, vb = 0, cov = 0;
      for (int y = 0; y < win; ++y)
        for (int x = 0; x < win; ++x) {
          ma += k[y * win + x] * a[(oy + y) * w + ox + x];
          mb += k[y * win + x] * b[(oy + y) * w + ox + x];
        }
      for (int y = 0; y < win; ++y)
        for (int x = 0; x < win; ++x) {
          const double da = a[(oy + y) * w + ox + x] - ma;
          const double db = b[(oy + y) * w + ox + x] - mb;
          va += k[y * win + x] * da * da;
          vb += k[y * win + x] * db * db;
          cov += k[y * win + x] * da * db;
        }
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++n;
    }
  return total / n;
}

}  // namespace

TEST_CASE("mae closed forms and oracle") {
  Rng rng(1);
  const ImageSlice a = random_ct(32, rng);
  SUBCASE("identical -> 0") { CHECK(*mae(a, a) == 0.0); }
  SUBCASE("constant 10 HU offset -> 10") {
    ImageSlice lo(32, 32, Modality::CT), hi(32, 32, Modality::CT);
    for (std::size_t i = 0; i < lo.px.size(); ++i) {
      lo.px[i] = static_cast<float>(rng.uniform(-1000.0, 1990.0));
      hi.px[i] = lo.px[i] + 10.f;
    }
    CHECK(*mae(lo, hi) == doctest::Approx(10.0).epsilon(1e-6));
  }
  SUBCASE("checkerboard region matches loop oracle") {
    const ImageSlice b = random_ct(32, rng);
    Mask region(32, 32);
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) region.at(y, x) = (x + y) % 2;
    double s = 0;
    std::size_t n = 0;
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x)
        if ((x + y) % 2) {
          s += std::abs(double(a.at(y, x)) - double(b.at(y, x)));
          ++n;
        }
    CHECK(*mae(a, b, &region) == doctest::Approx(s / n).epsilon(1e-9));
  }
  SUBCASE("empty region reported absent") {
    Mask region(32, 32);
    CHECK_FALSE(mae(a, a, &region).has_value());
  }
}

TEST_CASE("bone region thresholding") {
  ImageSlice real(32, 32, Modality::CT), syn(32, 32, Modality::CT);
  real.at(3, 3) = 700.f;
  syn.at(5, 5) = 100.f;
  syn.at(7, 7) = 150.f;  // inclusive threshold
  const Mask m = bone_region(real, syn);
  CHECK(m.at(3, 3) == 1);
  CHECK(m.at(5, 5) == 0);
  CHECK(m.at(7, 7) == 1);
  CHECK(m.count() == 2);

  SUBCASE("all below threshold -> empty") {
    ImageSlice low(32, 32, Modality::CT);
    CHECK(bone_region(low, low).count() == 0);
  }
  SUBCASE("phantom bone recovered exactly in the noiseless render") {
    PhantomConfig c;
    c.size = 64;
    const PhantomPair p = generate_phantom(c);
    const Mask m2 = bone_region(p.ct, p.ct);
    for (std::size_t i = 0; i < m2.v.size(); ++i)
      CHECK(m2.v[i] == (p.ct.px[i] == phantom_hu::kBone ? 1 : 0));
    CHECK(m2.count() > 0);
  }
}

TEST_CASE("organ intersection region") {
  PhantomConfig c;
  c.size = 64;
  c.bladder_scale_mr = 1.2;
  c.bladder_scale_ct = 0.85;
  const PhantomPair p = generate_phantom(c);

  SUBCASE("identical labels -> intersection equals the mask") {
    const Mask m = organ_intersection_region(p.label_mr, p.label_mr, kBladder);
    const Mask gt = mask_of_class(p.label_mr, kBladder);
    CHECK(m.v == gt.v);
  }
  SUBCASE("scaled-down CT bladder is contained, so the intersection is the CT mask") {
    const Mask inter = organ_intersection_region(p.label_mr, p.label_ct, kBladder);
    const Mask ct_bl = mask_of_class(p.label_ct, kBladder);
    CHECK(inter.v == ct_bl.v);
  }
  SUBCASE("disjoint placements -> empty") {
    LabelMap a(16, 16, Modality::MR), b(16, 16, Modality::CT);
    a.at(2, 2) = kRectalGas;
    b.at(10, 10) = kRectalGas;
    CHECK(organ_intersection_region(a, b, kRectalGas).count() == 0);
  }
}

TEST_CASE("gas identification by thresholding and morphology") {
  SUBCASE("noiseless phantom gas recovered with DSC >= 0.95") {
    PhantomConfig c;
    c.size = 128;
    c.gas_present_ct = true;
    c.gas_present_mr = true;
    const PhantomPair p = generate_phantom(c);
    const Mask found = gas_identify(p.ct);
    const Mask gt = mask_of_class(p.label_ct, kRectalGas);
    CHECK(dsc(found, gt) >= 0.95);
  }
  SUBCASE("phantom without gas -> empty mask") {
    PhantomConfig c;
    c.size = 64;
    const PhantomPair p = generate_phantom(c);
    CHECK(gas_identify(p.ct).count() == 0);
  }
  SUBCASE("single isolated air pixel inside the body is removed by opening") {
    PhantomConfig c;
    c.size = 64;
    PhantomPair p = generate_phantom(c);
    p.ct.at(32, 32) = -1000.f;
    CHECK(gas_identify(p.ct).count() == 0);
  }
}

TEST_CASE("psnr closed forms") {
  std::vector<double> a(64 * 64, 0.0), b(64 * 64, 0.1);
  SUBCASE("identical -> capped at 100") { CHECK(psnr_unit(a, a) == 100.0); }
  SUBCASE("MSE 0.01 -> 20 dB") { CHECK(psnr_unit(a, b) == doctest::Approx(20.0).epsilon(1e-12)); }
  SUBCASE("monotonically decreases with noise amplitude") {
    Rng rng(3);
    std::vector<double> noise(a.size());
    for (auto& v : noise) v = rng.normal();
    double prev = 1e9;
    for (double amp : {0.01, 0.02, 0.05, 0.1, 0.2}) {
      std::vector<double> noisy(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) noisy[i] = a[i] + amp * noise[i];
      const double v = psnr_unit(a, noisy);
      CHECK(v < prev);
      prev = v;
    }
  }
}

TEST_CASE("ssim properties and reference equivalence") {
  Rng rng(4);
  std::vector<double> a(32 * 32), b(32 * 32);
  for (auto& v : a) v = rng.uniform();
  for (std::size_t i = 0; i < b.size(); ++i) {
    const int y = static_cast<int>(i) / 32, x = static_cast<int>(i) % 32;
    b[i] = ((x / 4 + y / 4) % 2) ? 1.0 - a[i] : a[i];
  }
  SUBCASE("ssim(a,a) == 1") { CHECK(ssim_unit(a, a, 32, 32) == doctest::Approx(1.0).epsilon(1e-12)); }
  SUBCASE("symmetric") {
    CHECK(ssim_unit(a, b, 32, 32) == doctest::Approx(ssim_unit(b, a, 32, 32)).epsilon(1e-9));
  }
  SUBCASE("matches the windowed-statistics reference") {
    CHECK(ssim_unit(a, b, 32, 32) == doctest::Approx(ssim_reference(a, b, 32, 32)).epsilon(1e-6));
  }
  SUBCASE("checkerboard inversion scores below identity") {
    CHECK(ssim_unit(a, b, 32, 32) < 0.9);
  }
}

TEST_CASE("dice similarity coefficient") {
  Mask a(8, 8), b(8, 8);
  SUBCASE("both empty -> 1.0") { CHECK(dsc(a, b) == 1.0); }
  SUBCASE("identical nonempty -> 1.0") {
    a.at(1, 1) = a.at(1, 2) = 1;
    CHECK(dsc(a, a) == 1.0);
  }
  SUBCASE("disjoint nonempty -> 0.0") {
    a.at(1, 1) = 1;
    b.at(5, 5) = 1;
    CHECK(dsc(a, b) == 0.0);
  }
  SUBCASE("half overlap of equal areas -> 0.5") {
    // |A| = |B| = 2k, |A and B| = k with k = 2
    a.at(0, 0) = a.at(0, 1) = a.at(0, 2) = a.at(0, 3) = 1;
    b.at(0, 2) = b.at(0, 3) = b.at(0, 4) = b.at(0, 5) = 1;
    CHECK(dsc(a, b) == doctest::Approx(0.5).epsilon(1e-15));
  }
}

TEST_CASE("metric symmetry on random images") {
  Rng rng(5);
  const ImageSlice a = random_ct(32, rng);
  const ImageSlice b = random_ct(32, rng);
  CHECK(*mae(a, b) == doctest::Approx(*mae(b, a)).epsilon(1e-15));
  CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-9));
}
