#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <set>

#include "synct/losses.hpp"
#include "synct/rng.hpp"

using namespace synct;

namespace {

Tensor random_tensor(int c, int h, int w, Rng& rng) {
  Tensor t(c, h, w);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal();
  return t;
}

LabelMap random_labels(int h, int w, Rng& rng) {
  LabelMap y(h, w, Modality::MR);
  for (auto& v : y.cls) v = static_cast<std::uint8_t>(rng.next_below(4));
  return y;
}

// ---- independent scalar-loop oracles ----

double oracle_l1(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  std::size_t n = 0;
  for (int c = 0; c < a.c(); ++c)
    for (int y = 0; y < a.h(); ++y)
      for (int x = 0; x < a.w(); ++x) {
        s += std::fabs(a.at(c, y, x) - b.at(c, y, x));
        ++n;
      }
  return s / static_cast<double>(n);
}

double oracle_masked_l1(const Tensor& a, const Tensor& b, const ExclusionMask& u) {
  double s = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < a.h(); ++y)
    for (int x = 0; x < a.w(); ++x) {
      const double uu = u.at(y, x);
      s += std::fabs(uu * a.at(0, y, x) - uu * b.at(0, y, x));
      ++n;
    }
  return s / static_cast<double>(n);
}

double oracle_lsgan_d(const Tensor& dr, const Tensor& df) {
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < dr.size(); ++i) a += (dr[i] - 1.0) * (dr[i] - 1.0);
  for (std::size_t i = 0; i < df.size(); ++i) b += df[i] * df[i];
  return a / dr.size() + b / df.size();
}

double oracle_lsgan_g(const Tensor& df) {
  double s = 0.0;
  for (std::size_t i = 0; i < df.size(); ++i) s += (df[i] - 1.0) * (df[i] - 1.0);
  return s / df.size();
}

double oracle_weighted_ce(const Tensor& probs, const LabelMap& y, double eps) {
  const std::size_t n = y.cls.size();
  std::size_t counts[4] = {0, 0, 0, 0};
  for (auto v : y.cls) ++counts[v];
  double s = 0.0;
  for (int p = 0; p < probs.plane(); ++p) {
    const int cls = y.cls[p];
    const double w = static_cast<double>(counts[cls]) / static_cast<double>(n);
    s += (1.0 / w) * std::log(probs[static_cast<std::size_t>(cls) * probs.plane() + p] + eps);
  }
  return -s / static_cast<double>(n);
}

}  // namespace

TEST_CASE("exclusion mask: complement of the union") {
  LabelMap a(6, 6, Modality::MR), b(6, 6, Modality::CT);
  SUBCASE("both background -> all ones") {
    const ExclusionMask u = exclusion_mask(a, b);
    for (auto v : u.m) CHECK(v == 1);
  }
  SUBCASE("bladder region in a, gas region in b -> zero exactly on the union") {
    a.at(1, 1) = kBladder;
    a.at(1, 2) = kBladder;
    b.at(4, 4) = kRectalGas;
    const ExclusionMask u = exclusion_mask(a, b);
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 6; ++x) {
        const bool in_union = (y == 1 && (x == 1 || x == 2)) || (y == 4 && x == 4);
        CHECK(u.at(y, x) == (in_union ? 0 : 1));
      }
  }
  SUBCASE("symmetric in its arguments") {
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
      const LabelMap la = random_labels(6, 6, rng);
      LabelMap lb = random_labels(6, 6, rng);
      lb.source_modality = Modality::CT;
      const ExclusionMask u1 = exclusion_mask(la, lb);
      const ExclusionMask u2 = exclusion_mask(lb, la);
      CHECK(u1.m == u2.m);
    }
  }
  SUBCASE("set-based oracle on random pairs") {
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
      const LabelMap la = random_labels(6, 6, rng);
      const LabelMap lb = random_labels(6, 6, rng);
      std::set<int> excluded;
      for (int i = 0; i < 36; ++i)
        if (la.cls[i] != 0 || lb.cls[i] != 0) excluded.insert(i);
      const ExclusionMask u = exclusion_mask(la, lb);
      for (int i = 0; i < 36; ++i) CHECK(u.m[i] == (excluded.count(i) ? 0 : 1));
    }
  }
  SUBCASE("embedding in a larger background canvas preserves the mask") {
    a.at(2, 3) = kRectum;
    b.at(3, 3) = kBladder;
    const ExclusionMask small = exclusion_mask(a, b);
    LabelMap big_a(10, 10, Modality::MR), big_b(10, 10, Modality::CT);
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 6; ++x) {
        big_a.at(y + 2, x + 2) = a.at(y, x);
        big_b.at(y + 2, x + 2) = b.at(y, x);
      }
    const ExclusionMask big = exclusion_mask(big_a, big_b);
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 6; ++x) CHECK(big.at(y + 2, x + 2) == small.at(y, x));
  }
  SUBCASE("dimension mismatch rejected") {
    LabelMap c(4, 4, Modality::CT);
    CHECK_THROWS_AS(exclusion_mask(a, c), std::invalid_argument);
  }
}

TEST_CASE("l1 loss closed forms and oracle") {
  Rng rng(3);
  const Tensor a = random_tensor(1, 4, 4, rng);
  SUBCASE("identical inputs -> 0") { CHECK(l1_loss(a, a) == 0.0); }
  SUBCASE("constant offset") {
    Tensor b = a;
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += 0.5;
    CHECK(l1_loss(a, b) == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("random 4x4 matches brute force to 1e-12") {
    for (int trial = 0; trial < 50; ++trial) {
      const Tensor p = random_tensor(1, 4, 4, rng);
      const Tensor q = random_tensor(1, 4, 4, rng);
      CHECK(std::abs(l1_loss(p, q) - oracle_l1(p, q)) < 1e-12);
    }
  }
}

TEST_CASE("masked l1 loss semantics") {
  Rng rng(4);
  const Tensor p = random_tensor(1, 6, 6, rng);
  const Tensor q = random_tensor(1, 6, 6, rng);
  SUBCASE("all-ones mask reduces to plain l1") {
    const ExclusionMask u = ExclusionMask::all_ones(6, 6);
    CHECK(masked_l1_loss(p, q, u) == doctest::Approx(l1_loss(p, q)).epsilon(1e-15));
  }
  SUBCASE("all-zero mask -> 0") {
    ExclusionMask u(6, 6);
    for (auto& v : u.m) v = 0;
    CHECK(masked_l1_loss(p, q, u) == 0.0);
  }
  SUBCASE("differences confined to the excluded region -> 0") {
    ExclusionMask u(6, 6);
    Tensor q2 = p;
    u.at(2, 2) = 0;
    u.at(2, 3) = 0;
    q2.at(0, 2, 2) += 5.0;
    q2.at(0, 2, 3) -= 3.0;
    CHECK(masked_l1_loss(p, q2, u) == 0.0);
  }
  SUBCASE("masked <= unmasked for any mask") {
    for (int trial = 0; trial < 50; ++trial) {
      ExclusionMask u(6, 6);
      for (auto& v : u.m) v = rng.bernoulli(0.5) ? 1 : 0;
      const Tensor a = random_tensor(1, 6, 6, rng);
      const Tensor b = random_tensor(1, 6, 6, rng);
      CHECK(masked_l1_loss(a, b, u) <= l1_loss(a, b) + 1e-15);
    }
  }
  SUBCASE("non-binary mask rejected") {
    ExclusionMask u(6, 6);
    u.m[0] = 2;
    CHECK_THROWS_AS(masked_l1_loss(p, q, u), std::invalid_argument);
  }
  SUBCASE("mean-over-included alternative") {
    ExclusionMask u(6, 6);
    for (auto& v : u.m) v = 0;
    u.at(0, 0) = 1;
    Tensor q3 = p;
    q3.at(0, 0, 0) += 2.0;
    CHECK(masked_l1_loss(p, q3, u, true) == doctest::Approx(2.0));
    CHECK(masked_l1_loss(p, q3, u, false) == doctest::Approx(2.0 / 36.0));
  }
}

TEST_CASE("lsgan losses closed forms") {
  SUBCASE("perfect discriminator -> 0") {
    const Tensor real = Tensor::full(1, 3, 3, 1.0);
    const Tensor fake = Tensor::full(1, 3, 3, 0.0);
    CHECK(lsgan_d_loss(real, fake) == 0.0);
  }
  SUBCASE("0.5 everywhere -> 0.5") {
    const Tensor half = Tensor::full(1, 3, 3, 0.5);
    CHECK(lsgan_d_loss(half, half) == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("fooled discriminator -> generator loss 0") {
    const Tensor ones = Tensor::full(1, 3, 3, 1.0);
    CHECK(lsgan_g_loss(ones) == 0.0);
  }
}

TEST_CASE("weighted segmentation cross-entropy") {
  SUBCASE("hand-computed 2x2 case equals 2*log(4)") {
    // y = [[0,0],[0,1]], uniform probs 0.25: n0=3, n1=1
    LabelMap y(2, 2, Modality::MR);
    y.cls = {0, 0, 0, 1};
    Tensor probs = Tensor::full(4, 2, 2, 0.25);
    const double eps = 1e-12;
    const double got = weighted_seg_ce(probs, y, eps);
    CHECK(got == doctest::Approx(2.0 * std::log(4.0)).epsilon(1e-9));
  }
  SUBCASE("perfect one-hot prediction is ~0") {
    LabelMap y(4, 4, Modality::MR);
    Rng rng(5);
    for (auto& v : y.cls) v = static_cast<std::uint8_t>(rng.next_below(4));
    Tensor probs(4, 4, 4);
    for (int p = 0; p < 16; ++p) probs[static_cast<std::size_t>(y.cls[p]) * 16 + p] = 1.0;
    CHECK(weighted_seg_ce(probs, y, 1e-8) <= 4.0 * std::abs(std::log1p(1e-8)) + 1e-12);
  }
  SUBCASE("invariant under simultaneous class permutation") {
    Rng rng(6);
    const LabelMap y = random_labels(6, 6, rng);
    Tensor logits = random_tensor(4, 6, 6, rng);
    // softmax by hand
    Tensor probs(4, 6, 6);
    for (int p = 0; p < 36; ++p) {
      double mx = -1e300;
      for (int c = 0; c < 4; ++c) mx = std::max(mx, logits[static_cast<std::size_t>(c) * 36 + p]);
      double sum = 0;
      for (int c = 0; c < 4; ++c) {
        probs[static_cast<std::size_t>(c) * 36 + p] =
            std::exp(logits[static_cast<std::size_t>(c) * 36 + p] - mx);
        sum += probs[static_cast<std::size_t>(c) * 36 + p];
      }
      for (int c = 0; c < 4; ++c) probs[static_cast<std::size_t>(c) * 36 + p] /= sum;
    }
    const int perm[4] = {2, 0, 3, 1};
    LabelMap y2(6, 6, Modality::MR);
    Tensor probs2(4, 6, 6);
    for (int p = 0; p < 36; ++p) {
      y2.cls[p] = static_cast<std::uint8_t>(perm[y.cls[p]]);
      for (int c = 0; c < 4; ++c)
        probs2[static_cast<std::size_t>(perm[c]) * 36 + p] =
            probs[static_cast<std::size_t>(c) * 36 + p];
    }
    CHECK(weighted_seg_ce(probs2, y2) == doctest::Approx(weighted_seg_ce(probs, y)).epsilon(1e-12));
  }
  SUBCASE("unnormalized probs rejected") {
    LabelMap y(2, 2, Modality::MR);
    Tensor probs = Tensor::full(4, 2, 2, 0.3);
    CHECK_THROWS_AS(weighted_seg_ce(probs, y), std::invalid_argument);
  }
  SUBCASE("brute-force oracle on random instances") {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
      const LabelMap y = random_labels(6, 6, rng);
      Tensor probs(4, 6, 6);
      for (int p = 0; p < 36; ++p) {
        double sum = 0;
        double vals[4];
        for (int c = 0; c < 4; ++c) {
          vals[c] = rng.uniform() + 1e-3;
          sum += vals[c];
        }
        for (int c = 0; c < 4; ++c) probs[static_cast<std::size_t>(c) * 36 + p] = vals[c] / sum;
      }
      const double eps = 1e-8;
      CHECK(std::abs(weighted_seg_ce(probs, y, eps) - oracle_weighted_ce(probs, y, eps)) < 1e-10);
    }
  }
}

TEST_CASE("joint objective arithmetic") {
  CHECK(joint_objective(0.5, 0.1, 10.0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(joint_objective(0.37, 0.42, 0.0) == doctest::Approx(0.37));
  CHECK(joint_objective(0.9, 0.0) == doctest::Approx(0.9));
}

TEST_CASE("all losses match scalar-loop oracles on random 6x6 instances") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor p = random_tensor(1, 6, 6, rng);
    const Tensor q = random_tensor(1, 6, 6, rng);
    ExclusionMask u(6, 6);
    for (auto& v : u.m) v = rng.bernoulli(0.4) ? 0 : 1;

    CHECK(std::abs(l1_loss(p, q) - oracle_l1(p, q)) < 1e-10);
    CHECK(std::abs(masked_l1_loss(p, q, u) - oracle_masked_l1(p, q, u)) < 1e-10);
    CHECK(std::abs(lsgan_d_loss(p, q) - oracle_lsgan_d(p, q)) < 1e-10);
    CHECK(std::abs(lsgan_g_loss(q) - oracle_lsgan_g(q)) < 1e-10);
  }
}

TEST_CASE("loss non-negativity") {
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const Tensor p = random_tensor(1, 6, 6, rng);
    const Tensor q = random_tensor(1, 6, 6, rng);
    ExclusionMask u(6, 6);
    for (auto& v : u.m) v = rng.bernoulli(0.5) ? 0 : 1;
    CHECK(l1_loss(p, q) >= 0.0);
    CHECK(masked_l1_loss(p, q, u) >= 0.0);
    CHECK(lsgan_d_loss(p, q) >= 0.0);
    CHECK(lsgan_g_loss(q) >= 0.0);
  }
}
