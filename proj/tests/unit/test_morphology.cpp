#include <doctest.h>

#include "synct/morphology.hpp"

using namespace synct;

TEST_CASE("erosion and dilation with the 3x3 cross") {
  Mask m(7, 7);
  for (int y = 2; y <= 4; ++y)
    for (int x = 2; x <= 4; ++x) m.at(y, x) = 1;

  const Mask er = erode_cross(m);
  CHECK(er.count() == 1);
  CHECK(er.at(3, 3) == 1);

  const Mask di = dilate_cross(er);
  CHECK(di.count() == 5);
  CHECK(di.at(3, 3) == 1);
  CHECK(di.at(2, 3) == 1);
  CHECK(di.at(3, 2) == 1);
}

TEST_CASE("opening removes isolated pixels, closing fills single holes") {
  Mask m(9, 9);
  m.at(1, 1) = 1;  // isolated
  for (int y = 4; y <= 7; ++y)
    for (int x = 4; x <= 7; ++x) m.at(y, x) = 1;
  const Mask opened = open_cross(m);
  CHECK(opened.at(1, 1) == 0);

  Mask holed(9, 9);
  for (int y = 2; y <= 6; ++y)
    for (int x = 2; x <= 6; ++x) holed.at(y, x) = 1;
  holed.at(4, 4) = 0;
  const Mask closed = close_cross(holed);
  CHECK(closed.at(4, 4) == 1);
}

TEST_CASE("connected components, 4-connectivity") {
  Mask m(6, 6);
  m.at(0, 0) = 1;
  m.at(0, 1) = 1;
  m.at(1, 1) = 1;
  m.at(3, 3) = 1;   // separate blob
  m.at(5, 0) = 1;   // diagonal from (4,1): not connected
  m.at(4, 1) = 1;
  std::vector<int> labels;
  const int n = connected_components(m, labels);
  CHECK(n == 4);
  CHECK(labels[0] == labels[1]);
  CHECK(labels[0] == labels[1 * 6 + 1]);
  CHECK(labels[3 * 6 + 3] != labels[0]);
  CHECK(labels[5 * 6 + 0] != labels[4 * 6 + 1]);
}

TEST_CASE("nearest-neighbor downsampling") {
  Mask m(8, 8);
  m.at(0, 0) = 1;
  m.at(4, 4) = 1;
  m.at(1, 1) = 1;  // off-grid sample, dropped
  const Mask d = downsample_nn(m, 4);
  CHECK(d.h == 2);
  CHECK(d.at(0, 0) == 1);
  CHECK(d.at(1, 1) == 1);
  CHECK(d.count() == 2);
}

TEST_CASE("label mask helpers") {
  LabelMap l(4, 4, Modality::MR);
  l.at(0, 0) = kBladder;
  l.at(1, 1) = kRectalGas;
  const Mask b = mask_of_class(l, kBladder);
  CHECK(b.count() == 1);
  CHECK(b.at(0, 0) == 1);
  const Mask u = organ_union(l);
  CHECK(u.count() == 2);
}
