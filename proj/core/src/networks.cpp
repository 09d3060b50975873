#include "synct/networks.hpp"

#include <stdexcept>

namespace synct {

namespace {
void check_channels(const Tensor& x, int expected, const char* who) {
  if (x.c() != expected)
    throw std::invalid_argument(std::string(who) + ": expected " + std::to_string(expected) +
                                " input channels, got " + std::to_string(x.c()));
}
}  // namespace

// ---------------------------------------------------------------- Generator

Generator::Generator(int base, int in_channels, int out_channels)
    : base_channels(base), in_ch(in_channels), out_ch(out_channels) {
  if (base < 4) throw std::invalid_argument("Generator: base_channels must be >= 4");
  const int c = base;
  enc1 = Conv2d("G.enc1", in_ch, c, 7, 1, 3);
  in1 = InstanceNorm("G.in1", c);
  // encoder convs 2 and 3 see the raw input concatenated at their resolution
  enc2 = Conv2d("G.enc2", c + in_ch, 2 * c, 3, 2, 1);
  in2 = InstanceNorm("G.in2", 2 * c);
  enc3 = Conv2d("G.enc3", 2 * c + in_ch, 4 * c, 3, 2, 1);
  in3 = InstanceNorm("G.in3", 4 * c);
  blocks.reserve(9);
  for (int i = 0; i < 9; ++i)
    blocks.emplace_back("G.res" + std::to_string(i), 4 * c, dropout_rate);
  dec1 = TConv2d("G.dec1", 4 * c, 2 * c, 3, 2, 1, 1);
  dn1 = InstanceNorm("G.dn1", 2 * c);
  dec2 = TConv2d("G.dec2", 2 * c, c, 3, 2, 1, 1);
  dn2 = InstanceNorm("G.dn2", c);
  out = TConv2d("G.out", c, out_ch, 7, 1, 3, 0);
}

int Generator::forward(ad::Tape& t, int x, Rng& rng, bool training) {
  const Tensor& xv = t.val(x);
  check_channels(xv, in_ch, "Generator");
  if (xv.h() % 4 != 0 || xv.w() % 4 != 0 || xv.h() < 4 || xv.w() < 4)
    throw std::invalid_argument("Generator: input size must be divisible by 4");

  int e1 = ad::relu(t, in1(t, enc1(t, x)));
  int cat1 = ad::concat_ch(t, e1, x);  // raw input at full resolution
  int e2 = ad::relu(t, in2(t, enc2(t, cat1)));
  int skip2 = ad::avgpool(t, x, 2);
  int cat2 = ad::concat_ch(t, e2, skip2);
  int e3 = ad::relu(t, in3(t, enc3(t, cat2)));

  int h = e3;
  for (auto& blk : blocks) h = blk(t, h, rng, training);

  int d1 = ad::relu(t, dn1(t, dec1(t, h)));
  int d2 = ad::relu(t, dn2(t, dec2(t, d1)));
  return ad::tanh_op(t, out(t, d2));
}

Tensor Generator::infer(const Tensor& x) {
  ad::Tape t(false);
  Rng dummy(0);
  int y = forward(t, t.leaf(x), dummy, false);
  return t.val(y);
}

void Generator::init(Rng& rng, double stddev) {
  enc1.init(rng, stddev);
  in1.init();
  enc2.init(rng, stddev);
  in2.init();
  enc3.init(rng, stddev);
  in3.init();
  for (auto& blk : blocks) blk.init(rng, stddev);
  dec1.init(rng, stddev);
  dn1.init();
  dec2.init(rng, stddev);
  dn2.init();
  out.init(rng, stddev);
}

std::vector<ad::Param*> Generator::params() {
  std::vector<ad::Param*> ps;
  enc1.collect(ps);
  in1.collect(ps);
  enc2.collect(ps);
  in2.collect(ps);
  enc3.collect(ps);
  in3.collect(ps);
  for (auto& blk : blocks) blk.collect(ps);
  dec1.collect(ps);
  dn1.collect(ps);
  dec2.collect(ps);
  dn2.collect(ps);
  out.collect(ps);
  return ps;
}

std::string Generator::arch() const {
  std::string s = "G[" + enc1.spec() + ";" + enc2.spec() + ";" + enc3.spec() + ";";
  for (const auto& blk : blocks) s += blk.spec() + ";";
  s += dec1.spec() + ";" + dec2.spec() + ";" + out.spec() + ";tanh]";
  return s;
}

// ------------------------------------------------------------ Discriminator

Discriminator::Discriminator(int base, int in_channels) : base_channels(base) {
  if (base < 4) throw std::invalid_argument("Discriminator: base_channels must be >= 4");
  const int c = base;
  convs[0] = Conv2d("D.c0", in_channels, c, 3, 2, 1);
  convs[1] = Conv2d("D.c1", c, 2 * c, 3, 2, 1);
  convs[2] = Conv2d("D.c2", 2 * c, 4 * c, 3, 2, 1);
  convs[3] = Conv2d("D.c3", 4 * c, 8 * c, 3, 1, 1);
  convs[4] = Conv2d("D.c4", 8 * c, 8 * c, 3, 1, 1);
  convs[5] = Conv2d("D.c5", 8 * c, 1, 3, 1, 1);
  norms[0] = InstanceNorm("D.n1", 2 * c);
  norms[1] = InstanceNorm("D.n2", 4 * c);
  norms[2] = InstanceNorm("D.n3", 8 * c);
  norms[3] = InstanceNorm("D.n4", 8 * c);
}

int Discriminator::forward(ad::Tape& t, int x) {
  const Tensor& xv = t.val(x);
  if (xv.h() < kMinInput || xv.w() < kMinInput)
    throw std::invalid_argument("Discriminator: input below receptive-field minimum (8x8)");
  int h = ad::relu(t, convs[0](t, x));
  for (int i = 1; i <= 4; ++i) h = ad::relu(t, norms[i - 1](t, convs[i](t, h)));
  return convs[5](t, h);
}

Tensor Discriminator::infer(const Tensor& x) {
  ad::Tape t(false);
  int y = forward(t, t.leaf(x));
  return t.val(y);
}

void Discriminator::init(Rng& rng, double stddev) {
  for (auto& cv : convs) cv.init(rng, stddev);
  for (auto& n : norms) n.init();
}

std::vector<ad::Param*> Discriminator::params() {
  std::vector<ad::Param*> ps;
  convs[0].collect(ps);
  for (int i = 1; i <= 4; ++i) {
    convs[i].collect(ps);
    norms[i - 1].collect(ps);
  }
  convs[5].collect(ps);
  return ps;
}

std::string Discriminator::arch() const {
  std::string s = "D[";
  for (const auto& cv : convs) s += cv.spec() + ";";
  s += "]";
  return s;
}

// ---------------------------------------------------------------- Segmenter

Segmenter::Segmenter(int base, int classes, int in_channels)
    : base_channels(base), num_classes(classes) {
  if (base < 4) throw std::invalid_argument("Segmenter: base_channels must be >= 4");
  const int c = base;
  enc1 = Conv2d("S.enc1", in_channels, c, 7, 1, 3);
  in1 = InstanceNorm("S.in1", c);
  enc2 = Conv2d("S.enc2", c, 2 * c, 3, 2, 1);
  in2 = InstanceNorm("S.in2", 2 * c);
  enc3 = Conv2d("S.enc3", 2 * c, 4 * c, 3, 2, 1);
  in3 = InstanceNorm("S.in3", 4 * c);
  blocks.reserve(6);
  for (int i = 0; i < 6; ++i) blocks.emplace_back("S.res" + std::to_string(i), 4 * c, 0.0);
  dec1 = TConv2d("S.dec1", 4 * c, 2 * c, 3, 2, 1, 1);
  dn1 = InstanceNorm("S.dn1", 2 * c);
  dec2 = TConv2d("S.dec2", 2 * c, c, 3, 2, 1, 1);
  dn2 = InstanceNorm("S.dn2", c);
  out = TConv2d("S.out", c, classes, 7, 1, 3, 0);
}

int Segmenter::forward(ad::Tape& t, int x) {
  const Tensor& xv = t.val(x);
  if (xv.h() % 4 != 0 || xv.w() % 4 != 0 || xv.h() < 4 || xv.w() < 4)
    throw std::invalid_argument("Segmenter: input size must be divisible by 4");
  Rng dummy(0);
  int e1 = ad::relu(t, in1(t, enc1(t, x)));
  int e2 = ad::relu(t, in2(t, enc2(t, e1)));
  int e3 = ad::relu(t, in3(t, enc3(t, e2)));
  int h = e3;
  for (auto& blk : blocks) h = blk(t, h, dummy, false);
  int d1 = ad::relu(t, dn1(t, dec1(t, h)));
  int d2 = ad::relu(t, dn2(t, dec2(t, d1)));
  return ad::softmax_ch(t, out(t, d2));
}

Tensor Segmenter::infer(const Tensor& x) {
  ad::Tape t(false);
  int y = forward(t, t.leaf(x));
  return t.val(y);
}

void Segmenter::init(Rng& rng, double stddev) {
  enc1.init(rng, stddev);
  in1.init();
  enc2.init(rng, stddev);
  in2.init();
  enc3.init(rng, stddev);
  in3.init();
  for (auto& blk : blocks) blk.init(rng, stddev);
  dec1.init(rng, stddev);
  dn1.init();
  dec2.init(rng, stddev);
  dn2.init();
  out.init(rng, stddev);
}

std::vector<ad::Param*> Segmenter::params() {
  std::vector<ad::Param*> ps;
  enc1.collect(ps);
  in1.collect(ps);
  enc2.collect(ps);
  in2.collect(ps);
  enc3.collect(ps);
  in3.collect(ps);
  for (auto& blk : blocks) blk.collect(ps);
  dec1.collect(ps);
  dn1.collect(ps);
  dec2.collect(ps);
  dn2.collect(ps);
  out.collect(ps);
  return ps;
}

std::string Segmenter::arch() const {
  std::string s = "S[" + enc1.spec() + ";" + enc2.spec() + ";" + enc3.spec() + ";";
  for (const auto& blk : blocks) s += blk.spec() + ";";
  s += dec1.spec() + ";" + dec2.spec() + ";" + out.spec() + ";softmax]";
  return s;
}

// ------------------------------------------------------------- Style coders

StyleEncoder::StyleEncoder(const std::string& name) {
  c1 = Conv2d(name + ".c1", 1, 8, 3, 1, 1, /*trainable=*/false);
  c2 = Conv2d(name + ".c2", 8, 16, 3, 2, 1, /*trainable=*/false);
  c3 = Conv2d(name + ".c3", 16, 32, 3, 2, 1, /*trainable=*/false);
}

std::array<int, 3> StyleEncoder::forward(ad::Tape& t, int x) {
  int f1 = ad::relu(t, c1(t, x));
  int f2 = ad::relu(t, c2(t, f1));
  int f3 = ad::relu(t, c3(t, f2));
  return {f1, f2, f3};
}

void StyleEncoder::init(Rng& rng, double stddev) {
  c1.init(rng, stddev);
  c2.init(rng, stddev);
  c3.init(rng, stddev);
}

std::vector<ad::Param*> StyleEncoder::params() {
  std::vector<ad::Param*> ps;
  c1.collect(ps);
  c2.collect(ps);
  c3.collect(ps);
  return ps;
}

std::string StyleEncoder::arch() const {
  return "F[" + c1.spec() + ";" + c2.spec() + ";" + c3.spec() + "]";
}

StyleDecoder::StyleDecoder(const std::string& name) {
  d1 = TConv2d(name + ".d1", 32, 16, 3, 2, 1, 1);
  d2 = TConv2d(name + ".d2", 16, 8, 3, 2, 1, 1);
  out = Conv2d(name + ".out", 8, 1, 3, 1, 1);
}

int StyleDecoder::forward(ad::Tape& t, int x) {
  int h = ad::relu(t, d1(t, x));
  h = ad::relu(t, d2(t, h));
  return out(t, h);  // linear head so CT extremes stay reachable
}

void StyleDecoder::init(Rng& rng, double stddev) {
  d1.init(rng, stddev);
  d2.init(rng, stddev);
  out.init(rng, stddev);
}

std::vector<ad::Param*> StyleDecoder::params() {
  std::vector<ad::Param*> ps;
  d1.collect(ps);
  d2.collect(ps);
  out.collect(ps);
  return ps;
}

std::string StyleDecoder::arch() const {
  return "g[" + d1.spec() + ";" + d2.spec() + ";" + out.spec() + "]";
}

std::size_t param_count(const std::vector<ad::Param*>& ps) {
  std::size_t n = 0;
  for (const auto* p : ps) n += p->v.size();
  return n;
}

}  // namespace synct
