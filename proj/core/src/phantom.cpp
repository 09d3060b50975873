#include "synct/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace synct {

std::string to_string(Modality m) { return m == Modality::MR ? "MR" : "CT"; }

Modality modality_from_string(const std::string& s) {
  if (s == "MR") return Modality::MR;
  if (s == "CT") return Modality::CT;
  throw std::invalid_argument("unknown modality: " + s);
}

void ImageSlice::validate() const {
  if (h != w || h < 32 || (h & (h - 1)) != 0)
    throw std::invalid_argument("ImageSlice: side must be square, power-of-two, >= 32");
  if (px.size() != static_cast<std::size_t>(h) * w)
    throw std::invalid_argument("ImageSlice: pixel buffer size mismatch");
  const float lo = modality == Modality::CT ? -1000.f : 0.f;
  const float hi = modality == Modality::CT ? 2000.f : 1.f;
  for (float v : px) {
    if (!std::isfinite(v)) throw std::invalid_argument("ImageSlice: non-finite pixel");
    if (v < lo || v > hi) throw std::invalid_argument("ImageSlice: pixel out of range");
  }
}

std::size_t LabelMap::count(std::uint8_t c) const {
  std::size_t n = 0;
  for (auto v : cls)
    if (v == c) ++n;
  return n;
}

void LabelMap::validate() const {
  if (cls.size() != static_cast<std::size_t>(h) * w)
    throw std::invalid_argument("LabelMap: buffer size mismatch");
  for (auto v : cls)
    if (v >= kNumClasses) throw std::invalid_argument("LabelMap: unknown class id");
}

namespace {

struct Ellipse {
  double cx, cy, rx, ry;  // in pixels
  bool contains(double x, double y) const {
    const double dx = (x - cx) / rx, dy = (y - cy) / ry;
    return dx * dx + dy * dy <= 1.0;
  }
};

Ellipse scaled(const EllipseSpec& e, int size, double scale = 1.0, double dx = 0.0, double dy = 0.0) {
  return Ellipse{(e.cx + dx) * size, (e.cy + dy) * size, e.rx * size * scale, e.ry * size * scale};
}

// inner must fit strictly inside outer (sampled boundary, margin in pixels)
bool inside(const Ellipse& inner, const Ellipse& outer, double margin) {
  for (int i = 0; i < 256; ++i) {
    const double a = 2.0 * 3.14159265358979323846 * i / 256.0;
    const double x = inner.cx + inner.rx * std::cos(a);
    const double y = inner.cy + inner.ry * std::sin(a);
    const double dx = (x - outer.cx) / (outer.rx - margin);
    const double dy = (y - outer.cy) / (outer.ry - margin);
    if (dx * dx + dy * dy > 1.0) return false;
  }
  return true;
}

bool overlaps(const Ellipse& a, const Ellipse& b) {
  // conservative sampled check on a's boundary and center
  if (b.contains(a.cx, a.cy)) return true;
  for (int i = 0; i < 256; ++i) {
    const double ang = 2.0 * 3.14159265358979323846 * i / 256.0;
    if (b.contains(a.cx + a.rx * std::cos(ang), a.cy + a.ry * std::sin(ang))) return true;
  }
  return false;
}

void check_radii(const EllipseSpec& e, const char* name) {
  if (e.rx <= 0.0 || e.rx >= 0.5 || e.ry <= 0.0 || e.ry >= 0.5)
    throw std::invalid_argument(std::string("PhantomConfig: ") + name +
                                " radii must lie in (0, 0.5)");
}

}  // namespace

void PhantomConfig::validate() const {
  if (size < 32 || (size & (size - 1)) != 0)
    throw std::invalid_argument("PhantomConfig: size must be a power of two >= 32");
  for (const auto* e : {&body, &bone_left, &bone_right, &sacrum, &bladder, &rectum, &gas})
    check_radii(*e, "ellipse");
  if (bladder_scale_mr <= 0.0 || bladder_scale_ct <= 0.0)
    throw std::invalid_argument("PhantomConfig: bladder scales must be positive");
  if (noise_sigma < 0.0 || mr_bias_field_amplitude < 0.0)
    throw std::invalid_argument("PhantomConfig: noise/bias amplitudes must be >= 0");

  const Ellipse bod = scaled(body, size);
  const double margin = 0.5;  // pixels; keeps rasterized organs strictly interior
  // the body itself must not touch the canvas border
  if (bod.cx - bod.rx < 1.5 || bod.cy - bod.ry < 1.5 || bod.cx + bod.rx > size - 2.5 ||
      bod.cy + bod.ry > size - 2.5)
    throw std::invalid_argument("PhantomConfig: body must not touch the image border");

  const Ellipse rect = scaled(rectum, size);
  for (double s : {bladder_scale_mr, bladder_scale_ct}) {
    const Ellipse bl = scaled(bladder, size, s);
    if (!inside(bl, bod, margin))
      throw std::invalid_argument("PhantomConfig: scaled bladder exits the body ellipse");
    if (overlaps(bl, rect) || overlaps(rect, bl))
      throw std::invalid_argument("PhantomConfig: bladder overlaps the rectum");
  }
  if (!inside(rect, bod, margin))
    throw std::invalid_argument("PhantomConfig: rectum exits the body ellipse");

  const bool gas_used[2] = {gas_present_mr, gas_present_ct};
  const double gdx[2] = {gas_dx_mr, gas_dx_ct}, gdy[2] = {gas_dy_mr, gas_dy_ct};
  for (int m = 0; m < 2; ++m) {
    if (!gas_used[m]) continue;
    const Ellipse g = scaled(gas, size, 1.0, gdx[m], gdy[m]);
    if (!inside(g, rect, margin))
      throw std::invalid_argument("PhantomConfig: gas region exits the rectum");
  }

  for (const auto* bone : {&bone_left, &bone_right, &sacrum}) {
    const Ellipse b = scaled(*bone, size);
    if (!inside(b, bod, margin))
      throw std::invalid_argument("PhantomConfig: bone exits the body ellipse");
    const double max_scale = std::max(bladder_scale_mr, bladder_scale_ct);
    if (overlaps(b, scaled(bladder, size, max_scale)) || overlaps(b, rect))
      throw std::invalid_argument("PhantomConfig: bone overlaps an organ");
  }
}

namespace {

struct Geometry {
  Ellipse body, bone_l, bone_r, sacrum, bladder, rectum, gas;
  bool gas_present;
};

Geometry make_geometry(const PhantomConfig& c, Modality m) {
  const bool mr = m == Modality::MR;
  Geometry g;
  g.body = scaled(c.body, c.size);
  g.bone_l = scaled(c.bone_left, c.size);
  g.bone_r = scaled(c.bone_right, c.size);
  g.sacrum = scaled(c.sacrum, c.size);
  g.bladder = scaled(c.bladder, c.size, mr ? c.bladder_scale_mr : c.bladder_scale_ct);
  g.rectum = scaled(c.rectum, c.size);
  g.gas = scaled(c.gas, c.size, 1.0, mr ? c.gas_dx_mr : c.gas_dx_ct,
                 mr ? c.gas_dy_mr : c.gas_dy_ct);
  g.gas_present = mr ? c.gas_present_mr : c.gas_present_ct;
  return g;
}

LabelMap make_labels(const Geometry& g, int size, Modality m) {
  LabelMap lbl(size, size, m);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      std::uint8_t c = kBackground;
      if (g.bladder.contains(px, py)) c = kBladder;
      else if (g.gas_present && g.gas.contains(px, py)) c = kRectalGas;
      else if (g.rectum.contains(px, py)) c = kRectum;
      lbl.at(y, x) = c;
    }
  return lbl;
}

}  // namespace

PhantomPair generate_phantom(const PhantomConfig& config) {
  config.validate();
  const int size = config.size;
  const Geometry gmr = make_geometry(config, Modality::MR);
  const Geometry gct = make_geometry(config, Modality::CT);

  PhantomPair out;
  out.mr = ImageSlice(size, size, Modality::MR);
  out.ct = ImageSlice(size, size, Modality::CT);
  out.label_mr = make_labels(gmr, size, Modality::MR);
  out.label_ct = make_labels(gct, size, Modality::CT);

  // independent, seed-derived streams so each source of randomness is stable
  Rng bias_rng(derive_seed(config.seed, 0));
  Rng mr_noise(derive_seed(config.seed, 1));
  Rng ct_noise(derive_seed(config.seed, 2));

  const double fx = bias_rng.uniform(0.4, 1.2);
  const double fy = bias_rng.uniform(0.4, 1.2);
  const double phase = bias_rng.uniform(0.0, 6.283185307179586);
  const double amp = config.mr_bias_field_amplitude;

  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double px = x + 0.5, py = y + 0.5;

      float hu = phantom_hu::kAir;
      if (gct.body.contains(px, py)) {
        hu = phantom_hu::kTissue;
        if (gct.bone_l.contains(px, py) || gct.bone_r.contains(px, py) ||
            gct.sacrum.contains(px, py))
          hu = phantom_hu::kBone;
        if (gct.rectum.contains(px, py)) hu = phantom_hu::kRectumWall;
        if (gct.bladder.contains(px, py)) hu = phantom_hu::kBladder;
        if (gct.gas_present && gct.gas.contains(px, py)) hu = phantom_hu::kGas;
      }

      float mr = phantom_mr::kAir;
      if (gmr.body.contains(px, py)) {
        mr = phantom_mr::kTissue;
        if (gmr.bone_l.contains(px, py) || gmr.bone_r.contains(px, py) ||
            gmr.sacrum.contains(px, py))
          mr = phantom_mr::kBone;
        if (gmr.rectum.contains(px, py)) mr = phantom_mr::kRectumWall;
        if (gmr.bladder.contains(px, py)) mr = phantom_mr::kBladder;
        if (gmr.gas_present && gmr.gas.contains(px, py)) mr = phantom_mr::kGas;
      }

      if (amp > 0.0) {
        const double u = px / size - 0.5, v = py / size - 0.5;
        const double field = 1.0 + amp * std::sin(6.283185307179586 * (fx * u + fy * v) + phase);
        mr = static_cast<float>(mr * field);
      }
      if (config.noise_sigma > 0.0) {
        mr = static_cast<float>(mr + mr_noise.normal(0.0, config.noise_sigma));
        hu = static_cast<float>(hu + ct_noise.normal(0.0, config.noise_sigma * 300.0));
      }
      out.mr.at(y, x) = std::clamp(mr, 0.0f, 1.0f);
      out.ct.at(y, x) = std::clamp(hu, -1000.0f, 2000.0f);
    }
  }
  return out;
}

ImageSlice flip_image(const ImageSlice& img, bool flip_h, bool flip_v) {
  ImageSlice out(img.h, img.w, img.modality);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      out.at(y, x) = img.at(flip_v ? img.h - 1 - y : y, flip_h ? img.w - 1 - x : x);
  return out;
}

LabelMap flip_label(const LabelMap& lbl, bool flip_h, bool flip_v) {
  LabelMap out(lbl.h, lbl.w, lbl.source_modality);
  for (int y = 0; y < lbl.h; ++y)
    for (int x = 0; x < lbl.w; ++x)
      out.at(y, x) = lbl.at(flip_v ? lbl.h - 1 - y : y, flip_h ? lbl.w - 1 - x : x);
  return out;
}

std::array<PhantomPair, 4> augment_flip(const PhantomPair& pair) {
  std::array<PhantomPair, 4> out;
  const bool hs[4] = {false, true, false, true};
  const bool vs[4] = {false, false, true, true};
  for (int i = 0; i < 4; ++i) {
    out[i].mr = flip_image(pair.mr, hs[i], vs[i]);
    out[i].ct = flip_image(pair.ct, hs[i], vs[i]);
    out[i].label_mr = flip_label(pair.label_mr, hs[i], vs[i]);
    out[i].label_ct = flip_label(pair.label_ct, hs[i], vs[i]);
  }
  return out;
}

Tensor normalize_for_training(const ImageSlice& img) {
  Tensor t(1, img.h, img.w);
  if (img.modality == Modality::CT) {
    for (std::size_t i = 0; i < img.px.size(); ++i) {
      const double v = img.px[i];
      if (v < kHuLo || v > kHuHi) throw std::invalid_argument("normalize: CT pixel out of window");
      t[i] = (v - kHuLo) / (kHuHi - kHuLo) * 2.0 - 1.0;
    }
  } else {
    for (std::size_t i = 0; i < img.px.size(); ++i) {
      const double v = img.px[i];
      if (v < 0.0 || v > 1.0) throw std::invalid_argument("normalize: MR pixel out of [0,1]");
      t[i] = v * 2.0 - 1.0;
    }
  }
  return t;
}

ImageSlice denormalize_ct(const Tensor& t) {
  if (t.c() != 1) throw std::invalid_argument("denormalize_ct: expected a 1-channel tensor");
  ImageSlice img(t.h(), t.w(), Modality::CT);
  for (std::size_t i = 0; i < img.px.size(); ++i) {
    const double hu = (t[i] + 1.0) * 0.5 * (kHuHi - kHuLo) + kHuLo;
    img.px[i] = static_cast<float>(std::clamp(hu, kHuLo, kHuHi));
  }
  return img;
}

}  // namespace synct
