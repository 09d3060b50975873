#include "synct/morphology.hpp"

#include <queue>
#include <stdexcept>

namespace synct {

std::size_t Mask::count() const {
  std::size_t n = 0;
  for (auto x : v) n += x;
  return n;
}

Mask mask_of_class(const LabelMap& lbl, std::uint8_t cls) {
  Mask m(lbl.h, lbl.w);
  for (std::size_t i = 0; i < lbl.cls.size(); ++i) m.v[i] = lbl.cls[i] == cls ? 1 : 0;
  return m;
}

Mask organ_union(const LabelMap& lbl) {
  Mask m(lbl.h, lbl.w);
  for (std::size_t i = 0; i < lbl.cls.size(); ++i) m.v[i] = lbl.cls[i] != kBackground ? 1 : 0;
  return m;
}

Mask mask_and(const Mask& a, const Mask& b) {
  Mask m(a.h, a.w);
  for (std::size_t i = 0; i < m.v.size(); ++i) m.v[i] = a.v[i] & b.v[i];
  return m;
}

Mask mask_or(const Mask& a, const Mask& b) {
  Mask m(a.h, a.w);
  for (std::size_t i = 0; i < m.v.size(); ++i) m.v[i] = a.v[i] | b.v[i];
  return m;
}

Mask erode_cross(const Mask& m) {
  Mask out(m.h, m.w);
  for (int y = 0; y < m.h; ++y)
    for (int x = 0; x < m.w; ++x) {
      const bool keep = m.at(y, x) && (y > 0 && m.at(y - 1, x)) && (y + 1 < m.h && m.at(y + 1, x)) &&
                        (x > 0 && m.at(y, x - 1)) && (x + 1 < m.w && m.at(y, x + 1));
      out.at(y, x) = keep ? 1 : 0;
    }
  return out;
}

Mask dilate_cross(const Mask& m) {
  Mask out(m.h, m.w);
  for (int y = 0; y < m.h; ++y)
    for (int x = 0; x < m.w; ++x) {
      const bool on = m.at(y, x) || (y > 0 && m.at(y - 1, x)) || (y + 1 < m.h && m.at(y + 1, x)) ||
                      (x > 0 && m.at(y, x - 1)) || (x + 1 < m.w && m.at(y, x + 1));
      out.at(y, x) = on ? 1 : 0;
    }
  return out;
}

Mask open_cross(const Mask& m) { return dilate_cross(erode_cross(m)); }
Mask close_cross(const Mask& m) { return erode_cross(dilate_cross(m)); }

int connected_components(const Mask& m, std::vector<int>& labels) {
  labels.assign(m.v.size(), 0);
  int next = 0;
  std::queue<std::pair<int, int>> q;
  for (int y = 0; y < m.h; ++y)
    for (int x = 0; x < m.w; ++x) {
      if (!m.at(y, x) || labels[static_cast<std::size_t>(y) * m.w + x] != 0) continue;
      ++next;
      labels[static_cast<std::size_t>(y) * m.w + x] = next;
      q.emplace(y, x);
      while (!q.empty()) {
        const auto [cy, cx] = q.front();
        q.pop();
        const int dy[4] = {-1, 1, 0, 0}, dx[4] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
          const int ny = cy + dy[k], nx = cx + dx[k];
          if (ny < 0 || ny >= m.h || nx < 0 || nx >= m.w) continue;
          auto& l = labels[static_cast<std::size_t>(ny) * m.w + nx];
          if (m.at(ny, nx) && l == 0) {
            l = next;
            q.emplace(ny, nx);
          }
        }
      }
    }
  return next;
}

Mask downsample_nn(const Mask& m, int factor) {
  if (factor < 1 || m.h % factor != 0 || m.w % factor != 0)
    throw std::invalid_argument("downsample_nn: size not divisible by factor");
  Mask out(m.h / factor, m.w / factor);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) out.at(y, x) = m.at(y * factor, x * factor);
  return out;
}

Tensor to_tensor(const Mask& m) {
  Tensor t(1, m.h, m.w);
  for (std::size_t i = 0; i < m.v.size(); ++i) t[i] = m.v[i];
  return t;
}

}  // namespace synct
